#include "snerf/geometry.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "snerf/errors.hpp"

namespace snerf {

Pose Pose::from_matrix(const Mat4& m) {
  Pose p;
  p.rotation = m.topLeftCorner<3, 3>();
  p.translation = m.topRightCorner<3, 1>();
  return p;
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

bool Pose::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  if ((rotation.transpose() * rotation - Mat3::Identity()).norm() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

bool Intrinsics::is_valid() const {
  return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx < width && cy >= 0 &&
         cy < height;
}

Pose pose_inverse(const Pose& p) {
  Pose inv;
  inv.rotation = p.rotation.transpose();
  inv.translation = -(inv.rotation * p.translation);
  return inv;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose c;
  c.rotation = a.rotation * b.rotation;
  c.translation = a.rotation * b.translation + a.translation;
  return c;
}

Pose virtual_camera_pose(const Pose& camera, const Pose& object) {
  return compose(object, pose_inverse(camera));
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

Mat3 exp_so3(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 k = skew(w);
  double a;
  double b;
  if (theta2 < 1e-12) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * k + b * k * k;
}

Mat3 right_jacobian_so3(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 k = skew(w);
  double a;
  double b;
  if (theta2 < 1e-10) {
    a = 0.5 - theta2 / 24.0;
    b = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = (1.0 - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() - a * k + b * k * k;
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

Pose apply_offset(const Pose& p, const PoseOffset& dp) {
  if (dp.is_zero()) return p;
  Pose out;
  out.rotation = orthonormalize(exp_so3(dp.delta_rotation) * p.rotation);
  out.translation = p.translation + dp.delta_translation;
  return out;
}

std::optional<Projection> try_project(const Vec3& point, const Intrinsics& intr, const Pose& cam) {
  const Vec3 xc = cam.rotation.transpose() * (point - cam.translation);
  if (!(xc.z() > 0.0)) return std::nullopt;
  Projection proj;
  proj.pixel.u = intr.fx * xc.x() / xc.z() + intr.cx;
  proj.pixel.v = intr.fy * xc.y() / xc.z() + intr.cy;
  proj.pixel.d = xc.z();
  proj.in_frame = intr.contains(proj.pixel.u, proj.pixel.v);
  return proj;
}

Projection project(const Vec3& point, const Intrinsics& intr, const Pose& cam) {
  auto proj = try_project(point, intr, cam);
  if (!proj) throw BehindCamera("point has non-positive camera-frame depth");
  return *proj;
}

Vec3 unproject(const PixelSample& px, const Intrinsics& intr, const Pose& cam) {
  if (!(px.d > 0.0)) throw NonPositiveDepth("unproject requires a positive depth");
  return cam.apply(intr.backproject(px.u, px.v) * px.d);
}

std::optional<Projection> try_reproject(const PixelSample& px, const Pose& from_cam,
                                        const Pose& to_cam, const Intrinsics& intr) {
  if (!(px.d > 0.0)) throw NonPositiveDepth("reproject requires a positive depth");
  if (from_cam.rotation == to_cam.rotation && from_cam.translation == to_cam.translation) {
    return Projection{px, intr.contains(px.u, px.v)};
  }
  return try_project(unproject(px, intr, from_cam), intr, to_cam);
}

Projection reproject(const PixelSample& px, const Pose& from_cam, const Pose& to_cam,
                     const Intrinsics& intr) {
  auto proj = try_reproject(px, from_cam, to_cam, intr);
  if (!proj) throw BehindCamera("reprojected point is behind the target camera");
  return *proj;
}

}  // namespace snerf
