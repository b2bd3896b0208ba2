#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace snerf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Camera convention used throughout: right-handed, +x right, +y down, +z
// forward in the camera frame; image origin at the top-left pixel, and pixel
// (i, j) has its center at continuous coordinate (i, j).

/// Rigid transform x -> rotation * x + translation. A camera Pose maps
/// camera-frame points into the world (camera-to-world).
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_matrix(const Mat4& m);

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  Mat4 matrix() const;
  /// Rotation orthonormal with det +1 within `tol`.
  bool is_valid(double tol = 1e-9) const;
};

/// Pinhole intrinsics in pixels.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  bool is_valid() const;
  /// Unnormalized camera-frame direction ((u-cx)/fx, (v-cy)/fy, 1).
  Vec3 backproject(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }
  /// True when (u, v) rounds to a pixel inside the image.
  bool contains(double u, double v) const {
    return u >= -0.5 && v >= -0.5 && u < width - 0.5 && v < height - 0.5;
  }
};

/// Learnable pose refinement: axis-angle rotation and translation deltas.
struct PoseOffset {
  Vec3 delta_rotation = Vec3::Zero();
  Vec3 delta_translation = Vec3::Zero();

  bool is_zero() const {
    return (delta_rotation.array() == 0.0).all() && (delta_translation.array() == 0.0).all();
  }
};

/// A pixel position with its camera-frame depth.
struct PixelSample {
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
};

struct Projection {
  PixelSample pixel;
  bool in_frame = false;
};

Pose pose_inverse(const Pose& p);
/// Matrix-product semantics: compose(a, b).apply(x) == a.apply(b.apply(x)).
Pose compose(const Pose& a, const Pose& b);

/// Relative camera placement for a moving object. Both arguments are
/// world-to-local transforms (camera extrinsic, object extrinsic); the result
/// `object * camera^-1` is the camera-to-object pose, i.e. the camera placed in
/// the object-centered frame.
Pose virtual_camera_pose(const Pose& camera, const Pose& object);

Mat3 skew(const Vec3& v);
/// Rodrigues exponential map of an axis-angle vector.
Mat3 exp_so3(const Vec3& w);
/// Right Jacobian of SO(3): d/dw exp(w) v = -exp(w) [v]x Jr(w).
Mat3 right_jacobian_so3(const Vec3& w);
/// Closest rotation in Frobenius norm (polar factor via SVD).
Mat3 orthonormalize(const Mat3& m);

/// Left-perturbs the rotation by exp(delta_rotation) and adds
/// delta_translation. A zero offset returns `p` unchanged (bitwise).
Pose apply_offset(const Pose& p, const PoseOffset& dp);

/// Pinhole projection of a world point through camera `cam`.
/// Throws BehindCamera when the camera-frame depth is <= 0.
Projection project(const Vec3& point, const Intrinsics& intr, const Pose& cam);
/// Non-throwing variant; nullopt when behind the camera.
std::optional<Projection> try_project(const Vec3& point, const Intrinsics& intr, const Pose& cam);

/// Inverse of project. Throws NonPositiveDepth when px.d <= 0.
Vec3 unproject(const PixelSample& px, const Intrinsics& intr, const Pose& cam);

/// Moves a pixel-with-depth from one camera into another (unproject, then
/// project). Propagates BehindCamera.
Projection reproject(const PixelSample& px, const Pose& from_cam, const Pose& to_cam,
                     const Intrinsics& intr);
std::optional<Projection> try_reproject(const PixelSample& px, const Pose& from_cam,
                                        const Pose& to_cam, const Intrinsics& intr);

}  // namespace snerf
