#include "snerf/parameterization.hpp"

#include <algorithm>
#include <cmath>

#include "snerf/errors.hpp"
#include "snerf/random.hpp"

namespace snerf {

Vec3 contract(const Vec3& x, const ContractionConfig& cfg) {
  const double r = cfg.radius;
  const double n = x.norm();
  if (n <= r) return x / r;
  return (2.0 - r / n) * (x / n);
}

Mat3 contract_jacobian(const Vec3& x, const ContractionConfig& cfg) {
  const double r = cfg.radius;
  const double n = x.norm();
  if (n <= r) return Mat3::Identity() / r;
  const Vec3 u = x / n;
  const Mat3 uu = u * u.transpose();
  return (2.0 - r / n) / n * (Mat3::Identity() - uu) + (r / (n * n)) * uu;
}

std::vector<double> sample_log_spaced(const Ray& ray, int n) {
  if (!(ray.near > 0.0) || !(ray.far > ray.near)) {
    throw InvalidBounds("log-spaced sampling requires 0 < near < far");
  }
  if (n < 2) throw InvalidArgument("log-spaced sampling requires n >= 2");
  std::vector<double> t(n);
  const double log_ratio = std::log(ray.far / ray.near);
  t.front() = ray.near;
  for (int i = 1; i + 1 < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    t[i] = std::clamp(ray.near * std::exp(s * log_ratio), ray.near, ray.far);
  }
  t.back() = ray.far;
  return t;
}

std::vector<double> deltas_from_samples(const std::vector<double>& t, double far) {
  std::vector<double> delta(t.size());
  for (size_t i = 0; i + 1 < t.size(); ++i) delta[i] = t[i + 1] - t[i];
  if (!t.empty()) delta.back() = std::max(0.0, far - t.back());
  return delta;
}

RaySamples bin_samples(const Ray& ray, int n, SpacingMode mode, Rng* jitter) {
  if (n < 1) throw InvalidArgument("need at least one sample per ray");
  std::vector<double> edges;
  if (mode == SpacingMode::kLog) {
    edges = sample_log_spaced(ray, n + 1);
  } else {
    if (!(ray.far > ray.near)) throw InvalidBounds("uniform sampling requires near < far");
    edges.resize(n + 1);
    for (int i = 0; i <= n; ++i) edges[i] = ray.near + (ray.far - ray.near) * i / n;
  }
  RaySamples out;
  out.t.resize(n);
  for (int i = 0; i < n; ++i) {
    const double s = jitter ? jitter->uniform() : 0.5;
    out.t[i] = edges[i] + s * (edges[i + 1] - edges[i]);
  }
  out.delta = deltas_from_samples(out.t, ray.far);
  return out;
}

Ray generate_ray(double u, double v, const Intrinsics& intr, const Pose& cam, double near,
                 double far) {
  Ray ray;
  ray.origin = cam.translation;
  ray.direction = (cam.rotation * intr.backproject(u, v)).normalized();
  ray.near = near;
  ray.far = far;
  return ray;
}

}  // namespace snerf
