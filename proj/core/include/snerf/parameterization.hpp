#pragma once

#include <vector>

#include "snerf/geometry.hpp"

namespace snerf {

class Rng;

/// r(t) = origin + t * direction for t in [near, far].
struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double near = 0.2;
  double far = 120.0;

  Vec3 at(double t) const { return origin + t * direction; }
};

struct ContractionConfig {
  /// Radius of the linear region, meters.
  double radius = 3.0;
};

/// Bounded scene contraction: x / r inside the radius, (2 - r/|x|) x/|x|
/// outside. Output norm is always < 2.
Vec3 contract(const Vec3& x, const ContractionConfig& cfg);
/// Jacobian d contract(x) / dx.
Mat3 contract_jacobian(const Vec3& x, const ContractionConfig& cfg);

/// n distances from near to far, geometrically spaced (both endpoints
/// included). Throws InvalidBounds unless 0 < near < far, InvalidArgument
/// for n < 2.
std::vector<double> sample_log_spaced(const Ray& ray, int n);

enum class SpacingMode { kLog, kLinear };

/// Sample distances and compositing bin widths for one ray.
struct RaySamples {
  std::vector<double> t;
  std::vector<double> delta;
};

/// Splits [near, far] into n bins (geometric or uniform) and places one
/// sample per bin: the bin midpoint when `jitter` is null, otherwise a uniform
/// draw inside the bin. delta[i] = t[i+1] - t[i]; the last delta runs to far.
RaySamples bin_samples(const Ray& ray, int n, SpacingMode mode, Rng* jitter = nullptr);
/// Compositing bin widths for given sample distances; the last runs to `far`.
std::vector<double> deltas_from_samples(const std::vector<double>& t, double far);

/// World-space ray through pixel (u, v) of camera `cam` (camera-to-world).
Ray generate_ray(double u, double v, const Intrinsics& intr, const Pose& cam, double near,
                 double far);

}  // namespace snerf
