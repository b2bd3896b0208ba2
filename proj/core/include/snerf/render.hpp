#pragma once

#include <span>
#include <vector>

#include "snerf/field.hpp"
#include "snerf/image.hpp"
#include "snerf/parameterization.hpp"

namespace snerf {

enum class SceneMode { kBackground, kForeground };

struct RenderConfig {
  SceneMode mode = SceneMode::kBackground;
  /// Contraction radius (background) or normalization scale (foreground).
  double radius = 3.0;
  double near = 0.2;
  double far = 120.0;
  int n_samples = 128;
};

/// Background: contracted coordinates, log-spaced bins. Foreground: x/radius
/// without contraction, uniform bins.
Vec3 map_point(const Vec3& x, const RenderConfig& cfg);
Mat3 map_jacobian(const Vec3& x, const RenderConfig& cfg);
SpacingMode spacing_for(SceneMode mode);

/// Accumulated transmittance T_i = exp(-sum_{j<i} sigma_j delta_j).
/// Throws LengthMismatch on unequal lengths.
std::vector<double> transmittance(std::span<const double> sigmas, std::span<const double> deltas);

struct RaySample {
  double t = 0.0;
  double delta = 0.0;
  FieldOutput output;
};

struct RenderResult {
  Vec3 color = Vec3::Zero();
  /// Opacity-normalized expected distance along the ray; `far` for vacuum rays.
  double depth = 0.0;
  std::vector<double> weights;
  double opacity = 0.0;
};

/// Below this total weight a ray counts as empty and renders depth = far.
inline constexpr double kVacuumOpacity = 1e-6;

/// Alpha compositing of given samples: w_i = T_i (1 - exp(-sigma_i delta_i)).
RenderResult composite(std::span<const RaySample> samples, double far);

/// Gradients of a scalar loss w.r.t. each sample's density and color.
struct CompositeGrad {
  std::vector<double> d_sigma;
  std::vector<Vec3> d_color;
};

CompositeGrad composite_backward(std::span<const RaySample> samples, const RenderResult& result,
                                 const Vec3& d_color, double d_depth);

/// Evaluates the field at `ts` along the ray and composites.
RenderResult render_ray(const RadianceField& field, const Ray& ray, std::span<const double> ts,
                        const RenderConfig& cfg);

/// One ray and its sample placement.
struct RayQuery {
  Ray ray;
  RaySamples samples;
};

/// Differentiable rendering of a ray batch. forward() keeps only per-sample
/// outputs; backward() recomputes field activations chunk by chunk, so memory
/// stays bounded by the chunk size. Gradients are reduced in chunk order, so
/// results do not depend on the worker count.
class BatchRenderer {
 public:
  BatchRenderer(const RadianceField& field, const RenderConfig& cfg, int rays_per_chunk = 64);

  const std::vector<RenderResult>& forward(std::span<const RayQuery> rays);
  const std::vector<RenderResult>& results() const { return results_; }

  /// d_color/d_depth: loss gradients per ray (depth = distance along the ray).
  /// Accumulates into param_grad; fills ray-origin and ray-direction gradients
  /// when the pointers are non-null.
  void backward(std::span<const Vec3> d_color, std::span<const double> d_depth,
                std::span<double> param_grad, std::vector<Vec3>* d_origin = nullptr,
                std::vector<Vec3>* d_direction = nullptr) const;

 private:
  void gather(size_t chunk, Eigen::Matrix3Xd& x, Eigen::Matrix3Xd& dirs) const;

  const RadianceField& field_;
  RenderConfig cfg_;
  int rays_per_chunk_;
  std::vector<RayQuery> rays_;
  std::vector<size_t> first_sample_;  // prefix offsets into the flattened samples
  std::vector<std::vector<RaySample>> samples_;
  std::vector<RenderResult> results_;
};

struct RenderedImage {
  RgbImage rgb;
  DepthMap depth;  // camera-frame z; vacuum pixels carry z of the far bound
  Grid<float> opacity;
};

/// Deterministic (bin-midpoint) rendering of every pixel of a camera.
RenderedImage render_image(const RadianceField& field, const Intrinsics& intr, const Pose& cam,
                           const RenderConfig& cfg);

}  // namespace snerf
