#include "snerf/render.hpp"

#include <cmath>

#include "snerf/errors.hpp"
#include "snerf/parallel.hpp"

namespace snerf {

Vec3 map_point(const Vec3& x, const RenderConfig& cfg) {
  if (cfg.mode == SceneMode::kForeground) return x / cfg.radius;
  return contract(x, {cfg.radius});
}

Mat3 map_jacobian(const Vec3& x, const RenderConfig& cfg) {
  if (cfg.mode == SceneMode::kForeground) return Mat3::Identity() / cfg.radius;
  return contract_jacobian(x, {cfg.radius});
}

SpacingMode spacing_for(SceneMode mode) {
  return mode == SceneMode::kForeground ? SpacingMode::kLinear : SpacingMode::kLog;
}

std::vector<double> transmittance(std::span<const double> sigmas, std::span<const double> deltas) {
  if (sigmas.size() != deltas.size()) throw LengthMismatch("sigmas and deltas differ in length");
  std::vector<double> t(sigmas.size());
  double optical_depth = 0.0;
  for (size_t i = 0; i < sigmas.size(); ++i) {
    t[i] = std::exp(-optical_depth);
    optical_depth += sigmas[i] * deltas[i];
  }
  return t;
}

RenderResult composite(std::span<const RaySample> samples, double far) {
  RenderResult r;
  r.weights.resize(samples.size());
  double optical_depth = 0.0;
  double wt = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const double tr = std::exp(-optical_depth);
    const double sd = samples[i].output.density * samples[i].delta;
    const double w = tr * -std::expm1(-sd);
    r.weights[i] = w;
    r.color += w * samples[i].output.color;
    r.opacity += w;
    wt += w * samples[i].t;
    optical_depth += sd;
  }
  r.depth = r.opacity < kVacuumOpacity ? far : wt / r.opacity;
  return r;
}

CompositeGrad composite_backward(std::span<const RaySample> samples, const RenderResult& result,
                                 const Vec3& d_color, double d_depth) {
  const size_t n = samples.size();
  CompositeGrad g;
  g.d_sigma.assign(n, 0.0);
  g.d_color.assign(n, Vec3::Zero());
  const bool depth_live = result.opacity >= kVacuumOpacity;
  // dL/dw_k
  std::vector<double> gw(n);
  for (size_t k = 0; k < n; ++k) {
    gw[k] = d_color.dot(samples[k].output.color);
    if (depth_live) gw[k] += d_depth * (samples[k].t - result.depth) / result.opacity;
    g.d_color[k] = result.weights[k] * d_color;
  }
  // dL/dsigma_i = delta_i (T_i e^{-s_i d_i} gw_i - sum_{k>i} w_k gw_k)
  double tail = 0.0;
  double optical_depth = 0.0;
  std::vector<double> trans(n);
  for (size_t i = 0; i < n; ++i) {
    trans[i] = std::exp(-optical_depth);
    optical_depth += samples[i].output.density * samples[i].delta;
  }
  for (size_t i = n; i-- > 0;) {
    const double sd = samples[i].output.density * samples[i].delta;
    g.d_sigma[i] = samples[i].delta * (trans[i] * std::exp(-sd) * gw[i] - tail);
    tail += result.weights[i] * gw[i];
  }
  return g;
}

RenderResult render_ray(const RadianceField& field, const Ray& ray, std::span<const double> ts,
                        const RenderConfig& cfg) {
  RayQuery q{ray, {{ts.begin(), ts.end()}, deltas_from_samples({ts.begin(), ts.end()}, ray.far)}};
  BatchRenderer renderer(field, cfg);
  return renderer.forward({&q, 1}).front();
}

BatchRenderer::BatchRenderer(const RadianceField& field, const RenderConfig& cfg, int rays_per_chunk)
    : field_(field), cfg_(cfg), rays_per_chunk_(std::max(1, rays_per_chunk)) {}

void BatchRenderer::gather(size_t chunk, Eigen::Matrix3Xd& x, Eigen::Matrix3Xd& dirs) const {
  const size_t r0 = chunk * rays_per_chunk_;
  const size_t r1 = std::min(rays_.size(), r0 + rays_per_chunk_);
  const size_t s0 = first_sample_[r0];
  const size_t count = first_sample_[r1] - s0;
  x.resize(3, static_cast<Eigen::Index>(count));
  dirs.resize(3, static_cast<Eigen::Index>(count));
  Eigen::Index col = 0;
  for (size_t r = r0; r < r1; ++r) {
    const Ray& ray = rays_[r].ray;
    for (double t : rays_[r].samples.t) {
      x.col(col) = map_point(ray.at(t), cfg_);
      dirs.col(col) = ray.direction;
      ++col;
    }
  }
}

const std::vector<RenderResult>& BatchRenderer::forward(std::span<const RayQuery> rays) {
  rays_.assign(rays.begin(), rays.end());
  first_sample_.assign(rays_.size() + 1, 0);
  for (size_t r = 0; r < rays_.size(); ++r) {
    if (rays_[r].samples.t.size() != rays_[r].samples.delta.size()) {
      throw LengthMismatch("sample distances and widths differ in length");
    }
    first_sample_[r + 1] = first_sample_[r] + rays_[r].samples.t.size();
  }
  samples_.assign(rays_.size(), {});
  results_.assign(rays_.size(), {});
  const size_t chunks = (rays_.size() + rays_per_chunk_ - 1) / rays_per_chunk_;
  parallel_for(chunks, [&](size_t c) {
    Eigen::Matrix3Xd x;
    Eigen::Matrix3Xd dirs;
    gather(c, x, dirs);
    FieldBatch fb;
    field_.forward(x, dirs, fb);
    const size_t r0 = c * rays_per_chunk_;
    const size_t r1 = std::min(rays_.size(), r0 + rays_per_chunk_);
    Eigen::Index col = 0;
    for (size_t r = r0; r < r1; ++r) {
      const RaySamples& s = rays_[r].samples;
      auto& out = samples_[r];
      out.resize(s.t.size());
      for (size_t i = 0; i < s.t.size(); ++i, ++col) {
        out[i] = {s.t[i], s.delta[i], {fb.color.col(col), fb.sigma(col)}};
      }
      results_[r] = composite(out, rays_[r].ray.far);
    }
  });
  return results_;
}

void BatchRenderer::backward(std::span<const Vec3> d_color, std::span<const double> d_depth,
                             std::span<double> param_grad, std::vector<Vec3>* d_origin,
                             std::vector<Vec3>* d_direction) const {
  if (d_color.size() != rays_.size() || d_depth.size() != rays_.size()) {
    throw LengthMismatch("one upstream gradient per ray is required");
  }
  const bool want_rays = d_origin || d_direction;
  if (d_origin) d_origin->assign(rays_.size(), Vec3::Zero());
  if (d_direction) d_direction->assign(rays_.size(), Vec3::Zero());
  const size_t chunks = (rays_.size() + rays_per_chunk_ - 1) / rays_per_chunk_;
  std::vector<std::vector<double>> partial(chunks);
  parallel_for(chunks, [&](size_t c) {
    Eigen::Matrix3Xd x;
    Eigen::Matrix3Xd dirs;
    gather(c, x, dirs);
    FieldBatch fb;
    field_.forward(x, dirs, fb);
    const size_t r0 = c * rays_per_chunk_;
    const size_t r1 = std::min(rays_.size(), r0 + rays_per_chunk_);
    Eigen::VectorXd ds(x.cols());
    Eigen::Matrix3Xd dc(3, x.cols());
    Eigen::Index col = 0;
    for (size_t r = r0; r < r1; ++r) {
      const CompositeGrad g = composite_backward(samples_[r], results_[r], d_color[r], d_depth[r]);
      for (size_t i = 0; i < g.d_sigma.size(); ++i, ++col) {
        ds(col) = g.d_sigma[i];
        dc.col(col) = g.d_color[i];
      }
    }
    partial[c].assign(param_grad.size(), 0.0);
    Eigen::Matrix3Xd dx;
    Eigen::Matrix3Xd dd;
    field_.backward(fb, ds, dc, partial[c], want_rays ? &dx : nullptr, want_rays ? &dd : nullptr);
    if (!want_rays) return;
    col = 0;
    for (size_t r = r0; r < r1; ++r) {
      const Ray& ray = rays_[r].ray;
      Vec3 go = Vec3::Zero();
      Vec3 gd = Vec3::Zero();
      for (double t : rays_[r].samples.t) {
        const Vec3 gw = map_jacobian(ray.at(t), cfg_).transpose() * dx.col(col);
        go += gw;
        gd += t * gw + dd.col(col);
        ++col;
      }
      if (d_origin) (*d_origin)[r] = go;
      if (d_direction) (*d_direction)[r] = gd;
    }
  });
  for (const auto& p : partial) {
    for (size_t i = 0; i < p.size(); ++i) param_grad[i] += p[i];
  }
}

RenderedImage render_image(const RadianceField& field, const Intrinsics& intr, const Pose& cam,
                           const RenderConfig& cfg) {
  const int w = intr.width;
  const int h = intr.height;
  RenderedImage out{RgbImage(w, h), DepthMap(w, h), Grid<float>(w, h, 0.f)};
  std::vector<RayQuery> rays;
  rays.reserve(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Ray ray = generate_ray(x, y, intr, cam, cfg.near, cfg.far);
      rays.push_back({ray, bin_samples(ray, cfg.n_samples, spacing_for(cfg.mode))});
    }
  }
  BatchRenderer renderer(field, cfg);
  const auto& res = renderer.forward(rays);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      const RenderResult& r = res[i];
      out.rgb(x, y) = {static_cast<float>(r.color.x()), static_cast<float>(r.color.y()),
                       static_cast<float>(r.color.z())};
      const double cos_z = intr.backproject(x, y).normalized().z();
      out.depth.set(x, y, static_cast<float>(r.depth * cos_z));
      out.opacity(x, y) = static_cast<float>(r.opacity);
    }
  }
  return out;
}

}  // namespace snerf
