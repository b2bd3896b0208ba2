#include "snerf/confidence.hpp"

#include <algorithm>
#include <cmath>

#include "snerf/errors.hpp"

namespace snerf {

namespace {

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

Grid<float> luma_image(const RgbImage& img) {
  Grid<float> out(img.width(), img.height());
  for (size_t i = 0; i < img.size(); ++i) out[i] = luma(img[i]);
  return out;
}

Grid<float> gaussian_blur(const Grid<float>& in, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= sum;
  const int w = in.width();
  const int h = in.height();
  Grid<float> tmp(w, h);
  Grid<float> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * in(std::clamp(x + i, 0, w - 1), y);
      tmp(x, y) = static_cast<float>(acc);
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp(x, std::clamp(y + i, 0, h - 1));
      out(x, y) = static_cast<float>(acc);
    }
  }
  return out;
}

void sobel(const Grid<float>& in, int x, int y, float& gx, float& gy) {
  const int w = in.width();
  const int h = in.height();
  auto at = [&](int dx, int dy) { return in(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1)); };
  gx = (at(1, -1) + 2 * at(1, 0) + at(1, 1) - at(-1, -1) - 2 * at(-1, 0) - at(-1, 1)) / 8.f;
  gy = (at(-1, 1) + 2 * at(0, 1) + at(1, 1) - at(-1, -1) - 2 * at(0, -1) - at(1, -1)) / 8.f;
}

bool normalize(Descriptor& d) {
  double n2 = 0.0;
  for (float v : d) n2 += double(v) * v;
  if (!(n2 > 1e-24)) return false;
  const double inv = 1.0 / std::sqrt(n2);
  for (float& v : d) v = static_cast<float>(v * inv);
  return true;
}

void require_same_shape(const RgbImage& a, const RgbImage& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("images differ in size");
}

}  // namespace

WarpedImage all_valid(const RgbImage& img) { return {img, Mask(img.width(), img.height(), 1)}; }

WarpedImage warp_image(const RgbImage& target_img, const DepthMap& source_depth, const Pose& cam_s,
                       const Pose& cam_t, const Intrinsics& intr) {
  const int w = source_depth.width();
  const int h = source_depth.height();
  WarpedImage out{RgbImage(w, h), Mask(w, h, 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!source_depth.is_valid(x, y)) continue;
      const PixelSample px{double(x), double(y), source_depth.values(x, y)};
      const auto proj = try_reproject(px, cam_s, cam_t, intr);
      if (!proj || !proj->in_frame) continue;
      out.rgb(x, y) = sample_bilinear(target_img, proj->pixel.u, proj->pixel.v);
      out.valid(x, y) = 1;
    }
  }
  return out;
}

ConfidenceMap rgb_confidence(const RgbImage& src, const WarpedImage& warped) {
  require_same_shape(src, warped.rgb);
  ConfidenceMap out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      if (!warped.valid(x, y)) continue;
      out.set(x, y, clamp01(1.0 - mean_abs_diff(src(x, y), warped.rgb(x, y))));
    }
  }
  return out;
}

ScalarMap ssim_map(const RgbImage& a, const WarpedImage& b) {
  require_same_shape(a, b.rgb);
  const int w = a.width();
  const int h = a.height();
  const Grid<float> la = luma_image(a);
  const Grid<float> lb = luma_image(b.rgb);
  constexpr int r = SsimConstants::kWindow / 2;
  ScalarMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!b.valid(x, y)) continue;
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      int n = 0;
      for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
        for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
          if (!b.valid(xx, yy)) continue;
          const double va = la(xx, yy);
          const double vb = lb(xx, yy);
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
          ++n;
        }
      }
      const double mu_a = sa / n;
      const double mu_b = sb / n;
      const double var_a = std::max(0.0, saa / n - mu_a * mu_a);
      const double var_b = std::max(0.0, sbb / n - mu_b * mu_b);
      const double cov = sab / n - mu_a * mu_b;
      const double c1 = SsimConstants::kC1;
      const double c2 = SsimConstants::kC2;
      const double ssim = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                          ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      out.set(x, y, static_cast<float>(std::clamp(ssim, -1.0, 1.0)));
    }
  }
  return out;
}

ConfidenceMap ssim_confidence(const RgbImage& src, const WarpedImage& warped) {
  const ScalarMap s = ssim_map(src, warped);
  ConfidenceMap out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      if (s.is_valid(x, y)) out.set(x, y, clamp01((s.values(x, y) + 1.0) / 2.0));
    }
  }
  return out;
}

FeatureMap compute_features(const RgbImage& img) {
  const int w = img.width();
  const int h = img.height();
  const Grid<float> l0 = luma_image(img);
  const Grid<float> l1 = gaussian_blur(l0, 1.0);
  const Grid<float> l2 = gaussian_blur(l0, 2.0);
  const Grid<float> l3 = gaussian_blur(l0, 4.0);
  // gradients are small next to intensities; scale them into a comparable range
  constexpr float kGradScale = 4.f;
  constexpr float kBias = 0.25f;
  FeatureMap out{Grid<Descriptor>(w, h), Mask(w, h, 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Descriptor d{};
      d[0] = l0(x, y);
      d[1] = l1(x, y);
      d[2] = l2(x, y);
      d[3] = l3(x, y);
      sobel(l0, x, y, d[4], d[5]);
      sobel(l1, x, y, d[6], d[7]);
      sobel(l2, x, y, d[8], d[9]);
      for (int i = 4; i < 10; ++i) d[i] *= kGradScale;
      d[10] = kBias;
      out.valid(x, y) = normalize(d) ? 1 : 0;
      out.features(x, y) = d;
    }
  }
  return out;
}

FeatureMap warp_features(const FeatureMap& target_feat, const DepthMap& source_depth,
                         const Pose& cam_s, const Pose& cam_t, const Intrinsics& intr) {
  const int w = source_depth.width();
  const int h = source_depth.height();
  FeatureMap out{Grid<Descriptor>(w, h), Mask(w, h, 0)};
  const int tw = target_feat.width();
  const int th = target_feat.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!source_depth.is_valid(x, y)) continue;
      const PixelSample px{double(x), double(y), source_depth.values(x, y)};
      const auto proj = try_reproject(px, cam_s, cam_t, intr);
      if (!proj || !proj->in_frame) continue;
      const double u = std::clamp(proj->pixel.u, 0.0, double(tw - 1));
      const double v = std::clamp(proj->pixel.v, 0.0, double(th - 1));
      const int x0 = static_cast<int>(std::floor(u));
      const int y0 = static_cast<int>(std::floor(v));
      const int x1 = std::min(x0 + 1, tw - 1);
      const int y1 = std::min(y0 + 1, th - 1);
      const double ax = u - x0;
      const double ay = v - y0;
      const std::array<std::pair<int, int>, 4> taps{{{x0, y0}, {x1, y0}, {x0, y1}, {x1, y1}}};
      const std::array<double, 4> wts{(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
      Descriptor d{};
      bool ok = true;
      for (int k = 0; k < 4; ++k) {
        if (wts[k] == 0.0) continue;
        if (!target_feat.is_valid(taps[k].first, taps[k].second)) {
          ok = false;
          break;
        }
        const Descriptor& t = target_feat.features(taps[k].first, taps[k].second);
        for (int i = 0; i < kFeatureDims; ++i) d[i] += static_cast<float>(wts[k] * t[i]);
      }
      if (!ok || !normalize(d)) continue;
      out.features(x, y) = d;
      out.valid(x, y) = 1;
    }
  }
  return out;
}

ConfidenceMap feature_confidence(const FeatureMap& src_feat, const FeatureMap& warped_feat) {
  if (src_feat.width() != warped_feat.width() || src_feat.height() != warped_feat.height()) {
    throw DimensionMismatch("feature maps differ in size");
  }
  ConfidenceMap out(src_feat.width(), src_feat.height());
  for (int y = 0; y < src_feat.height(); ++y) {
    for (int x = 0; x < src_feat.width(); ++x) {
      if (!src_feat.is_valid(x, y) || !warped_feat.is_valid(x, y)) continue;
      const Descriptor& a = src_feat.features(x, y);
      const Descriptor& b = warped_feat.features(x, y);
      double d2 = 0.0;
      for (int i = 0; i < kFeatureDims; ++i) d2 += double(a[i] - b[i]) * (a[i] - b[i]);
      out.set(x, y, clamp01(1.0 - 0.5 * std::sqrt(d2)));
    }
  }
  return out;
}

double gamma(double x, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("gamma threshold must be positive");
  if (x >= tau) return 0.0;
  return 1.0 - x / tau;
}

ConfidenceMap depth_confidence(const DepthMap& src_depth, const DepthMap& tgt_depth,
                               const Pose& cam_s, const Pose& cam_t, const Intrinsics& intr,
                               double tau) {
  const int w = src_depth.width();
  const int h = src_depth.height();
  ConfidenceMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!src_depth.is_valid(x, y)) continue;
      const double ds = src_depth.values(x, y);
      const auto proj = try_reproject({double(x), double(y), ds}, cam_s, cam_t, intr);
      if (!proj || !proj->in_frame) continue;
      const int xt = nearest_pixel(proj->pixel.u);
      const int yt = nearest_pixel(proj->pixel.v);
      if (!tgt_depth.is_valid(xt, yt)) continue;
      const double ratio = std::abs(proj->pixel.d - tgt_depth.values(xt, yt)) / ds;
      out.set(x, y, static_cast<float>(gamma(ratio, tau)));
    }
  }
  return out;
}

ConfidenceMap flow_confidence(const DepthMap& src_depth, const FlowField& oflow, const Pose& cam_s,
                              const Pose& cam_t, const Intrinsics& intr, double tau, double eps) {
  const int w = src_depth.width();
  const int h = src_depth.height();
  ConfidenceMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!src_depth.is_valid(x, y) || !oflow.is_valid(x, y)) continue;
      const auto proj =
          try_reproject({double(x), double(y), src_depth.values(x, y)}, cam_s, cam_t, intr);
      if (!proj || !proj->in_frame) continue;
      const double du = proj->pixel.u - x;
      const double dv = proj->pixel.v - y;
      const double num = std::hypot(du - oflow.du(x, y), dv - oflow.dv(x, y));
      const double ratio = num / std::max(std::hypot(du, dv), eps);
      out.set(x, y, static_cast<float>(gamma(ratio, tau)));
    }
  }
  return out;
}

ConfidenceMap min_confidence(std::span<const ConfidenceMap> maps) {
  if (maps.empty()) throw EmptyInput("no confidence maps to reduce");
  const int w = maps.front().width();
  const int h = maps.front().height();
  ConfidenceMap out(w, h);
  for (const auto& m : maps) {
    if (m.width() != w || m.height() != h) throw DimensionMismatch("confidence maps differ in size");
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float best = std::numeric_limits<float>::infinity();
      for (const auto& m : maps) {
        if (m.is_valid(x, y)) best = std::min(best, m.values(x, y));
      }
      if (std::isfinite(best)) out.set(x, y, best);
    }
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

std::vector<double> ConfidenceWeights::weights() const { return softmax(logits); }

bool combine_pixel(std::span<const double> values, std::span<const std::uint8_t> valid,
                   std::span<const double> logits, double& result, std::span<double> grad) {
  const size_t n = values.size();
  if (valid.size() != n || logits.size() != n || (!grad.empty() && grad.size() != n)) {
    throw DimensionMismatch("combine_pixel: one logit and one validity flag per component");
  }
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    if (valid[i]) m = std::max(m, logits[i]);
  }
  for (auto& g : grad) g = 0.0;
  if (!std::isfinite(m)) {
    result = 0.0;
    return false;
  }
  double z = 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    const double e = std::exp(logits[i] - m);
    z += e;
    acc += e * values[i];
  }
  result = acc / z;
  if (!grad.empty()) {
    for (size_t i = 0; i < n; ++i) {
      if (valid[i]) grad[i] = std::exp(logits[i] - m) / z * (values[i] - result);
    }
  }
  return true;
}

ConfidenceMap combine(std::span<const ConfidenceMap> maps, const ConfidenceWeights& w) {
  if (maps.empty()) throw EmptyInput("no confidence maps to combine");
  if (w.logits.size() != maps.size()) throw DimensionMismatch("need one logit per confidence map");
  const int width = maps.front().width();
  const int height = maps.front().height();
  for (const auto& m : maps) {
    if (m.width() != width || m.height() != height) {
      throw DimensionMismatch("confidence maps differ in size");
    }
  }
  ConfidenceMap out(width, height);
  std::vector<double> vals(maps.size());
  std::vector<std::uint8_t> ok(maps.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (size_t i = 0; i < maps.size(); ++i) {
        ok[i] = maps[i].is_valid(x, y) ? 1 : 0;
        vals[i] = ok[i] ? maps[i].values(x, y) : 0.0;
      }
      double c = 0.0;
      if (combine_pixel(vals, ok, w.logits, c)) out.set(x, y, clamp01(c));
    }
  }
  return out;
}

}  // namespace snerf
