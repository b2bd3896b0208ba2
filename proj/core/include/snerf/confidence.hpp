#pragma once

#include <array>
#include <span>
#include <vector>

#include "snerf/geometry.hpp"
#include "snerf/image.hpp"

namespace snerf {

/// An image resampled into a source view, with per-pixel validity.
struct WarpedImage {
  RgbImage rgb;
  Mask valid;
};

/// Wraps a fully valid image.
WarpedImage all_valid(const RgbImage& img);

/// Inverse warp: every valid source pixel is reprojected into the target view
/// with its source depth and the target image is sampled bilinearly there.
/// Pixels without depth, behind the target camera or outside its frame are
/// invalid.
WarpedImage warp_image(const RgbImage& target_img, const DepthMap& source_depth, const Pose& cam_s,
                       const Pose& cam_t, const Intrinsics& intr);

/// 1 - mean-over-channels |src - warped|, clamped to [0, 1].
ConfidenceMap rgb_confidence(const RgbImage& src, const WarpedImage& warped);

struct SsimConstants {
  static constexpr int kWindow = 7;
  static constexpr double kC1 = 0.01 * 0.01;
  static constexpr double kC2 = 0.03 * 0.03;
};

/// Raw SSIM on luma with a 7x7 box window clipped to the image and to valid
/// warped pixels. Values in [-1, 1].
ScalarMap ssim_map(const RgbImage& a, const WarpedImage& b);
/// (SSIM + 1) / 2, clamped to [0, 1].
ConfidenceMap ssim_confidence(const RgbImage& src, const WarpedImage& warped);

/// Hand-crafted multi-scale photometric descriptor used for feature-level
/// consistency: luma, luma blurred at sigma 1/2/4, Sobel gradients at the
/// base and two blurred scales, and a constant term; L2-normalized.
inline constexpr int kFeatureDims = 11;
using Descriptor = std::array<float, kFeatureDims>;

struct FeatureMap {
  Grid<Descriptor> features;
  Mask valid;

  int width() const { return features.width(); }
  int height() const { return features.height(); }
  bool is_valid(int x, int y) const { return valid.in_bounds(x, y) && valid(x, y) != 0; }
};

FeatureMap compute_features(const RgbImage& img);
/// Resamples target descriptors into the source view (bilinear, renormalized).
FeatureMap warp_features(const FeatureMap& target_feat, const DepthMap& source_depth,
                         const Pose& cam_s, const Pose& cam_t, const Intrinsics& intr);
/// 1 - |f1 - f2| / 2, clamped; both descriptors unit length.
ConfidenceMap feature_confidence(const FeatureMap& src_feat, const FeatureMap& warped_feat);

/// 1 - x / tau below tau, 0 at or above it.
double gamma(double x, double tau);

/// Depth consistency: reproject each source pixel, compare its projected depth
/// with the target depth at the nearest landing pixel, normalized by the
/// source depth, and map through gamma.
ConfidenceMap depth_confidence(const DepthMap& src_depth, const DepthMap& tgt_depth,
                               const Pose& cam_s, const Pose& cam_t, const Intrinsics& intr,
                               double tau);

/// Flow consistency: |Delta - flow| / max(|Delta|, eps) through gamma, where
/// Delta is the reprojected displacement of the source pixel.
ConfidenceMap flow_confidence(const DepthMap& src_depth, const FlowField& oflow, const Pose& cam_s,
                              const Pose& cam_t, const Intrinsics& intr, double tau,
                              double eps = 1e-6);

/// Pixelwise minimum over maps valid at that pixel; invalid where none is.
ConfidenceMap min_confidence(std::span<const ConfidenceMap> maps);

/// Learnable combination weights, softmax(logits).
struct ConfidenceWeights {
  std::vector<double> logits;

  ConfidenceWeights() = default;
  explicit ConfidenceWeights(size_t n) : logits(n, 0.0) {}
  std::vector<double> weights() const;
};

std::vector<double> softmax(std::span<const double> logits);

/// Combined confidence at one pixel: softmax restricted to the components
/// valid there (a plain softmax when all are). Returns false when no
/// component is valid. When `grad` is given it receives d(result)/d(logits).
bool combine_pixel(std::span<const double> values, std::span<const std::uint8_t> valid,
                   std::span<const double> logits, double& result, std::span<double> grad = {});

/// Pixelwise convex combination of the component maps.
/// Throws DimensionMismatch on differing sizes or logit count.
ConfidenceMap combine(std::span<const ConfidenceMap> maps, const ConfidenceWeights& w);

}  // namespace snerf
