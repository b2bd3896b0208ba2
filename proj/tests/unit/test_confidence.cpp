#include <gtest/gtest.h>

#include <cmath>

#include "snerf/confidence.hpp"
#include "snerf/errors.hpp"
#include "test_util.hpp"

namespace snerf {
namespace {

RgbImage textured(int w, int h, double phase = 0.0) {
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double a = 0.5 + 0.4 * std::sin(0.7 * x + phase) * std::cos(0.5 * y);
      const double b = 0.5 + 0.3 * std::sin(0.3 * x + 0.9 * y + phase);
      img(x, y) = Rgb(float(a), float(b), float(0.5 * (a + b)));
    }
  return img;
}

RgbImage constant(int w, int h, float v) { return RgbImage(w, h, Rgb(v, v, v)); }

DepthMap constant_depth(int w, int h, float d) {
  DepthMap m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, d);
  return m;
}

void expect_unit_range(const ConfidenceMap& m) {
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.is_valid(x, y)) {
        ASSERT_GE(m.values(x, y), 0.0f);
        ASSERT_LE(m.values(x, y), 1.0f);
      }
}

TEST(Warp, SameCameraReproducesTarget) {
  const RgbImage img = textured(20, 14);
  const Intrinsics intr = testing::small_camera(20, 14);
  const WarpedImage w = warp_image(img, constant_depth(20, 14, 3.0f), Pose::identity(), Pose::identity(), intr);
  for (int y = 0; y < 14; ++y)
    for (int x = 0; x < 20; ++x) {
      ASSERT_TRUE(w.valid(x, y));
      EXPECT_NEAR(w.rgb(x, y).r, img(x, y).r, 1e-6);
      EXPECT_NEAR(w.rgb(x, y).g, img(x, y).g, 1e-6);
    }
}

TEST(Warp, PlaneTranslationIsPhotoconsistent) {
  // Fronto-parallel textured plane at depth d seen from two cameras shifted
  // along x: the target image is the source image shifted by fx t / d.
  const int w = 40, h = 20;
  const Intrinsics intr = testing::small_camera(w, h, 20.0);
  const double d = 10.0, t = 1.0, shift = intr.fx * t / d;  // 2 pixels
  auto texture = [](double u, double v) { return 0.5 + 0.3 * std::sin(0.4 * u) * std::cos(0.3 * v); };
  RgbImage src(w, h), tgt(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float a = float(texture(x, y)), b = float(texture(x + shift, y));
      src(x, y) = Rgb(a, a, a);
      tgt(x, y) = Rgb(b, b, b);
    }
  const Pose cam_t{Mat3::Identity(), Vec3(t, 0, 0)};
  const WarpedImage warped = warp_image(tgt, constant_depth(w, h, float(d)), Pose::identity(), cam_t, intr);
  double err = 0.0;
  int n = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (warped.valid(x, y)) {
        err += std::abs(warped.rgb(x, y).r - src(x, y).r);
        ++n;
      }
  EXPECT_GT(n, w * h / 2);
  EXPECT_LT(err / n, 2.0 / 255.0);
  EXPECT_FALSE(warped.valid(0, 5));  // lands left of the target frame
}

TEST(Warp, NoDepthGivesNothing) {
  const WarpedImage w =
      warp_image(textured(8, 8), DepthMap(8, 8), Pose::identity(), Pose::identity(), testing::small_camera(8, 8));
  for (auto v : w.valid.data()) EXPECT_EQ(v, 0);
}

TEST(RgbConfidence, Examples) {
  const RgbImage a = textured(8, 6);
  const ConfidenceMap same = rgb_confidence(a, all_valid(a));
  for (float v : same.values.data()) EXPECT_EQ(v, 1.0f);
  const ConfidenceMap c = rgb_confidence(constant(4, 4, 0.3f), all_valid(constant(4, 4, 0.5f)));
  EXPECT_NEAR(c.values(2, 2), 0.8f, 1e-6f);
  const ConfidenceMap z = rgb_confidence(constant(4, 4, 0.0f), all_valid(constant(4, 4, 1.0f)));
  EXPECT_EQ(z.values(1, 1), 0.0f);
}

TEST(RgbConfidence, InvalidWarpStaysInvalid) {
  WarpedImage w = all_valid(constant(4, 4, 0.5f));
  w.valid(2, 1) = 0;
  const ConfidenceMap c = rgb_confidence(constant(4, 4, 0.5f), w);
  EXPECT_FALSE(c.is_valid(2, 1));
  EXPECT_TRUE(c.is_valid(1, 1));
}

TEST(SsimConfidence, IdenticalIsOne) {
  const RgbImage a = textured(16, 12);
  const ConfidenceMap c = ssim_confidence(a, all_valid(a));
  for (float v : c.values.data()) EXPECT_NEAR(v, 1.0f, 1e-6f);
}

TEST(SsimConfidence, NegativeIsBelowHalf) {
  const RgbImage a = textured(16, 12);
  RgbImage neg = a;
  for (auto& p : neg.data()) p = Rgb(1 - p.r, 1 - p.g, 1 - p.b);
  const ConfidenceMap c = ssim_confidence(a, all_valid(neg));
  for (int y = 3; y < 9; ++y)
    for (int x = 3; x < 13; ++x) EXPECT_LT(c.values(x, y), 0.5f);
}

TEST(SsimConfidence, ConstantsClosedForm) {
  const double a = 0.2, b = 0.6;
  const double c1 = SsimConstants::kC1, c2 = SsimConstants::kC2;
  const double ssim = (2 * a * b + c1) * c2 / ((a * a + b * b + c1) * c2);
  const ScalarMap m = ssim_map(constant(9, 9, float(a)), all_valid(constant(9, 9, float(b))));
  EXPECT_NEAR(m.values(4, 4), ssim, 1e-5);
  const ConfidenceMap c = ssim_confidence(constant(9, 9, float(a)), all_valid(constant(9, 9, float(b))));
  EXPECT_NEAR(c.values(4, 4), (ssim + 1) / 2, 1e-5);
}

TEST(Features, UnitNorm) {
  const FeatureMap f = compute_features(textured(20, 16));
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 20; ++x) {
      ASSERT_TRUE(f.is_valid(x, y));
      double n = 0;
      for (float v : f.features(x, y)) n += double(v) * v;
      EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
    }
}

TEST(FeatureConfidence, Examples) {
  FeatureMap a, b;
  a.features = Grid<Descriptor>(3, 1);
  a.valid = Mask(3, 1, 1);
  b = a;
  Descriptor e0{}, e1{};
  e0[0] = 1;
  e1[1] = 1;
  Descriptor neg = e0;
  neg[0] = -1;
  a.features(0, 0) = e0, b.features(0, 0) = e0;
  a.features(1, 0) = e0, b.features(1, 0) = e1;
  a.features(2, 0) = e0, b.features(2, 0) = neg;
  const ConfidenceMap c = feature_confidence(a, b);
  EXPECT_NEAR(c.values(0, 0), 1.0, 1e-7);
  EXPECT_NEAR(c.values(1, 0), 1.0 - 0.5 * std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(c.values(2, 0), 0.0, 1e-7);
}

TEST(Gamma, Examples) {
  EXPECT_EQ(gamma(0.0, 0.2), 1.0);
  EXPECT_EQ(gamma(0.2, 0.2), 0.0);
  EXPECT_DOUBLE_EQ(gamma(0.1, 0.2), 0.5);
  EXPECT_EQ(gamma(5.0, 0.2), 0.0);
}

TEST(Gamma, NonIncreasingAndContinuous) {
  Rng rng(61);
  for (int i = 0; i < 10000; ++i) {
    const double tau = rng.uniform(0.05, 0.5);
    const double x = rng.uniform(0, 1), y = x + rng.uniform(0, 0.5);
    ASSERT_GE(gamma(x, tau), gamma(y, tau));
    const double eps = rng.uniform(1e-9, 1e-3);
    ASSERT_LE(std::abs(gamma(tau - eps, tau) - gamma(tau + eps, tau)), eps / tau + 1e-15);
  }
}

TEST(DepthConfidence, ConsistentDepthIsOne) {
  const Intrinsics intr = testing::small_camera(20, 14);
  const DepthMap d = constant_depth(20, 14, 6.0f);
  const Pose shifted{Mat3::Identity(), Vec3(0, 0, 0.0)};
  const ConfidenceMap c = depth_confidence(d, d, Pose::identity(), shifted, intr, 0.2);
  EXPECT_EQ(c.valid_count(), 280u);
  for (float v : c.values.data()) EXPECT_EQ(v, 1.0f);
}

TEST(DepthConfidence, RatioAtTauAndHalfTau) {
  const Intrinsics intr = testing::small_camera(12, 10);
  const DepthMap tgt = constant_depth(12, 10, 5.0f);
  // Same camera: the discrepancy ratio is |d_s - d_t| / d_s.
  const ConfidenceMap at_tau = depth_confidence(constant_depth(12, 10, 6.25f), tgt, Pose::identity(),
                                                Pose::identity(), intr, 0.2);
  EXPECT_NEAR(at_tau.values(5, 5), 0.0, 1e-6);
  const double ds = 5.0 / 0.9;  // ratio 0.1
  const ConfidenceMap half = depth_confidence(constant_depth(12, 10, float(ds)), tgt, Pose::identity(),
                                              Pose::identity(), intr, 0.2);
  EXPECT_NEAR(half.values(5, 5), 0.5, 1e-5);
}

TEST(DepthConfidence, OutsideTargetInvalid) {
  const Intrinsics intr = testing::small_camera(12, 10);
  const DepthMap d = constant_depth(12, 10, 2.0f);
  const Pose far_right{Mat3::Identity(), Vec3(10, 0, 0)};
  EXPECT_EQ(depth_confidence(d, d, Pose::identity(), far_right, intr, 0.2).valid_count(), 0u);
}

TEST(FlowConfidence, Examples) {
  const Intrinsics intr = testing::small_camera(12, 10, 20);
  const DepthMap d = constant_depth(12, 10, 4.0f);
  const Pose cam_t{Mat3::Identity(), Vec3(0.4, 0, 0)};
  const double du = -intr.fx * 0.4 / 4.0;  // -2 px
  FlowField exact(12, 10), off(12, 10), zero(12, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x) {
      exact.set(x, y, float(du), 0.f);
      off.set(x, y, float(du * 1.1), 0.f);
      zero.set(x, y, 0.f, 0.f);
    }
  const ConfidenceMap a = flow_confidence(d, exact, Pose::identity(), cam_t, intr, 0.2);
  EXPECT_NEAR(a.values(6, 5), 1.0, 1e-6);
  const ConfidenceMap b = flow_confidence(d, off, Pose::identity(), cam_t, intr, 0.2);
  EXPECT_NEAR(b.values(6, 5), 0.5, 1e-5);
  const ConfidenceMap c = flow_confidence(d, zero, Pose::identity(), Pose::identity(), intr, 0.2);
  EXPECT_EQ(c.values(6, 5), 1.0f);
}

TEST(Combine, Examples) {
  ConfidenceMap ones(4, 3), zeros(4, 3), halves(4, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x) {
      ones.set(x, y, 1.f);
      zeros.set(x, y, 0.f);
      halves.set(x, y, 0.25f);
    }
  ConfidenceWeights one(1);
  one.logits[0] = 3.7;
  EXPECT_EQ(combine(std::vector<ConfidenceMap>{halves}, one), halves);
  const ConfidenceMap mix = combine(std::vector<ConfidenceMap>{ones, zeros}, ConfidenceWeights(2));
  for (float v : mix.values.data()) EXPECT_FLOAT_EQ(v, 0.5f);

  ConfidenceWeights w(3);
  w.logits = {1, 0, 0};
  const auto ww = w.weights();
  const double e = std::exp(1.0);
  EXPECT_NEAR(ww[0], e / (e + 2), 1e-15);
  EXPECT_NEAR(ww[1], 1 / (e + 2), 1e-15);
  EXPECT_NEAR(ww[0], 0.5761, 1e-4);
  EXPECT_NEAR(ww[2], 0.2119, 1e-4);
  const ConfidenceMap three = combine(std::vector<ConfidenceMap>{ones, zeros, halves}, w);
  EXPECT_NEAR(three.values(0, 0), ww[0] + 0.25 * ww[2], 1e-6);
}

TEST(Combine, ErrorsOnMismatch) {
  EXPECT_THROW(combine(std::vector<ConfidenceMap>{ConfidenceMap(2, 2), ConfidenceMap(3, 2)}, ConfidenceWeights(2)),
               DimensionMismatch);
  EXPECT_THROW(combine(std::vector<ConfidenceMap>{ConfidenceMap(2, 2)}, ConfidenceWeights(2)), DimensionMismatch);
}

TEST(Combine, RestrictedToValidComponents) {
  ConfidenceMap a(1, 1), b(1, 1);
  a.set(0, 0, 0.8f);
  const ConfidenceMap c = combine(std::vector<ConfidenceMap>{a, b}, ConfidenceWeights(2));
  EXPECT_FLOAT_EQ(c.values(0, 0), 0.8f);
  const ConfidenceMap none = combine(std::vector<ConfidenceMap>{b, b}, ConfidenceWeights(2));
  EXPECT_FALSE(none.is_valid(0, 0));
}

TEST(Softmax, SimplexAndShiftInvariance) {
  Rng rng(62);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> l(1 + rng.below(6));
    for (double& v : l) v = rng.uniform(-20, 20);
    const auto w = softmax(l);
    double s = 0;
    for (double v : w) {
      ASSERT_GT(v, 0.0);
      s += v;
    }
    ASSERT_NEAR(s, 1.0, 1e-12);
    const double shift = rng.uniform(-100, 100);
    auto shifted = l;
    for (double& v : shifted) v += shift;
    const auto w2 = softmax(shifted);
    for (size_t k = 0; k < w.size(); ++k) ASSERT_NEAR(w[k], w2[k], 1e-12);
  }
}

TEST(Softmax, CombineGradientMatchesFiniteDifferences) {
  Rng rng(63);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 2 + rng.below(4);
    std::vector<double> vals(n), logits(n);
    std::vector<std::uint8_t> valid(n, 1);
    for (size_t k = 0; k < n; ++k) {
      vals[k] = rng.uniform();
      logits[k] = rng.uniform(-2, 2);
    }
    valid[rng.below(n)] = 0;
    double c = 0;
    std::vector<double> g(n);
    ASSERT_TRUE(combine_pixel(vals, valid, logits, c, g));
    for (size_t k = 0; k < n; ++k) {
      auto lp = logits, lm = logits;
      lp[k] += 1e-6;
      lm[k] -= 1e-6;
      double cp = 0, cm = 0;
      combine_pixel(vals, valid, lp, cp);
      combine_pixel(vals, valid, lm, cm);
      EXPECT_LT(testing::relative_error(g[k], (cp - cm) / 2e-6, 1e-8), 1e-4);
    }
  }
}

TEST(MinConfidence, PixelwiseMinimumOverValid) {
  ConfidenceMap a(2, 1), b(2, 1);
  a.set(0, 0, 0.7f);
  b.set(0, 0, 0.4f);
  b.set(1, 0, 0.9f);
  const ConfidenceMap m = min_confidence(std::vector<ConfidenceMap>{a, b});
  EXPECT_EQ(m.values(0, 0), 0.4f);
  EXPECT_EQ(m.values(1, 0), 0.9f);
}

TEST(ConfidenceFuzz, AllMapsInUnitRange) {
  Rng rng(64);
  const Intrinsics intr = testing::small_camera(14, 10, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    RgbImage a(14, 10), b(14, 10);
    DepthMap ds(14, 10), dt(14, 10);
    FlowField flow(14, 10);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 14; ++x) {
        a(x, y) = Rgb(float(rng.uniform()), float(rng.uniform()), float(rng.uniform()));
        b(x, y) = Rgb(float(rng.uniform()), float(rng.uniform()), float(rng.uniform()));
        if (rng.uniform() < 0.8) ds.set(x, y, float(rng.uniform(0.5, 30)));
        if (rng.uniform() < 0.8) dt.set(x, y, float(rng.uniform(0.5, 30)));
        flow.set(x, y, float(rng.uniform(-5, 5)), float(rng.uniform(-5, 5)));
      }
    const Pose ct{testing::axis_rotation(Vec3::UnitY(), rng.uniform(-0.2, 0.2)), testing::random_vec(rng, 0.5)};
    const WarpedImage w = warp_image(b, ds, Pose::identity(), ct, intr);
    expect_unit_range(rgb_confidence(a, w));
    expect_unit_range(ssim_confidence(a, w));
    expect_unit_range(feature_confidence(compute_features(a), warp_features(compute_features(b), ds, Pose::identity(), ct, intr)));
    expect_unit_range(depth_confidence(ds, dt, Pose::identity(), ct, intr, 0.2));
    expect_unit_range(flow_confidence(ds, flow, Pose::identity(), ct, intr, 0.2));
    if (::testing::Test::HasFatalFailure()) return;
  }
}

}  // namespace
}  // namespace snerf
