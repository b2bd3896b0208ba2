#include <gtest/gtest.h>

#include <algorithm>

#include "snerf/dataset.hpp"
#include "snerf/errors.hpp"
#include "snerf/io.hpp"
#include "test_util.hpp"

namespace snerf {
namespace {

const Capture& toy_capture() {
  static const Capture cap = capture_from_scene(street_toy(7));
  return cap;
}

TEST(Capture, Shape) {
  const Capture& cap = toy_capture();
  EXPECT_EQ(cap.frames, 5);
  EXPECT_EQ(cap.cameras, 3);
  ASSERT_EQ(cap.views.size(), 15u);
  EXPECT_EQ(cap.sweeps.size(), 5u);
  EXPECT_EQ(cap.object_poses.size(), 5u);
  for (int f = 0; f < 5; ++f)
    for (int c = 0; c < 3; ++c) {
      const View& v = cap.view(f, c);
      EXPECT_EQ(v.frame, f);
      EXPECT_EQ(v.camera, c);
      EXPECT_TRUE(v.rgb.same_shape(v.intr.width, v.intr.height));
    }
  // flows between same-camera frames up to 2 apart, both directions
  EXPECT_EQ(cap.flows.size(), 3u * (2 * 4 + 2 * 3));
  EXPECT_EQ(cap.full_flows.size(), cap.flows.size());
  EXPECT_NE(cap.flow(cap.index(0, 1), cap.index(2, 1)), nullptr);
  EXPECT_EQ(cap.flow(cap.index(0, 1), cap.index(3, 1)), nullptr);
  EXPECT_EQ(cap.flow(cap.index(0, 1), cap.index(1, 2)), nullptr);
}

TEST(Capture, FullFlowFallsBack) {
  Capture cap = toy_capture();
  const int s = cap.index(0, 0), t = cap.index(1, 0);
  EXPECT_EQ(cap.full_flow(s, t), &cap.full_flows.at({s, t}));
  cap.full_flows.clear();
  EXPECT_EQ(cap.full_flow(s, t), cap.flow(s, t));
}

TEST(Capture, WriteReadRoundTrip) {
  testing::TempDir dir("capture");
  const Capture& cap = toy_capture();
  write_capture(cap, dir.path());
  const Capture back = read_capture(dir.path());
  EXPECT_EQ(back.name, cap.name);
  ASSERT_EQ(back.views.size(), cap.views.size());
  for (size_t i = 0; i < cap.views.size(); ++i) {
    EXPECT_EQ(back.views[i].gt_depth, cap.views[i].gt_depth);
    EXPECT_LE((back.views[i].pose.matrix() - cap.views[i].pose.matrix()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(back.views[i].intr.width, cap.views[i].intr.width);
    EXPECT_DOUBLE_EQ(back.views[i].intr.fx, cap.views[i].intr.fx);
    const auto& a = cap.views[i].rgb.data();
    const auto& b = back.views[i].rgb.data();
    for (size_t k = 0; k < a.size(); ++k) ASSERT_NEAR(a[k].g, b[k].g, 0.5 / 255 + 1e-6);
  }
  EXPECT_EQ(back.flows, cap.flows);
  EXPECT_EQ(back.full_flows, cap.full_flows);
  ASSERT_EQ(back.sweeps.size(), cap.sweeps.size());
  for (size_t f = 0; f < cap.sweeps.size(); ++f) {
    EXPECT_EQ(back.sweeps[f].dynamic, cap.sweeps[f].dynamic);
    ASSERT_EQ(back.sweeps[f].cloud.size(), cap.sweeps[f].cloud.size());
  }
  ASSERT_EQ(back.object_poses.size(), 5u);
  EXPECT_LE((back.object_half - cap.object_half).norm(), 1e-12);
  EXPECT_EQ(format_manifest(back), format_manifest(cap));
}

TEST(Capture, ReadErrors) {
  testing::TempDir dir("capture");
  EXPECT_THROW(read_capture(dir.path()), MissingInput);
  write_capture(toy_capture(), dir.path());
  std::filesystem::remove(dir / "rgb" / "f2_c1.png");
  EXPECT_THROW(read_capture(dir.path()), Error);
  io::write_text(dir / "manifest.txt", "capture name=x frames=0 cameras=1\n");
  EXPECT_THROW(read_capture(dir.path()), ParseError);
}

TEST(Neighbours, Examples) {
  const std::vector<int> frames{0, 2, 4};
  auto [p, n] = neighbour_frames(frames, 2);
  EXPECT_EQ(p, 0);
  EXPECT_EQ(n, 4);
  std::tie(p, n) = neighbour_frames(frames, 0);
  EXPECT_FALSE(p.has_value());
  EXPECT_EQ(n, 2);
  std::tie(p, n) = neighbour_frames(frames, 3);
  EXPECT_EQ(p, 2);
  EXPECT_EQ(n, 4);
  std::tie(p, n) = neighbour_frames(std::vector<int>{4, 0}, 5);
  EXPECT_EQ(p, 4);
  EXPECT_FALSE(n.has_value());
}

TEST(Fusion, WithoutFilterNothingIsRemoved) {
  const Capture& cap = toy_capture();
  FusionConfig cfg;
  cfg.filter = false;
  const std::vector<int> frames{0, 2, 4};
  const FusedView fv = fuse_view(cap, cap.index(2, 1), frames, cfg);
  EXPECT_EQ(fv.stats.removed, 0u);
  EXPECT_EQ(fv.filtered, fv.sparse);
  EXPECT_GT(fv.stats.sparse, 0u);
  EXPECT_EQ(fv.dense.valid_count(), fv.dense.values.size());
  cfg.window = 0;
  EXPECT_THROW(fuse_view(cap, 0, frames, cfg), InvalidArgument);
}

TEST(Fusion, SparseDepthMatchesGroundTruth) {
  const Capture& cap = toy_capture();
  const int view = cap.index(2, 0);
  const FusedView fv = fuse_view(cap, view, std::vector<int>{0, 2, 4}, FusionConfig{});
  const DepthMap& gt = cap.views[view].gt_depth;
  size_t n = 0, close = 0;
  for (size_t i = 0; i < gt.values.size(); ++i) {
    if (!fv.filtered.valid[i] || !gt.valid[i]) continue;
    ++n;
    close += std::abs(fv.filtered.values[i] - gt.values[i]) <= 0.05f * gt.values[i];
  }
  ASSERT_GT(n, 50u);
  EXPECT_GT(double(close) / double(n), 0.9);
  EXPECT_EQ(fv.stats.static_removed + fv.stats.dynamic_removed, fv.stats.removed);
}

TEST(Confidence, Components) {
  for (auto c : all_components()) EXPECT_EQ(parse_component(component_name(c)), c);
  EXPECT_EQ(all_components().size(), 5u);
  EXPECT_THROW(parse_component("lidar"), InvalidArgument);
}

TEST(Confidence, GroundTruthDepthIsConsistentInStaticScene) {
  SceneOracle scene = street_toy(7);
  scene.primitives.erase(std::remove_if(scene.primitives.begin(), scene.primitives.end(),
                                        [](const Primitive& p) { return p.dynamic; }),
                         scene.primitives.end());
  const Capture cap = capture_from_scene(scene);
  std::vector<DepthMap> depths;
  for (const auto& v : cap.views) depths.push_back(v.gt_depth);
  ConfidenceConfig cfg;
  cfg.components = {ConfidenceComponent::kRgb, ConfidenceComponent::kDepth, ConfidenceComponent::kFlow};
  const auto maps = view_confidence(cap, depths, cap.index(2, 0), std::vector<int>{0, 2, 4}, cfg);
  ASSERT_EQ(maps.size(), 3u);
  for (const auto& m : maps) {
    double sum = 0;
    for (size_t i = 0; i < m.values.size(); ++i) sum += m.valid[i] ? m.values[i] : 0.0;
    ASSERT_GT(m.valid_count(), 1000u);
    EXPECT_GT(sum / double(m.valid_count()), 0.9);
  }
  // scaling the source depth breaks geometric consistency everywhere
  std::vector<DepthMap> scaled = depths;
  for (auto& v : scaled[cap.index(2, 0)].values.data()) v *= 2.0f;
  const auto bad = view_confidence(cap, scaled, cap.index(2, 0), std::vector<int>{0, 2, 4}, cfg);
  double sum = 0;
  for (size_t i = 0; i < bad[1].values.size(); ++i) sum += bad[1].valid[i] ? bad[1].values[i] : 0.0;
  EXPECT_LT(sum / double(std::max<size_t>(1, bad[1].valid_count())), 0.1);
}

TEST(Object, CameraPoseInObjectFrame) {
  const Capture& cap = toy_capture();
  for (int view : {0, 7, 14}) {
    const Pose p = object_camera_pose(cap, view);
    const Pose expected = compose(pose_inverse(cap.object_poses[cap.views[view].frame]), cap.views[view].pose);
    EXPECT_LE((p.matrix() - expected.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
  const PointCloud pts = object_points(cap);
  ASSERT_GT(pts.size(), 0u);
  for (const Vec3& q : pts.points)
    EXPECT_TRUE((q.cwiseAbs().array() <= (cap.object_half + Vec3::Constant(0.05)).array()).all());
  Capture none = cap;
  none.object_poses.clear();
  EXPECT_THROW(object_camera_pose(none, 0), MissingInput);
  EXPECT_EQ(object_points(none).size(), 0u);
}

}  // namespace
}  // namespace snerf
