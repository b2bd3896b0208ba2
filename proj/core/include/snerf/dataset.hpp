#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "snerf/confidence.hpp"
#include "snerf/depthfusion.hpp"
#include "snerf/scenegen.hpp"
#include "snerf/train.hpp"

namespace snerf {

/// One calibrated image of a capture.
struct View {
  int frame = 0;
  int camera = 0;
  Intrinsics intr;
  Pose pose;          // camera-to-world
  RgbImage rgb;
  DepthMap gt_depth;  // empty when unknown
  Mask dynamic;       // pixels on the tracked object; empty when unknown
};

struct Sweep {
  PointCloud cloud;
  std::vector<std::uint8_t> dynamic;  // per-point oracle labels, may be empty
};

/// A multi-camera, multi-frame capture: images, LiDAR sweeps, optical flows
/// and (optionally) the track of one moving object.
struct Capture {
  std::string name;
  int frames = 0;
  int cameras = 0;
  std::vector<View> views;    // frame-major: index = frame * cameras + camera
  std::vector<Sweep> sweeps;  // one per frame
  /// Optical flow keyed by (source view, target view); occluded pixels invalid.
  std::map<std::pair<int, int>, FlowField> flows;
  /// Same keys, but occluded pixels keep the motion of the surface seen in
  /// the source, as a dense flow estimator reports it. May be empty.
  std::map<std::pair<int, int>, FlowField> full_flows;
  /// Object-to-world pose of the tracked object per frame; empty when none.
  std::vector<Pose> object_poses;
  Vec3 object_half = Vec3::Zero();

  int index(int frame, int camera) const { return frame * cameras + camera; }
  const View& view(int frame, int camera) const { return views.at(index(frame, camera)); }
  const FlowField* flow(int src, int dst) const;
  /// The full flow when present, else the occlusion-masked one.
  const FlowField* full_flow(int src, int dst) const;
};

/// Renders every view, its sweeps and the flows between same-camera frames
/// up to `flow_span` apart. The first dynamic primitive becomes the tracked
/// object.
Capture capture_from_scene(const SceneOracle& scene, int flow_span = 2);

/// Writes images, depths, flows, sweeps, labels and manifest.txt.
void write_capture(const Capture& cap, const std::filesystem::path& dir);
/// Loads a capture through its manifest. Throws MissingInput / ParseError.
Capture read_capture(const std::filesystem::path& dir);
std::string format_manifest(const Capture& cap);

struct FusionConfig {
  int window = 7;
  double flow_threshold = 0.2;
  bool filter = true;
  DensifyConfig densify;
};

struct FusionStats {
  size_t sparse = 0;
  size_t removed = 0;
  size_t dynamic = 0;
  size_t dynamic_removed = 0;
  size_t static_points = 0;
  size_t static_removed = 0;
};

struct FusedView {
  DepthMap sparse;    // accumulated and splatted
  DepthMap filtered;  // after flow-consistency outlier removal
  DepthMap dense;
  FusionStats stats;
};

/// Nearest frames before and after `frame` within `frames` (sorted).
std::pair<std::optional<int>, std::optional<int>> neighbour_frames(std::span<const int> frames, int frame);

/// Accumulates sweeps within the window, splats into the view, removes
/// points whose LiDAR flow disagrees with the optical flow to the
/// neighbouring frames in `frames`, then densifies.
FusedView fuse_view(const Capture& cap, int view, std::span<const int> frames, const FusionConfig& cfg);

enum class ConfidenceComponent { kRgb, kSsim, kFeature, kDepth, kFlow };

std::string component_name(ConfidenceComponent c);
/// Throws InvalidArgument for unknown names.
ConfidenceComponent parse_component(const std::string& name);
std::vector<ConfidenceComponent> all_components();

struct ConfidenceConfig {
  double tau = 0.2;
  std::vector<ConfidenceComponent> components = all_components();
};

/// Confidence maps of `view` against its neighbouring frames (same camera),
/// one per enabled component, each the pixelwise minimum over neighbours.
/// `depths` is indexed by view and only read at the view and its neighbours.
std::vector<ConfidenceMap> view_confidence(const Capture& cap, std::span<const DepthMap> depths, int view,
                                           std::span<const int> frames, const ConfidenceConfig& cfg);

/// Points of every sweep lying inside the tracked object's box, expressed
/// in the object frame.
PointCloud object_points(const Capture& cap, double margin = 0.05);

/// Camera poses re-expressed in the tracked object's frame.
Pose object_camera_pose(const Capture& cap, int view);

}  // namespace snerf
