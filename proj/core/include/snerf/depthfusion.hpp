#pragma once

#include <span>
#include <vector>

#include "snerf/geometry.hpp"
#include "snerf/image.hpp"

namespace snerf {

/// Points expressed in the frame placed in the world by `frame`
/// (frame-to-world), e.g. a LiDAR sweep tagged with its capture pose.
struct PointCloud {
  std::vector<Vec3> points;
  Pose frame;

  size_t size() const { return points.size(); }
};

/// Moves every sweep into `target` and concatenates them; the output is tagged
/// with `target` and holds sum(N_i) points in input order.
PointCloud accumulate_lidar(std::span<const PointCloud> frames, const Pose& target);

/// Z-buffered splat plus, per pixel, the index of the winning point (-1 when
/// empty) so callers can carry per-point labels.
struct SplatResult {
  DepthMap depth;
  Grid<int> point_index;
};

/// Projects every point with positive depth to its nearest pixel; collisions
/// keep the minimum depth (ties keep the lower index).
SplatResult splat_points(const PointCloud& cloud, const Intrinsics& intr, const Pose& cam);
DepthMap splat_to_depth(const PointCloud& cloud, const Intrinsics& intr, const Pose& cam);

/// Sparse LiDAR flow from view s to view t. At each pixel that wins the
/// source z-buffer the flow is reproject(pixel center, point depth) - pixel.
/// Points crossing behind the target camera are invalid, as are points
/// leaving the target frame unless `clip_to_frame` is false.
FlowField lidar_flow(const PointCloud& cloud, const Pose& cam_s, const Pose& cam_t,
                     const Intrinsics& intr, bool clip_to_frame = true);

/// Relative flow discrepancy |lidar - optical| / max(|lidar|, eps), the
/// normalization used by the flow-consistency confidence.
double relative_flow_discrepancy(double lu, double lv, double ou, double ov, double eps = 1e-6);

/// Invalidates sparse pixels whose relative flow discrepancy is strictly
/// greater than `threshold`. Pixels lacking either flow are kept.
DepthMap remove_flow_outliers(const DepthMap& sparse, const FlowField& lflow,
                              const FlowField& oflow, double threshold);

struct DensifyConfig {
  int k = 16;
  /// Color-affinity bandwidth in [0,1] RGB units.
  double sigma_color = 0.1;
};

/// Fills every pixel from its k nearest seeds with inverse-distance weights
/// times exp(-|dI| / sigma_color). Seeds are copied through unchanged.
/// Throws EmptyInput when `sparse` has no valid pixel.
DepthMap densify_depth(const DepthMap& sparse, const RgbImage& image, const DensifyConfig& cfg = {});

}  // namespace snerf
