#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snerf/depthfusion.hpp"
#include "snerf/geometry.hpp"
#include "snerf/image.hpp"

namespace snerf {

enum class PrimitiveKind { kPlane, kSphere, kBox };

/// Analytic surface. Planes are the local z = 0 rectangle |x| <= size.x,
/// |y| <= size.y; spheres have radius size.x; boxes have half extents size.
/// Dynamic primitives translate by `velocity` and yaw (about world y) by
/// `yaw_rate` radians per frame.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kPlane;
  Pose pose;  // local-to-world at frame 0
  Vec3 size = Vec3::Ones();
  int texture = 0;
  double texture_scale = 1.0;
  bool dynamic = false;
  Vec3 velocity = Vec3::Zero();
  double yaw_rate = 0.0;
};

struct CameraSpec {
  Intrinsics intr;
  Pose mount;  // camera-to-ego
};

struct LidarSpec {
  int channels = 32;
  double azimuth_step = 0.0349066;  // radians
  double elevation_min = -0.5236;   // radians, positive looks up
  double elevation_max = 0.1745;
  double max_range = 60.0;
  double noise_sigma = 0.0;  // meters, radial
  double dropout = 0.0;      // fraction of returns removed
  Pose mount;                // sensor-to-ego

  bool is_valid() const;
};

struct SceneOracle {
  std::string name = "scene";
  std::uint64_t seed = 0;
  int frames = 1;
  Pose ego_start;
  Vec3 ego_step = Vec3::Zero();  // world translation per frame
  std::vector<CameraSpec> rig;
  LidarSpec lidar;
  std::vector<Primitive> primitives;

  Pose ego_pose(int frame) const;
  Pose camera_pose(int frame, int camera) const;
  Pose lidar_pose(int frame) const;
  Pose object_pose(int primitive, int frame) const;
};

struct ViewId {
  int frame = 0;
  int camera = 0;
  friend bool operator==(const ViewId&, const ViewId&) = default;
};

struct Hit {
  double t = 0.0;
  int primitive = -1;
  Vec3 local = Vec3::Zero();  // surface point in the primitive's frame
};

/// Nearest intersection along origin + t * dir (dir unit, t > 1e-9).
std::optional<Hit> intersect(const SceneOracle& scene, const Vec3& origin, const Vec3& dir, int frame);

/// Procedural band-limited texture evaluated at a primitive-local point.
Rgb texture_color(int texture, const Vec3& local, double scale);

struct OracleView {
  RgbImage rgb;
  DepthMap depth;             // invalid where no primitive is hit
  Grid<int> primitive;        // hit primitive index, -1 for background
};

/// Exact ray casting through every pixel center. Throws IndexOutOfRange.
OracleView render_oracle(const SceneOracle& scene, int frame, int camera);

/// Exact correspondence flow s -> t, following dynamic primitives. Pixels
/// whose surface lands behind the target camera are invalid, as are pixels
/// occluded in the target (depth re-check, 1e-4 m) unless `keep_occluded`.
/// Correspondences landing outside the target image keep their flow.
FlowField oracle_flow(const SceneOracle& scene, ViewId s, ViewId t, bool keep_occluded = false);

struct LidarSweep {
  PointCloud cloud;                 // sensor frame, tagged with the sensor pose
  std::vector<std::uint8_t> dynamic;  // 1 where the return hit a dynamic primitive
};

LidarSweep simulate_lidar(const SceneOracle& scene, int frame, const LidarSpec& spec);

/// Adds N(0, noise_sigma) to every valid pixel and multiplies a random
/// outlier_rate fraction by outlier_scale. Seeded and reproducible.
DepthMap corrupt_depth(const DepthMap& d, double noise_sigma, double outlier_rate,
                       double outlier_scale, std::uint64_t seed, Mask* outliers = nullptr);

/// Ground, two walls, backdrop, ceiling, one sphere and one dynamic box;
/// three-camera rig with small mutual overlap; five frames.
SceneOracle street_toy(std::uint64_t seed = 7);

/// Structured-text scene description; see README for the grammar.
/// Throws ParseError with line/column.
SceneOracle parse_scene(std::string_view text);
std::string format_scene(const SceneOracle& scene);

}  // namespace snerf
