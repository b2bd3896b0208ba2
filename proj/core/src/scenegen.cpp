#include "snerf/scenegen.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "snerf/errors.hpp"
#include "snerf/kvtext.hpp"
#include "snerf/parallel.hpp"
#include "snerf/random.hpp"

namespace snerf {
namespace {

constexpr double kHitEps = 1e-9;
constexpr double kOcclusionTol = 1e-4;
constexpr double kDeg = std::numbers::pi / 180.0;

Mat3 rot_y(double a) {
  Mat3 r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return r;
}

Mat3 euler_deg(const Vec3& deg) {
  return (Eigen::AngleAxisd(deg.z() * kDeg, Vec3::UnitZ()) *
          Eigen::AngleAxisd(deg.y() * kDeg, Vec3::UnitY()) *
          Eigen::AngleAxisd(deg.x() * kDeg, Vec3::UnitX()))
      .toRotationMatrix();
}

std::optional<double> hit_plane(const Vec3& o, const Vec3& d, const Vec3& half) {
  if (d.z() == 0.0) return std::nullopt;
  const double t = -o.z() / d.z();
  if (!(t > kHitEps)) return std::nullopt;
  const Vec3 p = o + t * d;
  if (std::abs(p.x()) > half.x() || std::abs(p.y()) > half.y()) return std::nullopt;
  return t;
}

std::optional<double> hit_sphere(const Vec3& o, const Vec3& d, double r) {
  const double b = o.dot(d);
  const double c = o.squaredNorm() - r * r;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  const double t0 = -b - s;
  if (t0 > kHitEps) return t0;
  const double t1 = -b + s;
  if (t1 > kHitEps) return t1;
  return std::nullopt;
}

std::optional<double> hit_box(const Vec3& o, const Vec3& d, const Vec3& half) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (std::abs(o[a]) > half[a]) return std::nullopt;
      continue;
    }
    double t0 = (-half[a] - o[a]) / d[a];
    double t1 = (half[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
  }
  if (tmin > tmax) return std::nullopt;
  if (tmin > kHitEps) return tmin;
  if (tmax > kHitEps) return tmax;
  return std::nullopt;
}

struct Wave {
  Vec3 k;  // cycles per meter
  double amp;
  std::array<double, 3> phase;
};

struct Texture {
  std::array<double, 3> base;
  std::array<Wave, 3> waves;
};

const std::array<Texture, 8>& texture_table() {
  static const std::array<Texture, 8> table = {{
      {{0.45, 0.42, 0.40}, {{{{0.31, 0.00, 0.23}, 0.12, {0.0, 0.4, 0.9}},
                             {{-0.17, 0.00, 0.41}, 0.08, {1.3, 2.1, 0.2}},
                             {{0.52, 0.00, -0.11}, 0.05, {2.7, 0.6, 1.8}}}}},
      {{0.62, 0.38, 0.30}, {{{{0.00, 0.35, 0.28}, 0.16, {0.3, 1.1, 2.0}},
                             {{0.00, -0.44, 0.19}, 0.10, {2.2, 0.1, 1.4}},
                             {{0.00, 0.21, -0.57}, 0.06, {0.9, 2.9, 0.5}}}}},
      {{0.30, 0.50, 0.58}, {{{{0.42, 0.27, 0.00}, 0.15, {1.7, 0.2, 0.8}},
                             {{-0.33, 0.48, 0.00}, 0.09, {0.4, 2.5, 1.9}},
                             {{0.18, -0.61, 0.00}, 0.06, {2.8, 1.2, 0.3}}}}},
      {{0.70, 0.62, 0.28}, {{{{0.55, 0.40, 0.35}, 0.14, {0.1, 1.6, 2.4}},
                             {{-0.45, 0.30, 0.60}, 0.09, {1.9, 0.7, 0.0}},
                             {{0.25, -0.65, 0.45}, 0.06, {0.6, 2.3, 1.1}}}}},
      {{0.35, 0.58, 0.34}, {{{{0.72, 0.00, 0.00}, 0.16, {0.5, 1.4, 2.6}},
                             {{0.00, 0.66, 0.00}, 0.10, {2.0, 0.3, 1.2}},
                             {{0.47, 0.47, 0.00}, 0.05, {1.1, 2.7, 0.4}}}}},
      {{0.55, 0.60, 0.70}, {{{{0.06, 0.04, 0.00}, 0.10, {0.2, 0.9, 1.7}},
                             {{-0.03, 0.07, 0.00}, 0.06, {1.5, 2.4, 0.6}},
                             {{0.09, -0.02, 0.00}, 0.04, {2.9, 0.1, 2.2}}}}},
      {{0.50, 0.45, 0.55}, {{{{0.12, 0.09, 0.00}, 0.14, {0.7, 1.9, 0.3}},
                             {{-0.08, 0.14, 0.00}, 0.08, {2.4, 0.5, 1.6}},
                             {{0.15, -0.05, 0.00}, 0.05, {1.0, 2.8, 2.1}}}}},
      {{0.40, 0.40, 0.40}, {{{{0.25, 0.25, 0.25}, 0.20, {0.0, 2.1, 4.2}},
                             {{-0.25, 0.25, 0.25}, 0.00, {0.0, 0.0, 0.0}},
                             {{0.25, -0.25, 0.25}, 0.00, {0.0, 0.0, 0.0}}}}},
  }};
  return table;
}

}  // namespace

bool LidarSpec::is_valid() const {
  return channels >= 1 && azimuth_step > 0.0 && dropout >= 0.0 && dropout < 1.0 &&
         noise_sigma >= 0.0 && max_range > 0.0 && elevation_max >= elevation_min;
}

Pose SceneOracle::ego_pose(int frame) const {
  Pose p = ego_start;
  p.translation += frame * ego_step;
  return p;
}

Pose SceneOracle::camera_pose(int frame, int camera) const {
  return compose(ego_pose(frame), rig.at(camera).mount);
}

Pose SceneOracle::lidar_pose(int frame) const { return compose(ego_pose(frame), lidar.mount); }

Pose SceneOracle::object_pose(int primitive, int frame) const {
  const Primitive& p = primitives.at(primitive);
  if (!p.dynamic) return p.pose;
  Pose out;
  out.rotation = rot_y(frame * p.yaw_rate) * p.pose.rotation;
  out.translation = p.pose.translation + frame * p.velocity;
  return out;
}

std::optional<Hit> intersect(const SceneOracle& scene, const Vec3& origin, const Vec3& dir, int frame) {
  std::optional<Hit> best;
  for (int i = 0; i < static_cast<int>(scene.primitives.size()); ++i) {
    const Primitive& prim = scene.primitives[i];
    const Pose pose = scene.object_pose(i, frame);
    const Vec3 o = pose.rotation.transpose() * (origin - pose.translation);
    const Vec3 d = pose.rotation.transpose() * dir;
    std::optional<double> t;
    switch (prim.kind) {
      case PrimitiveKind::kPlane: t = hit_plane(o, d, prim.size); break;
      case PrimitiveKind::kSphere: t = hit_sphere(o, d, prim.size.x()); break;
      case PrimitiveKind::kBox: t = hit_box(o, d, prim.size); break;
    }
    if (t && (!best || *t < best->t)) best = Hit{*t, i, o + *t * d};
  }
  return best;
}

Rgb texture_color(int texture, const Vec3& local, double scale) {
  const auto& table = texture_table();
  const Texture& tex = table[static_cast<size_t>(texture) % table.size()];
  const Vec3 p = local * scale;
  std::array<double, 3> c = tex.base;
  for (const Wave& w : tex.waves) {
    const double arg = 2.0 * std::numbers::pi * w.k.dot(p);
    for (int ch = 0; ch < 3; ++ch) c[ch] += w.amp * std::sin(arg + w.phase[ch]);
  }
  auto clamp = [](double v) { return static_cast<float>(std::clamp(v, 0.02, 0.98)); };
  return {clamp(c[0]), clamp(c[1]), clamp(c[2])};
}

OracleView render_oracle(const SceneOracle& scene, int frame, int camera) {
  if (frame < 0 || frame >= scene.frames) throw IndexOutOfRange("frame index out of range");
  if (camera < 0 || camera >= static_cast<int>(scene.rig.size()))
    throw IndexOutOfRange("camera index out of range");
  const Intrinsics& intr = scene.rig[camera].intr;
  const Pose cam = scene.camera_pose(frame, camera);
  OracleView out{RgbImage(intr.width, intr.height), DepthMap(intr.width, intr.height),
                 Grid<int>(intr.width, intr.height, -1)};
  parallel_for(static_cast<size_t>(intr.height), [&](size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < intr.width; ++x) {
      const Vec3 dc = intr.backproject(x, y);
      const Vec3 dir = (cam.rotation * dc).normalized();
      const auto hit = intersect(scene, cam.translation, dir, frame);
      if (!hit) continue;
      const Primitive& prim = scene.primitives[hit->primitive];
      out.rgb(x, y) = texture_color(prim.texture, hit->local, prim.texture_scale);
      // distance along the unit ray -> camera z
      out.depth.set(x, y, static_cast<float>(hit->t / dc.norm()));
      out.primitive(x, y) = hit->primitive;
    }
  });
  return out;
}

FlowField oracle_flow(const SceneOracle& scene, ViewId s, ViewId t, bool keep_occluded) {
  const Intrinsics& intr_s = scene.rig.at(s.camera).intr;
  const Intrinsics& intr_t = scene.rig.at(t.camera).intr;
  const Pose cam_s = scene.camera_pose(s.frame, s.camera);
  const Pose cam_t = scene.camera_pose(t.frame, t.camera);
  FlowField flow(intr_s.width, intr_s.height);
  parallel_for(static_cast<size_t>(intr_s.height), [&](size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < intr_s.width; ++x) {
      const Vec3 dir = (cam_s.rotation * intr_s.backproject(x, y)).normalized();
      const auto hit = intersect(scene, cam_s.translation, dir, s.frame);
      if (!hit) continue;
      const Vec3 world = scene.object_pose(hit->primitive, t.frame).apply(hit->local);
      const auto proj = try_project(world, intr_t, cam_t);
      if (!proj) continue;
      if (!keep_occluded) {
        const Vec3 to_point = world - cam_t.translation;
        const double dist = to_point.norm();
        const auto seen = intersect(scene, cam_t.translation, to_point / dist, t.frame);
        if (!seen || std::abs(seen->t - dist) > kOcclusionTol) continue;
      }
      flow.set(x, y, static_cast<float>(proj->pixel.u - x), static_cast<float>(proj->pixel.v - y));
    }
  });
  return flow;
}

LidarSweep simulate_lidar(const SceneOracle& scene, int frame, const LidarSpec& spec) {
  if (!spec.is_valid()) throw InvalidArgument("invalid LiDAR spec");
  const Pose sensor = compose(scene.ego_pose(frame), spec.mount);
  const int n_az = std::max(1, static_cast<int>(std::floor(2.0 * std::numbers::pi / spec.azimuth_step)));
  const size_t n_beams = static_cast<size_t>(spec.channels) * n_az;
  const std::uint64_t stream = static_cast<std::uint64_t>(frame) << 8;

  std::vector<Vec3> pts(n_beams);
  std::vector<std::uint8_t> keep(n_beams, 0);
  std::vector<std::uint8_t> dyn(n_beams, 0);
  parallel_for(n_beams, [&](size_t b) {
    const int ch = static_cast<int>(b / n_az);
    const int az = static_cast<int>(b % n_az);
    const double elev = spec.channels == 1
                            ? spec.elevation_min
                            : spec.elevation_min + (spec.elevation_max - spec.elevation_min) * ch /
                                                       (spec.channels - 1);
    const double yaw = az * spec.azimuth_step;
    // sensor frame shares the camera convention: y down, z forward
    const Vec3 dir_s(std::cos(elev) * std::sin(yaw), -std::sin(elev), std::cos(elev) * std::cos(yaw));
    const auto hit = intersect(scene, sensor.translation, sensor.rotation * dir_s, frame);
    if (!hit || hit->t > spec.max_range) return;
    if (spec.dropout > 0.0 && counter_uniform(scene.seed, stream | 1, b) < spec.dropout) return;
    double r = hit->t;
    if (spec.noise_sigma > 0.0) r += spec.noise_sigma * counter_normal(scene.seed, stream | 2, b);
    if (!(r > 0.0)) return;
    pts[b] = r * dir_s;
    keep[b] = 1;
    dyn[b] = scene.primitives[hit->primitive].dynamic ? 1 : 0;
  });

  LidarSweep out;
  out.cloud.frame = sensor;
  for (size_t b = 0; b < n_beams; ++b) {
    if (!keep[b]) continue;
    out.cloud.points.push_back(pts[b]);
    out.dynamic.push_back(dyn[b]);
  }
  return out;
}

DepthMap corrupt_depth(const DepthMap& d, double noise_sigma, double outlier_rate,
                       double outlier_scale, std::uint64_t seed, Mask* outliers) {
  if (noise_sigma < 0.0) throw InvalidArgument("noise_sigma must be >= 0");
  if (outlier_rate < 0.0 || outlier_rate >= 1.0) throw InvalidArgument("outlier_rate must be in [0,1)");
  DepthMap out = d;
  if (outliers) *outliers = Mask(d.width(), d.height(), 0);
  for (size_t i = 0; i < out.values.size(); ++i) {
    if (!out.valid[i]) continue;
    double v = out.values[i];
    if (noise_sigma > 0.0) v += noise_sigma * counter_normal(seed, 11, i);
    if (outlier_rate > 0.0 && counter_uniform(seed, 12, i) < outlier_rate) {
      v *= outlier_scale;
      if (outliers) (*outliers)[i] = 1;
    }
    if (v > 0.0 && std::isfinite(v)) {
      out.values[i] = static_cast<float>(v);
    } else {
      out.values[i] = 0.f;
      out.valid[i] = 0;
    }
  }
  return out;
}

SceneOracle street_toy(std::uint64_t seed) {
  SceneOracle s;
  s.name = "street-toy";
  s.seed = seed;
  s.frames = 5;
  s.ego_step = Vec3(0, 0, 1.0);

  Intrinsics intr{34.3, 34.3, 23.5, 15.5, 48, 32};
  for (double yaw : {-55.0, 0.0, 55.0}) {
    CameraSpec c;
    c.intr = intr;
    c.mount.rotation = rot_y(yaw * kDeg);
    s.rig.push_back(c);
  }
  s.lidar.channels = 32;
  s.lidar.azimuth_step = 2.0 * kDeg;
  s.lidar.elevation_min = -30.0 * kDeg;
  s.lidar.elevation_max = 10.0 * kDeg;
  s.lidar.max_range = 60.0;
  s.lidar.mount.translation = Vec3(0, -0.2, 0);

  auto plane = [&](Vec3 center, Vec3 euler, Vec2 half, int tex, double scale) {
    Primitive p;
    p.kind = PrimitiveKind::kPlane;
    p.pose.rotation = euler_deg(euler);
    p.pose.translation = center;
    p.size = Vec3(half.x(), half.y(), 0);
    p.texture = tex;
    p.texture_scale = scale;
    s.primitives.push_back(p);
  };
  plane({0, 1.6, 14}, {90, 0, 0}, {6, 24}, 0, 1.0);      // ground
  plane({-5, -2.4, 14}, {0, 90, 0}, {24, 4}, 1, 1.0);    // left wall
  plane({5, -2.4, 14}, {0, -90, 0}, {24, 4}, 2, 1.0);    // right wall
  plane({0, -6.4, 14}, {-90, 0, 0}, {6, 24}, 5, 1.0);    // ceiling
  plane({0, -2.4, 38}, {0, 180, 0}, {6, 4}, 6, 1.0);     // backdrop
  plane({0, -2.4, -10}, {0, 0, 0}, {6, 4}, 6, 1.0);      // rear

  Primitive sphere;
  sphere.kind = PrimitiveKind::kSphere;
  sphere.pose.translation = Vec3(2.4, 0.4, 13.0);
  sphere.size = Vec3(1.2, 1.2, 1.2);
  sphere.texture = 3;
  s.primitives.push_back(sphere);

  Primitive box;
  box.kind = PrimitiveKind::kBox;
  box.pose.translation = Vec3(-3.0, 0.9, 7.5);
  box.size = Vec3(0.9, 0.7, 1.6);
  box.texture = 4;
  box.dynamic = true;
  box.velocity = Vec3(1.4, 0, 0.3);
  s.primitives.push_back(box);
  return s;
}

// ---------------------------------------------------------------------------
// Structured-text scene files.
//
//   # comment
//   scene name=street seed=7 frames=5
//   ego start=0,0,0 step=0,0,1
//   camera width=48 height=32 fx=34.3 fy=34.3 cx=23.5 cy=15.5 yaw=-55
//   lidar channels=32 azimuth_step=2 elevation_min=-30 elevation_max=10 ...
//   plane center=0,1.6,14 euler=90,0,0 half=6,24 texture=0
//   sphere center=2.4,0.4,13 radius=1.2 texture=3
//   box center=-3,0.9,7.5 half=0.9,0.7,1.6 texture=4 velocity=1.4,0,0.3
//
// Angles are in degrees. Any pose-bearing line also accepts pose=<12 floats>,
// a row-major 3x4 [R|t] mapping local (camera) coordinates to the parent frame.

namespace {

Pose read_pose(const kv::Reader& r, const Vec3& default_euler) {
  if (r.has("pose")) return r.pose("pose");
  Pose p;
  p.rotation = euler_deg(r.vec3("euler", default_euler));
  if (r.has("yaw")) p.rotation = rot_y(r.number("yaw", 0.0) * kDeg) * p.rotation;
  p.translation = r.vec3("center", Vec3::Zero());
  return p;
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt_pose(const Pose& p) {
  std::string s = "pose=";
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) s += fmt_num(p.rotation(i, j)) + ",";
    s += fmt_num(p.translation[i]);
    if (i < 2) s += ",";
  }
  return s;
}

std::string fmt_vec(const Vec3& v) { return fmt_num(v.x()) + "," + fmt_num(v.y()) + "," + fmt_num(v.z()); }

}  // namespace

SceneOracle parse_scene(std::string_view text) {
  SceneOracle s;
  s.rig.clear();
  bool have_scene = false;
  for (const kv::Line& line : kv::tokenize(text)) {
    const kv::Reader r(line);
    if (line.keyword == "scene") {
      r.check_keys({"name", "seed", "frames"});
      s.name = r.text("name", s.name);
      s.seed = r.unsigned_integer("seed", 0);
      s.frames = static_cast<int>(r.integer("frames", 1));
      if (s.frames < 1) throw ParseError("frames must be >= 1", line.number, 1);
      have_scene = true;
    } else if (line.keyword == "ego") {
      r.check_keys({"start", "step", "pose", "euler", "center"});
      if (r.has("pose")) {
        s.ego_start = read_pose(r, Vec3::Zero());
      } else {
        s.ego_start.translation = r.vec3("start", Vec3::Zero());
      }
      s.ego_step = r.vec3("step", Vec3::Zero());
    } else if (line.keyword == "camera") {
      r.check_keys({"width", "height", "fx", "fy", "cx", "cy", "yaw", "euler", "center", "pose"});
      CameraSpec c;
      c.intr.width = static_cast<int>(r.integer("width", 48));
      c.intr.height = static_cast<int>(r.integer("height", 32));
      c.intr.fx = r.number("fx", 34.3);
      c.intr.fy = r.number("fy", c.intr.fx);
      c.intr.cx = r.number("cx", (c.intr.width - 1) / 2.0);
      c.intr.cy = r.number("cy", (c.intr.height - 1) / 2.0);
      if (!c.intr.is_valid()) throw ParseError("invalid intrinsics", line.number, 1);
      c.mount = read_pose(r, Vec3::Zero());
      s.rig.push_back(c);
    } else if (line.keyword == "lidar") {
      r.check_keys({"channels", "azimuth_step", "elevation_min", "elevation_max", "max_range", "noise",
                    "dropout", "center", "euler", "yaw", "pose"});
      LidarSpec& l = s.lidar;
      l.channels = static_cast<int>(r.integer("channels", l.channels));
      l.azimuth_step = r.number("azimuth_step", l.azimuth_step / kDeg) * kDeg;
      l.elevation_min = r.number("elevation_min", l.elevation_min / kDeg) * kDeg;
      l.elevation_max = r.number("elevation_max", l.elevation_max / kDeg) * kDeg;
      l.max_range = r.number("max_range", l.max_range);
      l.noise_sigma = r.number("noise", l.noise_sigma);
      l.dropout = r.number("dropout", l.dropout);
      l.mount = read_pose(r, Vec3::Zero());
      if (!l.is_valid()) throw ParseError("invalid lidar spec", line.number, 1);
    } else if (line.keyword == "plane" || line.keyword == "sphere" || line.keyword == "box") {
      r.check_keys({"center", "euler", "yaw", "pose", "half", "radius", "texture", "scale", "velocity",
                    "yaw_rate"});
      Primitive p;
      p.pose = read_pose(r, Vec3::Zero());
      if (line.keyword == "plane") {
        p.kind = PrimitiveKind::kPlane;
        const auto h = r.list("half", 2);
        p.size = Vec3(h[0], h[1], 0.0);
      } else if (line.keyword == "sphere") {
        p.kind = PrimitiveKind::kSphere;
        const double rad = r.number("radius", 1.0);
        p.size = Vec3::Constant(rad);
      } else {
        p.kind = PrimitiveKind::kBox;
        p.size = r.vec3("half", Vec3::Ones());
      }
      if (p.size.x() <= 0 || p.size.y() <= 0 || (p.kind != PrimitiveKind::kPlane && p.size.z() <= 0))
        throw ParseError("primitive extent must be positive", line.number, 1);
      p.texture = static_cast<int>(r.integer("texture", 0));
      p.texture_scale = r.number("scale", 1.0);
      p.velocity = r.vec3("velocity", Vec3::Zero());
      p.yaw_rate = r.number("yaw_rate", 0.0) * kDeg;
      p.dynamic = r.has("velocity") || r.has("yaw_rate");
      s.primitives.push_back(p);
    } else {
      throw ParseError("unknown keyword '" + line.keyword + "'", line.number, 1);
    }
  }
  if (!have_scene) throw ParseError("missing 'scene' line", 1, 1);
  if (s.rig.empty()) throw ParseError("scene has no camera", 1, 1);
  if (s.primitives.empty()) throw ParseError("scene has no primitive", 1, 1);
  return s;
}

std::string format_scene(const SceneOracle& s) {
  std::ostringstream os;
  os << "scene name=" << s.name << " seed=" << s.seed << " frames=" << s.frames << "\n";
  os << "ego " << fmt_pose(s.ego_start) << " step=" << fmt_vec(s.ego_step) << "\n";
  for (const auto& c : s.rig) {
    os << "camera width=" << c.intr.width << " height=" << c.intr.height << " fx=" << fmt_num(c.intr.fx)
       << " fy=" << fmt_num(c.intr.fy) << " cx=" << fmt_num(c.intr.cx) << " cy=" << fmt_num(c.intr.cy) << " "
       << fmt_pose(c.mount) << "\n";
  }
  const LidarSpec& l = s.lidar;
  os << "lidar channels=" << l.channels << " azimuth_step=" << fmt_num(l.azimuth_step / kDeg)
     << " elevation_min=" << fmt_num(l.elevation_min / kDeg) << " elevation_max=" << fmt_num(l.elevation_max / kDeg)
     << " max_range=" << fmt_num(l.max_range) << " noise=" << fmt_num(l.noise_sigma)
     << " dropout=" << fmt_num(l.dropout) << " " << fmt_pose(l.mount) << "\n";
  for (const auto& p : s.primitives) {
    switch (p.kind) {
      case PrimitiveKind::kPlane:
        os << "plane " << fmt_pose(p.pose) << " half=" << fmt_num(p.size.x()) << "," << fmt_num(p.size.y());
        break;
      case PrimitiveKind::kSphere: os << "sphere " << fmt_pose(p.pose) << " radius=" << fmt_num(p.size.x()); break;
      case PrimitiveKind::kBox: os << "box " << fmt_pose(p.pose) << " half=" << fmt_vec(p.size); break;
    }
    os << " texture=" << p.texture << " scale=" << fmt_num(p.texture_scale);
    if (p.dynamic) os << " velocity=" << fmt_vec(p.velocity) << " yaw_rate=" << fmt_num(p.yaw_rate / kDeg);
    os << "\n";
  }
  return os.str();
}

}  // namespace snerf
