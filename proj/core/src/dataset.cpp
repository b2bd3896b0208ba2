#include "snerf/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "snerf/errors.hpp"
#include "snerf/io.hpp"
#include "snerf/kvtext.hpp"

namespace snerf {
namespace fs = std::filesystem;
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string view_stem(int frame, int camera) {
  return "f" + std::to_string(frame) + "_c" + std::to_string(camera);
}

fs::path resolve(const fs::path& dir, const std::string& rel) {
  const fs::path p = dir / rel;
  if (!fs::exists(p)) throw MissingInput("missing input file " + p.string());
  return p;
}

}  // namespace

const FlowField* Capture::flow(int src, int dst) const {
  const auto it = flows.find({src, dst});
  return it == flows.end() ? nullptr : &it->second;
}

const FlowField* Capture::full_flow(int src, int dst) const {
  const auto it = full_flows.find({src, dst});
  return it == full_flows.end() ? flow(src, dst) : &it->second;
}

Capture capture_from_scene(const SceneOracle& scene, int flow_span) {
  Capture cap;
  cap.name = scene.name;
  cap.frames = scene.frames;
  cap.cameras = static_cast<int>(scene.rig.size());
  int tracked = -1;
  for (int i = 0; i < static_cast<int>(scene.primitives.size()); ++i) {
    if (scene.primitives[i].dynamic) {
      tracked = i;
      break;
    }
  }
  for (int f = 0; f < cap.frames; ++f) {
    for (int c = 0; c < cap.cameras; ++c) {
      OracleView o = render_oracle(scene, f, c);
      View v;
      v.frame = f;
      v.camera = c;
      v.intr = scene.rig[c].intr;
      v.pose = scene.camera_pose(f, c);
      v.rgb = std::move(o.rgb);
      v.gt_depth = std::move(o.depth);
      v.dynamic = Mask(v.intr.width, v.intr.height, 0);
      for (size_t i = 0; i < o.primitive.size(); ++i) v.dynamic[i] = tracked >= 0 && o.primitive[i] == tracked;
      cap.views.push_back(std::move(v));
    }
    LidarSweep sweep = simulate_lidar(scene, f, scene.lidar);
    cap.sweeps.push_back({std::move(sweep.cloud), std::move(sweep.dynamic)});
  }
  for (int c = 0; c < cap.cameras; ++c) {
    for (int fs = 0; fs < cap.frames; ++fs) {
      for (int ft = std::max(0, fs - flow_span); ft <= std::min(cap.frames - 1, fs + flow_span); ++ft) {
        if (ft == fs) continue;
        const std::pair key{cap.index(fs, c), cap.index(ft, c)};
        cap.flows[key] = oracle_flow(scene, {fs, c}, {ft, c});
        cap.full_flows[key] = oracle_flow(scene, {fs, c}, {ft, c}, true);
      }
    }
  }
  if (tracked >= 0) {
    const Primitive& p = scene.primitives[tracked];
    for (int f = 0; f < cap.frames; ++f) cap.object_poses.push_back(scene.object_pose(tracked, f));
    cap.object_half = p.kind == PrimitiveKind::kSphere ? Vec3::Constant(p.size.x()) : p.size;
  }
  return cap;
}

std::string format_manifest(const Capture& cap) {
  std::ostringstream os;
  os << "# frame-major views; poses are camera-to-world 3x4 row-major [R|t],\n"
     << "# camera frame +x right, +y down, +z forward\n";
  os << "capture name=" << cap.name << " frames=" << cap.frames << " cameras=" << cap.cameras << "\n";
  for (const View& v : cap.views) {
    const std::string stem = view_stem(v.frame, v.camera);
    os << "view frame=" << v.frame << " camera=" << v.camera << " width=" << v.intr.width
       << " height=" << v.intr.height << " fx=" << num(v.intr.fx) << " fy=" << num(v.intr.fy)
       << " cx=" << num(v.intr.cx) << " cy=" << num(v.intr.cy) << " pose=" << io::format_pose(v.pose)
       << " rgb=rgb/" << stem << ".png";
    if (!v.gt_depth.values.empty()) os << " depth=depth/" << stem << ".pfm";
    if (!v.dynamic.empty()) os << " dynamic=mask/" << stem << ".png";
    os << "\n";
  }
  for (size_t f = 0; f < cap.sweeps.size(); ++f) {
    os << "sweep frame=" << f << " points=lidar/f" << f << ".ply";
    if (!cap.sweeps[f].dynamic.empty()) os << " labels=lidar/f" << f << "_labels.txt";
    os << "\n";
  }
  for (const auto& [key, flow] : cap.flows) {
    const View& s = cap.views.at(key.first);
    const View& t = cap.views.at(key.second);
    const std::string stem = "flow/" + view_stem(s.frame, s.camera) + "_to_" + view_stem(t.frame, t.camera);
    os << "flow src=" << key.first << " dst=" << key.second << " path=" << stem << ".pfm";
    if (cap.full_flows.count(key)) os << " full=" << stem << "_full.pfm";
    os << "\n";
  }
  for (size_t f = 0; f < cap.object_poses.size(); ++f) {
    os << "object frame=" << f << " pose=" << io::format_pose(cap.object_poses[f]) << " half=" << num(cap.object_half.x())
       << "," << num(cap.object_half.y()) << "," << num(cap.object_half.z()) << "\n";
  }
  return os.str();
}

void write_capture(const Capture& cap, const fs::path& dir) {
  for (const View& v : cap.views) {
    const std::string stem = view_stem(v.frame, v.camera);
    io::write_png(dir / "rgb" / (stem + ".png"), v.rgb);
    if (!v.gt_depth.values.empty()) io::write_pfm(dir / "depth" / (stem + ".pfm"), v.gt_depth);
    if (!v.dynamic.empty()) io::write_mask(dir / "mask" / (stem + ".png"), v.dynamic);
  }
  for (size_t f = 0; f < cap.sweeps.size(); ++f) {
    io::write_ply(dir / "lidar" / ("f" + std::to_string(f) + ".ply"), cap.sweeps[f].cloud);
    if (!cap.sweeps[f].dynamic.empty())
      io::write_labels(dir / "lidar" / ("f" + std::to_string(f) + "_labels.txt"), cap.sweeps[f].dynamic);
  }
  for (const auto& [key, flow] : cap.flows) {
    const View& s = cap.views.at(key.first);
    const View& t = cap.views.at(key.second);
    const std::string stem = view_stem(s.frame, s.camera) + "_to_" + view_stem(t.frame, t.camera);
    io::write_flow(dir / "flow" / (stem + ".pfm"), flow);
    if (const auto it = cap.full_flows.find(key); it != cap.full_flows.end())
      io::write_flow(dir / "flow" / (stem + "_full.pfm"), it->second);
  }
  io::write_text(dir / "manifest.txt", format_manifest(cap));
}

Capture read_capture(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.txt";
  if (!fs::exists(manifest)) throw MissingInput("no manifest.txt in " + dir.string());
  Capture cap;
  bool have_header = false;
  for (const kv::Line& line : kv::tokenize(io::read_text(manifest))) {
    const kv::Reader r(line);
    if (line.keyword == "capture") {
      r.check_keys({"name", "frames", "cameras"});
      cap.name = r.text("name", "capture");
      cap.frames = static_cast<int>(r.integer("frames", 0));
      cap.cameras = static_cast<int>(r.integer("cameras", 0));
      if (cap.frames < 1 || cap.cameras < 1) throw ParseError("frames and cameras must be >= 1", line.number, 1);
      cap.views.resize(static_cast<size_t>(cap.frames) * cap.cameras);
      cap.sweeps.resize(cap.frames);
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError("manifest must start with 'capture'", line.number, 1);
    if (line.keyword == "view") {
      r.check_keys({"frame", "camera", "width", "height", "fx", "fy", "cx", "cy", "pose", "rgb", "depth", "dynamic"});
      View v;
      v.frame = static_cast<int>(r.integer("frame", -1));
      v.camera = static_cast<int>(r.integer("camera", -1));
      if (v.frame < 0 || v.frame >= cap.frames || v.camera < 0 || v.camera >= cap.cameras)
        throw ParseError("view index out of range", line.number, 1);
      v.intr.width = static_cast<int>(r.integer("width", 0));
      v.intr.height = static_cast<int>(r.integer("height", 0));
      v.intr.fx = r.number("fx", 0.0);
      v.intr.fy = r.number("fy", 0.0);
      v.intr.cx = r.number("cx", 0.0);
      v.intr.cy = r.number("cy", 0.0);
      if (!v.intr.is_valid()) throw ParseError("invalid intrinsics", line.number, 1);
      v.pose = r.pose("pose");
      v.rgb = io::read_png(resolve(dir, r.require("rgb").value));
      if (!v.rgb.same_shape(v.intr.width, v.intr.height))
        throw ParseError("image size differs from intrinsics", line.number, r.require("rgb").column);
      if (r.has("depth")) v.gt_depth = io::read_depth(resolve(dir, r.text("depth", "")));
      if (r.has("dynamic")) v.dynamic = io::read_mask(resolve(dir, r.text("dynamic", "")));
      cap.views[cap.index(v.frame, v.camera)] = std::move(v);
    } else if (line.keyword == "sweep") {
      r.check_keys({"frame", "points", "labels"});
      const int f = static_cast<int>(r.integer("frame", -1));
      if (f < 0 || f >= cap.frames) throw ParseError("sweep frame out of range", line.number, 1);
      cap.sweeps[f].cloud = io::read_ply(resolve(dir, r.require("points").value));
      if (r.has("labels")) {
        cap.sweeps[f].dynamic = io::read_labels(resolve(dir, r.text("labels", "")));
        if (cap.sweeps[f].dynamic.size() != cap.sweeps[f].cloud.size())
          throw ParseError("label count differs from point count", line.number, 1);
      }
    } else if (line.keyword == "flow") {
      r.check_keys({"src", "dst", "path", "full"});
      const int s = static_cast<int>(r.integer("src", -1));
      const int t = static_cast<int>(r.integer("dst", -1));
      const int n = cap.frames * cap.cameras;
      if (s < 0 || t < 0 || s >= n || t >= n) throw ParseError("flow view out of range", line.number, 1);
      cap.flows[{s, t}] = io::read_flow(resolve(dir, r.require("path").value));
      if (r.has("full")) cap.full_flows[{s, t}] = io::read_flow(resolve(dir, r.text("full", "")));
    } else if (line.keyword == "object") {
      r.check_keys({"frame", "pose", "half"});
      const int f = static_cast<int>(r.integer("frame", -1));
      if (f != static_cast<int>(cap.object_poses.size()))
        throw ParseError("object frames must be listed in order", line.number, 1);
      cap.object_poses.push_back(r.pose("pose"));
      cap.object_half = r.vec3("half", Vec3::Zero());
    } else {
      throw ParseError("unknown keyword '" + line.keyword + "'", line.number, 1);
    }
  }
  if (!have_header) throw ParseError("empty manifest", 1, 1);
  for (const View& v : cap.views)
    if (v.rgb.empty()) throw MissingInput("manifest does not list every (frame, camera) view");
  if (!cap.object_poses.empty() && static_cast<int>(cap.object_poses.size()) != cap.frames)
    throw MissingInput("object track does not cover every frame");
  return cap;
}

std::pair<std::optional<int>, std::optional<int>> neighbour_frames(std::span<const int> frames, int frame) {
  std::optional<int> prev, next;
  for (int f : frames) {
    if (f < frame && (!prev || f > *prev)) prev = f;
    if (f > frame && (!next || f < *next)) next = f;
  }
  return {prev, next};
}

FusedView fuse_view(const Capture& cap, int view, std::span<const int> frames, const FusionConfig& cfg) {
  if (cfg.window < 1) throw InvalidArgument("fusion window must be >= 1");
  const View& v = cap.views.at(view);
  const int lo = std::max(0, v.frame - (cfg.window - 1) / 2);
  const int hi = std::min(cap.frames - 1, v.frame + cfg.window / 2);
  std::vector<PointCloud> clouds;
  std::vector<std::uint8_t> labels;
  bool labelled = true;
  for (int f = lo; f <= hi; ++f) {
    clouds.push_back(cap.sweeps.at(f).cloud);
    const auto& l = cap.sweeps[f].dynamic;
    labelled = labelled && l.size() == cap.sweeps[f].cloud.size();
    labels.insert(labels.end(), l.begin(), l.end());
  }
  const PointCloud acc = accumulate_lidar(clouds, v.pose);
  const SplatResult splat = splat_points(acc, v.intr, v.pose);

  FusedView out;
  out.sparse = splat.depth;
  out.filtered = splat.depth;
  if (cfg.filter) {
    const auto [prev, next] = neighbour_frames(frames, v.frame);
    for (const auto& nf : {prev, next}) {
      if (!nf) continue;
      const int dst = cap.index(*nf, v.camera);
      const FlowField* oflow = cap.full_flow(view, dst);
      if (!oflow) continue;
      const View& t = cap.views.at(dst);
      const FlowField lflow = lidar_flow(acc, v.pose, t.pose, v.intr, false);
      out.filtered = remove_flow_outliers(out.filtered, lflow, *oflow, cfg.flow_threshold);
    }
  }
  for (size_t i = 0; i < out.sparse.values.size(); ++i) {
    if (!out.sparse.valid[i]) continue;
    const bool removed = !out.filtered.valid[i];
    ++out.stats.sparse;
    out.stats.removed += removed;
    if (!labelled) continue;
    if (labels[splat.point_index[i]]) {
      ++out.stats.dynamic;
      out.stats.dynamic_removed += removed;
    } else {
      ++out.stats.static_points;
      out.stats.static_removed += removed;
    }
  }
  out.dense = densify_depth(out.filtered, v.rgb, cfg.densify);
  return out;
}

std::string component_name(ConfidenceComponent c) {
  switch (c) {
    case ConfidenceComponent::kRgb: return "rgb";
    case ConfidenceComponent::kSsim: return "ssim";
    case ConfidenceComponent::kFeature: return "feature";
    case ConfidenceComponent::kDepth: return "depth";
    case ConfidenceComponent::kFlow: return "flow";
  }
  return "?";
}

ConfidenceComponent parse_component(const std::string& name) {
  for (auto c : all_components())
    if (component_name(c) == name) return c;
  throw InvalidArgument("unknown confidence component '" + name + "'");
}

std::vector<ConfidenceComponent> all_components() {
  return {ConfidenceComponent::kRgb, ConfidenceComponent::kSsim, ConfidenceComponent::kFeature,
          ConfidenceComponent::kDepth, ConfidenceComponent::kFlow};
}

std::vector<ConfidenceMap> view_confidence(const Capture& cap, std::span<const DepthMap> depths, int view,
                                           std::span<const int> frames, const ConfidenceConfig& cfg) {
  const View& s = cap.views.at(view);
  const DepthMap& ds = depths[view];
  const auto [prev, next] = neighbour_frames(frames, s.frame);
  std::vector<int> targets;
  for (const auto& nf : {prev, next})
    if (nf) targets.push_back(cap.index(*nf, s.camera));

  const bool need_features =
      std::find(cfg.components.begin(), cfg.components.end(), ConfidenceComponent::kFeature) != cfg.components.end();
  const FeatureMap src_feat = need_features ? compute_features(s.rgb) : FeatureMap{};

  std::vector<ConfidenceMap> out;
  for (ConfidenceComponent comp : cfg.components) {
    std::vector<ConfidenceMap> per_target;
    for (int t : targets) {
      const View& tv = cap.views.at(t);
      switch (comp) {
        case ConfidenceComponent::kRgb:
          per_target.push_back(rgb_confidence(s.rgb, warp_image(tv.rgb, ds, s.pose, tv.pose, s.intr)));
          break;
        case ConfidenceComponent::kSsim:
          per_target.push_back(ssim_confidence(s.rgb, warp_image(tv.rgb, ds, s.pose, tv.pose, s.intr)));
          break;
        case ConfidenceComponent::kFeature:
          per_target.push_back(feature_confidence(
              src_feat, warp_features(compute_features(tv.rgb), ds, s.pose, tv.pose, s.intr)));
          break;
        case ConfidenceComponent::kDepth:
          per_target.push_back(depth_confidence(ds, depths[t], s.pose, tv.pose, s.intr, cfg.tau));
          break;
        case ConfidenceComponent::kFlow:
          if (const FlowField* f = cap.flow(view, t))
            per_target.push_back(flow_confidence(ds, *f, s.pose, tv.pose, s.intr, cfg.tau));
          break;
      }
    }
    out.push_back(per_target.empty() ? ConfidenceMap(s.intr.width, s.intr.height) : min_confidence(per_target));
  }
  return out;
}

PointCloud object_points(const Capture& cap, double margin) {
  PointCloud out;
  if (cap.object_poses.empty()) return out;
  const Vec3 half = cap.object_half + Vec3::Constant(margin);
  for (int f = 0; f < cap.frames && f < static_cast<int>(cap.sweeps.size()); ++f) {
    const PointCloud& c = cap.sweeps[f].cloud;
    const Pose to_object = compose(pose_inverse(cap.object_poses[f]), c.frame);
    for (const Vec3& p : c.points) {
      const Vec3 q = to_object.apply(p);
      if ((q.cwiseAbs().array() <= half.array()).all()) out.points.push_back(q);
    }
  }
  return out;
}

Pose object_camera_pose(const Capture& cap, int view) {
  const View& v = cap.views.at(view);
  if (cap.object_poses.empty()) throw MissingInput("capture has no tracked object");
  return virtual_camera_pose(pose_inverse(v.pose), pose_inverse(cap.object_poses.at(v.frame)));
}

}  // namespace snerf
