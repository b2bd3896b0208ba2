#include "snerf/depthfusion.hpp"

#include <algorithm>
#include <cmath>

#include "snerf/errors.hpp"
#include "snerf/parallel.hpp"

namespace snerf {

PointCloud accumulate_lidar(std::span<const PointCloud> frames, const Pose& target) {
  PointCloud out;
  out.frame = target;
  size_t total = 0;
  for (const auto& f : frames) total += f.size();
  out.points.reserve(total);
  const Pose target_inv = pose_inverse(target);
  for (const auto& f : frames) {
    const Pose to_target = compose(target_inv, f.frame);
    for (const auto& p : f.points) out.points.push_back(to_target.apply(p));
  }
  return out;
}

SplatResult splat_points(const PointCloud& cloud, const Intrinsics& intr, const Pose& cam) {
  SplatResult out{DepthMap(intr.width, intr.height), Grid<int>(intr.width, intr.height, -1)};
  // cloud frame -> camera frame in one transform
  const Pose to_cam = compose(pose_inverse(cam), cloud.frame);
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3 xc = to_cam.apply(cloud.points[i]);
    if (!(xc.z() > 0.0)) continue;
    const double u = intr.fx * xc.x() / xc.z() + intr.cx;
    const double v = intr.fy * xc.y() / xc.z() + intr.cy;
    if (!intr.contains(u, v)) continue;
    const int x = nearest_pixel(u);
    const int y = nearest_pixel(v);
    const float d = static_cast<float>(xc.z());
    if (!out.depth.is_valid(x, y) || d < out.depth.values(x, y)) {
      out.depth.set(x, y, d);
      out.point_index(x, y) = static_cast<int>(i);
    }
  }
  return out;
}

DepthMap splat_to_depth(const PointCloud& cloud, const Intrinsics& intr, const Pose& cam) {
  return splat_points(cloud, intr, cam).depth;
}

FlowField lidar_flow(const PointCloud& cloud, const Pose& cam_s, const Pose& cam_t,
                     const Intrinsics& intr, bool clip_to_frame) {
  const DepthMap sparse = splat_to_depth(cloud, intr, cam_s);
  FlowField flow(intr.width, intr.height);
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      if (!sparse.is_valid(x, y)) continue;
      const PixelSample px{static_cast<double>(x), static_cast<double>(y), sparse.values(x, y)};
      const auto proj = try_reproject(px, cam_s, cam_t, intr);
      if (!proj || (clip_to_frame && !proj->in_frame)) continue;
      flow.set(x, y, static_cast<float>(proj->pixel.u - x), static_cast<float>(proj->pixel.v - y));
    }
  }
  return flow;
}

double relative_flow_discrepancy(double lu, double lv, double ou, double ov, double eps) {
  const double num = std::hypot(lu - ou, lv - ov);
  return num / std::max(std::hypot(lu, lv), eps);
}

DepthMap remove_flow_outliers(const DepthMap& sparse, const FlowField& lflow,
                              const FlowField& oflow, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("flow outlier threshold must lie in (0, 1]");
  }
  if (!lflow.du.same_shape(sparse.values) || !oflow.du.same_shape(sparse.values)) {
    throw DimensionMismatch("flow fields and depth map differ in size");
  }
  DepthMap out = sparse;
  for (int y = 0; y < sparse.height(); ++y) {
    for (int x = 0; x < sparse.width(); ++x) {
      if (!sparse.is_valid(x, y) || !lflow.is_valid(x, y) || !oflow.is_valid(x, y)) continue;
      const double r = relative_flow_discrepancy(lflow.du(x, y), lflow.dv(x, y), oflow.du(x, y),
                                                 oflow.dv(x, y));
      if (r > threshold) out.invalidate(x, y);
    }
  }
  return out;
}

namespace {

struct Seed {
  int x;
  int y;
  float depth;
  Rgb color;
};

}  // namespace

DepthMap densify_depth(const DepthMap& sparse, const RgbImage& image, const DensifyConfig& cfg) {
  if (!image.same_shape(sparse.values)) throw DimensionMismatch("image and depth differ in size");
  if (cfg.k < 1 || !(cfg.sigma_color > 0.0)) throw InvalidArgument("invalid densify config");
  std::vector<Seed> seeds;
  for (int y = 0; y < sparse.height(); ++y) {
    for (int x = 0; x < sparse.width(); ++x) {
      if (sparse.is_valid(x, y)) seeds.push_back({x, y, sparse.values(x, y), image(x, y)});
    }
  }
  if (seeds.empty()) throw EmptyInput("densify_depth needs at least one valid pixel");

  DepthMap out = sparse;
  const int w = sparse.width();
  const size_t k = std::min<size_t>(cfg.k, seeds.size());
  parallel_for(static_cast<size_t>(sparse.height()), [&](size_t row) {
    const int y = static_cast<int>(row);
    std::vector<std::pair<double, size_t>> dist(seeds.size());
    for (int x = 0; x < w; ++x) {
      if (sparse.is_valid(x, y)) continue;
      for (size_t i = 0; i < seeds.size(); ++i) {
        const double dx = seeds[i].x - x;
        const double dy = seeds[i].y - y;
        dist[i] = {dx * dx + dy * dy, i};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      const Rgb c = image(x, y);
      double num = 0.0;
      double den = 0.0;
      for (size_t j = 0; j < k; ++j) {
        const Seed& s = seeds[dist[j].second];
        const Rgb dc = s.color - c;
        const double affinity =
            std::exp(-std::sqrt(double(dc.r) * dc.r + double(dc.g) * dc.g + double(dc.b) * dc.b) /
                     cfg.sigma_color);
        const double wgt = affinity / std::sqrt(dist[j].first);
        num += wgt * s.depth;
        den += wgt;
      }
      float v = static_cast<float>(num / den);
      out.set(x, y, v);
    }
  });
  return out;
}

}  // namespace snerf
