#include "snerf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "snerf/errors.hpp"
#include "snerf/io.hpp"

namespace snerf {
namespace {

constexpr size_t kMinObjectPixels = 12;

size_t mask_count(const Mask& m) {
  size_t n = 0;
  for (auto v : m.data()) n += v != 0;
  return n;
}

/// Object views: masked views of the given frames, largest masks first.
std::vector<int> object_views(const Capture& cap, const std::vector<int>& frames, int limit) {
  std::vector<std::pair<size_t, int>> found;
  for (int f : frames) {
    for (int c = 0; c < cap.cameras; ++c) {
      const int v = cap.index(f, c);
      const size_t n = cap.views[v].dynamic.empty() ? 0 : mask_count(cap.views[v].dynamic);
      if (n >= kMinObjectPixels) found.emplace_back(n, v);
    }
  }
  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (limit >= 0 && static_cast<int>(found.size()) > limit) found.resize(limit);
  std::vector<int> out;
  for (const auto& p : found) out.push_back(p.second);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SceneOracle load_scene(const RunConfig& cfg) {
  SceneOracle s;
  if (cfg.scene == "street-toy") {
    s = street_toy(cfg.seed);
  } else {
    if (!std::filesystem::exists(cfg.scene)) throw MissingInput("scene file not found: " + cfg.scene);
    s = parse_scene(io::read_text(cfg.scene));
    s.seed = cfg.seed;
  }
  return s;
}

PreparedDepth prepare_depth(const Capture& cap, const RunConfig& cfg) {
  const size_t n = cap.views.size();
  PreparedDepth out;
  out.sparse.resize(n);
  out.dense.resize(n);
  out.corrupted.resize(n);
  out.stats.resize(n);
  for (int f : cfg.train_frames) {
    if (f < 0 || f >= cap.frames) throw InvalidArgument("training frame out of range");
    for (int c = 0; c < cap.cameras; ++c) {
      const int v = cap.index(f, c);
      FusedView fused = fuse_view(cap, v, cfg.train_frames, cfg.fusion);
      out.sparse[v] = std::move(fused.filtered);
      out.stats[v] = fused.stats;
      out.dense[v] = corrupt_depth(fused.dense, cfg.corrupt_noise, cfg.corrupt_rate, cfg.corrupt_scale,
                                   hash_counter(cfg.seed, 0xC0, static_cast<std::uint64_t>(v)), &out.corrupted[v]);
    }
  }
  return out;
}

std::vector<TrainView> build_train_views(const Capture& cap, const PreparedDepth& depth, const RunConfig& cfg,
                                         int& components) {
  std::vector<TrainView> views;
  components = 0;
  if (cfg.train.mode == SceneMode::kForeground) {
    // Object-centric: virtual cameras around the tracked object, supervised
    // by the object's LiDAR points accumulated in its own frame.
    const PointCloud pts = object_points(cap);
    for (int v : object_views(cap, cfg.train_frames, cfg.foreground_views)) {
      const View& src = cap.views[v];
      TrainView tv;
      tv.intr = src.intr;
      tv.pose = object_camera_pose(cap, v);
      tv.rgb = src.rgb;
      tv.mask = src.dynamic;
      if (cfg.depth != DepthSource::kNone && !pts.points.empty()) {
        DepthMap sparse = splat_to_depth(pts, tv.intr, tv.pose);
        for (size_t i = 0; i < sparse.values.size(); ++i)
          if (!tv.mask[i]) sparse.invalidate(static_cast<int>(i % tv.intr.width), static_cast<int>(i / tv.intr.width));
        if (sparse.valid_count() > 0) {
          tv.depth = cfg.depth == DepthSource::kDense ? densify_depth(sparse, tv.rgb, cfg.fusion.densify) : sparse;
        }
      }
      views.push_back(std::move(tv));
    }
    if (views.empty()) throw MissingInput("no training view shows the tracked object");
    return views;
  }

  const bool with_conf = cfg.depth == DepthSource::kDense && cfg.use_confidence && !cfg.confidence.components.empty();
  if (with_conf) components = static_cast<int>(cfg.confidence.components.size());
  for (int f : cfg.train_frames) {
    for (int c = 0; c < cap.cameras; ++c) {
      const int v = cap.index(f, c);
      const View& src = cap.views[v];
      TrainView tv;
      tv.intr = src.intr;
      tv.pose = src.pose;
      tv.rgb = src.rgb;
      if (cfg.depth == DepthSource::kSparse) tv.depth = depth.sparse.at(v);
      if (cfg.depth == DepthSource::kDense) tv.depth = depth.dense.at(v);
      if (with_conf) {
        const bool cached = static_cast<size_t>(v) < depth.confidence.size() && !depth.confidence[v].empty();
        tv.confidence = cached ? depth.confidence[v]
                               : view_confidence(cap, depth.dense, v, cfg.train_frames, cfg.confidence);
      }
      views.push_back(std::move(tv));
    }
  }
  return views;
}

std::vector<EvalRow> evaluate_frames(const RadianceField& field, const RunConfig& cfg, const Capture& cap,
                                     const std::vector<int>& frames) {
  std::vector<EvalRow> rows;
  const RenderConfig rc = cfg.train.render_config();
  if (cfg.train.mode == SceneMode::kForeground) {
    for (int v : object_views(cap, frames, -1)) {
      const View& src = cap.views[v];
      const RenderedImage img = render_image(field, src.intr, object_camera_pose(cap, v), rc);
      RgbImage masked = src.rgb;
      for (size_t i = 0; i < masked.size(); ++i)
        if (!src.dynamic[i]) masked[i] = img.rgb[i];
      rows.push_back({src.frame, src.camera, psnr(img.rgb, src.rgb, &src.dynamic), ssim_metric(img.rgb, masked)});
    }
    return rows;
  }
  for (int f : frames) {
    for (int c = 0; c < cap.cameras; ++c) {
      const View& src = cap.view(f, c);
      const RenderedImage img = render_image(field, src.intr, src.pose, rc);
      rows.push_back({f, c, psnr(img.rgb, src.rgb), ssim_metric(img.rgb, src.rgb)});
    }
  }
  return rows;
}

double mean_psnr(const std::vector<EvalRow>& rows) {
  if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const auto& r : rows) s += r.psnr;
  return s / static_cast<double>(rows.size());
}

RunResult run_training(const Capture& cap, const PreparedDepth& depth, const RunConfig& cfg,
                       const ProgressFn& progress) {
  int components = 0;
  std::vector<TrainView> views = build_train_views(cap, depth, cfg, components);
  FieldConfig fc = cfg.field;
  fc.seed = cfg.train.seed;
  Trainer trainer(cfg.train, fc, std::move(views), components);
  for (int i = 0; i < cfg.train.iterations; ++i) {
    const StepLog log = trainer.step();
    if (progress && cfg.log_every > 0 && (i % cfg.log_every == 0 || i + 1 == cfg.train.iterations)) progress(log);
  }
  RunResult r;
  r.history = trainer.history();
  r.checkpoint = trainer.checkpoint();
  r.checkpoint.header["train.frames"] = std::to_string(cfg.train_frames.size());
  r.confidence_weights = trainer.confidence_weights().weights();
  if (!cfg.test_frames.empty()) {
    r.test = evaluate_frames(trainer.field(), cfg, cap, cfg.test_frames);
    r.test_psnr = mean_psnr(r.test);
  }
  return r;
}

RunConfig variant_config(const RunConfig& base, const std::string& variant) {
  RunConfig c = base;
  if (variant == "rgb-only") {
    c.depth = DepthSource::kNone;
    c.train.lambda_depth = 0.0;
    c.train.lambda_smooth = 0.0;
  } else if (variant == "sparse-depth") {
    c.depth = DepthSource::kSparse;
    c.use_confidence = false;
  } else if (variant == "dense") {
    c.depth = DepthSource::kDense;
    c.use_confidence = false;
  } else if (variant == "dense-confidence") {
    c.depth = DepthSource::kDense;
    c.use_confidence = true;
  } else {
    throw InvalidArgument("unknown ablation variant '" + variant + "'");
  }
  return c;
}

double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

AblationTable run_ablation(const Capture& cap, const RunConfig& cfg,
                           const std::function<void(const std::string&)>& progress) {
  AblationTable table;
  struct Cell {
    std::string variant;
    double tau;
  };
  std::vector<Cell> cells;
  for (const auto& v : cfg.ablate_variants) {
    if (v == "dense-confidence" && !cfg.ablate_taus.empty()) {
      for (double tau : cfg.ablate_taus) cells.push_back({v, tau});
    } else {
      cells.push_back({v, cfg.confidence.tau});
    }
  }
  const PreparedDepth depth = prepare_depth(cap, cfg);
  for (const Cell& cell : cells) {
    AblationCell row{cell.variant, cell.tau, {}, {}};
    for (std::uint64_t seed : cfg.ablate_seeds) {
      RunConfig c = variant_config(cfg, cell.variant);
      c.confidence.tau = cell.tau;
      c.train.tau = cell.tau;
      c.train.seed = seed;
      try {
        const RunResult r = run_training(cap, depth, c);
        row.psnr.push_back(r.test_psnr);
        if (progress) {
          char buf[160];
          std::snprintf(buf, sizeof(buf), "%s tau=%.3g seed=%llu psnr=%.3f", cell.variant.c_str(), cell.tau,
                        static_cast<unsigned long long>(seed), r.test_psnr);
          progress(buf);
        }
      } catch (const Error& e) {
        row.psnr.push_back(std::numeric_limits<double>::quiet_NaN());
        row.error = e.what();
        if (progress) progress(cell.variant + " seed=" + std::to_string(seed) + " failed: " + e.what());
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string format_ablation(const AblationTable& t) {
  std::string s = "variant,tau,runs,median_psnr,mean_psnr,spread_psnr,psnr_per_seed\n";
  char buf[256];
  for (const auto& r : t.rows) {
    double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    int n = 0;
    std::string per;
    for (double p : r.psnr) {
      std::snprintf(buf, sizeof(buf), "%s%.4f", per.empty() ? "" : ";", p);
      per += buf;
      if (std::isnan(p)) continue;
      sum += p;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
      ++n;
    }
    const double mean = n ? sum / n : std::numeric_limits<double>::quiet_NaN();
    std::snprintf(buf, sizeof(buf), "%s,%.3g,%d,%.4f,%.4f,%.4f,", r.variant.c_str(), r.tau, n, median(r.psnr), mean,
                  n ? hi - lo : std::numeric_limits<double>::quiet_NaN());
    s += buf + per + "\n";
  }
  return s;
}

}  // namespace snerf
