#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

#include "snerf/config.hpp"
#include "snerf/dataset.hpp"
#include "snerf/errors.hpp"
#include "snerf/io.hpp"
#include "snerf/parallel.hpp"
#include "snerf/pipeline.hpp"
#include "snerf/render.hpp"

namespace snerf::cli {
namespace fs = std::filesystem;
namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string mode;
  bool rgb_only = false;
  std::string out;
};

/// Raised for configuration problems so they map to the usage exit code.
class ConfigError : public Error {
 public:
  using Error::Error;
};

void add_common(CLI::App* app, Common& c, bool with_out_required) {
  app->add_option("--config", c.config, "flat key = value configuration file");
  app->add_option("--set", c.sets, "override one config key (key=value), repeatable");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--threads", c.threads, "worker thread cap")->check(CLI::Range(1, 256));
  app->add_option("--mode", c.mode, "background or foreground")->check(CLI::IsMember({"background", "foreground"}));
  app->add_flag("--rgb-only", c.rgb_only, "disable depth and smoothness supervision");
  auto* out = app->add_option("--out", c.out, "output directory");
  if (with_out_required) out->required();
}

struct Resolved {
  Config raw;
  RunConfig run;
};

Resolved resolve(const Common& c, const fs::path* dataset, const char* seed_key,
                 const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  Resolved r;
  try {
    if (dataset && fs::exists(*dataset / "config.txt")) r.raw.load_file(*dataset / "config.txt");
    if (!c.config.empty()) r.raw.load_file(c.config);
    for (const auto& [k, v] : extra) r.raw.set(k, v);
    for (const auto& s : c.sets) r.raw.set(s);
    if (c.seed) r.raw.set(seed_key, std::to_string(*c.seed));
    if (c.threads) r.raw.set("threads", std::to_string(*c.threads));
    if (!c.mode.empty()) r.raw.set("train.mode", c.mode);
    if (c.rgb_only) {
      r.raw.set("train.depth", "none");
      r.raw.set("train.lambda_depth", "0");
      r.raw.set("train.lambda_smooth", "0");
    }
    r.run = r.raw.resolve();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  set_thread_count(r.run.threads);
  return r;
}

std::string stem(const View& v) { return "f" + std::to_string(v.frame) + "_c" + std::to_string(v.camera); }

Capture load_capture(const fs::path& dataset) {
  if (!fs::is_directory(dataset)) throw MissingInput("dataset directory not found: " + dataset.string());
  return read_capture(dataset);
}

std::vector<int> train_views(const Capture& cap, const RunConfig& cfg) {
  std::vector<int> out;
  for (int f : cfg.train_frames) {
    if (f < 0 || f >= cap.frames) throw ConfigError("config: training frame " + std::to_string(f) + " out of range");
    for (int c = 0; c < cap.cameras; ++c) out.push_back(cap.index(f, c));
  }
  return out;
}

/// Fused depths (and confidence maps when `need_conf`) from a dataset directory.
PreparedDepth load_prepared(const fs::path& dataset, const Capture& cap, const RunConfig& cfg, bool need_conf) {
  PreparedDepth p;
  const size_t n = cap.views.size();
  p.sparse.resize(n);
  p.dense.resize(n);
  p.corrupted.resize(n);
  p.stats.resize(n);
  p.confidence.resize(n);
  const fs::path fuse = dataset / "fuse";
  const fs::path conf = dataset / "confidence";
  for (int v : train_views(cap, cfg)) {
    const std::string s = stem(cap.views[v]);
    auto need = [](const fs::path& f, const char* hint) {
      if (!fs::exists(f)) throw MissingInput("missing " + f.string() + " (run `snerf " + hint + "` first)");
      return f;
    };
    p.sparse[v] = io::read_depth(need(fuse / (s + "_sparse.pfm"), "fuse"));
    p.dense[v] = io::read_depth(need(fuse / (s + "_dense.pfm"), "fuse"));
    if (need_conf) {
      for (auto comp : cfg.confidence.components)
        p.confidence[v].push_back(io::read_confidence(need(conf / (s + "_" + component_name(comp) + ".pfm"), "confidence")));
    }
  }
  return p;
}

void write_report(const fs::path& path, const std::string& text) { io::write_text(path, text); }

std::string metrics_csv(const std::vector<EvalRow>& rows, const char* split) {
  std::string s;
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.6f,%.6f\n", split, r.frame, r.camera, r.psnr, r.ssim);
    s += buf;
  }
  return s;
}

// --- commands -------------------------------------------------------------

int cmd_gen(const Common& c, const std::string& scene_file, std::ostream& out) {
  std::vector<std::pair<std::string, std::string>> extra;
  if (!scene_file.empty()) extra.emplace_back("scene", scene_file);
  const Resolved r = resolve(c, nullptr, "seed", extra);
  const SceneOracle scene = load_scene(r.run);
  const Capture cap = capture_from_scene(scene, r.run.flow_span);
  const fs::path dir = c.out;
  write_capture(cap, dir);
  io::write_text(dir / "scene.txt", format_scene(scene));
  Config saved = r.raw;
  saved.set("scene", "scene.txt");
  io::write_text(dir / "config.txt", saved.dump());
  out << "wrote " << cap.views.size() << " views, " << cap.sweeps.size() << " sweeps, " << cap.flows.size()
      << " flows to " << dir.string() << "\n";
  return kOk;
}

int cmd_fuse(const Common& c, const fs::path& dataset, std::ostream& out) {
  const Resolved r = resolve(c, &dataset, "seed");
  const Capture cap = load_capture(dataset);
  train_views(cap, r.run);
  const PreparedDepth p = prepare_depth(cap, r.run);
  const fs::path dir = c.out.empty() ? dataset / "fuse" : fs::path(c.out);
  std::string report = "frame,camera,sparse,removed,dynamic,dynamic_removed,static,static_removed\n";
  FusionStats total;
  for (int v : train_views(cap, r.run)) {
    const View& view = cap.views[v];
    const std::string s = stem(view);
    io::write_pfm(dir / (s + "_sparse.pfm"), p.sparse[v]);
    io::write_pfm(dir / (s + "_dense.pfm"), p.dense[v]);
    io::write_mask(dir / (s + "_corrupted.png"), p.corrupted[v]);
    const FusionStats& st = p.stats[v];
    report += std::to_string(view.frame) + "," + std::to_string(view.camera) + "," + std::to_string(st.sparse) + "," +
              std::to_string(st.removed) + "," + std::to_string(st.dynamic) + "," + std::to_string(st.dynamic_removed) +
              "," + std::to_string(st.static_points) + "," + std::to_string(st.static_removed) + "\n";
    total.sparse += st.sparse;
    total.removed += st.removed;
    total.dynamic += st.dynamic;
    total.dynamic_removed += st.dynamic_removed;
    total.static_points += st.static_points;
    total.static_removed += st.static_removed;
  }
  write_report(dir / "report.csv", report);
  out << "fused " << train_views(cap, r.run).size() << " views: " << total.removed << " of " << total.sparse
      << " projected points removed";
  if (total.dynamic + total.static_points > 0) {
    out << " (dynamic " << total.dynamic_removed << "/" << total.dynamic << ", static " << total.static_removed << "/"
        << total.static_points << ")";
  }
  out << "\n";
  return kOk;
}

int cmd_confidence(const Common& c, const fs::path& dataset, std::ostream& out) {
  const Resolved r = resolve(c, &dataset, "train.seed");
  if (r.run.confidence.components.empty()) throw ConfigError("config: confidence.components is empty");
  const Capture cap = load_capture(dataset);
  const PreparedDepth p = load_prepared(dataset, cap, r.run, false);
  const fs::path dir = c.out.empty() ? dataset / "confidence" : fs::path(c.out);
  const ConfidenceWeights uniform(r.run.confidence.components.size());
  double sum = 0.0;
  size_t n = 0;
  for (int v : train_views(cap, r.run)) {
    const std::string s = stem(cap.views[v]);
    const auto maps = view_confidence(cap, p.dense, v, r.run.train_frames, r.run.confidence);
    for (size_t k = 0; k < maps.size(); ++k)
      io::write_pfm(dir / (s + "_" + component_name(r.run.confidence.components[k]) + ".pfm"), maps[k]);
    const ConfidenceMap combined = combine(maps, uniform);
    io::write_pfm(dir / (s + "_combined.pfm"), combined);
    const auto& vals = combined.values.data();
    const auto& valid = combined.valid.data();
    for (size_t i = 0; i < vals.size(); ++i) {
      if (!valid[i]) continue;
      sum += vals[i];
      ++n;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "mean combined confidence %.4f over %zu pixels\n", n ? sum / n : 0.0, n);
  out << buf;
  return kOk;
}

int cmd_train(const Common& c, const fs::path& dataset, std::ostream& out) {
  const Resolved r = resolve(c, &dataset, "train.seed");
  const Capture cap = load_capture(dataset);
  PreparedDepth p;
  if (r.run.depth != DepthSource::kNone && r.run.train.mode == SceneMode::kBackground) {
    p = load_prepared(dataset, cap, r.run, r.run.depth == DepthSource::kDense && r.run.use_confidence);
  }
  const fs::path dir = c.out;
  const RunResult res = run_training(cap, p, r.run, [&](const StepLog& l) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "iter %5d  lr %.2e  color %.5f  depth %.5f  smooth %.5f  psnr %.2f\n",
                  l.iteration, l.lr, l.loss.color, l.loss.depth, l.loss.smooth, l.psnr);
    out << buf << std::flush;
  });
  io::write_checkpoint(dir / "checkpoint.bin", res.checkpoint);
  io::write_text(dir / "log.csv", format_log_csv(res.history));
  io::write_text(dir / "config.txt", r.raw.dump());
  std::string report = "split,frame,camera,psnr,ssim\n" + metrics_csv(res.test, "test");
  io::write_text(dir / "metrics.csv", report);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "held-out psnr %.3f dB over %zu views\n", res.test_psnr, res.test.size());
  out << buf;
  return kOk;
}

RadianceField load_field(const fs::path& ckpt_path, Resolved& r) {
  const io::Checkpoint ckpt = io::read_checkpoint(ckpt_path);
  const FieldConfig stored = field_config_from(ckpt);
  FieldConfig expected = r.run.field;
  expected.seed = stored.seed;
  RadianceField field = field_from_checkpoint(ckpt, &expected);
  const auto get = [&](const char* k) {
    const auto it = ckpt.header.find(k);
    if (it == ckpt.header.end()) throw IoError(ckpt_path.string() + ": missing '" + k + "'");
    return it->second;
  };
  try {
    r.run.train.mode = get("mode") == "foreground" ? SceneMode::kForeground : SceneMode::kBackground;
    r.run.train.radius = std::stod(get("radius"));
    r.run.train.near = std::stod(get("near"));
    r.run.train.far = std::stod(get("far"));
  } catch (const std::logic_error&) {
    throw IoError(ckpt_path.string() + ": corrupt render bounds");
  }
  return field;
}

int cmd_render(const Common& c, const fs::path& ckpt, const fs::path& dataset, const std::vector<std::string>& views,
               const std::string& pose, int camera, std::ostream& out) {
  Resolved r = resolve(c, &dataset, "train.seed");
  const Capture cap = load_capture(dataset);
  std::vector<int> targets;
  for (const auto& v : views) {
    int f = -1, cam = -1;
    char tail = 0;
    if (std::sscanf(v.c_str(), "%d,%d%c", &f, &cam, &tail) != 2 || f < 0 || cam < 0 || f >= cap.frames ||
        cam >= cap.cameras)
      throw ConfigError("--view expects frame,camera within the dataset, got '" + v + "'");
    targets.push_back(cap.index(f, cam));
  }
  std::optional<Pose> novel;
  if (!pose.empty()) {
    try {
      novel = io::parse_pose(pose);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("--pose: ") + e.what());
    }
    if (camera < 0 || camera >= cap.cameras) throw ConfigError("--camera out of range");
  }
  if (targets.empty() && !novel) {
    for (int v = 0; v < static_cast<int>(cap.views.size()); ++v) targets.push_back(v);
  }
  const RadianceField field = load_field(ckpt, r);
  const RenderConfig rc = r.run.train.render_config();
  const bool fg = rc.mode == SceneMode::kForeground;
  const fs::path dir = c.out;
  std::string metrics = "frame,camera,psnr,ssim\n";
  for (int v : targets) {
    const View& view = cap.views[v];
    const Pose cam = fg ? object_camera_pose(cap, v) : view.pose;
    const RenderedImage img = render_image(field, view.intr, cam, rc);
    io::write_png(dir / (stem(view) + ".png"), img.rgb);
    io::write_pfm(dir / (stem(view) + "_depth.pfm"), img.depth);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f\n", view.frame, view.camera,
                  psnr(img.rgb, view.rgb, fg ? &view.dynamic : nullptr), ssim_metric(img.rgb, view.rgb));
    metrics += buf;
  }
  if (novel) {
    const RenderedImage img = render_image(field, cap.views[camera].intr, *novel, rc);
    io::write_png(dir / "novel.png", img.rgb);
    io::write_pfm(dir / "novel_depth.pfm", img.depth);
  }
  io::write_text(dir / "metrics.csv", metrics);
  out << "rendered " << targets.size() + (novel ? 1 : 0) << " views to " << dir.string() << "\n";
  return kOk;
}

int cmd_eval(const Common& c, const fs::path& ckpt, const fs::path& dataset, std::ostream& out) {
  Resolved r = resolve(c, &dataset, "train.seed");
  const Capture cap = load_capture(dataset);
  const RadianceField field = load_field(ckpt, r);
  const auto train = evaluate_frames(field, r.run, cap, r.run.train_frames);
  const auto test = evaluate_frames(field, r.run, cap, r.run.test_frames);
  const std::string csv = "split,frame,camera,psnr,ssim\n" + metrics_csv(train, "train") + metrics_csv(test, "test");
  if (!c.out.empty()) io::write_text(fs::path(c.out) / "metrics.csv", csv);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "train psnr %.3f dB (%zu views), held-out psnr %.3f dB (%zu views)\n",
                mean_psnr(train), train.size(), mean_psnr(test), test.size());
  out << buf;
  return kOk;
}

int cmd_ablate(const Common& c, const fs::path& dataset, std::ostream& out) {
  const Resolved r = resolve(c, &dataset, "train.seed");
  const Capture cap = load_capture(dataset);
  const AblationTable t = run_ablation(cap, r.run, [&](const std::string& s) { out << s << "\n" << std::flush; });
  const std::string csv = format_ablation(t);
  io::write_text(fs::path(c.out) / "ablation.csv", csv);
  out << csv;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"snerf: street-scene radiance fields with confidence-weighted depth supervision", "snerf"};
  app.require_subcommand(1);
  Common common;
  std::string scene_file, dataset, checkpoint, pose;
  std::vector<std::string> views;
  int camera = 0;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset from a scene");
  gen->add_option("scene", scene_file, "scene file (default: config `scene`)");
  add_common(gen, common, true);

  auto* fuse = app.add_subcommand("fuse", "accumulate, filter and densify LiDAR depth");
  fuse->add_option("dataset", dataset, "dataset directory")->required();
  add_common(fuse, common, false);

  auto* conf = app.add_subcommand("confidence", "compute confidence maps for fused depth");
  conf->add_option("dataset", dataset, "dataset directory")->required();
  add_common(conf, common, false);

  auto* train = app.add_subcommand("train", "train a radiance field");
  train->add_option("dataset", dataset, "dataset directory")->required();
  add_common(train, common, true);

  auto* render = app.add_subcommand("render", "render views from a checkpoint");
  render->add_option("checkpoint", checkpoint, "checkpoint file")->required();
  render->add_option("dataset", dataset, "dataset directory")->required();
  render->add_option("--view", views, "frame,camera to render (repeatable; default all)");
  render->add_option("--pose", pose, "novel camera-to-world pose, 12 comma-separated row-major values");
  render->add_option("--camera", camera, "camera whose intrinsics the novel pose uses");
  add_common(render, common, true);

  auto* eval = app.add_subcommand("eval", "score a checkpoint on training and held-out frames");
  eval->add_option("checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("dataset", dataset, "dataset directory")->required();
  add_common(eval, common, false);

  auto* ablate = app.add_subcommand("ablate", "run the supervision ablation grid");
  ablate->add_option("dataset", dataset, "dataset directory")->required();
  add_common(ablate, common, true);

  std::vector<const char*> argv{"snerf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "snerf: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(common, scene_file, out);
    if (fuse->parsed()) return cmd_fuse(common, dataset, out);
    if (conf->parsed()) return cmd_confidence(common, dataset, out);
    if (train->parsed()) return cmd_train(common, dataset, out);
    if (render->parsed()) return cmd_render(common, checkpoint, dataset, views, pose, camera, out);
    if (eval->parsed()) return cmd_eval(common, checkpoint, dataset, out);
    if (ablate->parsed()) return cmd_ablate(common, dataset, out);
  } catch (const ConfigError& e) {
    err << "snerf: " << e.what() << "\n";
    return kUsage;
  } catch (const NonFiniteLoss& e) {
    err << "snerf: numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    err << "snerf: " << e.what() << "\n";
    return kInput;
  } catch (const fs::filesystem_error& e) {
    err << "snerf: " << e.what() << "\n";
    return kInput;
  }
  return kUsage;
}

}  // namespace snerf::cli
