#include "snerf/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "snerf/errors.hpp"
#include "snerf/io.hpp"

namespace snerf {
namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw InvalidArgument("config: " + key + " = '" + value + "': expected " + expected);
}

class Typed {
 public:
  explicit Typed(const Config& c) : c_(c) {}

  double real(const std::string& key) const {
    const std::string& v = c_.get(key);
    double x = 0.0;
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (v.empty() || ec != std::errc() || ptr != end || !std::isfinite(x)) bad_value(key, v, "a number");
    return x;
  }

  long long integer(const std::string& key) const {
    const std::string& v = c_.get(key);
    long long x = 0;
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (v.empty() || ec != std::errc() || ptr != end) bad_value(key, v, "an integer");
    return x;
  }

  int small(const std::string& key, int lo, int hi) const {
    const long long x = integer(key);
    if (x < lo || x > hi) bad_value(key, c_.get(key), "an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(x);
  }

  std::uint64_t u64(const std::string& key) const { return parse_u64(key, c_.get(key)); }

  bool flag(const std::string& key) const {
    const std::string& v = c_.get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "true or false");
  }

  std::vector<int> ints(const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : split(c_.get(key))) {
      int x = 0;
      const char* end = item.data() + item.size();
      auto [ptr, ec] = std::from_chars(item.data(), end, x);
      if (ec != std::errc() || ptr != end) bad_value(key, c_.get(key), "a comma-separated list of integers");
      out.push_back(x);
    }
    return out;
  }

  std::vector<std::uint64_t> u64s(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const auto& item : split(c_.get(key))) out.push_back(parse_u64(key, item));
    return out;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split(c_.get(key))) {
      double x = 0.0;
      const char* end = item.data() + item.size();
      auto [ptr, ec] = std::from_chars(item.data(), end, x);
      if (ec != std::errc() || ptr != end || !std::isfinite(x)) bad_value(key, c_.get(key), "a list of numbers");
      out.push_back(x);
    }
    return out;
  }

 private:
  std::uint64_t parse_u64(const std::string& key, const std::string& v) const {
    std::uint64_t x = 0;
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (v.empty() || ec != std::errc() || ptr != end) bad_value(key, v, "an unsigned integer");
    return x;
  }

  const Config& c_;
};

}  // namespace

const std::vector<ConfigKey>& Config::keys() {
  static const std::vector<ConfigKey> k = {
      {"scene", "street-toy", "built-in scene name or path to a scene file"},
      {"seed", "7", "scene and data-generation seed"},
      {"threads", "1", "worker threads for per-pixel and per-ray loops"},
      {"data.flow_span", "2", "optical flows are generated between frames up to this far apart"},
      {"data.train_frames", "0,2,4", "frames used for training"},
      {"data.test_frames", "1,3", "held-out frames used for evaluation"},
      {"fusion.window", "7", "LiDAR sweeps accumulated per view (frames)"},
      {"fusion.flow_threshold", "0.2", "relative LiDAR/optical flow discrepancy above which a point is dropped"},
      {"fusion.filter", "true", "enable flow-consistency outlier removal"},
      {"fusion.densify_k", "16", "nearest seeds used by the densifier"},
      {"fusion.sigma_color", "0.1", "color-affinity bandwidth of the densifier"},
      {"confidence.tau", "0.2", "geometry confidence threshold"},
      {"confidence.components", "rgb,ssim,feature,depth,flow", "enabled confidence components"},
      {"corrupt.noise_sigma", "0", "Gaussian noise added to the dense depth (meters)"},
      {"corrupt.outlier_rate", "0", "fraction of dense-depth pixels scaled into outliers"},
      {"corrupt.outlier_scale", "2", "outlier depth multiplier"},
      {"train.mode", "background", "background or foreground"},
      {"train.depth", "dense", "depth supervision: none, sparse or dense"},
      {"train.use_confidence", "true", "weight depth by the learned confidence (otherwise 1)"},
      {"train.lambda_depth", "auto", "depth weight; auto = 0.2 background, 1 foreground"},
      {"train.lambda_smooth", "auto", "smoothness weight; auto = 0.01 background, 0.15 foreground"},
      {"train.radius", "3", "contraction radius (background) or object scale (foreground)"},
      {"train.near", "0.2", "near bound (meters)"},
      {"train.far", "auto", "far bound; auto = 120 background, 20 foreground"},
      {"train.n_samples", "128", "samples per ray"},
      {"train.batch_rays", "512", "rays per iteration"},
      {"train.patch_size", "8", "smoothness patch side (pixels)"},
      {"train.iterations", "1000", "optimizer steps"},
      {"train.lr_start", "5e-4", "learning rate after warm-up"},
      {"train.lr_end", "5e-6", "final learning rate"},
      {"train.warmup", "50", "linear warm-up steps"},
      {"train.confidence_lr_scale", "1", "learning-rate multiplier for the confidence logits"},
      {"train.pose_lr_scale", "0.1", "learning-rate multiplier for the pose offsets"},
      {"train.optimize_poses", "true", "learn per-view pose offsets"},
      {"train.seed", "0", "training seed (initialization and ray sampling)"},
      {"train.foreground_views", "4", "views used in foreground mode"},
      {"train.log_every", "100", "progress line interval (iterations)"},
      {"field.density_layers", "4", "hidden layers of the density MLP"},
      {"field.density_width", "128", "width of the density MLP and its feature"},
      {"field.color_layers", "2", "hidden layers of the color MLP"},
      {"field.color_width", "64", "width of the color MLP"},
      {"field.pos_levels", "8", "positional-encoding frequencies for positions"},
      {"field.dir_levels", "2", "positional-encoding frequencies for directions"},
      {"ablate.variants", "rgb-only,sparse-depth,dense,dense-confidence", "ablation grid rows"},
      {"ablate.seeds", "0,1,2", "training seeds per ablation cell"},
      {"ablate.taus", "", "optional tau sweep for the dense-confidence row"},
  };
  return k;
}

Config::Config() {
  for (const auto& k : keys()) values_[k.key] = k.default_value;
}

void Config::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidArgument("unknown config key '" + key + "'");
  it->second = value;
  explicit_[key] = true;
}

void Config::set(const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw InvalidArgument("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::load_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (const size_t hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      const int col = static_cast<int>(line.find_first_not_of(" \t")) + 1;
      throw ParseError("expected key = value", number, col);
    }
    const std::string key = trim(line.substr(0, eq));
    if (!values_.count(key)) {
      const int col = static_cast<int>(line.find_first_not_of(" \t")) + 1;
      throw ParseError("unknown config key '" + key + "'", number, col);
    }
    set(key, trim(line.substr(eq + 1)));
  }
}

void Config::load_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InvalidArgument("config file not found: " + path.string());
  load_text(io::read_text(path));
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidArgument("unknown config key '" + key + "'");
  return it->second;
}

bool Config::is_default(const std::string& key) const { return !explicit_.count(key); }

std::string Config::dump() const {
  std::string s;
  for (const auto& [k, v] : values_) s += k + " = " + v + "\n";
  return s;
}

std::string depth_source_name(DepthSource d) {
  switch (d) {
    case DepthSource::kNone: return "none";
    case DepthSource::kSparse: return "sparse";
    case DepthSource::kDense: return "dense";
  }
  return "?";
}

RunConfig Config::resolve() const {
  const Typed t(*this);
  RunConfig r;
  r.scene = get("scene");
  if (r.scene.empty()) bad_value("scene", "", "a scene name or path");
  r.seed = t.u64("seed");
  r.threads = t.small("threads", 1, 256);
  r.flow_span = t.small("data.flow_span", 1, 64);
  r.train_frames = t.ints("data.train_frames");
  r.test_frames = t.ints("data.test_frames");
  if (r.train_frames.empty()) bad_value("data.train_frames", get("data.train_frames"), "at least one frame");

  r.fusion.window = t.small("fusion.window", 1, 1000);
  r.fusion.flow_threshold = t.real("fusion.flow_threshold");
  if (!(r.fusion.flow_threshold > 0.0 && r.fusion.flow_threshold <= 1.0))
    bad_value("fusion.flow_threshold", get("fusion.flow_threshold"), "a value in (0, 1]");
  r.fusion.filter = t.flag("fusion.filter");
  r.fusion.densify.k = t.small("fusion.densify_k", 1, 1024);
  r.fusion.densify.sigma_color = t.real("fusion.sigma_color");
  if (!(r.fusion.densify.sigma_color > 0.0)) bad_value("fusion.sigma_color", get("fusion.sigma_color"), "> 0");

  r.confidence.tau = t.real("confidence.tau");
  if (!(r.confidence.tau > 0.0)) bad_value("confidence.tau", get("confidence.tau"), "> 0");
  r.confidence.components.clear();
  for (const auto& name : split(get("confidence.components"))) {
    try {
      r.confidence.components.push_back(parse_component(name));
    } catch (const InvalidArgument&) {
      bad_value("confidence.components", get("confidence.components"), "names from rgb,ssim,feature,depth,flow");
    }
  }

  r.corrupt_noise = t.real("corrupt.noise_sigma");
  r.corrupt_rate = t.real("corrupt.outlier_rate");
  r.corrupt_scale = t.real("corrupt.outlier_scale");
  if (r.corrupt_noise < 0.0) bad_value("corrupt.noise_sigma", get("corrupt.noise_sigma"), ">= 0");
  if (r.corrupt_rate < 0.0 || r.corrupt_rate >= 1.0)
    bad_value("corrupt.outlier_rate", get("corrupt.outlier_rate"), "a value in [0, 1)");
  if (!(r.corrupt_scale > 0.0)) bad_value("corrupt.outlier_scale", get("corrupt.outlier_scale"), "> 0");

  const std::string mode = get("train.mode");
  if (mode == "foreground") {
    r.train = TrainConfig::foreground();
  } else if (mode != "background") {
    bad_value("train.mode", mode, "background or foreground");
  }
  const std::string depth = get("train.depth");
  if (depth == "none") r.depth = DepthSource::kNone;
  else if (depth == "sparse") r.depth = DepthSource::kSparse;
  else if (depth == "dense") r.depth = DepthSource::kDense;
  else bad_value("train.depth", depth, "none, sparse or dense");
  r.use_confidence = t.flag("train.use_confidence");
  if (get("train.lambda_depth") != "auto") r.train.lambda_depth = t.real("train.lambda_depth");
  if (get("train.lambda_smooth") != "auto") r.train.lambda_smooth = t.real("train.lambda_smooth");
  if (get("train.far") != "auto") r.train.far = t.real("train.far");
  r.train.tau = r.confidence.tau;
  r.train.radius = t.real("train.radius");
  r.train.near = t.real("train.near");
  r.train.n_samples = t.small("train.n_samples", 2, 4096);
  r.train.batch_rays = t.small("train.batch_rays", 1, 1 << 20);
  r.train.patch_size = t.small("train.patch_size", 0, 256);
  r.train.iterations = t.small("train.iterations", 0, 100000000);
  r.train.lr_start = t.real("train.lr_start");
  r.train.lr_end = t.real("train.lr_end");
  r.train.warmup_iters = t.small("train.warmup", 0, 100000000);
  r.train.confidence_lr_scale = t.real("train.confidence_lr_scale");
  r.train.pose_lr_scale = t.real("train.pose_lr_scale");
  r.train.optimize_poses = t.flag("train.optimize_poses");
  r.train.seed = t.u64("train.seed");
  r.foreground_views = t.small("train.foreground_views", 1, 10000);
  r.log_every = t.small("train.log_every", 0, 100000000);
  try {
    r.train.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }

  r.field.density_layers = t.small("field.density_layers", 1, 64);
  r.field.density_width = t.small("field.density_width", 1, 4096);
  r.field.color_layers = t.small("field.color_layers", 0, 64);
  r.field.color_width = t.small("field.color_width", 1, 4096);
  r.field.pos_levels = t.small("field.pos_levels", 0, 32);
  r.field.dir_levels = t.small("field.dir_levels", 0, 32);
  r.field.seed = r.train.seed;

  r.ablate_variants = split(get("ablate.variants"));
  for (const auto& v : r.ablate_variants)
    if (v != "rgb-only" && v != "sparse-depth" && v != "dense" && v != "dense-confidence")
      bad_value("ablate.variants", get("ablate.variants"), "names from rgb-only,sparse-depth,dense,dense-confidence");
  r.ablate_seeds = t.u64s("ablate.seeds");
  r.ablate_taus = t.reals("ablate.taus");
  for (double tau : r.ablate_taus)
    if (!(tau > 0.0)) bad_value("ablate.taus", get("ablate.taus"), "positive values");
  return r;
}

}  // namespace snerf
