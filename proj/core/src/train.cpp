#include "snerf/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "snerf/errors.hpp"

namespace snerf {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join(std::span<const double> v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw IoError("checkpoint: bad number '" + item + "'");
    }
  }
  return out;
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw NonFiniteLoss(term);
}

const std::string& header_value(const io::Checkpoint& ckpt, const std::string& key) {
  const auto it = ckpt.header.find(key);
  if (it == ckpt.header.end()) throw IoError("checkpoint: missing '" + key + "'");
  return it->second;
}

int header_int(const io::Checkpoint& ckpt, const std::string& key) {
  try {
    return std::stoi(header_value(ckpt, key));
  } catch (const std::logic_error&) {
    throw IoError("checkpoint: bad integer for '" + key + "'");
  }
}

}  // namespace

TrainConfig TrainConfig::foreground() {
  TrainConfig c;
  c.mode = SceneMode::kForeground;
  c.lambda_depth = 1.0;
  c.lambda_smooth = 0.15;
  c.far = 20.0;
  return c;
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { throw InvalidArgument("train config: " + what); };
  if (!(lambda_depth >= 0.0) || !(lambda_smooth >= 0.0)) bad("lambdas must be >= 0");
  if (!(lr_end > 0.0) || !(lr_start >= lr_end)) bad("need lr_start >= lr_end > 0");
  if (!(tau > 0.0)) bad("tau must be > 0");
  if (!(radius > 0.0)) bad("radius must be > 0");
  if (!(near > 0.0) || !(far > near)) bad("need 0 < near < far");
  if (n_samples < 2) bad("n_samples must be >= 2");
  if (batch_rays < 1) bad("batch_rays must be >= 1");
  if (patch_size < 0) bad("patch_size must be >= 0");
  if (iterations < 0 || warmup_iters < 0) bad("iteration counts must be >= 0");
  if (!(confidence_lr_scale >= 0.0) || !(pose_lr_scale >= 0.0)) bad("lr scales must be >= 0");
}

RenderConfig TrainConfig::render_config() const {
  return {mode, radius, near, far, n_samples};
}

double loss_color(std::span<const Vec3> rendered, std::span<const Vec3> target, std::vector<Vec3>* grad) {
  if (rendered.size() != target.size()) throw LengthMismatch("loss_color: count mismatch");
  if (grad) grad->assign(rendered.size(), Vec3::Zero());
  if (rendered.empty()) return 0.0;
  const double n = 3.0 * static_cast<double>(rendered.size());
  double sum = 0.0;
  for (size_t i = 0; i < rendered.size(); ++i) {
    const Vec3 e = rendered[i] - target[i];
    sum += e.squaredNorm();
    if (grad) (*grad)[i] = 2.0 * e / n;
  }
  return sum / n;
}

double loss_depth(std::span<const double> rendered, std::span<const double> supervised,
                  std::span<const double> conf, SceneMode mode, std::vector<double>* d_rendered,
                  std::vector<double>* d_conf) {
  const size_t n = rendered.size();
  if (supervised.size() != n || conf.size() != n) throw LengthMismatch("loss_depth: count mismatch");
  if (d_rendered) d_rendered->assign(n, 0.0);
  if (d_conf) d_conf->assign(n, 0.0);
  if (n == 0) return 0.0;
  const bool disparity = mode == SceneMode::kBackground;
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double a = disparity ? 1.0 / rendered[i] : rendered[i];
    const double b = disparity ? 1.0 / supervised[i] : supervised[i];
    const double e = a - b;
    sum += conf[i] * std::abs(e);
    if (d_rendered) {
      const double da = disparity ? -1.0 / (rendered[i] * rendered[i]) : 1.0;
      (*d_rendered)[i] = conf[i] * sign(e) * da / static_cast<double>(n);
    }
    if (d_conf) (*d_conf)[i] = std::abs(e) / static_cast<double>(n);
  }
  return sum / static_cast<double>(n);
}

double loss_smooth(const Grid<double>& depth, const RgbImage& image, Grid<double>* grad, const Mask* mask) {
  const int w = depth.width();
  const int h = depth.height();
  if (w < 2 || h < 2) throw InvalidArgument("loss_smooth: patch must be at least 2x2");
  if (!image.same_shape(depth)) throw DimensionMismatch("loss_smooth: image and depth differ in size");
  if (mask && !mask->same_shape(depth)) throw DimensionMismatch("loss_smooth: mask differs in size");
  if (grad) *grad = Grid<double>(w, h, 0.0);
  auto in = [&](int x, int y) { return !mask || (*mask)(x, y) != 0; };
  size_t count = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) count += in(x, y);
  if (count == 0) return 0.0;
  const double norm = 1.0 / static_cast<double>(count);
  double sum = 0.0;
  auto term = [&](int x0, int y0, int x1, int y1) {
    if (!in(x0, y0) || !in(x1, y1)) return;
    const double e = std::exp(-static_cast<double>(mean_abs_diff(image(x1, y1), image(x0, y0))));
    const double d = depth(x1, y1) - depth(x0, y0);
    sum += std::abs(d) * e;
    if (grad) {
      (*grad)(x1, y1) += sign(d) * e * norm;
      (*grad)(x0, y0) -= sign(d) * e * norm;
    }
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) term(x, y, x + 1, y);
      if (y + 1 < h) term(x, y, x, y + 1);
    }
  }
  return sum * norm;
}

double total_loss(const LossParts& parts, const TrainConfig& cfg) {
  return parts.color + cfg.lambda_depth * parts.depth + cfg.lambda_smooth * parts.smooth;
}

double lr_schedule(int iter, const TrainConfig& cfg) {
  iter = std::clamp(iter, 0, std::max(cfg.iterations, 0));
  if (cfg.warmup_iters > 0 && iter < cfg.warmup_iters) {
    return cfg.lr_start * static_cast<double>(iter) / cfg.warmup_iters;
  }
  const int span = cfg.iterations - cfg.warmup_iters;
  if (span <= 0) return cfg.lr_start;
  const double frac = static_cast<double>(iter - cfg.warmup_iters) / span;
  return std::exp(std::log(cfg.lr_start) * (1.0 - frac) + std::log(cfg.lr_end) * frac);
}

Adam::Adam(size_t n, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr,
                std::span<const double> scale) {
  if (params.size() != m_.size() || grad.size() != m_.size() || (!scale.empty() && scale.size() != m_.size()))
    throw LengthMismatch("Adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double s = scale.empty() ? 1.0 : scale[i];
    params[i] -= s * lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double psnr(const RgbImage& a, const RgbImage& b, const Mask* mask) {
  if (!a.same_shape(b)) throw DimensionMismatch("psnr: images differ in size");
  if (mask && !mask->same_shape(a)) throw DimensionMismatch("psnr: mask differs in size");
  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const Rgb d = a[i] - b[i];
    sum += double(d.r) * d.r + double(d.g) * d.g + double(d.b) * d.b;
    n += 3;
  }
  if (n == 0) throw EmptyInput("psnr: no pixels");
  const double mse = sum / static_cast<double>(n);
  if (mse < 1e-10) return 100.0;
  return -10.0 * std::log10(mse);
}

double ssim_metric(const RgbImage& a, const RgbImage& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("ssim: images differ in size");
  const ScalarMap s = ssim_map(a, all_valid(b));
  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < s.values.size(); ++i) {
    if (!s.valid[i]) continue;
    sum += s.values[i];
    ++n;
  }
  if (n == 0) throw EmptyInput("ssim: no pixels");
  return sum / static_cast<double>(n);
}

Trainer::Trainer(const TrainConfig& cfg, const FieldConfig& field_cfg, std::vector<TrainView> views,
                 int confidence_components)
    : cfg_(cfg),
      field_(field_cfg),
      views_(std::move(views)),
      conf_(static_cast<size_t>(std::max(confidence_components, 0))),
      offsets_(views_.size()),
      adam_(0),
      rng_(splitmix64(cfg.seed ^ 0x5EEDull)) {
  cfg_.validate();
  if (views_.empty()) throw EmptyInput("trainer needs at least one view");
  for (size_t v = 0; v < views_.size(); ++v) {
    const TrainView& tv = views_[v];
    if (!tv.intr.is_valid() || !tv.rgb.same_shape(tv.intr.width, tv.intr.height))
      throw DimensionMismatch("view image does not match its intrinsics");
    if (!tv.depth.values.empty() && !tv.depth.values.same_shape(tv.rgb))
      throw DimensionMismatch("view depth does not match its image");
    if (!tv.mask.empty() && !tv.mask.same_shape(tv.rgb))
      throw DimensionMismatch("view mask does not match its image");
    if (!tv.confidence.empty()) {
      if (static_cast<int>(tv.confidence.size()) != confidence_components)
        throw DimensionMismatch("view has the wrong number of confidence components");
      for (const auto& c : tv.confidence)
        if (!c.values.same_shape(tv.rgb)) throw DimensionMismatch("confidence map does not match its image");
    }
    for (int y = 0; y < tv.intr.height; ++y)
      for (int x = 0; x < tv.intr.width; ++x)
        if (supervised(tv, x, y)) pixels_.emplace_back(static_cast<int>(v), y * tv.intr.width + x);
  }
  if (pixels_.empty()) throw EmptyInput("no supervised pixels");
  const size_t n = parameter_count();
  adam_ = Adam(n);
  lr_scale_.assign(n, 1.0);
  const size_t nf = field_.parameter_count();
  for (size_t i = nf; i < nf + conf_.logits.size(); ++i) lr_scale_[i] = cfg_.confidence_lr_scale;
  for (size_t i = nf + conf_.logits.size(); i < n; ++i)
    lr_scale_[i] = cfg_.optimize_poses ? cfg_.pose_lr_scale : 0.0;
}

bool Trainer::supervised(const TrainView& v, int x, int y) const {
  return v.mask.empty() || v.mask(x, y) != 0;
}

size_t Trainer::parameter_count() const {
  return field_.parameter_count() + conf_.logits.size() + 6 * offsets_.size();
}

std::vector<double> Trainer::parameters() const {
  std::vector<double> p(field_.parameters().begin(), field_.parameters().end());
  p.insert(p.end(), conf_.logits.begin(), conf_.logits.end());
  for (const auto& o : offsets_) {
    for (int k = 0; k < 3; ++k) p.push_back(o.delta_rotation[k]);
    for (int k = 0; k < 3; ++k) p.push_back(o.delta_translation[k]);
  }
  return p;
}

void Trainer::set_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw LengthMismatch("set_parameters: wrong size");
  auto fp = field_.parameters();
  std::copy(p.begin(), p.begin() + fp.size(), fp.begin());
  size_t i = fp.size();
  for (auto& l : conf_.logits) l = p[i++];
  for (auto& o : offsets_) {
    for (int k = 0; k < 3; ++k) o.delta_rotation[k] = p[i++];
    for (int k = 0; k < 3; ++k) o.delta_translation[k] = p[i++];
  }
}

Pose Trainer::refined_pose(int view) const {
  return apply_offset(views_.at(view).pose, offsets_.at(view));
}

double Trainer::confidence_at(const TrainView& v, int x, int y, std::vector<double>* grad) const {
  if (v.confidence.empty()) return 1.0;
  const size_t n = v.confidence.size();
  std::vector<double> vals(n);
  std::vector<std::uint8_t> ok(n);
  for (size_t k = 0; k < n; ++k) {
    ok[k] = v.confidence[k].is_valid(x, y);
    vals[k] = ok[k] ? v.confidence[k].values(x, y) : 0.0;
  }
  double c = 0.0;
  if (grad) grad->assign(n, 0.0);
  combine_pixel(vals, ok, conf_.logits, c, grad ? std::span<double>(*grad) : std::span<double>());
  return c;
}

Batch Trainer::sample_batch() {
  Batch b;
  const SpacingMode spacing = spacing_for(cfg_.mode);
  const Ray bounds{Vec3::Zero(), Vec3::UnitZ(), cfg_.near, cfg_.far};
  if (cfg_.lambda_smooth > 0.0 && cfg_.patch_size >= 2) {
    const int v = static_cast<int>(rng_.below(views_.size()));
    const Intrinsics& intr = views_[v].intr;
    const int pw = std::min(cfg_.patch_size, intr.width);
    const int ph = std::min(cfg_.patch_size, intr.height);
    if (pw >= 2 && ph >= 2) {
      const int x0 = static_cast<int>(rng_.below(intr.width - pw + 1));
      const int y0 = static_cast<int>(rng_.below(intr.height - ph + 1));
      b.patch_w = pw;
      b.patch_h = ph;
      for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x)
          b.rays.push_back({v, x0 + x, y0 + y, bin_samples(bounds, cfg_.n_samples, spacing, &rng_)});
    }
  }
  for (int i = 0; i < cfg_.batch_rays; ++i) {
    const auto [v, flat] = pixels_[rng_.below(pixels_.size())];
    const int w = views_[v].intr.width;
    b.rays.push_back({v, flat % w, flat / w, bin_samples(bounds, cfg_.n_samples, spacing, &rng_)});
  }
  return b;
}

double Trainer::evaluate(const Batch& batch, std::vector<double>* grad, LossParts* parts_out) {
  const RenderConfig rc = cfg_.render_config();
  const size_t n = batch.rays.size();
  if (n == 0) throw EmptyInput("empty batch");

  std::vector<Pose> poses(views_.size());
  for (size_t v = 0; v < views_.size(); ++v) poses[v] = refined_pose(static_cast<int>(v));

  std::vector<RayQuery> queries(n);
  std::vector<double> cz(n);
  std::vector<Vec3> base_dir(n);  // unperturbed unit direction
  for (size_t k = 0; k < n; ++k) {
    const RayRef& r = batch.rays[k];
    const TrainView& tv = views_.at(r.view);
    queries[k] = {generate_ray(r.x, r.y, tv.intr, poses[r.view], cfg_.near, cfg_.far), r.samples};
    const Vec3 dc = tv.intr.backproject(r.x, r.y);
    cz[k] = 1.0 / dc.norm();
    base_dir[k] = tv.pose.rotation * (dc * cz[k]);
  }

  BatchRenderer renderer(field_, rc);
  const auto& res = renderer.forward(queries);

  // Supervised subset for the color and depth terms; patch rays only feed smoothness.
  const size_t patch_rays = static_cast<size_t>(batch.patch_w) * batch.patch_h;
  std::vector<size_t> sup;
  for (size_t k = patch_rays; k < n; ++k)
    if (supervised(views_[batch.rays[k].view], batch.rays[k].x, batch.rays[k].y)) sup.push_back(k);

  std::vector<Vec3> rendered(sup.size()), target(sup.size());
  std::vector<double> z(sup.size()), zs(sup.size()), conf(sup.size());
  std::vector<std::vector<double>> conf_grad(sup.size());
  const bool want_conf_grad = grad && cfg_.lambda_depth > 0.0;
  for (size_t i = 0; i < sup.size(); ++i) {
    const size_t k = sup[i];
    const RayRef& r = batch.rays[k];
    const TrainView& tv = views_[r.view];
    rendered[i] = res[k].color;
    const Rgb& c = tv.rgb(r.x, r.y);
    target[i] = Vec3(c.r, c.g, c.b);
    z[i] = res[k].depth * cz[k];
    if (!tv.depth.values.empty() && tv.depth.is_valid(r.x, r.y)) {
      zs[i] = tv.depth.values(r.x, r.y);
      conf[i] = confidence_at(tv, r.x, r.y, want_conf_grad ? &conf_grad[i] : nullptr);
    } else {
      zs[i] = z[i];
      conf[i] = 0.0;
    }
  }

  LossParts parts;
  std::vector<Vec3> g_color;
  std::vector<double> g_z, g_conf;
  parts.color = loss_color(rendered, target, grad ? &g_color : nullptr);
  parts.depth = loss_depth(z, zs, conf, cfg_.mode, grad ? &g_z : nullptr, grad ? &g_conf : nullptr);

  Grid<double> g_patch;
  if (batch.patch_w >= 2 && batch.patch_h >= 2) {
    const int pw = batch.patch_w, ph = batch.patch_h;
    const TrainView& tv = views_[batch.rays[0].view];
    Grid<double> disp(pw, ph);
    RgbImage img(pw, ph);
    Mask m;
    if (!tv.mask.empty()) m = Mask(pw, ph);
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        const size_t k = static_cast<size_t>(y) * pw + x;
        const RayRef& r = batch.rays[k];
        disp(x, y) = 1.0 / (res[k].depth * cz[k]);
        img(x, y) = tv.rgb(r.x, r.y);
        if (!m.empty()) m(x, y) = tv.mask(r.x, r.y);
      }
    }
    parts.smooth = loss_smooth(disp, img, grad ? &g_patch : nullptr, m.empty() ? nullptr : &m);
  }

  require_finite(parts.color, "L_color");
  require_finite(parts.depth, "L_depth");
  require_finite(parts.smooth, "L_smooth");
  const double total = total_loss(parts, cfg_);
  if (parts_out) *parts_out = parts;
  if (!grad) return total;

  std::vector<Vec3> d_color(n, Vec3::Zero());
  std::vector<double> d_dist(n, 0.0);
  for (size_t i = 0; i < sup.size(); ++i) {
    d_color[sup[i]] = g_color[i];
    d_dist[sup[i]] += cfg_.lambda_depth * g_z[i] * cz[sup[i]];
  }
  if (!g_patch.empty()) {
    for (int y = 0; y < batch.patch_h; ++y) {
      for (int x = 0; x < batch.patch_w; ++x) {
        const size_t k = static_cast<size_t>(y) * batch.patch_w + x;
        const double zk = res[k].depth * cz[k];
        d_dist[k] += cfg_.lambda_smooth * g_patch(x, y) * (-1.0 / (zk * zk)) * cz[k];
      }
    }
  }

  grad->assign(parameter_count(), 0.0);
  const size_t nf = field_.parameter_count();
  std::vector<Vec3> d_origin, d_dir;
  renderer.backward(d_color, d_dist, std::span<double>(grad->data(), nf), &d_origin, &d_dir);

  if (want_conf_grad) {
    for (size_t i = 0; i < sup.size(); ++i) {
      if (conf_grad[i].empty()) continue;
      for (size_t j = 0; j < conf_.logits.size(); ++j)
        (*grad)[nf + j] += cfg_.lambda_depth * g_conf[i] * conf_grad[i][j];
    }
  }

  const size_t no = nf + conf_.logits.size();
  std::vector<Mat3> rot(views_.size());
  for (size_t v = 0; v < views_.size(); ++v) rot[v] = exp_so3(offsets_[v].delta_rotation);
  for (size_t k = 0; k < n; ++k) {
    const int v = batch.rays[k].view;
    const Vec3& w = offsets_[v].delta_rotation;
    // d(exp(w) u)/dw = -exp(w) [u]x Jr(w)
    const Mat3 j = -rot[v] * skew(base_dir[k]) * right_jacobian_so3(w);
    const Vec3 g_rot = j.transpose() * d_dir[k];
    for (int a = 0; a < 3; ++a) {
      (*grad)[no + 6 * v + a] += g_rot[a];
      (*grad)[no + 6 * v + 3 + a] += d_origin[k][a];
    }
  }
  return total;
}

StepLog Trainer::step() {
  const Batch batch = sample_batch();
  std::vector<double> grad;
  LossParts parts;
  const double total = evaluate(batch, &grad, &parts);
  for (double g : grad) require_finite(g, "gradient");
  const double lr = lr_schedule(iter_, cfg_);
  std::vector<double> p = parameters();
  adam_.step(p, grad, lr, lr_scale_);
  for (double x : p) require_finite(x, "parameters");
  set_parameters(p);
  StepLog log{iter_, lr, parts, total, parts.color > 1e-10 ? -10.0 * std::log10(parts.color) : 100.0};
  history_.push_back(log);
  ++iter_;
  return log;
}

void Trainer::train(int iterations) {
  for (int i = 0; i < iterations; ++i) step();
}

io::Checkpoint Trainer::checkpoint() const {
  io::Checkpoint c;
  const FieldConfig& f = field_.config();
  c.header["field.density_layers"] = std::to_string(f.density_layers);
  c.header["field.density_width"] = std::to_string(f.density_width);
  c.header["field.color_layers"] = std::to_string(f.color_layers);
  c.header["field.color_width"] = std::to_string(f.color_width);
  c.header["field.pos_levels"] = std::to_string(f.pos_levels);
  c.header["field.dir_levels"] = std::to_string(f.dir_levels);
  c.header["field.seed"] = std::to_string(f.seed);
  c.header["mode"] = cfg_.mode == SceneMode::kForeground ? "foreground" : "background";
  c.header["radius"] = fmt(cfg_.radius);
  c.header["near"] = fmt(cfg_.near);
  c.header["far"] = fmt(cfg_.far);
  c.header["iteration"] = std::to_string(iter_);
  c.header["confidence.logits"] = join(conf_.logits);
  c.header["views"] = std::to_string(offsets_.size());
  for (size_t v = 0; v < offsets_.size(); ++v) {
    const auto& o = offsets_[v];
    const double vals[6] = {o.delta_rotation.x(),    o.delta_rotation.y(),    o.delta_rotation.z(),
                            o.delta_translation.x(), o.delta_translation.y(), o.delta_translation.z()};
    c.header["pose_offset." + std::to_string(v)] = join(vals);
  }
  const auto p = field_.parameters();
  c.blob.assign(p.begin(), p.end());
  return c;
}

FieldConfig field_config_from(const io::Checkpoint& ckpt) {
  FieldConfig f;
  f.density_layers = header_int(ckpt, "field.density_layers");
  f.density_width = header_int(ckpt, "field.density_width");
  f.color_layers = header_int(ckpt, "field.color_layers");
  f.color_width = header_int(ckpt, "field.color_width");
  f.pos_levels = header_int(ckpt, "field.pos_levels");
  f.dir_levels = header_int(ckpt, "field.dir_levels");
  try {
    f.seed = std::stoull(header_value(ckpt, "field.seed"));
  } catch (const std::logic_error&) {
    throw IoError("checkpoint: bad field seed");
  }
  return f;
}

RadianceField field_from_checkpoint(const io::Checkpoint& ckpt, const FieldConfig* expected) {
  const FieldConfig f = field_config_from(ckpt);
  if (expected && !(*expected == f)) throw ArchitectureMismatch("checkpoint field architecture differs from config");
  if (f.density_layers < 1 || f.density_width < 1 || f.color_layers < 0 || f.color_width < 1 ||
      f.pos_levels < 0 || f.dir_levels < 0 || f.density_width > 4096 || f.color_width > 4096 ||
      f.density_layers > 64 || f.color_layers > 64 || f.pos_levels > 32 || f.dir_levels > 32)
    throw IoError("checkpoint: implausible field architecture");
  RadianceField field(f);
  if (ckpt.blob.size() != field.parameter_count())
    throw ArchitectureMismatch("checkpoint holds " + std::to_string(ckpt.blob.size()) + " parameters, architecture needs " +
                               std::to_string(field.parameter_count()));
  auto p = field.parameters();
  for (size_t i = 0; i < p.size(); ++i) p[i] = ckpt.blob[i];
  return field;
}

void Trainer::restore(const io::Checkpoint& ckpt) {
  const FieldConfig expected = field_.config();
  field_ = field_from_checkpoint(ckpt, &expected);
  const auto logits = split_doubles(header_value(ckpt, "confidence.logits"));
  if (logits.size() != conf_.logits.size()) throw ArchitectureMismatch("checkpoint confidence component count differs");
  conf_.logits = logits;
  if (header_int(ckpt, "views") != static_cast<int>(offsets_.size()))
    throw ArchitectureMismatch("checkpoint view count differs");
  for (size_t v = 0; v < offsets_.size(); ++v) {
    const auto o = split_doubles(header_value(ckpt, "pose_offset." + std::to_string(v)));
    if (o.size() != 6) throw IoError("checkpoint: bad pose offset");
    offsets_[v].delta_rotation = Vec3(o[0], o[1], o[2]);
    offsets_[v].delta_translation = Vec3(o[3], o[4], o[5]);
  }
  iter_ = header_int(ckpt, "iteration");
}

std::string format_log_csv(std::span<const StepLog> log) {
  std::ostringstream os;
  os << "iteration,lr,L_color,L_depth,L_smooth,PSNR\n";
  char buf[256];
  for (const auto& l : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.6f\n", l.iteration, l.lr, l.loss.color, l.loss.depth,
                  l.loss.smooth, l.psnr);
    os << buf;
  }
  return os.str();
}

}  // namespace snerf
