// Acceptance harness: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the numbered ones. Exit status is nonzero when
// any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "cli.hpp"
#include "snerf/confidence.hpp"
#include "snerf/config.hpp"
#include "snerf/dataset.hpp"
#include "snerf/errors.hpp"
#include "snerf/field.hpp"
#include "snerf/geometry.hpp"
#include "snerf/parameterization.hpp"
#include "snerf/pipeline.hpp"
#include "snerf/random.hpp"
#include "snerf/render.hpp"
#include "snerf/scenegen.hpp"
#include "snerf/train.hpp"

namespace fs = std::filesystem;
using namespace snerf;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects named checks; the first few failures end up in the detail line.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_.size() < 4) failures_.push_back(what);
    ++failed_;
  }
  void note(const std::string& s) { notes_.push_back(s); }
  Outcome outcome() const {
    Outcome o;
    o.pass = failed_ == 0;
    std::string s;
    for (const auto& n : notes_) s += (s.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + ("FAILED " + f);
    if (failed_ > static_cast<int>(failures_.size()))
      s += "; " + std::to_string(failed_ - failures_.size()) + " more failures";
    o.detail = s;
    return o;
  }

 private:
  std::vector<std::string> failures_, notes_;
  int failed_ = 0;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

Vec3 random_vec(Rng& rng, double s = 1.0) {
  return {rng.uniform(-s, s), rng.uniform(-s, s), rng.uniform(-s, s)};
}

Pose random_pose(Rng& rng, double scale = 10.0) {
  Eigen::Quaterniond q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  q.normalize();
  return {q.toRotationMatrix(), random_vec(rng, scale)};
}

double max_abs(const Mat4& m) { return m.cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------------------

Outcome geometry_suite() {
  Checks c;
  Rng rng(101);
  double inv_err = 0, comp_err = 0, virt_err = 0, proj_err = 0;
  for (int i = 0; i < 10000; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), d = random_pose(rng);
    inv_err = std::max(inv_err, max_abs(compose(a, pose_inverse(a)).matrix() - Mat4::Identity()));
    inv_err = std::max(inv_err, max_abs(pose_inverse(pose_inverse(a)).matrix() - a.matrix()));
    comp_err = std::max(comp_err, max_abs(compose(a, b).matrix() - a.matrix() * b.matrix()));
    comp_err = std::max(comp_err, max_abs(compose(compose(a, b), d).matrix() - compose(a, compose(b, d)).matrix()));

    // camera and object poses given world-to-local; the virtual camera is the
    // camera expressed relative to the object, in both algebraic forms
    const Pose cam_w2c = random_pose(rng), obj_w2o = random_pose(rng);
    const Mat4 v_matrix = obj_w2o.matrix() * cam_w2c.matrix().inverse();
    const Pose v = virtual_camera_pose(cam_w2c, obj_w2o);
    virt_err = std::max(virt_err, max_abs(v.matrix() - v_matrix));
    virt_err = std::max(virt_err, max_abs(v.matrix() - compose(obj_w2o, pose_inverse(cam_w2c)).matrix()));
  }
  const Intrinsics intr{300, 280, 159.5, 119.5, 320, 240};
  for (int i = 0; i < 10000; ++i) {
    const Pose cam = random_pose(rng);
    const PixelSample px{rng.uniform(0, 319), rng.uniform(0, 239), rng.uniform(0.1, 80)};
    const Vec3 x = unproject(px, intr, cam);
    const Projection p = project(x, intr, cam);
    proj_err = std::max({proj_err, std::abs(p.pixel.u - px.u), std::abs(p.pixel.v - px.v),
                         std::abs(p.pixel.d - px.d) / px.d});
    c.expect(p.in_frame, "round-trip pixel left the frame");
    const Pose other = compose(cam, Pose{Mat3::Identity(), random_vec(rng, 0.5)});
    if (auto q = try_reproject(px, cam, other, intr)) {
      const Projection back = reproject(q->pixel, other, cam, intr);
      proj_err = std::max({proj_err, std::abs(back.pixel.u - px.u), std::abs(back.pixel.v - px.v),
                           std::abs(back.pixel.d - px.d) / px.d});
    }
  }
  c.expect(inv_err <= 1e-12, "inverse round trip " + fmt("%.2e", inv_err));
  c.expect(comp_err <= 1e-12, "compose " + fmt("%.2e", comp_err));
  c.expect(virt_err <= 1e-12, "virtual camera forms " + fmt("%.2e", virt_err));
  c.expect(proj_err <= 1e-9, "projection round trip " + fmt("%.2e", proj_err));
  c.note("inverse " + fmt("%.1e", inv_err) + ", compose " + fmt("%.1e", comp_err) + ", virtual " +
         fmt("%.1e", virt_err) + ", projection " + fmt("%.1e", proj_err));
  return c.outcome();
}

Outcome contraction_suite() {
  Checks c;
  Rng rng(102);
  double max_norm = 0, boundary = 0, direction = 0;
  for (double r : {1.0, 3.0, 5.0, 10.0}) {
    const ContractionConfig cfg{r};
    for (int i = 0; i < 100000; ++i) {
      // log-uniform magnitudes cover the linear region and the far tail
      const Vec3 dir = random_vec(rng).normalized();
      const double mag = r * std::pow(10.0, rng.uniform(-3, 6));
      const Vec3 x = mag * dir;
      const Vec3 y = contract(x, cfg);
      max_norm = std::max(max_norm, y.norm());
      c.expect(y.norm() < 2.0, "norm >= 2 at r=" + fmt("%g", r));
      direction = std::max(direction, (y.normalized() - dir).cwiseAbs().maxCoeff());
    }
    const double eps = 1e-6;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 dir = random_vec(rng).normalized();
      boundary = std::max(boundary, (contract((r - eps) * dir, cfg) - contract((r + eps) * dir, cfg)).norm());
    }
  }
  c.expect(boundary <= 1e-5, "boundary continuity " + fmt("%.2e", boundary));
  c.expect(direction <= 1e-9, "direction " + fmt("%.2e", direction));
  c.note("max |f| " + fmt("%.12f", max_norm) + ", boundary gap " + fmt("%.1e", boundary) + ", direction " +
         fmt("%.1e", direction));
  return c.outcome();
}

RaySample sample(double t, double delta, double sigma, const Vec3& color) { return {t, delta, {color, sigma}}; }

std::vector<RaySample> random_samples(Rng& rng, int n) {
  std::vector<RaySample> s;
  double t = rng.uniform(0.2, 1.0);
  for (int i = 0; i < n; ++i) {
    const double delta = rng.uniform(0.01, 0.5);
    s.push_back(sample(t, delta, rng.uniform(0, 3), Vec3(rng.uniform(), rng.uniform(), rng.uniform())));
    t += delta;
  }
  return s;
}

Outcome rendering_suite() {
  Checks c;
  Rng rng(103);
  double tele = 0, split = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto s = random_samples(rng, 1 + static_cast<int>(rng.below(128)));
    const RenderResult r = composite(s, 200.0);
    double tau = 0, sum = 0;
    for (size_t i = 0; i < s.size(); ++i) {
      tau += s[i].output.density * s[i].delta;
      sum += r.weights[i];
    }
    tele = std::max(tele, std::abs(sum - (1.0 - std::exp(-tau))));
  }
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_samples(rng, 16);
    const size_t k = rng.below(s.size());
    std::vector<RaySample> halves;
    for (size_t i = 0; i < s.size(); ++i) {
      if (i != k) {
        halves.push_back(s[i]);
        continue;
      }
      RaySample a = s[i], b = s[i];
      a.delta = b.delta = s[i].delta / 2;
      b.t = s[i].t + a.delta;
      halves.push_back(a);
      halves.push_back(b);
    }
    const RenderResult r1 = composite(s, 100.0), r2 = composite(halves, 100.0);
    split = std::max(split, (r1.color - r2.color).cwiseAbs().maxCoeff());
    split = std::max(split, std::abs(r1.weights[k] - r2.weights[k] - r2.weights[k + 1]));
  }
  c.expect(tele <= 1e-9, "telescoping " + fmt("%.2e", tele));
  c.expect(split <= 1e-9, "bin splitting " + fmt("%.2e", split));

  // a single sample of huge density: alpha rounds to exactly 1
  const Vec3 col(0.2, 0.7, 0.4);
  const std::vector<RaySample> opaque{sample(3.0, 1.0, 1e3, col)};
  const RenderResult ro = composite(opaque, 100.0);
  c.expect(ro.color == col && ro.weights[0] == 1.0 && ro.depth == 3.0 && ro.opacity == 1.0, "opaque delta");
  const std::vector<RaySample> vacuum{sample(1, 1, 0, col), sample(2, 1, 0, col), sample(3, 7, 0, col)};
  const RenderResult rv = composite(vacuum, 10.0);
  c.expect(rv.color == Vec3::Zero() && rv.opacity == 0.0 && rv.depth == 10.0, "vacuum");

  double brute = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec3 c1(rng.uniform(), rng.uniform(), rng.uniform()), c2(rng.uniform(), rng.uniform(), rng.uniform());
    const double s1 = rng.uniform(0, 4), s2 = rng.uniform(0, 4), d1 = rng.uniform(0.05, 2), d2 = rng.uniform(0.05, 2);
    const double t1 = rng.uniform(0.2, 3);
    const std::vector<RaySample> s{sample(t1, d1, s1, c1), sample(t1 + d1, d2, s2, c2)};
    const RenderResult r = composite(s, 50.0);
    const double w1 = 1.0 - std::exp(-s1 * d1);
    const double w2 = std::exp(-s1 * d1) * (1.0 - std::exp(-s2 * d2));
    brute = std::max({brute, (r.color - (w1 * c1 + w2 * c2)).cwiseAbs().maxCoeff(), std::abs(r.weights[0] - w1),
                      std::abs(r.weights[1] - w2)});
  }
  c.expect(brute <= 1e-12, "two-sample oracle " + fmt("%.2e", brute));
  c.note("telescoping " + fmt("%.1e", tele) + ", splitting " + fmt("%.1e", split) + ", two-sample " +
         fmt("%.1e", brute));
  return c.outcome();
}

// ---------------------------------------------------------------------------

FieldConfig tiny_field() {
  FieldConfig f;
  f.density_layers = 1;
  f.density_width = 6;
  f.color_layers = 1;
  f.color_width = 4;
  f.pos_levels = 1;
  f.dir_levels = 1;
  f.seed = 3;
  return f;
}

/// Central-difference check of every coordinate; returns the worst relative error.
double check_gradient(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
                      const std::vector<double>& g, double h, double floor, double tol, int& bad) {
  double worst = 0;
  for (size_t k = 0; k < x.size(); ++k) {
    auto q = x;
    q[k] = x[k] + h;
    const double lp = f(q);
    q[k] = x[k] - h;
    const double lm = f(q);
    const double e = rel_err(g[k], (lp - lm) / (2 * h), floor);
    worst = std::max(worst, e);
    bad += e >= tol;
  }
  return worst;
}

Outcome gradient_suite() {
  Checks c;
  Rng rng(104);

  // full trainer on a tiny crop of the street toy: field, logits and offsets
  RunConfig run;
  run.field = tiny_field();
  const Capture cap = capture_from_scene(street_toy(7));
  const PreparedDepth depth = prepare_depth(cap, run);
  int components = 0;
  double worst_trainer = 0;
  size_t trainer_params = 0;
  for (SceneMode mode : {SceneMode::kBackground, SceneMode::kForeground}) {
    TrainConfig tc = mode == SceneMode::kForeground ? TrainConfig::foreground() : TrainConfig{};
    tc.n_samples = 8;
    tc.batch_rays = 8;
    tc.patch_size = 3;
    tc.lambda_depth = 0.5;
    tc.lambda_smooth = 0.3;
    tc.near = 0.5;
    tc.far = 40.0;
    tc.radius = 3.0;
    tc.seed = 5;
    if (mode == SceneMode::kForeground) tc.radius = 12.0;
    const std::vector<TrainView> views = build_train_views(cap, depth, run, components);
    Trainer tr(tc, tiny_field(), views, components);
    std::vector<double> p = tr.parameters();
    const size_t tail = components + 6 * views.size();
    for (size_t i = p.size() - tail; i < p.size(); ++i) p[i] = rng.uniform(-0.02, 0.02);
    tr.set_parameters(p);
    const Batch batch = tr.sample_batch();
    std::vector<double> g;
    LossParts parts;
    tr.evaluate(batch, &g, &parts);
    c.expect(parts.depth > 0 && parts.smooth > 0, "tiny batch exercises every loss term");
    int bad = 0;
    worst_trainer = std::max(worst_trainer, check_gradient(
                                                [&](const std::vector<double>& q) {
                                                  tr.set_parameters(q);
                                                  return tr.evaluate(batch);
                                                },
                                                p, g, 1e-6, 1e-6, 1e-3, bad));
    trainer_params += p.size();
    c.expect(bad == 0, std::to_string(bad) + " trainer parameters off");
  }

  // module level: field, compositing, confidence combination, contraction
  double worst_module = 0;
  int bad = 0;
  RadianceField field(tiny_field());
  for (int trial = 0; trial < 4; ++trial) {
    const Vec3 x = random_vec(rng), d = random_vec(rng).normalized();
    FieldOutputGrad up;
    up.d_density = rng.uniform(-1, 1);
    up.d_color = random_vec(rng);
    const FieldGradient fg = eval_with_grad(field, x, d, up);
    const std::vector<double> p0(field.parameters().begin(), field.parameters().end());
    worst_module = std::max(worst_module, check_gradient(
                                              [&](const std::vector<double>& q) {
                                                std::copy(q.begin(), q.end(), field.parameters().begin());
                                                const FieldOutput o = field.eval(x, d);
                                                return up.d_density * o.density + up.d_color.dot(o.color);
                                              },
                                              p0, fg.params, 1e-5, 1e-7, 1e-4, bad));
    std::copy(p0.begin(), p0.end(), field.parameters().begin());
  }
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_samples(rng, 12);
    const Vec3 dc = random_vec(rng);
    const double dd = rng.uniform(-1, 1);
    const CompositeGrad cg = composite_backward(s, composite(s, 60.0), dc, dd);
    std::vector<double> x, g;
    for (size_t i = 0; i < s.size(); ++i) {
      x.push_back(s[i].output.density);
      g.push_back(cg.d_sigma[i]);
      for (int k = 0; k < 3; ++k) {
        x.push_back(s[i].output.color[k]);
        g.push_back(cg.d_color[i][k]);
      }
    }
    worst_module = std::max(worst_module, check_gradient(
                                              [&](const std::vector<double>& q) {
                                                auto t = s;
                                                for (size_t i = 0; i < t.size(); ++i) {
                                                  t[i].output.density = q[4 * i];
                                                  for (int k = 0; k < 3; ++k) t[i].output.color[k] = q[4 * i + 1 + k];
                                                }
                                                const RenderResult r = composite(t, 60.0);
                                                return dc.dot(r.color) + dd * r.depth;
                                              },
                                              x, g, 1e-6, 1e-7, 1e-4, bad));
  }
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> vals(5), logits(5), grad(5);
    std::vector<std::uint8_t> valid(5);
    for (int k = 0; k < 5; ++k) {
      vals[k] = rng.uniform();
      logits[k] = rng.uniform(-2, 2);
      valid[k] = rng.uniform() < 0.8;
    }
    valid[0] = 1;
    double out = 0;
    combine_pixel(vals, valid, logits, out, grad);
    worst_module = std::max(worst_module, check_gradient(
                                              [&](const std::vector<double>& q) {
                                                double r = 0;
                                                combine_pixel(vals, valid, q, r);
                                                return r;
                                              },
                                              logits, grad, 1e-6, 1e-7, 1e-4, bad));
  }
  for (int trial = 0; trial < 200; ++trial) {
    const ContractionConfig cfg{rng.uniform(1, 10)};
    const Vec3 x = random_vec(rng, 4 * cfg.radius);
    const Mat3 j = contract_jacobian(x, cfg);
    for (int row = 0; row < 3; ++row) {
      const std::vector<double> x0{x[0], x[1], x[2]};
      const std::vector<double> g{j(row, 0), j(row, 1), j(row, 2)};
      worst_module = std::max(worst_module, check_gradient(
                                                [&](const std::vector<double>& q) {
                                                  return contract(Vec3(q[0], q[1], q[2]), cfg)[row];
                                                },
                                                x0, g, 1e-6, 1e-6, 1e-4, bad));
    }
  }
  c.expect(bad == 0, std::to_string(bad) + " module gradients off");
  c.note(std::to_string(trainer_params) + " trainer scalars, worst rel err " + fmt("%.1e", worst_trainer) +
         "; modules worst " + fmt("%.1e", worst_module));
  return c.outcome();
}

// ---------------------------------------------------------------------------

double mean_valid(const ScalarMap& m, const Mask* only = nullptr) {
  double s = 0;
  size_t n = 0;
  for (size_t i = 0; i < m.values.size(); ++i) {
    if (!m.valid[i] || (only && !(*only)[i])) continue;
    s += m.values[i];
    ++n;
  }
  return n ? s / double(n) : std::nan("");
}

Capture static_toy() {
  SceneOracle scene = street_toy(7);
  std::erase_if(scene.primitives, [](const Primitive& p) { return p.dynamic; });
  return capture_from_scene(scene);
}

Outcome confidence_suite() {
  Checks c;
  Rng rng(105);
  for (double tau : {0.1, 0.2, 0.4}) {
    c.expect(gamma(0.0, tau) == 1.0 && gamma(tau, tau) == 0.0 && gamma(3 * tau, tau) == 0.0, "gamma endpoints");
    for (int i = 0; i < 1000; ++i) {
      const double x = rng.uniform(0, tau);
      c.expect(gamma(x, tau) == 1.0 - x / tau, "gamma linear");
    }
  }
  double simplex = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> l(1 + rng.below(8));
    for (auto& v : l) v = rng.uniform(-30, 30);
    const auto w = softmax(l);
    double s = 0;
    for (double v : w) {
      s += v;
      c.expect(v >= 0, "softmax weight negative");
    }
    simplex = std::max(simplex, std::abs(s - 1.0));
  }
  c.expect(simplex <= 1e-12, "softmax simplex " + fmt("%.2e", simplex));

  // fuzz: random depths and images over the toy rig
  const Capture cap = capture_from_scene(street_toy(7));
  const std::vector<int> frames{0, 2, 4};
  size_t checked = 0;
  for (int trial = 0; trial < 6; ++trial) {
    Capture fz = cap;
    std::vector<DepthMap> depths;
    for (auto& v : fz.views) {
      for (auto& p : v.rgb.data()) p = Rgb(float(rng.uniform()), float(rng.uniform()), float(rng.uniform()));
      DepthMap d(v.intr.width, v.intr.height);
      for (int y = 0; y < d.height(); ++y)
        for (int x = 0; x < d.width(); ++x)
          if (rng.uniform() < 0.9) d.set(x, y, float(std::exp(rng.uniform(-2, 4))));
      depths.push_back(d);
    }
    ConfidenceConfig cfg;
    cfg.tau = rng.uniform(0.05, 0.5);
    const int view = fz.index(frames[rng.below(3)], static_cast<int>(rng.below(3)));
    auto maps = view_confidence(fz, depths, view, frames, cfg);
    ConfidenceWeights w(maps.size());
    for (auto& l : w.logits) l = rng.uniform(-3, 3);
    maps.push_back(combine(maps, w));
    for (const auto& m : maps)
      for (size_t i = 0; i < m.values.size(); ++i) {
        if (!m.valid[i]) continue;
        ++checked;
        c.expect(m.values[i] >= 0.f && m.values[i] <= 1.f, "map value outside [0,1]");
      }
  }

  // oracle-consistent inputs: ground-truth depth of a static scene
  const Capture st = static_toy();
  std::vector<DepthMap> gt;
  for (const auto& v : st.views) gt.push_back(v.gt_depth);
  double sum = 0;
  int n = 0;
  double worst_geom = 0;
  size_t corrupted_px = 0;
  for (int f : frames)
    for (int cam = 0; cam < st.cameras; ++cam) {
      const int view = st.index(f, cam);
      const auto maps = view_confidence(st, gt, view, frames, ConfidenceConfig{});
      const ConfidenceMap comb = combine(maps, ConfidenceWeights(maps.size()));
      sum += mean_valid(comb);
      ++n;

      // outliers pushed past tau (depth doubled) in the source view
      std::vector<DepthMap> bad = gt;
      Mask outliers;
      bad[view] = corrupt_depth(gt[view], 0.0, 0.2, 2.0, 900 + view, &outliers);
      ConfidenceConfig geo;
      geo.components = {ConfidenceComponent::kDepth};
      const auto g = view_confidence(st, bad, view, frames, geo);
      const double m = mean_valid(g[0], &outliers);
      for (size_t i = 0; i < outliers.data().size(); ++i) corrupted_px += outliers.data()[i] && g[0].valid[i];
      if (!std::isnan(m)) worst_geom = std::max(worst_geom, m);
    }
  const double combined = sum / n;
  c.expect(combined > 0.95, "oracle combined confidence " + fmt("%.4f", combined));
  c.expect(worst_geom < 0.1, "geometry confidence on outliers " + fmt("%.4f", worst_geom));
  c.expect(corrupted_px > 1000, "too few outlier pixels scored");
  c.note("oracle combined " + fmt("%.4f", combined) + ", outlier geometry (worst view mean) " +
         fmt("%.4f", worst_geom) + " over " + std::to_string(corrupted_px) + " px, fuzzed " +
         std::to_string(checked) + " values, simplex " + fmt("%.1e", simplex));
  return c.outcome();
}

Outcome outlier_suite() {
  Checks c;
  RunConfig cfg;
  const Capture cap = capture_from_scene(load_scene(cfg));
  FusionStats total;
  for (int f : cfg.train_frames)
    for (int cam = 0; cam < cap.cameras; ++cam) {
      const FusedView fv = fuse_view(cap, cap.index(f, cam), cfg.train_frames, cfg.fusion);
      total.dynamic += fv.stats.dynamic;
      total.dynamic_removed += fv.stats.dynamic_removed;
      total.static_points += fv.stats.static_points;
      total.static_removed += fv.stats.static_removed;
    }
  const double dyn = double(total.dynamic_removed) / double(std::max<size_t>(1, total.dynamic));
  const double sta = double(total.static_removed) / double(std::max<size_t>(1, total.static_points));
  c.expect(total.dynamic > 100, "too few dynamic points");
  c.expect(dyn >= 0.9, "dynamic removed " + fmt("%.4f", dyn));
  c.expect(sta <= 0.02, "static removed " + fmt("%.4f", sta));
  c.note("threshold " + fmt("%.2f", cfg.fusion.flow_threshold) + ", dynamic removed " +
         std::to_string(total.dynamic_removed) + "/" + std::to_string(total.dynamic) + " (" +
         fmt("%.1f%%", 100 * dyn) + "), static removed " + std::to_string(total.static_removed) + "/" +
         std::to_string(total.static_points) + " (" + fmt("%.2f%%", 100 * sta) + ")");
  return c.outcome();
}

// ---------------------------------------------------------------------------

// Desk-scale training setup shared by the ablation criteria.
const char* kAblationConfig = R"(
field.density_layers = 2
field.density_width = 32
field.color_layers = 1
field.color_width = 32
field.pos_levels = 4
train.n_samples = 32
train.batch_rays = 128
train.iterations = 2500
train.lr_start = 1e-2
train.lr_end = 1e-4
corrupt.outlier_rate = 0.2
corrupt.outlier_scale = 2
ablate.seeds = 0,1,2
)";

RunConfig ablation_config() {
  Config cfg;
  cfg.load_text(kAblationConfig);
  if (const char* extra = std::getenv("SNERF_ACCEPTANCE_SET")) {
    std::istringstream in(extra);
    for (std::string kv; std::getline(in, kv, ';');)
      if (!kv.empty()) cfg.set(kv);
  }
  return cfg.resolve();
}

void log_progress(const std::string& s) { std::fprintf(stderr, "  %s\n", s.c_str()); }

Outcome ablation_ordering() {
  Checks c;
  RunConfig cfg = ablation_config();
  cfg.ablate_variants = {"dense-confidence", "dense", "rgb-only"};
  const Capture cap = capture_from_scene(load_scene(cfg));
  const AblationTable t = run_ablation(cap, cfg, log_progress);
  const double with = median(t.rows[0].psnr), without = median(t.rows[1].psnr), rgb = median(t.rows[2].psnr);
  c.expect(with - without >= 0.3, "with - without confidence " + fmt("%+.3f dB", with - without));
  c.expect(with - rgb >= 0.3, "with confidence - rgb-only " + fmt("%+.3f dB", with - rgb));
  c.note("median psnr: with confidence " + fmt("%.3f", with) + ", without " + fmt("%.3f", without) +
         ", rgb-only " + fmt("%.3f", rgb));
  return c.outcome();
}

Outcome tau_insensitivity() {
  Checks c;
  RunConfig cfg = ablation_config();
  cfg.ablate_variants = {"dense-confidence"};
  cfg.ablate_taus = {0.1, 0.2, 0.4};
  const Capture cap = capture_from_scene(load_scene(cfg));
  const AblationTable t = run_ablation(cap, cfg, log_progress);
  std::vector<double> med;
  std::string s = "median psnr per tau:";
  for (const auto& row : t.rows) {
    med.push_back(median(row.psnr));
    s += " " + fmt("%.2g", row.tau) + "=" + fmt("%.3f", med.back());
    c.expect(row.error.empty(), "run failed: " + row.error);
  }
  const double spread = *std::max_element(med.begin(), med.end()) - *std::min_element(med.begin(), med.end());
  c.expect(spread <= 0.5, "spread " + fmt("%.3f dB", spread));
  c.note(s + ", spread " + fmt("%.3f dB", spread));
  return c.outcome();
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Files under `dir` (relative paths) mapped to their bytes.
std::vector<std::pair<std::string, std::string>> tree(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism() {
  Checks c;
  const fs::path root = fs::temp_directory_path() / ("snerf_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::string> fast = {"--set", "train.iterations=30",     "--set", "train.n_samples=16",
                                         "--set", "train.batch_rays=32",      "--set", "field.density_width=16",
                                         "--set", "field.color_width=16",     "--set", "field.density_layers=1",
                                         "--set", "corrupt.outlier_rate=0.2", "--set", "train.log_every=1"};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), fast.begin(), fast.end());
    return a;
  };
  for (const char* run : {"a", "b"}) {
    const std::string ds = (root / run / "ds").string();
    std::ostringstream out, err;
    for (const auto& args : {with({"gen", "--out", ds}), with({"fuse", ds}), with({"confidence", ds}),
                             with({"train", ds, "--out", (root / run / "train").string()})}) {
      const int code = cli::run(args, out, err);
      c.expect(code == cli::kOk, args[0] + " exited " + std::to_string(code) + ": " + err.str());
    }
  }
  size_t files = 0;
  for (const char* sub : {"ds", "train"}) {
    const auto a = tree(root / "a" / sub), b = tree(root / "b" / sub);
    c.expect(a.size() == b.size() && !a.empty(), std::string(sub) + " file sets differ");
    for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      c.expect(a[i].first == b[i].first, "file names differ: " + a[i].first);
      c.expect(a[i].second == b[i].second, "bytes differ: " + std::string(sub) + "/" + a[i].first);
      ++files;
    }
  }
  c.expect(fs::exists(root / "a" / "ds" / "fuse") && fs::exists(root / "a" / "ds" / "confidence") &&
               fs::exists(root / "a" / "train" / "log.csv"),
           "expected outputs missing");
  c.note(std::to_string(files) + " files byte-identical across two runs (dataset, fused depth, confidence, "
                                 "training log and checkpoint)");
  std::error_code ec;
  fs::remove_all(root, ec);
  return c.outcome();
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "geometry", geometry_suite},
    {2, "contraction", contraction_suite},
    {3, "rendering identities", rendering_suite},
    {4, "gradient checks", gradient_suite},
    {5, "confidence", confidence_suite},
    {6, "outlier removal", outlier_suite},
    {7, "ablation ordering", ablation_ordering},
    {8, "tau insensitivity", tau_insensitivity},
    {9, "determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    char* end = nullptr;
    const long v = std::strtol(argv[i], &end, 10);
    if (*end || v < 1 || v > 9) {
      std::fprintf(stderr, "usage: %s [criterion 1-9]...\n", argv[0]);
      return 2;
    }
    selected.push_back(static_cast<int>(v));
  }
  bool all_pass = true;
  for (const Criterion& cr : kCriteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), cr.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d (%s): %s (%s; %.1f s)\n", cr.id, cr.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                secs);
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
