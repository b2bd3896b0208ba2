#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snerf/confidence.hpp"
#include "snerf/field.hpp"
#include "snerf/io.hpp"
#include "snerf/random.hpp"
#include "snerf/render.hpp"

namespace snerf {

struct TrainConfig {
  SceneMode mode = SceneMode::kBackground;
  double lambda_depth = 0.2;
  double lambda_smooth = 0.01;
  double tau = 0.2;
  double radius = 3.0;
  double near = 0.2;
  double far = 120.0;
  int n_samples = 128;
  int batch_rays = 512;
  int patch_size = 8;
  int iterations = 1000;
  double lr_start = 5e-4;
  double lr_end = 5e-6;
  int warmup_iters = 50;
  /// Learning-rate multipliers for the confidence logits and pose offsets.
  double confidence_lr_scale = 1.0;
  double pose_lr_scale = 0.1;
  bool optimize_poses = true;
  std::uint64_t seed = 0;

  /// Foreground defaults: lambda_depth 1, lambda_smooth 0.15, uniform bins.
  static TrainConfig foreground();
  /// Throws InvalidArgument when an invariant does not hold.
  void validate() const;
  RenderConfig render_config() const;
};

struct LossParts {
  double color = 0.0;
  double depth = 0.0;
  double smooth = 0.0;
};

/// Mean squared error over every channel of the batch. `grad` receives
/// d/d(rendered).
double loss_color(std::span<const Vec3> rendered, std::span<const Vec3> target,
                  std::vector<Vec3>* grad = nullptr);

/// Confidence-weighted mean absolute depth error over the batch, compared in
/// disparity (1/z) in background mode and in depth in foreground mode.
double loss_depth(std::span<const double> rendered, std::span<const double> supervised,
                  std::span<const double> conf, SceneMode mode, std::vector<double>* d_rendered = nullptr,
                  std::vector<double>* d_conf = nullptr);

/// Edge-aware smoothness of a rendered patch, mean over patch pixels of
/// |dx D| e^{-|dx I|} + |dy D| e^{-|dy I|} with forward differences. `mask`
/// (optional) drops differences touching unmasked pixels.
double loss_smooth(const Grid<double>& depth, const RgbImage& image, Grid<double>* grad = nullptr,
                   const Mask* mask = nullptr);

double total_loss(const LossParts& parts, const TrainConfig& cfg);

/// Linear warm-up to lr_start, then log-linear decay to lr_end.
double lr_schedule(int iter, const TrainConfig& cfg);

class Adam {
 public:
  Adam(size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  /// One update with per-element learning-rate scale (empty: all 1).
  void step(std::span<double> params, std::span<const double> grad, double lr,
            std::span<const double> scale = {});
  int steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<double> m_, v_;
};

/// PSNR in dB, capped at 100 for MSE < 1e-10. `mask` restricts the pixels.
double psnr(const RgbImage& a, const RgbImage& b, const Mask* mask = nullptr);
/// Mean SSIM on luma (7x7 box window).
double ssim_metric(const RgbImage& a, const RgbImage& b);

/// One calibrated training image with its supervision.
struct TrainView {
  Intrinsics intr;
  Pose pose;              // camera-to-world (object frame in foreground mode)
  RgbImage rgb;
  DepthMap depth;         // camera z; empty for RGB-only
  /// Confidence components. Empty means Ĉ = 1 wherever depth is valid.
  std::vector<ConfidenceMap> confidence;
  Mask mask;              // empty means every pixel is supervised
};

struct RayRef {
  int view = 0;
  int x = 0;
  int y = 0;
  RaySamples samples;
};

/// A fixed ray batch: the first patch_w * patch_h rays form the smoothness
/// patch (row-major) and only enter the smoothness term; the remaining
/// batch_rays random pixels carry the color and depth terms.
struct Batch {
  std::vector<RayRef> rays;
  int patch_w = 0;
  int patch_h = 0;
};

struct StepLog {
  int iteration = 0;
  double lr = 0.0;
  LossParts loss;
  double total = 0.0;
  double psnr = 0.0;
};

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const FieldConfig& field_cfg, std::vector<TrainView> views,
          int confidence_components);

  Batch sample_batch();
  /// Loss of a fixed batch; fills the gradient over parameters() when asked.
  double evaluate(const Batch& batch, std::vector<double>* grad = nullptr, LossParts* parts = nullptr);
  StepLog step();
  void train(int iterations);

  /// Flat trainable state: field parameters, confidence logits, then six
  /// values per view (rotation, translation).
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> p);
  size_t parameter_count() const;

  const TrainConfig& config() const { return cfg_; }
  const RadianceField& field() const { return field_; }
  RadianceField& field() { return field_; }
  const ConfidenceWeights& confidence_weights() const { return conf_; }
  const std::vector<PoseOffset>& pose_offsets() const { return offsets_; }
  Pose refined_pose(int view) const;
  const std::vector<TrainView>& views() const { return views_; }
  const std::vector<StepLog>& history() const { return history_; }
  int iteration() const { return iter_; }

  io::Checkpoint checkpoint() const;
  /// Restores field, logits and offsets. Throws ArchitectureMismatch when the
  /// checkpoint disagrees with this trainer's configuration.
  void restore(const io::Checkpoint& ckpt);

 private:
  double confidence_at(const TrainView& v, int x, int y, std::vector<double>* grad) const;
  bool supervised(const TrainView& v, int x, int y) const;

  TrainConfig cfg_;
  RadianceField field_;
  std::vector<TrainView> views_;
  ConfidenceWeights conf_;
  std::vector<PoseOffset> offsets_;
  Adam adam_;
  std::vector<double> lr_scale_;
  Rng rng_;
  int iter_ = 0;
  std::vector<std::pair<int, int>> pixels_;  // (view, flat pixel) pool for random rays
  std::vector<StepLog> history_;
};

/// CSV with header iteration,lr,L_color,L_depth,L_smooth,PSNR.
std::string format_log_csv(std::span<const StepLog> log);

/// Reads the field configuration stored in a checkpoint header.
FieldConfig field_config_from(const io::Checkpoint& ckpt);
/// Rebuilds the radiance field from a checkpoint; throws ArchitectureMismatch
/// when `expected` is given and differs.
RadianceField field_from_checkpoint(const io::Checkpoint& ckpt, const FieldConfig* expected = nullptr);

}  // namespace snerf
