#pragma once

#include <functional>
#include <string>
#include <vector>

#include "snerf/config.hpp"
#include "snerf/dataset.hpp"
#include "snerf/train.hpp"

namespace snerf {

/// Builds the capture named by `cfg.scene` (built-in name or scene file).
SceneOracle load_scene(const RunConfig& cfg);

/// Per-view depth products for the training frames (other entries empty).
struct PreparedDepth {
  std::vector<DepthMap> sparse;  // flow-filtered sparse depth
  std::vector<DepthMap> dense;   // densified, then corrupted per config
  std::vector<Mask> corrupted;   // pixels turned into outliers
  std::vector<FusionStats> stats;
  /// Optional precomputed confidence components per view; computed on
  /// demand where empty.
  std::vector<std::vector<ConfidenceMap>> confidence;
};

PreparedDepth prepare_depth(const Capture& cap, const RunConfig& cfg);

/// Training views for the configured mode and supervision. Returns the number
/// of confidence components through `components`.
std::vector<TrainView> build_train_views(const Capture& cap, const PreparedDepth& depth, const RunConfig& cfg,
                                         int& components);

struct EvalRow {
  int frame = 0;
  int camera = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Renders the given frames (every camera; foreground mode: object views
/// only, masked) and scores them against the captured images.
std::vector<EvalRow> evaluate_frames(const RadianceField& field, const RunConfig& cfg, const Capture& cap,
                                     const std::vector<int>& frames);
double mean_psnr(const std::vector<EvalRow>& rows);

struct RunResult {
  std::vector<StepLog> history;
  std::vector<EvalRow> test;
  double test_psnr = 0.0;
  io::Checkpoint checkpoint;
  std::vector<double> confidence_weights;
};

using ProgressFn = std::function<void(const StepLog&)>;

RunResult run_training(const Capture& cap, const PreparedDepth& depth, const RunConfig& cfg,
                       const ProgressFn& progress = {});

/// Applies one ablation variant (rgb-only, sparse-depth, dense,
/// dense-confidence) to a configuration.
RunConfig variant_config(const RunConfig& base, const std::string& variant);

struct AblationCell {
  std::string variant;
  double tau = 0.0;
  std::vector<double> psnr;  // one per seed; NaN for failed runs
  std::string error;
};

struct AblationTable {
  std::vector<AblationCell> rows;
};

/// Runs the configured grid; a failing cell records its error and the grid
/// continues.
AblationTable run_ablation(const Capture& cap, const RunConfig& cfg,
                           const std::function<void(const std::string&)>& progress = {});
std::string format_ablation(const AblationTable& t);
double median(std::vector<double> v);

}  // namespace snerf
