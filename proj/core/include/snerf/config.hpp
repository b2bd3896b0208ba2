#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "snerf/dataset.hpp"
#include "snerf/field.hpp"
#include "snerf/train.hpp"

namespace snerf {

enum class DepthSource { kNone, kSparse, kDense };

/// Every knob of a pipeline run, resolved and validated.
struct RunConfig {
  std::string scene = "street-toy";
  std::uint64_t seed = 7;
  int threads = 1;
  int flow_span = 2;
  std::vector<int> train_frames{0, 2, 4};
  std::vector<int> test_frames{1, 3};

  FusionConfig fusion;
  ConfidenceConfig confidence;

  double corrupt_noise = 0.0;
  double corrupt_rate = 0.0;
  double corrupt_scale = 2.0;

  DepthSource depth = DepthSource::kDense;
  bool use_confidence = true;
  TrainConfig train;
  FieldConfig field;
  int foreground_views = 4;
  int log_every = 100;

  std::vector<std::string> ablate_variants{"rgb-only", "sparse-depth", "dense", "dense-confidence"};
  std::vector<std::uint64_t> ablate_seeds{0, 1, 2};
  std::vector<double> ablate_taus;
};

struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string doc;
};

/// Flat `key = value` configuration with documented defaults. Later
/// assignments win; unknown keys are errors.
class Config {
 public:
  Config();

  static const std::vector<ConfigKey>& keys();

  /// Throws ParseError (with line/column) or InvalidArgument.
  void load_text(const std::string& text);
  void load_file(const std::filesystem::path& path);
  /// Applies one `key=value` override. Throws InvalidArgument.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool is_default(const std::string& key) const;

  /// All keys, sorted, one `key = value` per line.
  std::string dump() const;
  /// Typed view; throws InvalidArgument on bad values.
  RunConfig resolve() const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

std::string depth_source_name(DepthSource d);

}  // namespace snerf
