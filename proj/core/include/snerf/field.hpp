#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "snerf/geometry.hpp"

namespace snerf {

/// Network shape. The density MLP consumes the encoded (already mapped)
/// position and emits sigma plus a feature vector; the color MLP consumes that
/// feature and the encoded view direction.
struct FieldConfig {
  int density_layers = 4;
  int density_width = 128;
  int color_layers = 2;
  int color_width = 64;
  int pos_levels = 8;
  int dir_levels = 2;
  std::uint64_t seed = 0;

  friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

struct FieldOutput {
  Vec3 color = Vec3::Zero();
  double density = 0.0;
};

/// Gradient of a scalar loss with respect to one FieldOutput.
struct FieldOutputGrad {
  Vec3 d_color = Vec3::Zero();
  double d_density = 0.0;
};

constexpr int encoded_size(int levels) { return 3 + 6 * levels; }

/// [v, sin(2^0 pi v), cos(2^0 pi v), ..., sin(2^(L-1) pi v), cos(2^(L-1) pi v)].
std::vector<double> positional_encode(const Vec3& v, int levels);

double softplus(double z);
double logistic(double z);

/// Activations kept from a batched forward pass for the backward pass.
struct FieldBatch {
  Eigen::Matrix3Xd x;
  Eigen::Matrix3Xd dirs;
  Eigen::MatrixXd pos_enc;
  Eigen::MatrixXd dir_enc;
  std::vector<Eigen::MatrixXd> density_pre;
  std::vector<Eigen::MatrixXd> density_act;
  Eigen::MatrixXd density_head;  // row 0: sigma pre-activation, rest: feature
  Eigen::MatrixXd color_in;
  std::vector<Eigen::MatrixXd> color_pre;
  std::vector<Eigen::MatrixXd> color_act;
  Eigen::MatrixXd color_head;
  Eigen::VectorXd sigma;
  Eigen::Matrix3Xd color;

  Eigen::Index size() const { return x.cols(); }
};

/// f: (x, dir) -> (color, sigma) as two MLPs with softplus hidden units,
/// softplus density and logistic color. Parameters live in one flat vector;
/// layout is fixed by the config.
class RadianceField {
 public:
  explicit RadianceField(const FieldConfig& cfg);

  const FieldConfig& config() const { return cfg_; }
  size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  FieldOutput eval(const Vec3& x, const Vec3& dir) const;

  void forward(const Eigen::Ref<const Eigen::Matrix3Xd>& x,
               const Eigen::Ref<const Eigen::Matrix3Xd>& dirs, FieldBatch& batch) const;

  /// Accumulates (+=) parameter gradients into `param_grad` and, when
  /// requested, writes input gradients.
  void backward(const FieldBatch& batch, const Eigen::Ref<const Eigen::VectorXd>& d_sigma,
                const Eigen::Ref<const Eigen::Matrix3Xd>& d_color, std::span<double> param_grad,
                Eigen::Matrix3Xd* d_x = nullptr, Eigen::Matrix3Xd* d_dir = nullptr) const;

  /// Zeroes weights and biases of the sigma/feature head and the color head.
  void zero_output_layers();

  /// Index range [begin, end) of the color MLP's parameters.
  std::pair<size_t, size_t> color_parameter_range() const;

 private:
  struct Layer {
    size_t offset = 0;  // weights (out x in, column-major), then biases
    int in = 0;
    int out = 0;
  };

  Eigen::Map<const Eigen::MatrixXd> weights(const Layer& l) const;
  Eigen::Map<const Eigen::VectorXd> bias(const Layer& l) const;

  FieldConfig cfg_;
  std::vector<Layer> density_;  // hidden layers then head
  std::vector<Layer> color_;    // hidden layers then head
  std::vector<double> params_;
};

/// Parameter (and input) gradients of a scalar loss for one evaluation.
struct FieldGradient {
  std::vector<double> params;
  Vec3 d_x = Vec3::Zero();
  Vec3 d_dir = Vec3::Zero();
};

FieldGradient eval_with_grad(const RadianceField& field, const Vec3& x, const Vec3& dir,
                             const FieldOutputGrad& upstream);

}  // namespace snerf
