#include "snerf/field.hpp"

#include <cmath>
#include <numbers>

#include "snerf/errors.hpp"
#include "snerf/random.hpp"

namespace snerf {

namespace {

using Eigen::MatrixXd;

MatrixXd encode(const Eigen::Ref<const Eigen::Matrix3Xd>& v, int levels) {
  MatrixXd out(encoded_size(levels), v.cols());
  out.topRows<3>() = v;
  double freq = std::numbers::pi;
  for (int l = 0; l < levels; ++l) {
    out.middleRows(3 + 6 * l, 3) = (freq * v.array()).sin().matrix();
    out.middleRows(6 + 6 * l, 3) = (freq * v.array()).cos().matrix();
    freq *= 2.0;
  }
  return out;
}

// d_enc -> d_v for the encoding above.
Eigen::Matrix3Xd encode_backward(const Eigen::Matrix3Xd& v, const MatrixXd& d_enc, int levels) {
  Eigen::Matrix3Xd dv = d_enc.topRows<3>();
  double freq = std::numbers::pi;
  for (int l = 0; l < levels; ++l) {
    const auto arg = (freq * v.array());
    dv.array() += freq * (arg.cos() * d_enc.middleRows(3 + 6 * l, 3).array() -
                          arg.sin() * d_enc.middleRows(6 + 6 * l, 3).array());
    freq *= 2.0;
  }
  return dv;
}

MatrixXd softplus_m(const MatrixXd& z) {
  return z.unaryExpr([](double v) { return softplus(v); });
}

MatrixXd logistic_m(const MatrixXd& z) {
  return z.unaryExpr([](double v) { return logistic(v); });
}

}  // namespace

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> positional_encode(const Vec3& v, int levels) {
  const MatrixXd e = encode(v, levels);
  return {e.data(), e.data() + e.size()};
}

RadianceField::RadianceField(const FieldConfig& cfg) : cfg_(cfg) {
  if (cfg.density_layers < 1 || cfg.density_width < 1 || cfg.color_layers < 0 ||
      cfg.color_width < 1 || cfg.pos_levels < 0 || cfg.dir_levels < 0) {
    throw InvalidArgument("invalid field architecture");
  }
  size_t offset = 0;
  auto add = [&](std::vector<Layer>& stack, int in, int out) {
    stack.push_back({offset, in, out});
    offset += static_cast<size_t>(in) * out + out;
  };
  int in = encoded_size(cfg.pos_levels);
  for (int l = 0; l < cfg.density_layers; ++l) {
    add(density_, in, cfg.density_width);
    in = cfg.density_width;
  }
  add(density_, in, 1 + cfg.density_width);
  in = cfg.density_width + encoded_size(cfg.dir_levels);
  for (int l = 0; l < cfg.color_layers; ++l) {
    add(color_, in, cfg.color_width);
    in = cfg.color_width;
  }
  add(color_, in, 3);
  params_.assign(offset, 0.0);

  // He-style uniform fan-in init, zero biases.
  Rng rng(cfg.seed);
  for (const auto* stack : {&density_, &color_}) {
    for (const Layer& l : *stack) {
      const double a = std::sqrt(6.0 / l.in);
      for (size_t i = 0; i < static_cast<size_t>(l.in) * l.out; ++i) {
        params_[l.offset + i] = rng.uniform(-a, a);
      }
    }
  }
}

Eigen::Map<const MatrixXd> RadianceField::weights(const Layer& l) const {
  return {params_.data() + l.offset, l.out, l.in};
}

Eigen::Map<const Eigen::VectorXd> RadianceField::bias(const Layer& l) const {
  return {params_.data() + l.offset + static_cast<size_t>(l.in) * l.out, l.out};
}

void RadianceField::zero_output_layers() {
  for (const Layer* l : {&density_.back(), &color_.back()}) {
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(l->offset),
                static_cast<size_t>(l->in) * l->out + l->out, 0.0);
  }
}

std::pair<size_t, size_t> RadianceField::color_parameter_range() const {
  return {color_.front().offset, params_.size()};
}

void RadianceField::forward(const Eigen::Ref<const Eigen::Matrix3Xd>& x,
                            const Eigen::Ref<const Eigen::Matrix3Xd>& dirs,
                            FieldBatch& b) const {
  if (x.cols() != dirs.cols()) throw LengthMismatch("positions and directions differ in count");
  b.x = x;
  b.dirs = dirs;
  b.pos_enc = encode(x, cfg_.pos_levels);
  b.dir_enc = encode(dirs, cfg_.dir_levels);

  const size_t hidden_d = density_.size() - 1;
  b.density_pre.resize(hidden_d);
  b.density_act.resize(hidden_d);
  const MatrixXd* in = &b.pos_enc;
  for (size_t l = 0; l < hidden_d; ++l) {
    b.density_pre[l] = weights(density_[l]) * *in;
    b.density_pre[l].colwise() += bias(density_[l]);
    b.density_act[l] = softplus_m(b.density_pre[l]);
    in = &b.density_act[l];
  }
  b.density_head = weights(density_.back()) * *in;
  b.density_head.colwise() += bias(density_.back());

  const int feat = cfg_.density_width;
  b.color_in.resize(feat + b.dir_enc.rows(), x.cols());
  b.color_in.topRows(feat) = b.density_head.bottomRows(feat);
  b.color_in.bottomRows(b.dir_enc.rows()) = b.dir_enc;

  const size_t hidden_c = color_.size() - 1;
  b.color_pre.resize(hidden_c);
  b.color_act.resize(hidden_c);
  in = &b.color_in;
  for (size_t l = 0; l < hidden_c; ++l) {
    b.color_pre[l] = weights(color_[l]) * *in;
    b.color_pre[l].colwise() += bias(color_[l]);
    b.color_act[l] = softplus_m(b.color_pre[l]);
    in = &b.color_act[l];
  }
  b.color_head = weights(color_.back()) * *in;
  b.color_head.colwise() += bias(color_.back());

  b.sigma = b.density_head.row(0).transpose().unaryExpr([](double v) { return softplus(v); });
  b.color = logistic_m(b.color_head);
}

void RadianceField::backward(const FieldBatch& b, const Eigen::Ref<const Eigen::VectorXd>& d_sigma,
                             const Eigen::Ref<const Eigen::Matrix3Xd>& d_color,
                             std::span<double> param_grad, Eigen::Matrix3Xd* d_x,
                             Eigen::Matrix3Xd* d_dir) const {
  if (param_grad.size() != params_.size()) throw LengthMismatch("gradient buffer size");
  const Eigen::Index n = b.size();
  auto grad_w = [&](const Layer& l) {
    return Eigen::Map<MatrixXd>(param_grad.data() + l.offset, l.out, l.in);
  };
  auto grad_b = [&](const Layer& l) {
    return Eigen::Map<Eigen::VectorXd>(param_grad.data() + l.offset + static_cast<size_t>(l.in) * l.out,
                                       l.out);
  };
  // dL/d(pre-activation) of a layer -> accumulate params, return dL/d(input)
  auto layer_back = [&](const Layer& l, const MatrixXd& g, const MatrixXd& input) {
    grad_w(l).noalias() += g * input.transpose();
    grad_b(l) += g.rowwise().sum();
    return MatrixXd(weights(l).transpose() * g);
  };

  // color head: logistic
  MatrixXd g = (d_color.array() * b.color.array() * (1.0 - b.color.array())).matrix();
  const size_t hidden_c = color_.size() - 1;
  for (size_t l = hidden_c + 1; l-- > 0;) {
    const MatrixXd& input = l == 0 ? b.color_in : b.color_act[l - 1];
    MatrixXd d_in = layer_back(color_[l], g, input);
    if (l > 0) {
      g = (d_in.array() * logistic_m(b.color_pre[l - 1]).array()).matrix();
    } else {
      g = std::move(d_in);
    }
  }
  // g is now dL/d(color_in)
  const int feat = cfg_.density_width;
  if (d_dir) {
    *d_dir = encode_backward(b.dirs, g.bottomRows(g.rows() - feat), cfg_.dir_levels);
  }

  MatrixXd gh(1 + feat, n);
  gh.row(0) = (d_sigma.array() * logistic_m(b.density_head.row(0)).transpose().array()).transpose();
  gh.bottomRows(feat) = g.topRows(feat);
  g = std::move(gh);
  const size_t hidden_d = density_.size() - 1;
  for (size_t l = hidden_d + 1; l-- > 0;) {
    const MatrixXd& input = l == 0 ? b.pos_enc : b.density_act[l - 1];
    MatrixXd d_in = layer_back(density_[l], g, input);
    if (l > 0) {
      g = (d_in.array() * logistic_m(b.density_pre[l - 1]).array()).matrix();
    } else {
      g = std::move(d_in);
    }
  }
  if (d_x) *d_x = encode_backward(b.x, g, cfg_.pos_levels);
}

FieldOutput RadianceField::eval(const Vec3& x, const Vec3& dir) const {
  FieldBatch b;
  forward(x, dir, b);
  return {b.color.col(0), b.sigma(0)};
}

FieldGradient eval_with_grad(const RadianceField& field, const Vec3& x, const Vec3& dir,
                             const FieldOutputGrad& upstream) {
  FieldBatch b;
  field.forward(x, dir, b);
  FieldGradient out;
  out.params.assign(field.parameter_count(), 0.0);
  Eigen::VectorXd ds(1);
  ds(0) = upstream.d_density;
  Eigen::Matrix3Xd dc = upstream.d_color;
  Eigen::Matrix3Xd dx;
  Eigen::Matrix3Xd dd;
  field.backward(b, ds, dc, out.params, &dx, &dd);
  out.d_x = dx.col(0);
  out.d_dir = dd.col(0);
  return out;
}

}  // namespace snerf
