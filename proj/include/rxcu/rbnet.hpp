#pragma once

// Residual network: a shared trunk with two linear-output heads emitting a
// raw mean e0 and a raw log-variance s0 per point, plus the clamp that turns
// them into the bounded residual energy density and its log-variance.
//
// Forward/backward run batched over grid points (rows) with Eigen matrix
// products; everything is single-threaded and bit-reproducible.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rxcu/common.hpp"
#include "rxcu/grid.hpp"
#include "rxcu/rng.hpp"

namespace rxcu {

enum class Activation { kTanh, kSilu };

inline const char* to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "silu";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "silu") return Activation::kSilu;
  throw config_error("unknown activation '" + s + "'");
}

namespace detail {

// tanh through one vectorized exp: tanh(x) = 1 - 2/(exp(2x)+1). Exact at the
// +-inf limits and ~1e-16 from std::tanh elsewhere; an order of magnitude
// faster than the scalar libm call on wide batches.
inline void activate(Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::kTanh) {
    z.array() = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);
  } else {
    z.array() /= 1.0 + (-z.array()).exp();
  }
}

// Derivative of the activation given pre-activation z and activation a.
inline Eigen::MatrixXd activate_grad(const Eigen::MatrixXd& z,
                                     const Eigen::MatrixXd& a,
                                     Activation act) {
  if (act == Activation::kTanh) {
    return (1.0 - a.array().square()).matrix();
  }
  Eigen::ArrayXXd sig = 1.0 / (1.0 + (-z.array()).exp());
  return (sig * (1.0 + z.array() * (1.0 - sig))).matrix();
}

}  // namespace detail

struct LayerParams {
  Eigen::MatrixXd W;     // fan_in x fan_out
  Eigen::RowVectorXd b;  // fan_out
};

struct NetworkParams {
  std::vector<LayerParams> trunk;      // activation after every trunk layer
  std::vector<LayerParams> head_mean;  // activation after all but the last
  std::vector<LayerParams> head_var;
  Activation activation = Activation::kTanh;
  std::string init_scheme = "uniform_fan_in";
  std::uint64_t seed = 0;

  int input_width() const {
    return trunk.empty() ? 0 : static_cast<int>(trunk.front().W.rows());
  }

  void validate() const {
    if (trunk.empty() || head_mean.empty() || head_var.empty()) {
      throw data_error("network has an empty layer list");
    }
    auto check_chain = [](const std::vector<LayerParams>& layers,
                          Eigen::Index in, const char* what) {
      for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.W.rows() != in || l.b.size() != l.W.cols()) {
          throw data_error(std::string("shape mismatch in ") + what +
                           " layer " + std::to_string(i + 1));
        }
        if (!l.W.allFinite() || !l.b.allFinite()) {
          throw data_error(std::string("non-finite weight in ") + what +
                           " layer " + std::to_string(i + 1));
        }
        in = l.W.cols();
      }
      return in;
    };
    const Eigen::Index trunk_out =
        check_chain(trunk, trunk.front().W.rows(), "trunk");
    if (check_chain(head_mean, trunk_out, "head_mean") != 1 ||
        check_chain(head_var, trunk_out, "head_var") != 1) {
      throw data_error("head output width must be 1");
    }
  }
};

// Canonical architecture: trunk 16-128-256-256-256-128 (or 11-wide input in
// direct mode), each head 128-50-1.
inline const std::vector<int> kTrunkWidths{128, 256, 256, 256, 128};
inline const std::vector<int> kHeadWidths{50, 1};

// Fan-in-scaled uniform init: W ~ U(-sqrt(3/fan_in), +sqrt(3/fan_in)), so
// Var(W) = 1/fan_in; biases zero. Draw order is layer by layer, row-major,
// trunk then mean head then var head, making the draw reproducible.
inline NetworkParams make_params(std::uint64_t seed, int input_width,
                                 const std::vector<int>& trunk_widths,
                                 const std::vector<int>& head_widths,
                                 Activation act = Activation::kTanh) {
  if (input_width < 1) throw config_error("input width must be positive");
  if (trunk_widths.empty() || head_widths.empty() || head_widths.back() != 1) {
    throw config_error("invalid layer width lists");
  }
  NetworkParams p;
  p.activation = act;
  p.seed = seed;
  Rng rng(seed);
  auto draw = [&rng](int in, int out) {
    LayerParams l;
    l.W.resize(in, out);
    const double bound = std::sqrt(3.0 / static_cast<double>(in));
    for (int r = 0; r < in; ++r) {
      for (int c = 0; c < out; ++c) l.W(r, c) = rng.uniform(-bound, bound);
    }
    l.b = Eigen::RowVectorXd::Zero(out);
    return l;
  };
  int in = input_width;
  for (int w : trunk_widths) {
    p.trunk.push_back(draw(in, w));
    in = w;
  }
  const int trunk_out = in;
  for (auto* head : {&p.head_mean, &p.head_var}) {
    in = trunk_out;
    for (int w : head_widths) {
      head->push_back(draw(in, w));
      in = w;
    }
  }
  p.validate();
  return p;
}

inline NetworkParams init_params(std::uint64_t seed, int input_width) {
  if (input_width != 16 && input_width != 11) {
    throw config_error("canonical network input width must be 16 or 11");
  }
  return make_params(seed, input_width, kTrunkWidths, kHeadWidths);
}

inline NetworkParams zero_params(int input_width) {
  NetworkParams p = init_params(0, input_width);
  for (auto* layers : {&p.trunk, &p.head_mean, &p.head_var}) {
    for (auto& l : *layers) {
      l.W.setZero();
      l.b.setZero();
    }
  }
  p.init_scheme = "zero";
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward.

struct ForwardCache {
  Eigen::MatrixXd input;  // n x input_width, already standardized
  std::vector<Eigen::MatrixXd> trunk_z, trunk_a;
  std::vector<Eigen::MatrixXd> mean_z, mean_a;  // hidden layers only
  std::vector<Eigen::MatrixXd> var_z, var_a;
  Eigen::VectorXd e0, s0;

  Eigen::Index rows() const { return input.rows(); }
};

namespace detail {

inline void check_finite_layer(const Eigen::MatrixXd& z, const char* part,
                               std::size_t layer_idx) {
  if (!z.allFinite()) {
    throw numeric_error(std::string(part) + " layer " +
                        std::to_string(layer_idx + 1) +
                        " produced non-finite activation");
  }
}

inline Eigen::VectorXd head_forward(const std::vector<LayerParams>& head,
                                    const Eigen::MatrixXd& trunk_out,
                                    Activation act, const char* part,
                                    std::vector<Eigen::MatrixXd>& zs,
                                    std::vector<Eigen::MatrixXd>& as) {
  const Eigen::MatrixXd* cur = &trunk_out;
  for (std::size_t i = 0; i + 1 < head.size(); ++i) {
    Eigen::MatrixXd z = (*cur * head[i].W).rowwise() + head[i].b;
    check_finite_layer(z, part, i);
    zs.push_back(std::move(z));
    Eigen::MatrixXd a = zs.back();
    activate(a, act);
    as.push_back(std::move(a));
    cur = &as.back();
  }
  const LayerParams& last = head.back();
  Eigen::MatrixXd out = (*cur * last.W).rowwise() + last.b;
  check_finite_layer(out, part, head.size() - 1);
  return out.col(0);
}

}  // namespace detail

inline ForwardCache forward_batch(const NetworkParams& p,
                                  Eigen::MatrixXd standardized_input) {
  if (standardized_input.cols() != p.input_width()) {
    throw data_error("input width " +
                     std::to_string(standardized_input.cols()) +
                     " does not match network input width " +
                     std::to_string(p.input_width()));
  }
  ForwardCache c;
  c.input = std::move(standardized_input);
  const Eigen::MatrixXd* cur = &c.input;
  for (std::size_t i = 0; i < p.trunk.size(); ++i) {
    Eigen::MatrixXd z = (*cur * p.trunk[i].W).rowwise() + p.trunk[i].b;
    detail::check_finite_layer(z, "trunk", i);
    c.trunk_z.push_back(std::move(z));
    Eigen::MatrixXd a = c.trunk_z.back();
    detail::activate(a, p.activation);
    c.trunk_a.push_back(std::move(a));
    cur = &c.trunk_a.back();
  }
  c.e0 = detail::head_forward(p.head_mean, *cur, p.activation, "head_mean",
                              c.mean_z, c.mean_a);
  c.s0 = detail::head_forward(p.head_var, *cur, p.activation, "head_var",
                              c.var_z, c.var_a);
  return c;
}

// Single-point convenience wrapper (raw, unstandardized input).
inline std::pair<double, double> forward_point(const NetworkParams& p,
                                               const ExtendedFeatures& y) {
  Eigen::MatrixXd x(1, ExtendedFeatures::kCount);
  for (int i = 0; i < ExtendedFeatures::kCount; ++i) {
    x(0, i) = y.v[static_cast<std::size_t>(i)];
  }
  ForwardCache c = forward_batch(p, std::move(x));
  return {c.e0(0), c.s0(0)};
}

// The generalized (non-residual) mode: raw mean energy density and raw
// log-variance straight off the heads, no clamping. Retained as an ablation
// baseline; its divergence behavior is demonstrated in tests, not prevented.
inline std::pair<double, double> direct_forward(const NetworkParams& p,
                                                const PointFeatures& f) {
  Eigen::MatrixXd x(1, PointFeatures::kCount);
  for (int i = 0; i < PointFeatures::kCount; ++i) x(0, i) = f[i];
  ForwardCache c = forward_batch(p, std::move(x));
  return {c.e0(0), c.s0(0)};
}

struct LayerGrads {
  Eigen::MatrixXd dW;
  Eigen::RowVectorXd db;
};

struct ParamGrads {
  std::vector<LayerGrads> trunk, head_mean, head_var;

  static ParamGrads zeros_like(const NetworkParams& p) {
    ParamGrads g;
    auto fill = [](const std::vector<LayerParams>& src,
                   std::vector<LayerGrads>& dst) {
      for (const auto& l : src) {
        dst.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()),
                       Eigen::RowVectorXd::Zero(l.b.size())});
      }
    };
    fill(p.trunk, g.trunk);
    fill(p.head_mean, g.head_mean);
    fill(p.head_var, g.head_var);
    return g;
  }

  void add_scaled(const ParamGrads& o, double scale) {
    auto acc = [scale](std::vector<LayerGrads>& dst,
                       const std::vector<LayerGrads>& src) {
      for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i].dW += scale * src[i].dW;
        dst[i].db += scale * src[i].db;
      }
    };
    acc(trunk, o.trunk);
    acc(head_mean, o.head_mean);
    acc(head_var, o.head_var);
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto* part : {&trunk, &head_mean, &head_var}) {
      for (const auto& l : *part) {
        s += l.dW.squaredNorm() + l.db.squaredNorm();
      }
    }
    return s;
  }
};

namespace detail {

// Backward through one head; returns the gradient w.r.t. the trunk output.
inline Eigen::MatrixXd head_backward(const std::vector<LayerParams>& head,
                                     const Eigen::MatrixXd& trunk_out,
                                     const std::vector<Eigen::MatrixXd>& zs,
                                     const std::vector<Eigen::MatrixXd>& as,
                                     const Eigen::VectorXd& dout,
                                     Activation act,
                                     std::vector<LayerGrads>& grads) {
  const std::size_t n_layers = head.size();
  Eigen::MatrixXd g = dout;  // n x 1
  for (std::size_t idx = n_layers; idx-- > 0;) {
    const Eigen::MatrixXd& in_act = idx == 0 ? trunk_out : as[idx - 1];
    if (idx + 1 < n_layers) {
      g = g.cwiseProduct(activate_grad(zs[idx], as[idx], act));
    }
    grads[idx].dW = in_act.transpose() * g;
    grads[idx].db = g.colwise().sum();
    if (idx > 0) g = g * head[idx].W.transpose();
    else return g * head[idx].W.transpose();
  }
  return g;
}

}  // namespace detail

// Exact analytic gradients of the scalar objective Sum_i (de0_i * e0_i +
// ds0_i * s0_i) with respect to every weight and bias, i.e. the chain-rule
// contraction of upstream per-point gradients through the network.
inline ParamGrads backward_batch(const NetworkParams& p, const ForwardCache& c,
                                 const Eigen::VectorXd& de0,
                                 const Eigen::VectorXd& ds0) {
  if (de0.size() != c.rows() || ds0.size() != c.rows()) {
    throw data_error("upstream gradient length does not match batch rows");
  }
  ParamGrads g = ParamGrads::zeros_like(p);
  const Eigen::MatrixXd& trunk_out = c.trunk_a.back();
  Eigen::MatrixXd d_trunk =
      detail::head_backward(p.head_mean, trunk_out, c.mean_z, c.mean_a, de0,
                            p.activation, g.head_mean) +
      detail::head_backward(p.head_var, trunk_out, c.var_z, c.var_a, ds0,
                            p.activation, g.head_var);
  for (std::size_t idx = p.trunk.size(); idx-- > 0;) {
    d_trunk = d_trunk.cwiseProduct(
        detail::activate_grad(c.trunk_z[idx], c.trunk_a[idx], p.activation));
    const Eigen::MatrixXd& in_act = idx == 0 ? c.input : c.trunk_a[idx - 1];
    g.trunk[idx].dW = in_act.transpose() * d_trunk;
    g.trunk[idx].db = d_trunk.colwise().sum();
    if (idx > 0) d_trunk = d_trunk * p.trunk[idx].W.transpose();
  }
  return g;
}

inline void apply_sgd_step(NetworkParams& p, const ParamGrads& g, double lr) {
  auto step = [lr](std::vector<LayerParams>& layers,
                   const std::vector<LayerGrads>& grads) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].W -= lr * grads[i].dW;
      layers[i].b -= lr * grads[i].db;
    }
  };
  step(p.trunk, g.trunk);
  step(p.head_mean, g.head_mean);
  step(p.head_var, g.head_var);
}

// ---------------------------------------------------------------------------
// Clamp: e_bar = k1 tanh(e0) e_conv, s_bar = min(s0, log(k2^2 e_bar^2 + eps)).
// The min is taken in log-variance space: the variance head emits
// s0 = log(sigma0^2) and s_bar is a log-variance as well.

struct ClampConfig {
  double k1 = 1.0;
  double k2 = 1.0;
  double epsilon = 1e-4;

  void validate() const {
    if (!std::isfinite(k1) || k1 < 0.0 || k1 > 2.0) {
      throw config_error("clamp k1 must lie in [0, 2]");
    }
    if (!std::isfinite(k2) || k2 < 0.0 || k2 > 2.0) {
      throw config_error("clamp k2 must lie in [0, 2]");
    }
    if (!std::isfinite(epsilon) || epsilon <= 0.0) {
      throw config_error("clamp epsilon must be positive");
    }
  }
};

struct ResidualOutput {
  double e_bar = 0.0;  // residual XC energy density
  double s_bar = 0.0;  // log-variance of the per-point residual
};

inline ResidualOutput clamp_residual(double e0, double s0, double e_conv,
                                     const ClampConfig& cfg) {
  const double e_bar = cfg.k1 * std::tanh(e0) * e_conv;
  const double s_cap = std::log(cfg.k2 * cfg.k2 * e_bar * e_bar + cfg.epsilon);
  return {e_bar, std::min(s0, s_cap)};
}

struct ClampGrads {
  double de_bar_de0 = 0.0;
  double ds_bar_ds0 = 0.0;
  double ds_bar_de0 = 0.0;
};

// Subgradient convention at the min tie: the s0 branch is taken when
// s0 <= s_cap, matching how std::min picks its first argument.
inline ClampGrads clamp_residual_grads(double e0, double s0, double e_conv,
                                       const ClampConfig& cfg) {
  ClampGrads g;
  const double t = std::tanh(e0);
  const double e_bar = cfg.k1 * t * e_conv;
  g.de_bar_de0 = cfg.k1 * (1.0 - t * t) * e_conv;
  const double cap_arg = cfg.k2 * cfg.k2 * e_bar * e_bar + cfg.epsilon;
  if (s0 <= std::log(cap_arg)) {
    g.ds_bar_ds0 = 1.0;
  } else {
    g.ds_bar_de0 = 2.0 * cfg.k2 * cfg.k2 * e_bar / cap_arg * g.de_bar_de0;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Per-feature affine standardization fitted on the training split. Raw
// features first pass through a signed log1p compression (they span many
// orders of magnitude), then are centered and scaled per column. The fitted
// constants travel with the checkpoint.

struct Standardizer {
  Eigen::VectorXd mean, scale;
  bool signed_log = true;

  int width() const { return static_cast<int>(mean.size()); }

  static Standardizer identity(int width) {
    Standardizer s;
    s.mean = Eigen::VectorXd::Zero(width);
    s.scale = Eigen::VectorXd::Ones(width);
    return s;
  }

  void fit(const Eigen::MatrixXd& raw) {
    if (raw.rows() < 1) throw data_error("cannot fit standardizer on no rows");
    Eigen::MatrixXd t = transform(raw);
    mean = t.colwise().mean();
    Eigen::MatrixXd centered = t.rowwise() - mean.transpose();
    scale = (centered.array().square().colwise().mean()).sqrt();
    for (Eigen::Index i = 0; i < scale.size(); ++i) {
      if (!(scale(i) > 1e-12)) scale(i) = 1.0;
    }
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const {
    if (raw.cols() != mean.size()) {
      throw data_error("feature width does not match standardizer");
    }
    Eigen::MatrixXd t = transform(raw);
    t.rowwise() -= mean.transpose();
    t.array().rowwise() /= scale.transpose().array();
    return t;
  }

 private:
  Eigen::MatrixXd transform(const Eigen::MatrixXd& raw) const {
    if (!signed_log) return raw;
    return raw.unaryExpr([](double v) { return signed_log1p(v); });
  }
};

}  // namespace rxcu
