#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <vector>

#include "rxcu/rbnet.hpp"
#include "rxcu/rng.hpp"

using namespace rxcu;

namespace {

Eigen::MatrixXd random_input(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd x(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) x(r, c) = rng.uniform(-1.5, 1.5);
  }
  return x;
}

double operator_norm(const Eigen::MatrixXd& w) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(w).singularValues()(0);
}

// Scalar objective whose analytic gradient backward_batch returns:
// sum_i de0_i * e0_i + ds0_i * s0_i.
double upstream_objective(const NetworkParams& p, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& de0,
                          const Eigen::VectorXd& ds0) {
  ForwardCache c = forward_batch(p, x);
  return de0.dot(c.e0) + ds0.dot(c.s0);
}

// Visits every weight and bias coefficient in the same order for a
// perturb-and-reevaluate loop.
template <typename Fn>
void for_each_param(NetworkParams& p, ParamGrads& g, Fn&& fn) {
  auto walk = [&fn](std::vector<LayerParams>& layers,
                    std::vector<LayerGrads>& grads) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (Eigen::Index i = 0; i < layers[l].W.size(); ++i) {
        fn(layers[l].W.data()[i], grads[l].dW.data()[i]);
      }
      for (Eigen::Index i = 0; i < layers[l].b.size(); ++i) {
        fn(layers[l].b.data()[i], grads[l].db.data()[i]);
      }
    }
  };
  walk(p.trunk, g.trunk);
  walk(p.head_mean, g.head_mean);
  walk(p.head_var, g.head_var);
}

}  // namespace

TEST_CASE("initialization is reproducible and fan-in scaled") {
  NetworkParams a = init_params(7, 16);
  NetworkParams b = init_params(7, 16);
  REQUIRE(a.trunk.size() == 5);
  REQUIRE(a.head_mean.size() == 2);
  REQUIRE(a.head_var.size() == 2);
  CHECK(a.trunk.front().W.rows() == 16);
  CHECK(a.trunk.back().W.cols() == 128);
  CHECK(a.head_mean.back().W.cols() == 1);

  for (std::size_t i = 0; i < a.trunk.size(); ++i) {
    CHECK(a.trunk[i].W == b.trunk[i].W);
    CHECK(a.trunk[i].b == b.trunk[i].b);
    CHECK(a.trunk[i].b.isZero(0.0));
  }
  CHECK(a.head_var[0].W == b.head_var[0].W);

  NetworkParams c = init_params(8, 16);
  CHECK(a.trunk[0].W != c.trunk[0].W);

  // W ~ U(-sqrt(3/fan_in), +sqrt(3/fan_in)) has variance 1/fan_in; the
  // 128x256 draw is large enough to pin the sample variance within 20%.
  const auto& wide = a.trunk[1].W;
  REQUIRE(wide.rows() == 128);
  const double var = wide.array().square().mean() -
                     wide.array().mean() * wide.array().mean();
  CHECK(var == Catch::Approx(1.0 / 128.0).epsilon(0.2));

  CHECK_THROWS_AS(init_params(1, 13), config_error);
  CHECK_THROWS_AS(make_params(1, 0, {4}, {1}), config_error);
  CHECK_THROWS_AS(make_params(1, 4, {4}, {3, 2}), config_error);
}

TEST_CASE("zero network maps every input to (0, 0)") {
  NetworkParams p = zero_params(16);
  CHECK(p.init_scheme == "zero");
  Rng rng(3);
  ExtendedFeatures y;
  for (double& v : y.v) v = rng.uniform(-2.0, 2.0);
  auto [e0, s0] = forward_point(p, y);
  CHECK(e0 == 0.0);
  CHECK(s0 == 0.0);

  NetworkParams p11 = zero_params(11);
  PointFeatures f;
  f.rho_up = 0.4;
  f.rho_down = 0.2;
  auto [eh, sh] = direct_forward(p11, f);
  CHECK(eh == 0.0);
  CHECK(sh == 0.0);
}

TEST_CASE("forward pass is deterministic and batch-consistent") {
  NetworkParams p = make_params(11, 16, {12, 8}, {6, 1});
  Rng rng(4);
  Eigen::MatrixXd x = random_input(rng, 9, 16);

  ForwardCache a = forward_batch(p, x);
  ForwardCache b = forward_batch(p, x);
  CHECK(a.e0 == b.e0);
  CHECK(a.s0 == b.s0);
  for (Eigen::Index i = 0; i < a.e0.size(); ++i) {
    CHECK(std::isfinite(a.e0(i)));
    CHECK(std::isfinite(a.s0(i)));
  }

  // Row-by-row evaluation agrees with the batched product to rounding.
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    ForwardCache row = forward_batch(p, x.row(i));
    CHECK(row.e0(0) == Catch::Approx(a.e0(i)).margin(1e-13));
    CHECK(row.s0(0) == Catch::Approx(a.s0(i)).margin(1e-13));
  }

  CHECK_THROWS_AS(forward_batch(p, random_input(rng, 3, 15)), data_error);
}

TEST_CASE("output perturbation is bounded by the product of operator norms") {
  NetworkParams p = make_params(19, 16, {10, 7}, {5, 1});
  double bound = 1.0;
  for (const auto& l : p.trunk) bound *= operator_norm(l.W);
  for (const auto& l : p.head_mean) bound *= operator_norm(l.W);

  Rng rng(20);
  Eigen::MatrixXd x = random_input(rng, 1, 16);
  ForwardCache base = forward_batch(p, x);
  for (int j = 0; j < 16; ++j) {
    for (double delta : {1e-3, 0.1, 1.0}) {
      Eigen::MatrixXd xp = x;
      xp(0, j) += delta;
      ForwardCache pert = forward_batch(p, xp);
      // tanh is 1-Lipschitz, so each layer amplifies by at most ||W||_2.
      CHECK(std::abs(pert.e0(0) - base.e0(0)) <= bound * delta * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("activation kernels match their closed forms") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.uniform(-25.0, 25.0);
    Eigen::MatrixXd z(1, 1);

    z(0, 0) = v;
    detail::activate(z, Activation::kTanh);
    CHECK(z(0, 0) == Catch::Approx(std::tanh(v)).margin(2e-15));

    z(0, 0) = v;
    detail::activate(z, Activation::kSilu);
    CHECK(z(0, 0) == Catch::Approx(v / (1.0 + std::exp(-v))).margin(1e-13));
  }

  // Derivatives against central differences.
  for (Activation act : {Activation::kTanh, Activation::kSilu}) {
    for (int i = 0; i < 50; ++i) {
      const double v = rng.uniform(-4.0, 4.0);
      const double h = 1e-6;
      auto eval = [act](double t) {
        Eigen::MatrixXd m(1, 1);
        m(0, 0) = t;
        detail::activate(m, act);
        return m(0, 0);
      };
      Eigen::MatrixXd z(1, 1), a(1, 1);
      z(0, 0) = v;
      a(0, 0) = eval(v);
      const double fd = (eval(v + h) - eval(v - h)) / (2.0 * h);
      CHECK(detail::activate_grad(z, a, act)(0, 0) ==
            Catch::Approx(fd).margin(1e-8));
    }
  }

  CHECK(activation_from_string("tanh") == Activation::kTanh);
  CHECK(activation_from_string("silu") == Activation::kSilu);
  CHECK_THROWS_AS(activation_from_string("relu"), config_error);
}

TEST_CASE("network validation rejects malformed parameter sets") {
  NetworkParams p = make_params(2, 8, {6, 4}, {3, 1});
  CHECK_NOTHROW(p.validate());

  NetworkParams bad = p;
  bad.head_mean.back().W.resize(3, 2);
  bad.head_mean.back().W.setZero();
  bad.head_mean.back().b = Eigen::RowVectorXd::Zero(2);
  CHECK_THROWS_AS(bad.validate(), data_error);

  bad = p;
  bad.trunk[1].W(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH(bad.validate(),
                    Catch::Matchers::ContainsSubstring("trunk layer 2"));

  bad = p;
  bad.trunk.clear();
  CHECK_THROWS_AS(bad.validate(), data_error);
}

TEST_CASE("analytic gradients match central finite differences") {
  const double step = 1e-5;
  for (Activation act : {Activation::kTanh, Activation::kSilu}) {
    NetworkParams p = make_params(31, 16, {8, 4}, {3, 1}, act);
    Rng rng(32);
    Eigen::MatrixXd x = random_input(rng, 6, 16);
    Eigen::VectorXd de0(6), ds0(6);
    for (int i = 0; i < 6; ++i) {
      de0(i) = rng.uniform(-1.0, 1.0);
      ds0(i) = rng.uniform(-1.0, 1.0);
    }

    ForwardCache c = forward_batch(p, x);
    ParamGrads g = backward_batch(p, c, de0, ds0);

    for_each_param(p, g, [&](double& w, double& analytic) {
      const double saved = w;
      w = saved + step;
      const double up = upstream_objective(p, x, de0, ds0);
      w = saved - step;
      const double down = upstream_objective(p, x, de0, ds0);
      w = saved;
      const double fd = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-4});
      CHECK(std::abs(analytic - fd) / denom < 1e-5);
    });
  }
}

TEST_CASE("zero upstream gradient yields zero parameter gradients") {
  NetworkParams p = make_params(9, 16, {8, 4}, {3, 1});
  Rng rng(10);
  Eigen::MatrixXd x = random_input(rng, 4, 16);
  ForwardCache c = forward_batch(p, x);
  ParamGrads g = backward_batch(p, c, Eigen::VectorXd::Zero(4),
                                Eigen::VectorXd::Zero(4));
  CHECK(g.squared_norm() == 0.0);

  CHECK_THROWS_AS(backward_batch(p, c, Eigen::VectorXd::Zero(3),
                                 Eigen::VectorXd::Zero(4)),
                  data_error);
}

TEST_CASE("clamp reproduces hand-computed values") {
  ClampConfig cfg;
  CHECK(cfg.k1 == 1.0);
  CHECK(cfg.k2 == 1.0);
  CHECK(cfg.epsilon == 1e-4);

  ResidualOutput r = clamp_residual(0.0, 5.0, -0.7, cfg);
  CHECK(r.e_bar == 0.0);
  CHECK(r.s_bar == Catch::Approx(-9.2103403719761827361).epsilon(1e-14));
  CHECK(clamp_residual(0.0, -12.0, -0.7, cfg).s_bar == -12.0);

  CHECK(clamp_residual(20.0, 0.0, -2.0, cfg).e_bar ==
        Catch::Approx(-2.0).margin(1e-8));
  CHECK(clamp_residual(1.0, 0.0, -1.0, cfg).e_bar ==
        Catch::Approx(-0.761594).margin(5e-7));
}

TEST_CASE("clamp bounds, sign, and monotonicity") {
  Rng rng(6);
  ClampConfig cfg;
  cfg.k1 = 1.3;
  cfg.k2 = 0.8;
  for (int i = 0; i < 100000; ++i) {
    const double e0 = rng.uniform(-30.0, 30.0);
    const double s0 = rng.uniform(-20.0, 20.0);
    const double e_conv = rng.uniform(-3.0, 3.0);
    ResidualOutput r = clamp_residual(e0, s0, e_conv, cfg);
    CHECK(std::abs(r.e_bar) <= cfg.k1 * std::abs(e_conv));
    CHECK(r.s_bar <=
          std::log(cfg.k2 * cfg.k2 * r.e_bar * r.e_bar + cfg.epsilon));
    if (e0 != 0.0 && e_conv != 0.0) {
      CHECK(std::signbit(r.e_bar) == (std::signbit(e0) != std::signbit(e_conv)));
    }
  }

  // Strictly increasing in e0 at fixed e_conv > 0.
  double prev = clamp_residual(-6.0, 0.0, 0.9, cfg).e_bar;
  for (double e0 = -5.5; e0 <= 6.0; e0 += 0.5) {
    const double cur = clamp_residual(e0, 0.0, 0.9, cfg).e_bar;
    CHECK(cur > prev);
    prev = cur;
  }

  // Predicted total is e_conv * (1 + k1 tanh e0).
  const double e_conv = -0.42;
  const double e0 = 0.37;
  ResidualOutput r = clamp_residual(e0, 0.0, e_conv, cfg);
  CHECK(e_conv + r.e_bar ==
        Catch::Approx(e_conv * (1.0 + cfg.k1 * std::tanh(e0))).epsilon(1e-15));
}

TEST_CASE("clamp gradients cover both branches of the min") {
  ClampConfig cfg;
  cfg.k1 = 0.9;
  cfg.k2 = 1.4;

  // tanh'(0) = 1, so de_bar/de0 at the origin is exactly k1 * e_conv.
  CHECK(clamp_residual_grads(0.0, -20.0, -1.7, cfg).de_bar_de0 ==
        cfg.k1 * -1.7);

  Rng rng(7);
  const double h = 1e-6;
  for (int i = 0; i < 300; ++i) {
    const double e0 = rng.uniform(-2.0, 2.0);
    const double s0 = rng.uniform(-12.0, 4.0);
    const double e_conv = rng.uniform(-2.0, 2.0);
    ClampGrads g = clamp_residual_grads(e0, s0, e_conv, cfg);

    const double fd_e =
        (clamp_residual(e0 + h, s0, e_conv, cfg).e_bar -
         clamp_residual(e0 - h, s0, e_conv, cfg).e_bar) /
        (2.0 * h);
    CHECK(g.de_bar_de0 == Catch::Approx(fd_e).margin(1e-7));

    const double cap = std::log(
        cfg.k2 * cfg.k2 * std::pow(cfg.k1 * std::tanh(e0) * e_conv, 2) +
        cfg.epsilon);
    if (std::abs(s0 - cap) < 1e-4) continue;  // FD straddles the kink
    const double fd_s =
        (clamp_residual(e0, s0 + h, e_conv, cfg).s_bar -
         clamp_residual(e0, s0 - h, e_conv, cfg).s_bar) /
        (2.0 * h);
    CHECK(g.ds_bar_ds0 == Catch::Approx(fd_s).margin(1e-7));
    const double fd_se =
        (clamp_residual(e0 + h, s0, e_conv, cfg).s_bar -
         clamp_residual(e0 - h, s0, e_conv, cfg).s_bar) /
        (2.0 * h);
    CHECK(g.ds_bar_de0 == Catch::Approx(fd_se).margin(1e-7));
    if (s0 < cap) {
      CHECK(g.ds_bar_ds0 == 1.0);
      CHECK(g.ds_bar_de0 == 0.0);
    } else {
      CHECK(g.ds_bar_ds0 == 0.0);
    }
  }

  // Exact tie takes the s0 branch, matching std::min's first argument.
  const double e0 = 0.4;
  const double e_conv = 1.1;
  const double eb = cfg.k1 * std::tanh(e0) * e_conv;
  const double tie = std::log(cfg.k2 * cfg.k2 * eb * eb + cfg.epsilon);
  ClampGrads g = clamp_residual_grads(e0, tie, e_conv, cfg);
  CHECK(g.ds_bar_ds0 == 1.0);
  CHECK(g.ds_bar_de0 == 0.0);
}

TEST_CASE("clamp configuration validation") {
  ClampConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.k1 = 2.0;
  CHECK_NOTHROW(cfg.validate());
  cfg.k1 = 2.1;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg.k1 = -0.01;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg.k1 = 1.0;
  cfg.k2 = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg.k2 = 1.0;
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
}

TEST_CASE("unclamped variance diverges under weight scaling") {
  // The non-residual mode has no cap on s0: scaling the final variance-head
  // layer pushes the integrated sigma past any fixed bound, which is the
  // failure the clamp exists to prevent.
  NetworkParams p = make_params(13, 11, {8}, {4, 1});
  Rng rng(14);
  Eigen::MatrixXd x = random_input(rng, 1000, 11);

  double prev_sigma = 0.0;
  for (double scale : {1.0, 40.0, 80.0}) {
    NetworkParams q = p;
    q.head_var.back().W *= scale;
    q.head_var.back().b.array() += scale * 0.5;
    ForwardCache c = forward_batch(q, x);
    double sigma = 0.0;
    for (Eigen::Index i = 0; i < c.s0.size(); ++i) {
      sigma += std::exp(0.5 * c.s0(i));
    }
    CHECK(sigma > prev_sigma);
    prev_sigma = sigma;
  }
  CHECK(prev_sigma > 1e6);
}

TEST_CASE("standardizer fits, applies, and round-trips widths") {
  Rng rng(15);
  Eigen::MatrixXd raw(200, 4);
  for (int r = 0; r < 200; ++r) {
    raw(r, 0) = rng.uniform(0.0, 1e3);    // wide positive range
    raw(r, 1) = rng.uniform(-2.0, 2.0);   // small signed range
    raw(r, 2) = rng.normal() * 1e-5;      // tiny
    raw(r, 3) = 0.25;                     // constant column
  }

  Standardizer s;
  s.fit(raw);
  Eigen::MatrixXd t = s.apply(raw);
  for (int c = 0; c < 3; ++c) {
    CHECK(t.col(c).mean() == Catch::Approx(0.0).margin(1e-12));
    CHECK(std::sqrt(t.col(c).array().square().mean()) ==
          Catch::Approx(1.0).epsilon(1e-12));
  }
  // Constant columns keep unit scale rather than dividing by zero.
  CHECK(s.scale(3) == 1.0);
  CHECK(t.col(3).isZero(1e-15));

  Standardizer s2;
  s2.fit(raw);
  CHECK(s.mean == s2.mean);
  CHECK(s.scale == s2.scale);

  CHECK_THROWS_AS(s.apply(Eigen::MatrixXd::Zero(2, 3)), data_error);
  Standardizer empty;
  CHECK_THROWS_AS(empty.fit(Eigen::MatrixXd(0, 4)), data_error);

  // The identity standardizer leaves the signed-log compression in place.
  Standardizer id = Standardizer::identity(2);
  Eigen::MatrixXd v(1, 2);
  v << 3.0, -3.0;
  Eigen::MatrixXd w = id.apply(v);
  CHECK(w(0, 0) == std::log1p(3.0));
  CHECK(w(0, 1) == -std::log1p(3.0));
}

TEST_CASE("random stream determinism and distribution sanity") {
  Rng a(123), b(123);
  for (int i = 0; i < 50; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng u(9);
  double lo = 1.0, hi = 0.0, mean = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = u.uniform();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(mean / n == Catch::Approx(0.5).margin(0.01));

  Rng g(11);
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = g.normal();
    m1 += v;
    m2 += v * v;
  }
  m1 /= n;
  m2 /= n;
  CHECK(m1 == Catch::Approx(0.0).margin(0.03));
  CHECK(m2 - m1 * m1 == Catch::Approx(1.0).margin(0.05));

  std::vector<int> v1{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> v2 = v1;
  Rng s1(77), s2(77);
  s1.shuffle(v1);
  s2.shuffle(v2);
  CHECK(v1 == v2);
  CHECK(s1.below(0) == 0);
}
