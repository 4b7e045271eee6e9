#pragma once

// Error metrics (RMSE / MAE / MAD), relative improvement percentages, and
// Welch's unequal-variance t-test with the p-value computed through the
// regularized incomplete beta function.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "rxcu/common.hpp"

namespace rxcu {

struct MetricReport {
  double rmse = 0.0;  // kcal/mol
  double mae = 0.0;   // kcal/mol
  double mad = 0.0;   // mean absolute deviation about the mean, kcal/mol
  long n = 0;
  std::vector<double> per_reaction_errors;  // signed, kcal/mol
};

inline MetricReport compute_metrics(const std::vector<double>& errors) {
  if (errors.empty()) throw data_error("cannot compute metrics of no errors");
  MetricReport r;
  r.n = static_cast<long>(errors.size());
  r.per_reaction_errors = errors;
  double sq = 0.0, ab = 0.0, mean = 0.0;
  for (double e : errors) {
    sq += e * e;
    ab += std::abs(e);
    mean += e;
  }
  const double n = static_cast<double>(errors.size());
  mean /= n;
  double dev = 0.0;
  for (double e : errors) dev += std::abs(e - mean);
  r.rmse = std::sqrt(sq / n);
  r.mae = ab / n;
  r.mad = dev / n;
  return r;
}

// 100 * (baseline - new) / baseline: how much of the baseline error the new
// model removes.
inline double improvement_pct(double baseline, double new_value) {
  if (!(baseline > 0.0)) {
    throw data_error("improvement_pct requires a positive baseline");
  }
  return 100.0 * (baseline - new_value) / baseline;
}

namespace detail {

// Regularized incomplete beta I_x(a, b) by the Lentz continued fraction
// (Numerical Recipes 6.4); relative accuracy ~1e-14 over the arguments used
// by the t-test.
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= kEps) return h;
  }
  throw numeric_error("incomplete beta continued fraction did not converge");
}

inline double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                             std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

inline double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_var(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace detail

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

inline WelchResult welch_t_test(const std::vector<double>& a,
                                const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw data_error("welch_t_test needs at least two observations per sample");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = detail::sample_mean(a);
  const double mb = detail::sample_mean(b);
  const double va = detail::sample_var(a, ma);
  const double vb = detail::sample_var(b, mb);
  const double sa = va / na, sb = vb / nb;
  const double se2 = sa + sb;
  if (!(se2 > 0.0)) {
    throw data_error("welch_t_test is degenerate: both samples have zero variance");
  }
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  // Two-sided p: survival of the t distribution, p = I_x(df/2, 1/2) with
  // x = df / (df + t^2).
  r.p = detail::betai(r.df / 2.0, 0.5, r.df / (r.df + r.t * r.t));
  return r;
}

}  // namespace rxcu
