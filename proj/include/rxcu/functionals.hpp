#pragma once

// Conventional XC energy densities per grid point: Slater exchange, VWN
// correlation, B88 gradient-corrected exchange, LYP correlation, and the
// B3LYP / DM21-form compositions producing e_conv.
//
// All functions return energy per volume (hartree * bohr^-3) and are exactly
// zero at zero density. Densities below kDensityFloor are treated as vacuum
// so that rho -> 0 limits never pass through 0^negative intermediates.

#include <cmath>
#include <numbers>
#include <string>

#include "rxcu/common.hpp"
#include "rxcu/grid.hpp"

namespace rxcu {

inline constexpr double kPi = std::numbers::pi;

// Cx = (3/4)(3/pi)^(1/3); spin-scaled Slater prefactor is Cx * 2^(1/3).
inline const double kSlaterCx = 0.75 * std::cbrt(3.0 / kPi);
inline const double kSlaterSpinCoef = kSlaterCx * std::cbrt(2.0);

namespace detail {

inline double pow_4_3(double r) { return r * std::cbrt(r); }

inline void require_nonneg(double v, const char* what) {
  if (v < 0.0) throw data_error(std::string("negative ") + what);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Slater/Dirac exchange, spin-scaled: -Cx * 2^(1/3) * (rho_up^(4/3) +
// rho_down^(4/3)).

inline double slater_exchange_density(double rho_up, double rho_down) {
  detail::require_nonneg(rho_up, "rho_up");
  detail::require_nonneg(rho_down, "rho_down");
  double acc = 0.0;
  if (rho_up > kDensityFloor) acc += detail::pow_4_3(rho_up);
  if (rho_down > kDensityFloor) acc += detail::pow_4_3(rho_down);
  return -kSlaterSpinCoef * acc;
}

// ---------------------------------------------------------------------------
// VWN local correlation. Vosko, Wilk, Nusair, Can. J. Phys. 58, 1200 (1980):
// Pade fits of the correlation energy per electron of the uniform gas, spin
// interpolated through the spin-stiffness fit. Two historical parameter sets
// are carried; the one in effect is recorded in checkpoints.

enum class VwnVariant { kVwn5, kVwnRpa };

inline const char* to_string(VwnVariant v) {
  return v == VwnVariant::kVwn5 ? "vwn5" : "vwn_rpa";
}

inline VwnVariant vwn_variant_from_string(const std::string& s) {
  if (s == "vwn5") return VwnVariant::kVwn5;
  if (s == "vwn_rpa") return VwnVariant::kVwnRpa;
  throw config_error("unknown VWN variant '" + s + "'");
}

namespace detail {

struct VwnFit {
  double A, x0, b, c;
};

struct VwnParams {
  VwnFit para, ferro, alpha;
};

inline const VwnParams& vwn_params(VwnVariant v) {
  static const double kAlphaA = -1.0 / (6.0 * kPi * kPi);
  // Fits to the Ceperley-Alder Monte Carlo data (the common "VWN5" set).
  static const VwnParams kVwn5{{0.0310907, -0.10498, 3.72744, 12.9352},
                               {0.01554535, -0.32500, 7.06042, 18.0578},
                               {kAlphaA, -0.00475840, 1.13107, 13.0045}};
  // RPA-based fits (the set behind many legacy "VWN3" B3LYP builds).
  static const VwnParams kRpa{{0.0310907, -0.409286, 13.0720, 42.7198},
                              {0.01554535, -0.743294, 20.1231, 101.578},
                              {kAlphaA, -0.228344, 1.06835, 11.4813}};
  return v == VwnVariant::kVwn5 ? kVwn5 : kRpa;
}

inline double vwn_eps(double x, const VwnFit& f) {
  const double X = x * x + f.b * x + f.c;
  const double X0 = f.x0 * f.x0 + f.b * f.x0 + f.c;
  const double Q = std::sqrt(4.0 * f.c - f.b * f.b);
  const double at = std::atan(Q / (2.0 * x + f.b));
  return f.A * (std::log(x * x / X) + 2.0 * f.b / Q * at -
                f.b * f.x0 / X0 *
                    (std::log((x - f.x0) * (x - f.x0) / X) +
                     2.0 * (f.b + 2.0 * f.x0) / Q * at));
}

}  // namespace detail

inline double vwn_correlation_density(double rho_up, double rho_down,
                                      VwnVariant variant = VwnVariant::kVwn5) {
  detail::require_nonneg(rho_up, "rho_up");
  detail::require_nonneg(rho_down, "rho_down");
  const double rho = rho_up + rho_down;
  if (rho <= kDensityFloor) return 0.0;
  const auto& p = detail::vwn_params(variant);
  const double rs = std::cbrt(3.0 / (4.0 * kPi * rho));
  const double x = std::sqrt(rs);
  const double eps_p = detail::vwn_eps(x, p.para);
  const double eps_f = detail::vwn_eps(x, p.ferro);
  const double eps_a = detail::vwn_eps(x, p.alpha);
  double zeta = (rho_up - rho_down) / rho;
  zeta = std::clamp(zeta, -1.0, 1.0);
  const double z4 = zeta * zeta * zeta * zeta;
  const double fz = (detail::pow_4_3(1.0 + zeta) + detail::pow_4_3(1.0 - zeta) -
                     2.0) /
                    (2.0 * std::cbrt(2.0) - 2.0);
  static const double kFpp0 = 4.0 / (9.0 * (std::cbrt(2.0) - 1.0));
  const double eps =
      eps_p + eps_a * fz / kFpp0 * (1.0 - z4) + (eps_f - eps_p) * fz * z4;
  return rho * eps;
}

// ---------------------------------------------------------------------------
// B88 exchange, one spin channel. Becke, Phys. Rev. A 38, 3098 (1988):
// Slater per-spin term plus the gradient correction in x = sqrt(grad_sq) /
// rho^(4/3). Reduces exactly to the Slater value at zero gradient.

inline const double kB88Beta = 0.0042;

inline double b88_exchange_density(double rho_sigma, double grad_sq_sigma) {
  detail::require_nonneg(rho_sigma, "rho_sigma");
  detail::require_nonneg(grad_sq_sigma, "grad_sq_sigma");
  if (rho_sigma <= kDensityFloor) return 0.0;
  const double r43 = detail::pow_4_3(rho_sigma);
  const double x = std::sqrt(grad_sq_sigma) / r43;
  const double corr =
      kB88Beta * r43 * x * x / (1.0 + 6.0 * kB88Beta * x * std::asinh(x));
  return -kSlaterSpinCoef * r43 - corr;
}

// ---------------------------------------------------------------------------
// LYP correlation in the gradient form of Miehlich, Savin, Stoll, Preuss,
// Chem. Phys. Lett. 157, 200 (1989). Vanishes exactly for a single spin
// channel (one-electron limit).

inline double lyp_correlation_density(double rho_up, double rho_down,
                                      double grad_sq_up, double grad_sq_down,
                                      double grad_sq_total) {
  detail::require_nonneg(rho_up, "rho_up");
  detail::require_nonneg(rho_down, "rho_down");
  detail::require_nonneg(grad_sq_up, "grad_sq_up");
  detail::require_nonneg(grad_sq_down, "grad_sq_down");
  detail::require_nonneg(grad_sq_total, "grad_sq_total");
  const double rho = rho_up + rho_down;
  if (rho <= kDensityFloor) return 0.0;
  constexpr double a = 0.04918, b = 0.132, c = 0.2533, d = 0.349;
  const double cf = 0.3 * std::cbrt((3.0 * kPi * kPi) * (3.0 * kPi * kPi));
  const double r13 = 1.0 / std::cbrt(rho);
  const double D = 1.0 + d * r13;
  const double rho_m113 =
      1.0 / (rho * rho * rho * std::cbrt(rho) * std::cbrt(rho));
  const double omega = std::exp(-c * r13) / D * rho_m113;
  const double delta = c * r13 + d * r13 / D;
  const double gud = (grad_sq_total - grad_sq_up - grad_sq_down) / 2.0;
  const double r83u = detail::pow_4_3(rho_up) * detail::pow_4_3(rho_up);
  const double r83d = detail::pow_4_3(rho_down) * detail::pow_4_3(rho_down);
  const double i1 = std::cbrt(4.0) * 144.0 * cf * (r83u + r83d) +
                    (47.0 - 7.0 * delta) * grad_sq_total -
                    (45.0 - delta) * (grad_sq_up + grad_sq_down) +
                    2.0 * (11.0 - delta) / rho *
                        (rho_up * grad_sq_up + rho_down * grad_sq_down);
  const double i2 = -4.0 / 3.0 * rho * rho * gud -
                    (rho_up * rho_up * grad_sq_down +
                     rho_down * rho_down * grad_sq_up);
  return -4.0 * a * rho_up * rho_down / (rho * D) -
         a * b * omega * (rho_up * rho_down / 18.0 * i1 + i2);
}

// ---------------------------------------------------------------------------
// Local HF exchange: a pass-through lookup of the stored spin-summed feature.
// The omega2 (omega -> infinity) channel serves as full HF exchange in the
// hybrid composition.

enum class HfChannel { kOmega1, kOmega2 };

inline double hf_exchange_density(const PointFeatures& f, HfChannel ch) {
  return ch == HfChannel::kOmega1 ? f.e_hf_w1_up + f.e_hf_w1_down
                                  : f.e_hf_w2_up + f.e_hf_w2_down;
}

// ---------------------------------------------------------------------------
// Compositions.

struct B3lypCoeffs {
  double a = 0.20;
  double b = 0.72;
  double c = 0.81;
};

struct Dm21Factors {
  double a1 = 1.0;
  double a2 = 0.0;
  double a3 = 0.0;
};

enum class ConventionalKind { kB3lyp, kDm21Form, kLdaOnly };

inline const char* to_string(ConventionalKind k) {
  switch (k) {
    case ConventionalKind::kB3lyp: return "b3lyp";
    case ConventionalKind::kDm21Form: return "dm21_form";
    case ConventionalKind::kLdaOnly: return "lda_only";
  }
  return "?";
}

inline ConventionalKind conventional_kind_from_string(const std::string& s) {
  if (s == "b3lyp") return ConventionalKind::kB3lyp;
  if (s == "dm21_form") return ConventionalKind::kDm21Form;
  if (s == "lda_only") return ConventionalKind::kLdaOnly;
  throw config_error("unknown conventional functional kind '" + s + "'");
}

struct ConventionalSpec {
  ConventionalKind kind = ConventionalKind::kB3lyp;
  B3lypCoeffs b3lyp;
  Dm21Factors dm21;
  VwnVariant vwn = VwnVariant::kVwn5;
};

inline double lda_xc_density(double rho_up, double rho_down,
                             VwnVariant variant = VwnVariant::kVwn5) {
  return slater_exchange_density(rho_up, rho_down) +
         vwn_correlation_density(rho_up, rho_down, variant);
}

// e = ex_lda + ec_lda + a (ex_hf - ex_lda) + b (ex_gga - ex_lda)
//                     + c (ec_gga - ec_lda)
// with ex_hf the omega2 channel, ex_gga = B88, ec_gga = LYP.
inline double b3lyp_density(const PointFeatures& f, const B3lypCoeffs& c,
                            VwnVariant variant = VwnVariant::kVwn5) {
  const double ex_lda = slater_exchange_density(f.rho_up, f.rho_down);
  const double ec_lda = vwn_correlation_density(f.rho_up, f.rho_down, variant);
  const double ex_hf = hf_exchange_density(f, HfChannel::kOmega2);
  const double ex_gga = b88_exchange_density(f.rho_up, f.grad_sq_up) +
                        b88_exchange_density(f.rho_down, f.grad_sq_down);
  const double ec_gga = lyp_correlation_density(
      f.rho_up, f.rho_down, f.grad_sq_up, f.grad_sq_down, f.grad_sq_total);
  return ex_lda + ec_lda + c.a * (ex_hf - ex_lda) + c.b * (ex_gga - ex_lda) +
         c.c * (ec_gga - ec_lda);
}

// e = a1 e_lda_xc + a2 e_hf_w2 + a3 e_hf_w1, with e_lda_xc the full
// (exchange + correlation) LDA density.
inline double dm21_form_density(const PointFeatures& f, const Dm21Factors& d,
                                VwnVariant variant = VwnVariant::kVwn5) {
  if (!std::isfinite(d.a1) || !std::isfinite(d.a2) || !std::isfinite(d.a3)) {
    throw data_error("non-finite dm21 factor");
  }
  return d.a1 * lda_xc_density(f.rho_up, f.rho_down, variant) +
         d.a2 * hf_exchange_density(f, HfChannel::kOmega2) +
         d.a3 * hf_exchange_density(f, HfChannel::kOmega1);
}

inline double conventional_density(const PointFeatures& f,
                                   const ConventionalSpec& spec) {
  switch (spec.kind) {
    case ConventionalKind::kB3lyp:
      return b3lyp_density(f, spec.b3lyp, spec.vwn);
    case ConventionalKind::kDm21Form:
      return dm21_form_density(f, spec.dm21, spec.vwn);
    case ConventionalKind::kLdaOnly:
      return lda_xc_density(f.rho_up, f.rho_down, spec.vwn);
  }
  throw config_error("unhandled conventional functional kind");
}

}  // namespace rxcu
