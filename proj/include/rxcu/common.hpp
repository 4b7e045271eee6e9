#pragma once

// Shared constants, error taxonomy, and small helpers used across the library.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace rxcu {

// CODATA-derived conversion; applied only at reporting boundaries.
inline constexpr double kHartreeToKcalMol = 627.5094740631;

// Densities below this are treated as vacuum inside fractional powers and
// logarithms so that rho -> 0 limits come out as exact zeros instead of NaN.
inline constexpr double kDensityFloor = 1e-30;

// Error taxonomy maps onto process exit codes: config 1, data 2, numeric 3.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw numeric_error("non-finite value in " + what);
}

// 17 significant digits round-trip any IEEE double through text exactly.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Signed log compression used for feature standardization: odd, monotone,
// identity-like near zero, logarithmic in the tails.
inline double signed_log1p(double v) {
  return v >= 0.0 ? std::log1p(v) : -std::log1p(-v);
}

enum class LossMode { kRbnet, kDirectU, kMseResnet };
enum class FeatureSet { kX11, kY16 };

inline const char* to_string(LossMode m) {
  switch (m) {
    case LossMode::kRbnet: return "rbnet";
    case LossMode::kDirectU: return "direct_u";
    case LossMode::kMseResnet: return "mse_resnet";
  }
  return "?";
}

inline const char* to_string(FeatureSet f) {
  return f == FeatureSet::kX11 ? "x11" : "y16";
}

inline LossMode loss_mode_from_string(const std::string& s) {
  if (s == "rbnet") return LossMode::kRbnet;
  if (s == "direct_u") return LossMode::kDirectU;
  if (s == "mse_resnet") return LossMode::kMseResnet;
  throw config_error("unknown loss mode '" + s + "'");
}

inline FeatureSet feature_set_from_string(const std::string& s) {
  if (s == "x11") return FeatureSet::kX11;
  if (s == "y16") return FeatureSet::kY16;
  throw config_error("unknown feature set '" + s + "'");
}

}  // namespace rxcu
