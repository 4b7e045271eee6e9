#pragma once

// Per-point density features, quadrature grids, feature-vector assembly,
// and density-weighted integration.
//
// All quantities are in hartree atomic units. Unit conversion to kcal/mol
// happens only at reporting boundaries (see metrics/eval).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rxcu/common.hpp"

namespace rxcu {

// The 11 per-point inputs, stored in their canonical order:
//   rho_up, rho_down,
//   grad_sq_up, grad_sq_down, grad_sq_total,
//   tau_up, tau_down,
//   e_hf_w1_up, e_hf_w1_down, e_hf_w2_up, e_hf_w2_down
// e_hf_w1_* are local range-separated HF exchange densities at omega = 0.4;
// e_hf_w2_* are the omega -> infinity (full HF exchange) channel.
struct PointFeatures {
  double rho_up = 0.0;
  double rho_down = 0.0;
  double grad_sq_up = 0.0;
  double grad_sq_down = 0.0;
  double grad_sq_total = 0.0;
  double tau_up = 0.0;
  double tau_down = 0.0;
  double e_hf_w1_up = 0.0;
  double e_hf_w1_down = 0.0;
  double e_hf_w2_up = 0.0;
  double e_hf_w2_down = 0.0;

  static constexpr int kCount = 11;

  double operator[](int i) const {
    switch (i) {
      case 0: return rho_up;
      case 1: return rho_down;
      case 2: return grad_sq_up;
      case 3: return grad_sq_down;
      case 4: return grad_sq_total;
      case 5: return tau_up;
      case 6: return tau_down;
      case 7: return e_hf_w1_up;
      case 8: return e_hf_w1_down;
      case 9: return e_hf_w2_up;
      case 10: return e_hf_w2_down;
    }
    throw data_error("feature index out of range");
  }

  double& at(int i) {
    switch (i) {
      case 0: return rho_up;
      case 1: return rho_down;
      case 2: return grad_sq_up;
      case 3: return grad_sq_down;
      case 4: return grad_sq_total;
      case 5: return tau_up;
      case 6: return tau_down;
      case 7: return e_hf_w1_up;
      case 8: return e_hf_w1_down;
      case 9: return e_hf_w2_up;
      case 10: return e_hf_w2_down;
    }
    throw data_error("feature index out of range");
  }

  static const char* name(int i) {
    static constexpr const char* kNames[kCount] = {
        "rho_up",      "rho_down",     "grad_sq_up",  "grad_sq_down",
        "grad_sq_total", "tau_up",     "tau_down",    "e_hf_w1_up",
        "e_hf_w1_down", "e_hf_w2_up",  "e_hf_w2_down"};
    return kNames[i];
  }

  double rho_total() const { return rho_up + rho_down; }
};

struct GridPoint {
  double x = 0.0, y = 0.0, z = 0.0;  // bohr
  double weight = 0.0;               // quadrature weight incl. volume element
  PointFeatures f;
};

struct MolecularGrid {
  std::string species_id;
  std::vector<GridPoint> points;
  double n_electrons_up = 0.0;
  double n_electrons_down = 0.0;

  double n_electrons() const { return n_electrons_up + n_electrons_down; }
};

// The 16-component network input: the 11 point features followed by the
// spin-summed HF channels, the LDA XC density, the conventional XC density,
// and the quadrature weight. Order is fixed; downstream standardization and
// checkpoints depend on it.
struct ExtendedFeatures {
  static constexpr int kCount = 16;
  std::array<double, kCount> v{};

  static const char* name(int i) {
    if (i < PointFeatures::kCount) return PointFeatures::name(i);
    static constexpr const char* kTail[5] = {"e_hf_w1", "e_hf_w2", "e_lda",
                                             "e_conv", "weight"};
    return kTail[i - PointFeatures::kCount];
  }
};

inline ExtendedFeatures build_extended_features(const PointFeatures& x,
                                                double e_lda, double e_conv,
                                                double w) {
  ExtendedFeatures y;
  for (int i = 0; i < PointFeatures::kCount; ++i) {
    const double c = x[i];
    if (!std::isfinite(c)) {
      throw data_error(std::string("non-finite feature component ") +
                       PointFeatures::name(i) + " (index " + std::to_string(i) +
                       ")");
    }
    y.v[static_cast<std::size_t>(i)] = c;
  }
  if (!std::isfinite(e_lda)) throw data_error("non-finite e_lda (index 13)");
  if (!std::isfinite(e_conv)) throw data_error("non-finite e_conv (index 14)");
  if (!std::isfinite(w)) throw data_error("non-finite weight (index 15)");
  y.v[11] = x.e_hf_w1_up + x.e_hf_w1_down;
  y.v[12] = x.e_hf_w2_up + x.e_hf_w2_down;
  y.v[13] = e_lda;
  y.v[14] = e_conv;
  y.v[15] = w;
  return y;
}

// Fixed-order quadrature sum of w * rho_total * value over the grid. The
// summation order is the grid index order so results are bit-reproducible.
inline double integrate_density_weighted(const MolecularGrid& grid,
                                         std::span<const double> values) {
  if (values.size() != grid.points.size()) {
    throw data_error("value field length " + std::to_string(values.size()) +
                     " does not match grid point count " +
                     std::to_string(grid.points.size()) + " for species " +
                     grid.species_id);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    const GridPoint& p = grid.points[i];
    acc += p.weight * p.f.rho_total() * values[i];
  }
  if (!std::isfinite(acc)) {
    throw numeric_error("non-finite integral over species " + grid.species_id);
  }
  return acc;
}

struct GridViolation {
  long point = -1;  // -1 for grid-level findings
  bool warning = false;
  std::string what;
};

struct ValidationReport {
  std::vector<GridViolation> findings;

  bool ok() const {
    return std::none_of(findings.begin(), findings.end(),
                        [](const GridViolation& v) { return !v.warning; });
  }

  std::string str() const {
    std::string out;
    for (const auto& v : findings) {
      out += v.warning ? "warning" : "violation";
      if (v.point >= 0) out += " at point " + std::to_string(v.point);
      out += ": " + v.what + "\n";
    }
    return out;
  }
};

// Report-only check of every type invariant plus electron-count
// normalization (default tolerance 0.5%). Positive HF exchange densities
// are flagged as warnings, not violations: synthetic tests may probe them.
inline ValidationReport validate_grid(const MolecularGrid& grid,
                                      double norm_tol = 0.005) {
  ValidationReport rep;
  auto bad = [&](long pt, const std::string& what) {
    rep.findings.push_back({pt, false, what});
  };
  if (grid.points.empty()) bad(-1, "empty point list");
  double count = 0.0;
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    const long pt = static_cast<long>(i);
    const GridPoint& p = grid.points[i];
    if (!(p.weight > 0.0)) bad(pt, "weight not positive");
    for (int k = 0; k < PointFeatures::kCount; ++k) {
      if (!std::isfinite(p.f[k]))
        bad(pt, std::string("non-finite ") + PointFeatures::name(k));
    }
    if (p.f.rho_up < 0.0) bad(pt, "rho_up negative");
    if (p.f.rho_down < 0.0) bad(pt, "rho_down negative");
    if (p.f.grad_sq_up < 0.0) bad(pt, "grad_sq_up negative");
    if (p.f.grad_sq_down < 0.0) bad(pt, "grad_sq_down negative");
    if (p.f.grad_sq_total < 0.0) bad(pt, "grad_sq_total negative");
    if (p.f.tau_up < 0.0) bad(pt, "tau_up negative");
    if (p.f.tau_down < 0.0) bad(pt, "tau_down negative");
    for (int k = 7; k < PointFeatures::kCount; ++k) {
      if (p.f[k] > 0.0) {
        rep.findings.push_back(
            {pt, true, std::string(PointFeatures::name(k)) + " positive"});
      }
    }
    count += p.weight * p.f.rho_total();
  }
  const double declared = grid.n_electrons();
  if (declared > 0.0) {
    const double rel = std::abs(count - declared) / declared;
    if (!(rel <= norm_tol)) {
      bad(-1, "electron count " + format_g17(count) + " deviates from declared " +
                  format_g17(declared) + " by " + format_g17(rel * 100.0) +
                  "% (tolerance " + format_g17(norm_tol * 100.0) + "%)");
    }
  }
  return rep;
}

// Point order is semantically significant (fixed-order sums). Reordering must
// go through this canonicalization: stable sort by position, so integration
// over the canonical order is bit-identical no matter the input permutation.
inline MolecularGrid canonicalized(const MolecularGrid& grid) {
  MolecularGrid out = grid;
  std::stable_sort(out.points.begin(), out.points.end(),
                   [](const GridPoint& a, const GridPoint& b) {
                     if (a.x != b.x) return a.x < b.x;
                     if (a.y != b.y) return a.y < b.y;
                     return a.z < b.z;
                   });
  return out;
}

}  // namespace rxcu
