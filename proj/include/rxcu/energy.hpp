#pragma once

// Species- and reaction-level energy assembly: featurization of a grid for
// the network, the clamped per-point residual pass, and the stoichiometric
// combination into reaction energies and uncertainties.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "rxcu/checkpoint.hpp"
#include "rxcu/common.hpp"
#include "rxcu/dataset.hpp"
#include "rxcu/functionals.hpp"
#include "rxcu/grid.hpp"
#include "rxcu/rbnet.hpp"

namespace rxcu {

// Cached per-grid quantities that stay fixed while parameters change during
// training: raw (unstandardized) feature rows plus the per-point
// conventional/LDA densities and the density-weighted quadrature factors.
struct GridEval {
  std::string species_id;
  Eigen::MatrixXd raw;     // n x 16 (y16) or n x 11 (x11)
  Eigen::VectorXd e_conv;  // conventional XC density per point
  Eigen::VectorXd wr;      // weight * rho_total per point
  double e_conv_total = 0.0;  // fixed-order Sum w * rho * e_conv
};

inline GridEval featurize(const MolecularGrid& grid,
                          const ConventionalSpec& spec, FeatureSet fs) {
  GridEval ev;
  ev.species_id = grid.species_id;
  const Eigen::Index n = static_cast<Eigen::Index>(grid.points.size());
  const int width = fs == FeatureSet::kY16 ? 16 : 11;
  ev.raw.resize(n, width);
  ev.e_conv.resize(n);
  ev.wr.resize(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const GridPoint& p = grid.points[static_cast<std::size_t>(i)];
    const double e_conv = conventional_density(p.f, spec);
    if (fs == FeatureSet::kY16) {
      const double e_lda = lda_xc_density(p.f.rho_up, p.f.rho_down, spec.vwn);
      const ExtendedFeatures y =
          build_extended_features(p.f, e_lda, e_conv, p.weight);
      for (int k = 0; k < ExtendedFeatures::kCount; ++k) {
        ev.raw(i, k) = y.v[static_cast<std::size_t>(k)];
      }
    } else {
      for (int k = 0; k < PointFeatures::kCount; ++k) ev.raw(i, k) = p.f[k];
    }
    ev.e_conv(i) = e_conv;
    ev.wr(i) = p.weight * p.f.rho_total();
    acc += ev.wr(i) * e_conv;
  }
  if (!std::isfinite(acc)) {
    throw numeric_error("non-finite conventional energy for species " +
                        grid.species_id);
  }
  ev.e_conv_total = acc;
  return ev;
}

struct SpeciesEnergies {
  double e_conv = 0.0;  // E degrees: conventional XC energy
  double e_ru = 0.0;    // E^RU: integrated residual correction
  double sigma = 0.0;   // integrated per-point standard deviation
};

// Full forward state for one species, retained for the backward pass.
struct SpeciesForward {
  ForwardCache cache;
  Eigen::VectorXd e_bar, s_bar;
  std::vector<ClampGrads> clamp_grads;
  SpeciesEnergies totals;
};

// Runs the network over the (standardized) feature rows and reduces to
// species totals:
//   E deg  = Sum w rho e_conv        (independent of parameters)
//   E^RU   = Sum w rho e_bar
//   sigma  = Sum w rho exp(s_bar/2)
// In the direct (non-residual) mode the heads are used unclamped and their
// mean is the total energy density: totals.e_conv is reported as 0 and e_ru
// carries the whole prediction, so e_conv + e_ru is the prediction in every
// mode.
inline SpeciesForward species_forward(const GridEval& ev,
                                      const Eigen::MatrixXd& standardized,
                                      const Model& model) {
  SpeciesForward sf;
  sf.cache = forward_batch(model.params, standardized);
  const Eigen::Index n = ev.wr.size();
  if (sf.cache.rows() != n) {
    throw data_error("feature row count mismatch for species " +
                     ev.species_id);
  }
  sf.e_bar.resize(n);
  sf.s_bar.resize(n);
  sf.clamp_grads.resize(static_cast<std::size_t>(n));
  const bool direct = model.loss_mode == LossMode::kDirectU;
  double e_ru = 0.0, sigma = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double eb, sb;
    if (direct) {
      eb = sf.cache.e0(i);
      sb = sf.cache.s0(i);
      sf.clamp_grads[static_cast<std::size_t>(i)] = {1.0, 1.0, 0.0};
    } else {
      const ResidualOutput out = clamp_residual(sf.cache.e0(i), sf.cache.s0(i),
                                                ev.e_conv(i), model.clamp);
      eb = out.e_bar;
      sb = out.s_bar;
      sf.clamp_grads[static_cast<std::size_t>(i)] = clamp_residual_grads(
          sf.cache.e0(i), sf.cache.s0(i), ev.e_conv(i), model.clamp);
    }
    sf.e_bar(i) = eb;
    sf.s_bar(i) = sb;
    e_ru += ev.wr(i) * eb;
    sigma += ev.wr(i) * std::exp(0.5 * sb);
  }
  sf.totals.e_conv = direct ? 0.0 : ev.e_conv_total;
  sf.totals.e_ru = e_ru;
  sf.totals.sigma = sigma;
  if (!std::isfinite(e_ru) || !std::isfinite(sigma)) {
    throw numeric_error("non-finite species totals for " + ev.species_id);
  }
  return sf;
}

inline SpeciesEnergies species_energies(const MolecularGrid& grid,
                                        const Model& model) {
  const GridEval ev = featurize(grid, model.conv, model.feature_set);
  return species_forward(ev, model.standardizer.apply(ev.raw), model).totals;
}

struct EnergyBreakdown {
  double e_conv_total = 0.0;  // E deg for the reaction (hartree)
  double e_ru_total = 0.0;    // E^RU for the reaction (hartree)
  double sigma = 0.0;         // sigma_rxn (hartree)
  double s = 0.0;             // log sigma_rxn^2, floored at log epsilon

  double predicted() const { return e_conv_total + e_ru_total; }
};

// Signed stoichiometric sums for the mean energies; uncertainties combine by
// absolute coefficient (they do not cancel between reaction sides). The
// reaction log-variance is floored at log(epsilon) so a zero-variance
// prediction stays finite.
inline EnergyBreakdown reaction_energy(
    const ReactionRecord& record,
    const std::map<std::string, SpeciesEnergies>& species, double epsilon) {
  EnergyBreakdown out;
  for (const auto& [id, coeff] : record.terms) {
    auto it = species.find(id);
    if (it == species.end()) {
      throw data_error("reaction " + record.reaction_id +
                       " references missing species '" + id + "'");
    }
    const double c = static_cast<double>(coeff);
    out.e_conv_total += c * it->second.e_conv;
    out.e_ru_total += c * it->second.e_ru;
    out.sigma += std::abs(c) * it->second.sigma;
  }
  out.s = std::log(std::max(out.sigma * out.sigma, epsilon));
  if (!std::isfinite(out.e_conv_total) || !std::isfinite(out.e_ru_total) ||
      !std::isfinite(out.s)) {
    throw numeric_error("non-finite energy breakdown for reaction " +
                        record.reaction_id);
  }
  return out;
}

}  // namespace rxcu
