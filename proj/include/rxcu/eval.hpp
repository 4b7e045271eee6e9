#pragma once

// Model evaluation: per-reaction energy reports, aggregate error metrics,
// residual-field export for visual inspection, and the clamp-constant sweep.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rxcu/checkpoint.hpp"
#include "rxcu/dataset.hpp"
#include "rxcu/energy.hpp"
#include "rxcu/io.hpp"
#include "rxcu/metrics.hpp"
#include "rxcu/training.hpp"

namespace rxcu {

struct ReactionRow {
  std::string reaction_id;
  double e_conv = 0.0;   // hartree
  double e_ru = 0.0;     // hartree
  double sigma = 0.0;    // hartree
  double e_star = 0.0;   // hartree
  double error = 0.0;    // predicted - reference, hartree

  double predicted() const { return e_conv + e_ru; }
};

struct EvalOutcome {
  std::vector<ReactionRow> rows;
  MetricReport metrics;  // over signed errors in kcal/mol
};

// Species energies for every species referenced by the given reactions,
// computed once each.
inline std::map<std::string, SpeciesEnergies> species_energy_map(
    const Dataset& data, const std::vector<std::string>& reaction_ids,
    const Model& model) {
  std::map<std::string, const ReactionRecord*> by_id;
  for (const auto& r : data.reactions) by_id[r.reaction_id] = &r;
  std::set<std::string> species;
  for (const auto& id : reaction_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw data_error("unknown reaction id '" + id + "'");
    for (const auto& [sp, c] : it->second->terms) species.insert(sp);
  }
  std::map<std::string, SpeciesEnergies> out;
  for (const auto& sp : species) {
    out[sp] = species_energies(data.grid_for(sp), model);
  }
  return out;
}

inline EvalOutcome evaluate(const Dataset& data,
                            const std::vector<std::string>& reaction_ids,
                            const Model& model) {
  model.validate();
  if (reaction_ids.empty()) throw data_error("no reactions to evaluate");
  std::map<std::string, const ReactionRecord*> by_id;
  for (const auto& r : data.reactions) by_id[r.reaction_id] = &r;
  const auto energies = species_energy_map(data, reaction_ids, model);

  EvalOutcome out;
  std::vector<double> errors_kcal;
  errors_kcal.reserve(reaction_ids.size());
  for (const auto& id : reaction_ids) {
    const ReactionRecord& rec = *by_id.at(id);
    const EnergyBreakdown bd =
        reaction_energy(rec, energies, model.clamp.epsilon);
    ReactionRow row;
    row.reaction_id = id;
    row.e_conv = bd.e_conv_total;
    row.e_ru = bd.e_ru_total;
    row.sigma = bd.sigma;
    row.e_star = rec.e_star;
    row.error = bd.predicted() - rec.e_star;
    errors_kcal.push_back(row.error * kHartreeToKcalMol);
    out.rows.push_back(std::move(row));
  }
  out.metrics = compute_metrics(errors_kcal);
  return out;
}

inline void write_eval_report(const EvalOutcome& outcome,
                              const std::string& path) {
  auto out = detail::open_out(path);
  out << "reaction_id\te_conv_ha\te_ru_ha\tsigma_ha\te_star_ha\terror_ha"
         "\te_conv_kcal\te_ru_kcal\tsigma_kcal\te_star_kcal\terror_kcal\n";
  for (const auto& r : outcome.rows) {
    out << r.reaction_id << "\t" << format_g17(r.e_conv) << "\t"
        << format_g17(r.e_ru) << "\t" << format_g17(r.sigma) << "\t"
        << format_g17(r.e_star) << "\t" << format_g17(r.error);
    const double k = kHartreeToKcalMol;
    out << "\t" << format_g17(r.e_conv * k) << "\t" << format_g17(r.e_ru * k)
        << "\t" << format_g17(r.sigma * k) << "\t" << format_g17(r.e_star * k)
        << "\t" << format_g17(r.error * k) << "\n";
  }
  if (!out) throw data_error("failed writing evaluation report: " + path);
}

// Ordered (name, value) rows so callers control presentation.
using MetricRows = std::vector<std::pair<std::string, double>>;

inline void write_metrics(const MetricRows& rows, const std::string& path) {
  auto out = detail::open_out(path);
  out << "metric\tvalue\n";
  for (const auto& [name, value] : rows) {
    out << name << "\t" << format_g17(value) << "\n";
  }
  if (!out) throw data_error("failed writing metrics: " + path);
}

// ---------------------------------------------------------------------------
// Residual field export: per grid point the position, the magnitude of the
// learned residual density on a log scale, its log-variance, and the total
// electron density.

struct FieldRow {
  double x = 0, y = 0, z = 0;
  double log_abs_e_bar = 0;
  double s_bar = 0;
  double rho = 0;
};

inline std::vector<FieldRow> export_residual_field(const MolecularGrid& grid,
                                                   const Model& model) {
  model.validate();
  GridEval ev = featurize(grid, model.conv, model.feature_set);
  Eigen::MatrixXd std_rows = model.standardizer.apply(ev.raw);
  SpeciesForward fwd = species_forward(ev, std_rows, model);
  std::vector<FieldRow> rows;
  rows.reserve(grid.points.size());
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    const auto& p = grid.points[i];
    FieldRow row;
    row.x = p.x;
    row.y = p.y;
    row.z = p.z;
    row.log_abs_e_bar =
        std::log(std::abs(fwd.e_bar[static_cast<Eigen::Index>(i)]) +
                 kDensityFloor);
    row.s_bar = fwd.s_bar[static_cast<Eigen::Index>(i)];
    row.rho = p.f.rho_total();
    rows.push_back(row);
  }
  return rows;
}

inline void write_residual_field(const std::vector<FieldRow>& rows,
                                 const std::string& path) {
  auto out = detail::open_out(path);
  out << "x\ty\tz\tlog_abs_e_bar\ts_bar\trho\n";
  for (const auto& r : rows) {
    out << format_g17(r.x) << "\t" << format_g17(r.y) << "\t"
        << format_g17(r.z) << "\t" << format_g17(r.log_abs_e_bar) << "\t"
        << format_g17(r.s_bar) << "\t" << format_g17(r.rho) << "\n";
  }
  if (!out) throw data_error("failed writing residual field: " + path);
}

// ---------------------------------------------------------------------------
// Clamp-constant sweep: retrain from scratch for every (k1, k2) pair with
// the same seed and report test RMSE. Rows come out with k1 varying slowest.

struct SweepRow {
  double k1 = 0, k2 = 0;
  double rmse_kcal = 0;
};

inline std::vector<SweepRow> sweep_clamp(const TrainConfig& base,
                                         const Dataset& data,
                                         const SplitAssignment& split,
                                         const ConventionalSpec& conv,
                                         const std::vector<double>& k1_values,
                                         const std::vector<double>& k2_values) {
  if (k1_values.empty() || k2_values.empty()) {
    throw config_error("sweep needs at least one k1 and one k2 value");
  }
  if (split.test.empty()) throw data_error("sweep needs a non-empty test set");
  std::vector<SweepRow> rows;
  rows.reserve(k1_values.size() * k2_values.size());
  for (double k1 : k1_values) {
    for (double k2 : k2_values) {
      TrainConfig cfg = base;
      cfg.clamp.k1 = k1;
      cfg.clamp.k2 = k2;
      cfg.validate();
      TrainResult result = train(cfg, data, split, conv);
      EvalOutcome outcome = evaluate(data, split.test, result.model);
      rows.push_back({k1, k2, outcome.metrics.rmse});
    }
  }
  return rows;
}

inline void write_sweep(const std::vector<SweepRow>& rows,
                        const std::string& path) {
  auto out = detail::open_out(path);
  out << "k1\tk2\trmse_kcal\n";
  for (const auto& r : rows) {
    out << format_g17(r.k1) << "\t" << format_g17(r.k2) << "\t"
        << format_g17(r.rmse_kcal) << "\n";
  }
  if (!out) throw data_error("failed writing sweep: " + path);
}

}  // namespace rxcu
