#pragma once

// Heteroscedastic and ablation losses, the deterministic SGD loop with
// cosine-annealed learning rate, and the dataset partition procedure
// (forced atom coverage, element coverage by descending atomic number,
// size-stratified fill to a 6:2:2 ratio).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "rxcu/checkpoint.hpp"
#include "rxcu/common.hpp"
#include "rxcu/dataset.hpp"
#include "rxcu/energy.hpp"
#include "rxcu/rng.hpp"

namespace rxcu {

struct TrainConfig {
  double learning_rate = 1e-3;
  double lr_floor = 0.0;
  int epochs = 500;  // documented default for synthetic runs
  int batch_size = 16;
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::kRbnet;
  FeatureSet feature_set = FeatureSet::kY16;
  ClampConfig clamp;
  Activation activation = Activation::kTanh;

  void validate() const {
    if (!(learning_rate > 0.0)) throw config_error("learning_rate must be > 0");
    if (!(lr_floor >= 0.0) || lr_floor > learning_rate) {
      throw config_error("lr_floor must lie in [0, learning_rate]");
    }
    if (epochs < 1) throw config_error("epochs must be >= 1");
    if (batch_size < 1) throw config_error("batch_size must be >= 1");
    clamp.validate();
    if (loss_mode == LossMode::kDirectU && feature_set != FeatureSet::kX11) {
      throw config_error("direct_u mode predicts from the 11 raw features");
    }
  }
};

// ---------------------------------------------------------------------------
// Losses.

struct LossTerms {
  double loss = 0.0;
  std::vector<double> terms;  // per-reaction decomposition
};

// Mean over reactions of 1/2 exp(-s) r^2 + 1/2 s with r = E_conv - E* + E_RU.
inline LossTerms rbnet_loss(const std::vector<EnergyBreakdown>& breakdowns,
                            const std::vector<double>& e_star) {
  if (breakdowns.size() != e_star.size() || breakdowns.empty()) {
    throw data_error("rbnet_loss: breakdown/reference length mismatch");
  }
  LossTerms out;
  out.terms.reserve(breakdowns.size());
  for (std::size_t i = 0; i < breakdowns.size(); ++i) {
    const double r = breakdowns[i].predicted() - e_star[i];
    const double s = breakdowns[i].s;
    const double term = 0.5 * std::exp(-s) * r * r + 0.5 * s;
    out.terms.push_back(term);
    out.loss += term;
  }
  out.loss /= static_cast<double>(breakdowns.size());
  return out;
}

// Direct (non-residual) loss. Same functional form: the inverse-variance
// weight exp(-s) is used rather than a literal sigma^2 prefactor, which
// would be unbounded below as sigma -> 0.
inline double direct_loss(const std::vector<double>& e_u,
                          const std::vector<double>& s,
                          const std::vector<double>& e_star) {
  if (e_u.size() != s.size() || e_u.size() != e_star.size() || e_u.empty()) {
    throw data_error("direct_loss: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < e_u.size(); ++i) {
    const double r = e_u[i] - e_star[i];
    acc += 0.5 * std::exp(-s[i]) * r * r + 0.5 * s[i];
  }
  return acc / static_cast<double>(e_u.size());
}

inline double mse_loss(const std::vector<double>& predictions,
                       const std::vector<double>& references) {
  if (predictions.size() != references.size() || predictions.empty()) {
    throw data_error("mse_loss: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - references[i];
    acc += r * r;
  }
  return acc / static_cast<double>(predictions.size());
}

// Cosine annealing from learning_rate at epoch 0 down to lr_floor at the
// final epoch.
inline double cosine_lr(double learning_rate, double lr_floor, int epoch,
                        int total_epochs) {
  if (total_epochs <= 1) return learning_rate;
  const double t =
      static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return lr_floor + 0.5 * (learning_rate - lr_floor) *
                        (1.0 + std::cos(std::numbers::pi * t));
}

// ---------------------------------------------------------------------------
// Dataset partition. The unit of assignment is the reaction; each reaction
// is represented by its principal species (largest atom count, earliest term
// on ties). Procedure: reactions whose principal species contains a single
// element type go to train; then elements are processed by descending atomic
// number, adding one randomly chosen unassigned covering reaction to train
// per uncovered element; the remainder is dealt out stratified by principal
// atom count (2,3,4,5,6,>6) to whichever bucket is furthest below its 6:2:2
// target.
inline SplitAssignment split_dataset(
    const std::vector<ReactionRecord>& reactions,
    const std::map<std::string, Composition>& compositions,
    std::uint64_t seed) {
  const std::size_t n = reactions.size();
  if (n == 0) throw data_error("cannot split an empty reaction list");

  struct Info {
    int bucket = 0;  // 0 unassigned, 1 train, 2 val, 3 test
    int principal_atoms = 0;
    bool single_element = false;
    std::set<std::string> elements;
  };
  std::vector<Info> info(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ReactionRecord& r = reactions[i];
    r.validate();
    int best_atoms = -1;
    const Composition* principal = nullptr;
    for (const auto& [id, coeff] : r.terms) {
      auto it = compositions.find(id);
      if (it == compositions.end()) {
        throw data_error("no composition metadata for species '" + id + "'");
      }
      for (const auto& [el, cnt] : it->second) {
        element_z(el);  // rejects unknown symbols
        info[i].elements.insert(el);
      }
      const int atoms = atom_count(it->second);
      if (atoms > best_atoms) {
        best_atoms = atoms;
        principal = &it->second;
      }
    }
    info[i].principal_atoms = best_atoms;
    info[i].single_element = principal->size() == 1;
  }

  const long t_train = std::lround(0.6 * static_cast<double>(n));
  const long t_val = std::lround(0.2 * static_cast<double>(n));
  const long t_test = static_cast<long>(n) - t_train - t_val;
  long count[4] = {0, 0, 0, 0};
  auto assign = [&](std::size_t i, int bucket) {
    info[i].bucket = bucket;
    ++count[bucket];
  };

  // 1. Single-element principal species (the "related atoms" rule).
  for (std::size_t i = 0; i < n; ++i) {
    if (info[i].single_element) assign(i, 1);
  }

  // 2. Element coverage, heaviest first.
  std::map<std::string, int> z_of;
  for (const auto& inf : info) {
    for (const auto& el : inf.elements) z_of[el] = element_z(el);
  }
  std::vector<std::string> by_z;
  for (const auto& [el, z] : z_of) by_z.push_back(el);
  std::sort(by_z.begin(), by_z.end(), [&](const auto& a, const auto& b) {
    return z_of[a] != z_of[b] ? z_of[a] > z_of[b] : a < b;
  });
  Rng rng(seed);
  for (const auto& el : by_z) {
    bool covered = false;
    for (std::size_t i = 0; i < n && !covered; ++i) {
      covered = info[i].bucket == 1 && info[i].elements.count(el) > 0;
    }
    if (covered) continue;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      if (info[i].bucket == 0 && info[i].elements.count(el) > 0) {
        candidates.push_back(i);
      }
    }
    if (candidates.empty()) {
      throw data_error("element " + el +
                       " cannot be covered by any available reaction");
    }
    assign(candidates[static_cast<std::size_t>(rng.below(candidates.size()))],
           1);
  }

  // 3. Size-stratified fill toward the 6:2:2 targets.
  const long target[4] = {0, t_train, t_val, t_test};
  for (int stratum = 2; stratum <= 7; ++stratum) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (info[i].bucket != 0) continue;
      const int key = std::clamp(info[i].principal_atoms, 2, 7);
      if (key == stratum) members.push_back(i);
    }
    rng.shuffle(members);
    for (std::size_t i : members) {
      int best = 1;
      long best_deficit = target[1] - count[1];
      for (int bk = 2; bk <= 3; ++bk) {
        const long deficit = target[bk] - count[bk];
        if (deficit > best_deficit) {
          best = bk;
          best_deficit = deficit;
        }
      }
      assign(i, best);
    }
  }

  SplitAssignment out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& id = reactions[i].reaction_id;
    if (info[i].bucket == 1) out.train.push_back(id);
    else if (info[i].bucket == 2) out.validation.push_back(id);
    else out.test.push_back(id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training loop.

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_rmse_kcal = 0.0;
};

struct TrainResult {
  Model model;  // best-validation checkpoint
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_rmse_kcal = 0.0;
};

// Cached per-species inputs: raw features plus their standardized form,
// computed once and reused across epochs.
struct PreparedSpecies {
  GridEval eval;
  Eigen::MatrixXd standardized;
};

namespace detail {

// Per-reaction loss term and its derivatives w.r.t. the predicted energy and
// the reaction sigma.
struct TermGrad {
  double term = 0.0;
  double d_pred = 0.0;
  double d_sigma = 0.0;
};

inline TermGrad loss_term(LossMode mode, const EnergyBreakdown& bd,
                          double e_star, double epsilon) {
  TermGrad g;
  const double r = bd.predicted() - e_star;
  if (mode == LossMode::kMseResnet) {
    g.term = r * r;
    g.d_pred = 2.0 * r;
    return g;
  }
  const double inv_var = std::exp(-bd.s);
  g.term = 0.5 * inv_var * r * r + 0.5 * bd.s;
  g.d_pred = inv_var * r;
  if (bd.sigma * bd.sigma > epsilon) {
    // s = log sigma^2 is active; d term / d sigma = (ds term) * 2/sigma.
    g.d_sigma = (0.5 - 0.5 * inv_var * r * r) * 2.0 / bd.sigma;
  }
  return g;
}

}  // namespace detail

// Mean loss over a reaction set together with its exact parameter gradient:
// the unit the optimizer consumes each step. Exposed separately from train()
// so gradient correctness can be checked by finite differences on the very
// code path the optimizer runs.
struct BatchEval {
  double loss = 0.0;
  ParamGrads grads;
};

inline BatchEval batch_loss_and_gradient(
    const Model& model, const std::map<std::string, PreparedSpecies>& species,
    const std::vector<const ReactionRecord*>& rxns, double epsilon) {
  if (rxns.empty()) throw data_error("empty reaction batch");
  const double batch_n = static_cast<double>(rxns.size());

  std::set<std::string> batch_species;
  for (const auto* r : rxns) {
    for (const auto& [id, c] : r->terms) batch_species.insert(id);
  }
  std::map<std::string, SpeciesForward> fwd;
  std::map<std::string, SpeciesEnergies> totals;
  for (const auto& id : batch_species) {
    auto it = species.find(id);
    if (it == species.end()) {
      throw data_error("no prepared features for species '" + id + "'");
    }
    fwd[id] = species_forward(it->second.eval, it->second.standardized, model);
    totals[id] = fwd[id].totals;
  }

  std::map<std::string, double> d_eru, d_sigma;
  double term_sum = 0.0;
  for (const auto* r : rxns) {
    const EnergyBreakdown bd = reaction_energy(*r, totals, epsilon);
    const auto tg = detail::loss_term(model.loss_mode, bd, r->e_star, epsilon);
    if (!std::isfinite(tg.term)) {
      throw numeric_error("non-finite loss at reaction " + r->reaction_id);
    }
    term_sum += tg.term;
    for (const auto& [id, coeff] : r->terms) {
      const double c = static_cast<double>(coeff);
      d_eru[id] += tg.d_pred * c / batch_n;
      d_sigma[id] += tg.d_sigma * std::abs(c) / batch_n;
    }
  }

  BatchEval out;
  out.loss = term_sum / batch_n;
  out.grads = ParamGrads::zeros_like(model.params);
  for (const auto& id : batch_species) {
    const double g_e = d_eru[id];
    const double g_s = d_sigma[id];
    if (g_e == 0.0 && g_s == 0.0) continue;
    const SpeciesForward& sf = fwd[id];
    const Eigen::Index pts = sf.e_bar.size();
    Eigen::VectorXd de0(pts), ds0(pts);
    const auto& ev = species.at(id).eval;
    for (Eigen::Index i = 0; i < pts; ++i) {
      const ClampGrads& cg = sf.clamp_grads[static_cast<std::size_t>(i)];
      // d sigma_sp / d s_bar_i = wr_i * exp(s_bar_i/2) / 2
      const double dsig = 0.5 * ev.wr(i) * std::exp(0.5 * sf.s_bar(i));
      de0(i) = g_e * ev.wr(i) * cg.de_bar_de0 + g_s * dsig * cg.ds_bar_de0;
      ds0(i) = g_s * dsig * cg.ds_bar_ds0;
    }
    out.grads.add_scaled(backward_batch(model.params, sf.cache, de0, ds0),
                         1.0);
  }
  return out;
}

// Mean loss over a reaction set (no gradient); optionally also the RMSE of
// the predicted reaction energies in kcal/mol.
inline double score_reactions(
    const Model& model, const std::map<std::string, PreparedSpecies>& species,
    const std::vector<const ReactionRecord*>& rxns, double epsilon,
    double* rmse_kcal = nullptr) {
  if (rxns.empty()) throw data_error("empty reaction set");
  std::map<std::string, SpeciesEnergies> totals;
  for (const auto* r : rxns) {
    for (const auto& [id, c] : r->terms) {
      if (!totals.count(id)) {
        auto it = species.find(id);
        if (it == species.end()) {
          throw data_error("no prepared features for species '" + id + "'");
        }
        totals[id] =
            species_forward(it->second.eval, it->second.standardized, model)
                .totals;
      }
    }
  }
  double loss = 0.0, sq = 0.0;
  for (const auto* r : rxns) {
    const EnergyBreakdown bd = reaction_energy(*r, totals, epsilon);
    const auto tg = detail::loss_term(model.loss_mode, bd, r->e_star, epsilon);
    loss += tg.term;
    const double err = (bd.predicted() - r->e_star) * kHartreeToKcalMol;
    sq += err * err;
  }
  if (rmse_kcal) {
    *rmse_kcal = std::sqrt(sq / static_cast<double>(rxns.size()));
  }
  return loss / static_cast<double>(rxns.size());
}

inline TrainResult train(const TrainConfig& cfg, const Dataset& data,
                         const SplitAssignment& split,
                         const ConventionalSpec& conv) {
  cfg.validate();
  data.validate();

  std::map<std::string, const ReactionRecord*> by_id;
  for (const auto& r : data.reactions) by_id[r.reaction_id] = &r;
  auto resolve = [&](const std::vector<std::string>& ids) {
    std::vector<const ReactionRecord*> out;
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw data_error("split references unknown reaction '" + id + "'");
      }
      out.push_back(it->second);
    }
    return out;
  };
  const auto train_rxns = resolve(split.train);
  const auto val_rxns = resolve(split.validation);
  if (train_rxns.empty()) throw data_error("training split is empty");
  if (val_rxns.empty()) throw data_error("validation split is empty");

  // Featurize every species reachable from the train/validation reactions.
  std::map<std::string, PreparedSpecies> species;
  std::set<std::string> train_species;
  for (const auto* r : train_rxns) {
    for (const auto& [id, c] : r->terms) train_species.insert(id);
  }
  auto ensure_species = [&](const std::string& id) {
    if (!species.count(id)) {
      species[id].eval = featurize(data.grid_for(id), conv, cfg.feature_set);
    }
  };
  for (const auto* r : train_rxns) {
    for (const auto& [id, c] : r->terms) ensure_species(id);
  }
  for (const auto* r : val_rxns) {
    for (const auto& [id, c] : r->terms) ensure_species(id);
  }

  // Standardization constants come from the training-split points only.
  Eigen::Index total_rows = 0;
  for (const auto& id : train_species) {
    total_rows += species.at(id).eval.raw.rows();
  }
  const int width = cfg.feature_set == FeatureSet::kY16 ? 16 : 11;
  Eigen::MatrixXd all_train(total_rows, width);
  Eigen::Index row = 0;
  for (const auto& id : train_species) {
    const auto& raw = species.at(id).eval.raw;
    all_train.middleRows(row, raw.rows()) = raw;
    row += raw.rows();
  }
  Standardizer stdz;
  stdz.fit(all_train);
  for (auto& [id, sd] : species) sd.standardized = stdz.apply(sd.eval.raw);

  Model model;
  model.params = make_params(cfg.seed, width, kTrunkWidths, kHeadWidths,
                             cfg.activation);
  model.standardizer = stdz;
  model.clamp = cfg.clamp;
  model.conv = conv;
  model.loss_mode = cfg.loss_mode;
  model.feature_set = cfg.feature_set;
  model.seed = cfg.seed;
  const bool freeze_var = cfg.loss_mode == LossMode::kMseResnet;
  if (freeze_var) {
    // Plain residual-regression ablation: no variance learning, the
    // log-variance head stays pinned at zero.
    for (auto& l : model.params.head_var) {
      l.W.setZero();
      l.b.setZero();
    }
  }

  TrainResult result;
  Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_rxns.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double initial_scale = -1.0;
  NetworkParams best_params = model.params;
  double best_rmse = std::numeric_limits<double>::infinity();
  int best_epoch = -1;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr =
        cosine_lr(cfg.learning_rate, cfg.lr_floor, epoch, cfg.epochs);
    shuffle_rng.shuffle(order);
    double epoch_term_sum = 0.0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const ReactionRecord*> batch;
      batch.reserve(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(train_rxns[order[k]]);
      }

      BatchEval be =
          batch_loss_and_gradient(model, species, batch, cfg.clamp.epsilon);
      epoch_term_sum += be.loss * static_cast<double>(batch.size());
      if (initial_scale < 0.0) {
        initial_scale = std::max(1.0, std::abs(be.loss));
      }
      if (be.loss > 1e6 * initial_scale) {
        throw numeric_error("training diverged: loss " + format_g17(be.loss) +
                            " exceeds 1e6 x initial");
      }
      if (freeze_var) {
        for (auto& l : be.grads.head_var) {
          l.dW.setZero();
          l.db.setZero();
        }
      }
      apply_sgd_step(model.params, be.grads, lr);
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    log.train_loss = epoch_term_sum / static_cast<double>(train_rxns.size());
    log.val_loss = score_reactions(model, species, val_rxns, cfg.clamp.epsilon,
                                   &log.val_rmse_kcal);
    result.log.push_back(log);
    if (log.val_rmse_kcal < best_rmse) {
      best_rmse = log.val_rmse_kcal;
      best_epoch = epoch;
      best_params = model.params;
    }
  }

  model.params = best_params;
  result.model = model;
  result.best_epoch = best_epoch;
  result.best_val_rmse_kcal = best_rmse;
  return result;
}

}  // namespace rxcu
