#pragma once

// Analytic synthetic data: isotropic Gaussian densities with closed-form
// features on uniform Cartesian midpoint grids, a synthetic ground-truth
// functional (conventional + bounded residual), and refinement oracles.
// This is the desk-scale substitute for quantum-chemistry datasets; the HF
// feature channels are analytic stand-ins, documented below.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "rxcu/common.hpp"
#include "rxcu/dataset.hpp"
#include "rxcu/functionals.hpp"
#include "rxcu/grid.hpp"
#include "rxcu/rng.hpp"

namespace rxcu {

// HF exchange stand-ins: e_hf_w{1,2}_sigma = -c * rho_sigma^(4/3) with a
// distinct constant per omega channel. Negative, density-driven, and cheap;
// they exercise the full 16-feature pipeline without orbitals.
inline constexpr double kSynthHfC1 = 0.3;  // omega1 channel
inline constexpr double kSynthHfC2 = 0.8;  // omega2 channel

struct GaussianCenter {
  double x = 0.0, y = 0.0, z = 0.0;
  double exponent = 1.0;  // bohr^-2
  double occ_up = 0.0, occ_down = 0.0;
};

struct GaussianSpecies {
  std::string id;
  std::vector<GaussianCenter> centers;

  void validate() const {
    if (centers.empty()) throw data_error("species " + id + " has no centers");
    for (const auto& c : centers) {
      if (!(c.exponent > 0.0)) {
        throw data_error("species " + id + " has a nonpositive exponent");
      }
      if (c.occ_up < 0.0 || c.occ_down < 0.0) {
        throw data_error("species " + id + " has a negative occupation");
      }
    }
  }

  double electrons_up() const {
    double s = 0.0;
    for (const auto& c : centers) s += c.occ_up;
    return s;
  }
  double electrons_down() const {
    double s = 0.0;
    for (const auto& c : centers) s += c.occ_down;
    return s;
  }
};

namespace detail {

struct SpinDensity {
  double rho = 0.0;
  double gx = 0.0, gy = 0.0, gz = 0.0;
};

// rho_sigma and its gradient at (x,y,z): each center contributes a
// normalized Gaussian occ * (alpha/pi)^(3/2) exp(-alpha d^2).
inline void accumulate_spin(const GaussianSpecies& sp, double x, double y,
                            double z, SpinDensity& up, SpinDensity& down) {
  for (const auto& c : sp.centers) {
    const double dx = x - c.x, dy = y - c.y, dz = z - c.z;
    const double a = c.exponent;
    const double norm = std::pow(a / kPi, 1.5);
    const double g = norm * std::exp(-a * (dx * dx + dy * dy + dz * dz));
    const double fac = -2.0 * a * g;
    if (c.occ_up > 0.0) {
      up.rho += c.occ_up * g;
      up.gx += c.occ_up * fac * dx;
      up.gy += c.occ_up * fac * dy;
      up.gz += c.occ_up * fac * dz;
    }
    if (c.occ_down > 0.0) {
      down.rho += c.occ_down * g;
      down.gx += c.occ_down * fac * dx;
      down.gy += c.occ_down * fac * dy;
      down.gz += c.occ_down * fac * dz;
    }
  }
}

}  // namespace detail

// Spin densities (rho_up, rho_down) at a point; analytic.
inline std::pair<double, double> gaussian_density(const GaussianSpecies& sp,
                                                  double x, double y,
                                                  double z) {
  detail::SpinDensity up, down;
  detail::accumulate_spin(sp, x, y, z, up, down);
  return {up.rho, down.rho};
}

// The full 11-feature vector at a point. tau is the von Weizsaecker form
// |grad rho_sigma|^2 / (8 rho_sigma), exact for one orbital per spin.
inline PointFeatures gaussian_features(const GaussianSpecies& sp, double x,
                                       double y, double z) {
  detail::SpinDensity up, down;
  detail::accumulate_spin(sp, x, y, z, up, down);
  PointFeatures f;
  f.rho_up = up.rho;
  f.rho_down = down.rho;
  f.grad_sq_up = up.gx * up.gx + up.gy * up.gy + up.gz * up.gz;
  f.grad_sq_down = down.gx * down.gx + down.gy * down.gy + down.gz * down.gz;
  const double tx = up.gx + down.gx, ty = up.gy + down.gy, tz = up.gz + down.gz;
  f.grad_sq_total = tx * tx + ty * ty + tz * tz;
  f.tau_up = up.rho > kDensityFloor ? f.grad_sq_up / (8.0 * up.rho) : 0.0;
  f.tau_down = down.rho > kDensityFloor ? f.grad_sq_down / (8.0 * down.rho) : 0.0;
  auto hf = [](double rho, double c) {
    return rho > kDensityFloor ? -c * rho * std::cbrt(rho) : 0.0;
  };
  f.e_hf_w1_up = hf(up.rho, kSynthHfC1);
  f.e_hf_w1_down = hf(down.rho, kSynthHfC1);
  f.e_hf_w2_up = hf(up.rho, kSynthHfC2);
  f.e_hf_w2_down = hf(down.rho, kSynthHfC2);
  return f;
}

// Uniform Cartesian midpoint-rule grid over [-extent, extent]^3 with
// points_per_axis cells per axis; w = cell volume.
inline MolecularGrid make_gaussian_grid(const GaussianSpecies& sp,
                                        double extent, int points_per_axis) {
  sp.validate();
  if (points_per_axis < 2) throw config_error("points_per_axis must be >= 2");
  if (!(extent > 0.0)) throw config_error("extent must be positive");
  MolecularGrid grid;
  grid.species_id = sp.id;
  grid.n_electrons_up = sp.electrons_up();
  grid.n_electrons_down = sp.electrons_down();
  const int n = points_per_axis;
  const double h = 2.0 * extent / static_cast<double>(n);
  const double w = h * h * h;
  grid.points.reserve(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i) {
    const double x = -extent + (i + 0.5) * h;
    for (int j = 0; j < n; ++j) {
      const double y = -extent + (j + 0.5) * h;
      for (int k = 0; k < n; ++k) {
        const double z = -extent + (k + 0.5) * h;
        GridPoint p;
        p.x = x;
        p.y = y;
        p.z = z;
        p.weight = w;
        p.f = gaussian_features(sp, x, y, z);
        grid.points.push_back(p);
      }
    }
  }
  return grid;
}

// Drops points whose density mass w*rho falls below budget*N_electrons/n_raw,
// so the total dropped electron mass is at most budget*N_electrons.
inline MolecularGrid prune_grid(const MolecularGrid& grid,
                                double mass_budget_fraction) {
  if (!(mass_budget_fraction >= 0.0)) {
    throw config_error("prune budget must be nonnegative");
  }
  MolecularGrid out;
  out.species_id = grid.species_id;
  out.n_electrons_up = grid.n_electrons_up;
  out.n_electrons_down = grid.n_electrons_down;
  const double thr = mass_budget_fraction * grid.n_electrons() /
                     static_cast<double>(grid.points.size());
  for (const auto& p : grid.points) {
    if (p.weight * p.f.rho_total() >= thr) out.points.push_back(p);
  }
  if (out.points.empty()) throw data_error("pruning removed every grid point");
  return out;
}

// Same integral on a 2x per-axis refined grid; used as the reference in
// quadrature convergence checks. The integrand receives the refined point
// (position, weight, analytic features) and returns the local value; the
// result is Sum w * rho * value.
template <typename ValueFn>
inline double refined_reference(const GaussianSpecies& sp, double extent,
                                int points_per_axis, ValueFn&& value) {
  const MolecularGrid fine = make_gaussian_grid(sp, extent, 2 * points_per_axis);
  double acc = 0.0;
  for (const auto& p : fine.points) {
    acc += p.weight * p.f.rho_total() * value(p);
  }
  if (!std::isfinite(acc)) throw numeric_error("non-finite refined reference");
  return acc;
}

// ---------------------------------------------------------------------------
// Synthetic ground truth: e_true = e_conv + delta with
//   delta = e_conv * (amp_smooth * tanh(u) + q * amp_osc * cos(k . r)),
//   u = c_lda slog(e_lda) + c_conv slog(e_conv) + c_w w.
// |delta| <= (amp_smooth + amp_osc) |e_conv| <= 0.3 |e_conv| by construction,
// so a k1 = 1 clamp can represent the truth. The oscillatory part is a
// deterministic feature-orthogonal component whose per-species strength q
// (0..1) makes reference energies heteroscedastic across species.

struct SynthTruth {
  double amp_smooth = 0.22;
  double amp_osc = 0.08;
  double c_lda = 1.3;
  double c_conv = -0.9;
  double c_w = 0.35;
  double kx = 7.3, ky = 13.1, kz = 23.7;

  void validate() const {
    if (amp_smooth < 0.0 || amp_osc < 0.0 || amp_smooth + amp_osc > 0.3) {
      throw config_error("truth amplitudes must be nonnegative with sum <= 0.3");
    }
  }

  double delta(double x, double y, double z, double w, double e_lda,
               double e_conv, double q) const {
    const double u =
        c_lda * signed_log1p(e_lda) + c_conv * signed_log1p(e_conv) + c_w * w;
    const double osc = std::cos(kx * x + ky * y + kz * z);
    return e_conv * (amp_smooth * std::tanh(u) + q * amp_osc * osc);
  }
};

struct GridGeometry {
  double extent = 0.0;
  int points_per_axis = 0;
};

struct SynthConfig {
  int n_species = 160;  // molecules (element atoms are added automatically)
  int n_reactions = 200;
  std::uint64_t seed = 1;
  double prune_mass_fraction = 0.002;
  double target_h = 0.85;  // max quadrature cell width, bohr
  double tail_margin = 3.2;  // box margin in units of alpha^(-1/2)
  SynthTruth truth;
  ConventionalSpec conv;

  void validate() const {
    if (n_species < 1) throw config_error("n_species must be >= 1");
    if (n_reactions < 1) throw config_error("n_reactions must be >= 1");
    if (!(target_h > 0.0)) throw config_error("target_h must be positive");
    if (!(tail_margin > 0.0)) throw config_error("tail_margin must be positive");
    if (!(prune_mass_fraction >= 0.0)) {
      throw config_error("prune_mass_fraction must be nonnegative");
    }
    truth.validate();
  }
};

struct SynthDataset {
  Dataset data;
  std::map<std::string, GaussianSpecies> generators;
  std::map<std::string, GridGeometry> geometry;
  std::map<std::string, double> osc_weight;  // q per species
  SynthTruth truth;
  ConventionalSpec conv;
};

namespace detail {

struct SynthElement {
  const char* symbol;
  int z;
};

// Element pool; exponents are alpha(Z) = 0.9 + 0.05 Z, kept within a factor
// ~1.2 in width so one grid spacing resolves every species.
inline const std::vector<SynthElement>& synth_elements() {
  static const std::vector<SynthElement> kElems{
      {"H", 1}, {"Li", 3}, {"B", 5}, {"C", 6}, {"N", 7}, {"O", 8}, {"F", 9}};
  return kElems;
}

inline double synth_alpha(int z) { return 0.9 + 0.05 * static_cast<double>(z); }

inline GridGeometry choose_geometry(const GaussianSpecies& sp,
                                    const SynthConfig& cfg) {
  double extent = 0.0;
  for (const auto& c : sp.centers) {
    const double reach =
        std::max({std::abs(c.x), std::abs(c.y), std::abs(c.z)}) +
        cfg.tail_margin / std::sqrt(c.exponent);
    extent = std::max(extent, reach);
  }
  GridGeometry g;
  g.extent = extent;
  g.points_per_axis =
      std::max(2, static_cast<int>(std::ceil(2.0 * extent / cfg.target_h)));
  return g;
}

}  // namespace detail

// Integrates the synthetic truth e_conv + delta over a species' (pruned)
// grid in fixed point order; the reference energies E* are stoichiometric
// combinations of these.
inline double truth_species_energy(const MolecularGrid& grid,
                                   const ConventionalSpec& conv,
                                   const SynthTruth& truth, double q) {
  double acc = 0.0;
  for (const auto& p : grid.points) {
    const double e_conv = conventional_density(p.f, conv);
    const double e_lda = lda_xc_density(p.f.rho_up, p.f.rho_down, conv.vwn);
    const double d = truth.delta(p.x, p.y, p.z, p.weight, e_lda, e_conv, q);
    acc += p.weight * p.f.rho_total() * (e_conv + d);
  }
  if (!std::isfinite(acc)) {
    throw numeric_error("non-finite truth energy for " + grid.species_id);
  }
  return acc;
}

// Builds one atom species per element plus n_species random molecules, grids
// them, and emits n_reactions reactions: atomisations first, then balanced
// exchange reactions between molecule pairs. E* is the truth integral
// combined stoichiometrically (stored in hartree here; the manifest writer
// converts to kcal/mol).
inline SynthDataset make_synthetic_dataset(const SynthConfig& cfg) {
  cfg.validate();
  SynthDataset out;
  out.truth = cfg.truth;
  out.conv = cfg.conv;
  Rng rng(cfg.seed);
  const auto& elems = detail::synth_elements();

  auto osc_q = [](int atoms) {
    return std::min(1.0, static_cast<double>(atoms) / 6.0);
  };

  auto add_species = [&](const GaussianSpecies& sp, const Composition& comp) {
    const GridGeometry geom = detail::choose_geometry(sp, cfg);
    MolecularGrid grid =
        make_gaussian_grid(sp, geom.extent, geom.points_per_axis);
    if (cfg.prune_mass_fraction > 0.0) {
      grid = prune_grid(grid, cfg.prune_mass_fraction);
    }
    out.data.grids[sp.id] = std::move(grid);
    out.data.compositions[sp.id] = comp;
    out.generators[sp.id] = sp;
    out.geometry[sp.id] = geom;
    out.osc_weight[sp.id] = osc_q(atom_count(comp));
  };

  // Atoms.
  std::map<std::string, std::string> atom_id_of;  // element -> species id
  for (const auto& el : elems) {
    GaussianSpecies sp;
    std::string low(el.symbol);
    for (auto& ch : low) ch = static_cast<char>(std::tolower(ch));
    sp.id = "atom_" + low;
    GaussianCenter c;
    c.exponent = detail::synth_alpha(el.z);
    c.occ_up = static_cast<double>((el.z + 1) / 2);
    c.occ_down = static_cast<double>(el.z / 2);
    sp.centers.push_back(c);
    add_species(sp, Composition{{el.symbol, 1}});
    atom_id_of[el.symbol] = sp.id;
  }

  // Molecules: 2..8 atoms, elements drawn from a pool weighted toward
  // organic-like compositions, centers placed by sequential attachment.
  static const int kPoolZ[] = {1, 1, 1, 6, 6, 6, 8, 8, 7, 7, 9, 3, 5};
  std::vector<std::string> molecule_ids;
  for (int m = 0; m < cfg.n_species; ++m) {
    GaussianSpecies sp;
    char buf[32];
    std::snprintf(buf, sizeof buf, "mol_%04d", m);
    sp.id = buf;
    const int atoms = 2 + static_cast<int>(rng.below(7));
    std::map<std::string, int> counts;
    for (int a = 0; a < atoms; ++a) {
      const int z = kPoolZ[rng.below(std::size(kPoolZ))];
      const char* symbol = "?";
      for (const auto& el : elems) {
        if (el.z == z) symbol = el.symbol;
      }
      GaussianCenter c;
      c.exponent = detail::synth_alpha(z);
      c.occ_up = static_cast<double>((z + 1) / 2);
      c.occ_down = static_cast<double>(z / 2);
      if (a > 0) {
        for (int attempt = 0; attempt < 64; ++attempt) {
          const auto& anchor =
              sp.centers[static_cast<std::size_t>(rng.below(sp.centers.size()))];
          const double ct = rng.uniform(-1.0, 1.0);
          const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
          const double phi = rng.uniform(0.0, 2.0 * kPi);
          const double d = rng.uniform(1.4, 2.2);
          c.x = anchor.x + d * st * std::cos(phi);
          c.y = anchor.y + d * st * std::sin(phi);
          c.z = anchor.z + d * ct;
          bool clash = false;
          for (const auto& prev : sp.centers) {
            const double dx = c.x - prev.x, dy = c.y - prev.y,
                         dz = c.z - prev.z;
            if (dx * dx + dy * dy + dz * dz < 0.9 * 0.9) clash = true;
          }
          if (!clash) break;
        }
      }
      sp.centers.push_back(c);
      counts[symbol] += 1;
    }
    Composition comp(counts.begin(), counts.end());
    add_species(sp, comp);
    molecule_ids.push_back(sp.id);
  }

  // Truth energies per species.
  std::map<std::string, double> t_energy;
  for (const auto& [id, grid] : out.data.grids) {
    t_energy[id] =
        truth_species_energy(grid, cfg.conv, cfg.truth, out.osc_weight[id]);
  }

  auto e_star_of = [&](const std::vector<std::pair<std::string, int>>& terms) {
    double e = 0.0;
    for (const auto& [id, c] : terms) e += static_cast<double>(c) * t_energy[id];
    return e;
  };

  int rx = 0;
  auto push_reaction = [&](std::vector<std::pair<std::string, int>> terms) {
    ReactionRecord r;
    char buf[32];
    std::snprintf(buf, sizeof buf, "rxn_%04d", rx++);
    r.reaction_id = buf;
    r.terms = std::move(terms);
    r.e_star = e_star_of(r.terms);
    r.validate();
    out.data.reactions.push_back(std::move(r));
  };

  // Atomisations, one per molecule, in generation order.
  for (const auto& mol : molecule_ids) {
    if (rx >= cfg.n_reactions) break;
    std::vector<std::pair<std::string, int>> terms{{mol, -1}};
    for (const auto& [el, cnt] : out.data.compositions[mol]) {
      terms.emplace_back(atom_id_of[el], cnt);
    }
    push_reaction(std::move(terms));
  }
  // Exchange reactions between molecule pairs to reach the requested count:
  // A + atoms(B) -> B + atoms(A), expressed as coefficient differences.
  while (rx < cfg.n_reactions) {
    if (molecule_ids.size() < 2) {
      throw config_error("need at least two molecules for extra reactions");
    }
    const auto& a = molecule_ids[rng.below(molecule_ids.size())];
    const auto& b = molecule_ids[rng.below(molecule_ids.size())];
    if (a == b) continue;
    std::map<std::string, int> diff;  // element -> count_a - count_b
    for (const auto& [el, cnt] : out.data.compositions[a]) diff[el] += cnt;
    for (const auto& [el, cnt] : out.data.compositions[b]) diff[el] -= cnt;
    std::vector<std::pair<std::string, int>> terms{{a, -1}, {b, 1}};
    for (const auto& [el, d] : diff) {
      if (d != 0) terms.emplace_back(atom_id_of[el], d);
    }
    push_reaction(std::move(terms));
  }

  out.data.validate();
  return out;
}

}  // namespace rxcu
