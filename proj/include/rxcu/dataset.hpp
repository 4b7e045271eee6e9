#pragma once

// Reaction records, species composition metadata, and the in-memory dataset
// bundle consumed by training and evaluation.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rxcu/common.hpp"
#include "rxcu/grid.hpp"

namespace rxcu {

// Ordered (element symbol, count) pairs, e.g. {{"C",1},{"H",4}}.
using Composition = std::vector<std::pair<std::string, int>>;

inline int atom_count(const Composition& c) {
  int n = 0;
  for (const auto& [el, cnt] : c) n += cnt;
  return n;
}

// Atomic numbers for the elements this artifact deals with (periods 1-3).
inline int element_z(const std::string& symbol) {
  static const std::map<std::string, int> kZ{
      {"H", 1},  {"He", 2}, {"Li", 3}, {"Be", 4}, {"B", 5},  {"C", 6},
      {"N", 7},  {"O", 8},  {"F", 9},  {"Ne", 10}, {"Na", 11}, {"Mg", 12},
      {"Al", 13}, {"Si", 14}, {"P", 15}, {"S", 16}, {"Cl", 17}, {"Ar", 18}};
  auto it = kZ.find(symbol);
  if (it == kZ.end()) throw data_error("unknown element symbol '" + symbol + "'");
  return it->second;
}

struct ReactionRecord {
  std::string reaction_id;
  // (species_id, signed stoichiometric coefficient); products positive,
  // reactants negative.
  std::vector<std::pair<std::string, int>> terms;
  double e_star = 0.0;  // reference energy, hartree (converted on load)

  void validate() const {
    bool pos = false, neg = false;
    for (const auto& [id, c] : terms) {
      if (c > 0) pos = true;
      if (c < 0) neg = true;
      if (c == 0) throw data_error("zero coefficient in reaction " + reaction_id);
    }
    if (!pos || !neg) {
      throw data_error("reaction " + reaction_id +
                       " needs at least one product and one reactant");
    }
  }
};

// Disjoint train/validation/test partition of reaction ids.
struct SplitAssignment {
  std::vector<std::string> train, validation, test;

  std::size_t size() const {
    return train.size() + validation.size() + test.size();
  }
};

struct Dataset {
  std::map<std::string, MolecularGrid> grids;
  std::map<std::string, Composition> compositions;
  std::vector<ReactionRecord> reactions;

  const MolecularGrid& grid_for(const std::string& species_id) const {
    auto it = grids.find(species_id);
    if (it == grids.end()) {
      throw data_error("no grid for species '" + species_id + "'");
    }
    return it->second;
  }

  const Composition& composition_for(const std::string& species_id) const {
    auto it = compositions.find(species_id);
    if (it == compositions.end()) {
      throw data_error("no composition for species '" + species_id + "'");
    }
    return it->second;
  }

  // Every reaction must be well-formed and resolvable.
  void validate() const {
    for (const auto& r : reactions) {
      r.validate();
      for (const auto& [id, c] : r.terms) {
        grid_for(id);
        composition_for(id);
      }
    }
  }
};

}  // namespace rxcu
