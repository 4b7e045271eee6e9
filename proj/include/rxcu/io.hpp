#pragma once

// File formats: grid feature files (text interchange form and compact
// binary), reaction manifests, split files, and the TSV report writers.
// All text output is emitted with %.17g doubles and LF line endings, so
// identical in-memory state produces byte-identical files.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rxcu/common.hpp"
#include "rxcu/dataset.hpp"
#include "rxcu/grid.hpp"
#include "rxcu/training.hpp"

namespace rxcu {

inline constexpr const char* kGridHeader = "# rxcu grid v1";
inline constexpr const char* kManifestHeader = "# rxcu manifest v1";
inline constexpr const char* kSplitHeader = "# rxcu split v1";
inline constexpr char kGridBinaryMagic[8] = {'R', 'X', 'C', 'U',
                                             'G', 'B', '1', '\n'};

inline constexpr const char* kGridColumns =
    "x y z weight rho_up rho_down grad_sq_up grad_sq_down grad_sq_total "
    "tau_up tau_down e_hf_w1_up e_hf_w1_down e_hf_w2_up e_hf_w2_down";

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open: " + path);
  return in;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> parts;
  std::string tok;
  while (ss >> tok) parts.push_back(tok);
  return parts;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw data_error("bad number '" + s + "' in " + where);
  }
}

inline int parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw data_error("bad integer '" + s + "' in " + where);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Grid files.

inline void write_grid_text(const MolecularGrid& grid, const std::string& path) {
  auto out = detail::open_out(path);
  out << kGridHeader << "\n";
  out << "species " << grid.species_id << "\n";
  out << "electrons " << format_g17(grid.n_electrons_up) << " "
      << format_g17(grid.n_electrons_down) << "\n";
  out << "columns " << kGridColumns << "\n";
  out << "points " << grid.points.size() << "\n";
  for (const auto& p : grid.points) {
    out << format_g17(p.x) << " " << format_g17(p.y) << " " << format_g17(p.z)
        << " " << format_g17(p.weight);
    for (int k = 0; k < PointFeatures::kCount; ++k) {
      out << " " << format_g17(p.f[k]);
    }
    out << "\n";
  }
  if (!out) throw data_error("failed writing grid: " + path);
}

inline MolecularGrid read_grid_text(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) {
      throw data_error(std::string("unexpected end of grid file (") + what +
                       ") in " + path);
    }
    return line;
  };
  if (next_line("header") != kGridHeader) {
    throw data_error("not a grid file (bad header): " + path);
  }
  MolecularGrid grid;
  auto sp = detail::split_ws(next_line("species"));
  if (sp.size() != 2 || sp[0] != "species") {
    throw data_error("bad species line in " + path);
  }
  grid.species_id = sp[1];
  auto el = detail::split_ws(next_line("electrons"));
  if (el.size() != 3 || el[0] != "electrons") {
    throw data_error("bad electrons line in " + path);
  }
  grid.n_electrons_up = detail::parse_double(el[1], path);
  grid.n_electrons_down = detail::parse_double(el[2], path);
  const std::string cols = next_line("columns");
  if (cols != std::string("columns ") + kGridColumns) {
    throw data_error("unexpected column layout in " + path);
  }
  auto np = detail::split_ws(next_line("points"));
  if (np.size() != 2 || np[0] != "points") {
    throw data_error("bad points line in " + path);
  }
  const long n = detail::parse_int(np[1], path);
  if (n < 0) throw data_error("negative point count in " + path);
  grid.points.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    auto parts = detail::split_ws(next_line("point row"));
    if (parts.size() != 4 + PointFeatures::kCount) {
      throw data_error("point row " + std::to_string(i) + " has " +
                       std::to_string(parts.size()) + " fields in " + path);
    }
    GridPoint p;
    p.x = detail::parse_double(parts[0], path);
    p.y = detail::parse_double(parts[1], path);
    p.z = detail::parse_double(parts[2], path);
    p.weight = detail::parse_double(parts[3], path);
    for (int k = 0; k < PointFeatures::kCount; ++k) {
      p.f.at(k) = detail::parse_double(parts[static_cast<std::size_t>(4 + k)],
                                       path);
    }
    grid.points.push_back(p);
  }
  return grid;
}

inline void write_grid_binary(const MolecularGrid& grid,
                              const std::string& path) {
  auto out = detail::open_out(path);
  out.write(kGridBinaryMagic, sizeof kGridBinaryMagic);
  const std::uint64_t id_len = grid.species_id.size();
  out.write(reinterpret_cast<const char*>(&id_len), sizeof id_len);
  out.write(grid.species_id.data(), static_cast<std::streamsize>(id_len));
  auto put = [&](double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  };
  put(grid.n_electrons_up);
  put(grid.n_electrons_down);
  const std::uint64_t n = grid.points.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (const auto& p : grid.points) {
    put(p.x);
    put(p.y);
    put(p.z);
    put(p.weight);
    for (int k = 0; k < PointFeatures::kCount; ++k) put(p.f[k]);
  }
  if (!out) throw data_error("failed writing grid: " + path);
}

inline MolecularGrid read_grid_binary(const std::string& path) {
  auto in = detail::open_in(path);
  char magic[sizeof kGridBinaryMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kGridBinaryMagic, sizeof magic) != 0) {
    throw data_error("not a binary grid file: " + path);
  }
  auto get_u64 = [&]() {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  };
  auto get_f64 = [&]() {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  };
  MolecularGrid grid;
  const std::uint64_t id_len = get_u64();
  if (id_len > 4096) throw data_error("corrupt species id in " + path);
  grid.species_id.resize(id_len);
  in.read(grid.species_id.data(), static_cast<std::streamsize>(id_len));
  grid.n_electrons_up = get_f64();
  grid.n_electrons_down = get_f64();
  const std::uint64_t n = get_u64();
  if (!in) throw data_error("truncated binary grid: " + path);
  grid.points.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    GridPoint p;
    p.x = get_f64();
    p.y = get_f64();
    p.z = get_f64();
    p.weight = get_f64();
    for (int k = 0; k < PointFeatures::kCount; ++k) p.f.at(k) = get_f64();
    grid.points.push_back(p);
  }
  if (!in) throw data_error("truncated binary grid: " + path);
  return grid;
}

// ---------------------------------------------------------------------------
// Reaction manifest. Species metadata lines then reaction lines; E* is
// stored in kcal/mol and converted to hartree on load.

inline void write_manifest(const Dataset& data, const std::string& path) {
  auto out = detail::open_out(path);
  out << kManifestHeader << "\n";
  for (const auto& [id, comp] : data.compositions) {
    out << "species " << id;
    for (const auto& [el, cnt] : comp) out << " " << el << ":" << cnt;
    out << "\n";
  }
  for (const auto& r : data.reactions) {
    out << "reaction " << r.reaction_id << " "
        << format_g17(r.e_star * kHartreeToKcalMol);
    for (const auto& [id, c] : r.terms) out << " " << id << ":" << c;
    out << "\n";
  }
  if (!out) throw data_error("failed writing manifest: " + path);
}

struct ManifestData {
  std::map<std::string, Composition> compositions;
  std::vector<ReactionRecord> reactions;
};

inline ManifestData read_manifest(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) {
    throw data_error("not a manifest file (bad header): " + path);
  }
  ManifestData md;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto parts = detail::split_ws(line);
    const std::string where =
        path + ":" + std::to_string(line_no);
    auto split_pair = [&](const std::string& tok) {
      const auto colon = tok.rfind(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size()) {
        throw data_error("bad '<name>:<count>' token '" + tok + "' in " + where);
      }
      return std::make_pair(tok.substr(0, colon),
                            detail::parse_int(tok.substr(colon + 1), where));
    };
    if (parts[0] == "species") {
      if (parts.size() < 3) throw data_error("short species line in " + where);
      Composition comp;
      for (std::size_t i = 2; i < parts.size(); ++i) {
        comp.push_back(split_pair(parts[i]));
      }
      md.compositions[parts[1]] = std::move(comp);
    } else if (parts[0] == "reaction") {
      if (parts.size() < 4) throw data_error("short reaction line in " + where);
      ReactionRecord r;
      r.reaction_id = parts[1];
      r.e_star = detail::parse_double(parts[2], where) / kHartreeToKcalMol;
      for (std::size_t i = 3; i < parts.size(); ++i) {
        r.terms.push_back(split_pair(parts[i]));
      }
      r.validate();
      md.reactions.push_back(std::move(r));
    } else {
      throw data_error("unknown record '" + parts[0] + "' in " + where);
    }
  }
  return md;
}

// Loads manifest + grids. Grid files live in grid_dir as <species>.grid
// (text) or <species>.gridb (binary); text wins when both exist. Every grid
// is validated on load.
inline Dataset load_dataset(const std::string& manifest_path,
                            const std::string& grid_dir) {
  ManifestData md = read_manifest(manifest_path);
  Dataset ds;
  ds.compositions = std::move(md.compositions);
  ds.reactions = std::move(md.reactions);
  std::set<std::string> needed;
  for (const auto& r : ds.reactions) {
    for (const auto& [id, c] : r.terms) needed.insert(id);
  }
  for (const auto& id : needed) {
    namespace fs = std::filesystem;
    const fs::path text = fs::path(grid_dir) / (id + ".grid");
    const fs::path bin = fs::path(grid_dir) / (id + ".gridb");
    MolecularGrid grid;
    if (fs::exists(text)) grid = read_grid_text(text.string());
    else if (fs::exists(bin)) grid = read_grid_binary(bin.string());
    else throw data_error("no grid file for species '" + id + "' in " + grid_dir);
    if (grid.species_id != id) {
      throw data_error("grid file for '" + id + "' declares species '" +
                       grid.species_id + "'");
    }
    const ValidationReport rep = validate_grid(grid);
    if (!rep.ok()) {
      throw data_error("grid for species '" + id + "' fails validation:\n" +
                       rep.str());
    }
    ds.grids[id] = std::move(grid);
  }
  ds.validate();
  return ds;
}

inline void save_dataset(const Dataset& data, const std::string& dir,
                         bool binary_grids = false) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "grids");
  for (const auto& [id, grid] : data.grids) {
    const fs::path base = fs::path(dir) / "grids" / id;
    if (binary_grids) write_grid_binary(grid, base.string() + ".gridb");
    else write_grid_text(grid, base.string() + ".grid");
  }
  write_manifest(data, (fs::path(dir) / "reactions.manifest").string());
}

// ---------------------------------------------------------------------------
// Split files.

inline void write_split(const SplitAssignment& split, const std::string& path) {
  auto out = detail::open_out(path);
  out << kSplitHeader << "\n";
  for (const auto& id : split.train) out << "train " << id << "\n";
  for (const auto& id : split.validation) out << "val " << id << "\n";
  for (const auto& id : split.test) out << "test " << id << "\n";
  if (!out) throw data_error("failed writing split: " + path);
}

inline SplitAssignment read_split(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kSplitHeader) {
    throw data_error("not a split file (bad header): " + path);
  }
  SplitAssignment split;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto parts = detail::split_ws(line);
    if (parts.size() != 2) {
      throw data_error("bad split line '" + line + "' in " + path);
    }
    if (!seen.insert(parts[1]).second) {
      throw data_error("reaction '" + parts[1] + "' listed twice in " + path);
    }
    if (parts[0] == "train") split.train.push_back(parts[1]);
    else if (parts[0] == "val") split.validation.push_back(parts[1]);
    else if (parts[0] == "test") split.test.push_back(parts[1]);
    else throw data_error("bad split bucket '" + parts[0] + "' in " + path);
  }
  return split;
}

// ---------------------------------------------------------------------------
// Training log TSV.

inline void write_train_log(const std::vector<EpochLog>& log,
                            const std::string& path) {
  auto out = detail::open_out(path);
  out << "epoch\tlr\ttrain_loss\tval_loss\tval_rmse_kcal\n";
  for (const auto& e : log) {
    out << e.epoch << "\t" << format_g17(e.lr) << "\t"
        << format_g17(e.train_loss) << "\t" << format_g17(e.val_loss) << "\t"
        << format_g17(e.val_rmse_kcal) << "\n";
  }
  if (!out) throw data_error("failed writing training log: " + path);
}

}  // namespace rxcu
