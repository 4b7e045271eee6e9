// rxcu: residual-corrected exchange-correlation reaction energies with
// per-reaction uncertainty. Single binary with subcommands; a JSON config
// file provides the run record, command-line flags override it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rxcu/checkpoint.hpp"
#include "rxcu/common.hpp"
#include "rxcu/dataset.hpp"
#include "rxcu/energy.hpp"
#include "rxcu/eval.hpp"
#include "rxcu/functionals.hpp"
#include "rxcu/io.hpp"
#include "rxcu/metrics.hpp"
#include "rxcu/rbnet.hpp"
#include "rxcu/synth.hpp"
#include "rxcu/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Everything a command can need, assembled from defaults, then the config
// file, then flags.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out;
  rxcu::TrainConfig train;
  rxcu::ConventionalSpec conv;
  rxcu::SynthConfig synth;
  int repetitions = 1;
  std::vector<double> sweep_k1{1.0};
  std::vector<double> sweep_k2{1.0};
};

json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rxcu::config_error("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw rxcu::config_error(std::string("config is not valid JSON: ") +
                             e.what());
  }
  if (!j.is_object()) throw rxcu::config_error("config root must be an object");
  return j;
}

void check_keys(const json& obj, const std::string& scope,
                const std::vector<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw rxcu::config_error("unknown config key '" + scope + it.key() + "'");
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out,
                const std::string& scope) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw rxcu::config_error("config field '" + scope + key +
                             "' has the wrong type");
  }
}

RunConfig parse_config(const json& j) {
  RunConfig rc;
  check_keys(j, "", {"seed", "out", "conventional", "clamp", "train", "synth",
                     "eval", "sweep"});
  read_field(j, "seed", rc.seed, "");
  read_field(j, "out", rc.out, "");

  if (j.contains("conventional")) {
    const json& jc = j.at("conventional");
    check_keys(jc, "conventional.", {"kind", "vwn", "b3lyp", "dm21"});
    std::string kind = to_string(rc.conv.kind);
    std::string vwn = to_string(rc.conv.vwn);
    read_field(jc, "kind", kind, "conventional.");
    read_field(jc, "vwn", vwn, "conventional.");
    rc.conv.kind = rxcu::conventional_kind_from_string(kind);
    rc.conv.vwn = rxcu::vwn_variant_from_string(vwn);
    if (jc.contains("b3lyp")) {
      const json& jb = jc.at("b3lyp");
      check_keys(jb, "conventional.b3lyp.", {"a", "b", "c"});
      read_field(jb, "a", rc.conv.b3lyp.a, "conventional.b3lyp.");
      read_field(jb, "b", rc.conv.b3lyp.b, "conventional.b3lyp.");
      read_field(jb, "c", rc.conv.b3lyp.c, "conventional.b3lyp.");
    }
    if (jc.contains("dm21")) {
      const json& jd = jc.at("dm21");
      check_keys(jd, "conventional.dm21.", {"a1", "a2", "a3"});
      read_field(jd, "a1", rc.conv.dm21.a1, "conventional.dm21.");
      read_field(jd, "a2", rc.conv.dm21.a2, "conventional.dm21.");
      read_field(jd, "a3", rc.conv.dm21.a3, "conventional.dm21.");
    }
  }

  if (j.contains("clamp")) {
    const json& jc = j.at("clamp");
    check_keys(jc, "clamp.", {"k1", "k2", "epsilon"});
    read_field(jc, "k1", rc.train.clamp.k1, "clamp.");
    read_field(jc, "k2", rc.train.clamp.k2, "clamp.");
    read_field(jc, "epsilon", rc.train.clamp.epsilon, "clamp.");
  }

  if (j.contains("train")) {
    const json& jt = j.at("train");
    check_keys(jt, "train.",
               {"learning_rate", "lr_floor", "epochs", "batch_size",
                "loss_mode", "feature_set", "activation"});
    read_field(jt, "learning_rate", rc.train.learning_rate, "train.");
    read_field(jt, "lr_floor", rc.train.lr_floor, "train.");
    read_field(jt, "epochs", rc.train.epochs, "train.");
    read_field(jt, "batch_size", rc.train.batch_size, "train.");
    std::string loss = to_string(rc.train.loss_mode);
    std::string feats = to_string(rc.train.feature_set);
    std::string act = to_string(rc.train.activation);
    read_field(jt, "loss_mode", loss, "train.");
    read_field(jt, "feature_set", feats, "train.");
    read_field(jt, "activation", act, "train.");
    rc.train.loss_mode = rxcu::loss_mode_from_string(loss);
    rc.train.feature_set = rxcu::feature_set_from_string(feats);
    rc.train.activation = rxcu::activation_from_string(act);
  }

  if (j.contains("synth")) {
    const json& js = j.at("synth");
    check_keys(js, "synth.",
               {"n_species", "n_reactions", "prune_mass_fraction", "target_h",
                "tail_margin"});
    read_field(js, "n_species", rc.synth.n_species, "synth.");
    read_field(js, "n_reactions", rc.synth.n_reactions, "synth.");
    read_field(js, "prune_mass_fraction", rc.synth.prune_mass_fraction,
               "synth.");
    read_field(js, "target_h", rc.synth.target_h, "synth.");
    read_field(js, "tail_margin", rc.synth.tail_margin, "synth.");
  }

  if (j.contains("eval")) {
    const json& je = j.at("eval");
    check_keys(je, "eval.", {"repetitions"});
    read_field(je, "repetitions", rc.repetitions, "eval.");
  }

  if (j.contains("sweep")) {
    const json& js = j.at("sweep");
    check_keys(js, "sweep.", {"k1", "k2"});
    read_field(js, "k1", rc.sweep_k1, "sweep.");
    read_field(js, "k2", rc.sweep_k2, "sweep.");
  }
  return rc;
}

// Train-configuration flags shared by train, eval (repetition mode), and
// sweep. Flags override whatever the config file set.
struct TrainFlags {
  double lr = 0, lr_floor = 0, k1 = 0, k2 = 0, epsilon = 0;
  int epochs = 0, batch_size = 0;
  std::string loss_mode, feature_set, activation;

  // The sweep command owns --k1/--k2 as value lists, so it attaches without
  // the scalar clamp flags.
  void attach(CLI::App* s, bool with_clamp = true) {
    s->add_option("--lr", lr, "initial learning rate");
    s->add_option("--lr-floor", lr_floor, "cosine schedule floor");
    s->add_option("--epochs", epochs, "training epochs");
    s->add_option("--batch-size", batch_size, "reactions per SGD batch");
    s->add_option("--loss-mode", loss_mode, "rbnet | direct_u | mse_resnet");
    s->add_option("--feature-set", feature_set, "y16 | x11");
    s->add_option("--activation", activation, "tanh | silu");
    if (with_clamp) {
      s->add_option("--k1", k1, "residual mean clamp constant");
      s->add_option("--k2", k2, "log-variance cap constant");
    }
    s->add_option("--epsilon", epsilon, "variance floor");
  }

  void apply(const CLI::App* s, rxcu::TrainConfig& cfg) const {
    if (s->count("--lr")) cfg.learning_rate = lr;
    if (s->count("--lr-floor")) cfg.lr_floor = lr_floor;
    if (s->count("--epochs")) cfg.epochs = epochs;
    if (s->count("--batch-size")) cfg.batch_size = batch_size;
    if (s->count("--loss-mode")) {
      cfg.loss_mode = rxcu::loss_mode_from_string(loss_mode);
    }
    if (s->count("--feature-set")) {
      cfg.feature_set = rxcu::feature_set_from_string(feature_set);
    }
    if (s->count("--activation")) {
      cfg.activation = rxcu::activation_from_string(activation);
    }
    if (s->get_option_no_throw("--k1") && s->count("--k1")) cfg.clamp.k1 = k1;
    if (s->get_option_no_throw("--k2") && s->count("--k2")) cfg.clamp.k2 = k2;
    if (s->count("--epsilon")) cfg.clamp.epsilon = epsilon;
  }
};

std::string resolve_out(const std::string& flag_value,
                        const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  if (const char* env = std::getenv("RXCU_OUT_ROOT")) {
    if (*env) return env;
  }
  return "out";
}

rxcu::Dataset load_dataset_dir(const std::string& dir) {
  return rxcu::load_dataset((fs::path(dir) / "reactions.manifest").string(),
                            (fs::path(dir) / "grids").string());
}

rxcu::MolecularGrid load_species_grid(const std::string& dir,
                                      const std::string& species) {
  const fs::path text = fs::path(dir) / "grids" / (species + ".grid");
  const fs::path bin = fs::path(dir) / "grids" / (species + ".gridb");
  rxcu::MolecularGrid grid;
  if (fs::exists(text)) grid = rxcu::read_grid_text(text.string());
  else if (fs::exists(bin)) grid = rxcu::read_grid_binary(bin.string());
  else throw rxcu::data_error("no grid file for species '" + species + "'");
  const rxcu::ValidationReport rep = rxcu::validate_grid(grid);
  if (!rep.ok()) {
    throw rxcu::data_error("grid for '" + species + "' fails validation:\n" +
                           rep.str());
  }
  return grid;
}

json truth_to_json(const rxcu::SynthDataset& sd) {
  json j;
  j["format"] = "rxcu_truth";
  j["version"] = 1;
  j["truth"] = {{"amp_smooth", sd.truth.amp_smooth},
                {"amp_osc", sd.truth.amp_osc},
                {"c_lda", sd.truth.c_lda},
                {"c_conv", sd.truth.c_conv},
                {"c_w", sd.truth.c_w},
                {"kx", sd.truth.kx},
                {"ky", sd.truth.ky},
                {"kz", sd.truth.kz}};
  j["hf_stand_in"] = {{"c_omega1", rxcu::kSynthHfC1},
                      {"c_omega2", rxcu::kSynthHfC2}};
  j["conventional"] = {
      {"kind", to_string(sd.conv.kind)},
      {"b3lyp", {sd.conv.b3lyp.a, sd.conv.b3lyp.b, sd.conv.b3lyp.c}},
      {"dm21", {sd.conv.dm21.a1, sd.conv.dm21.a2, sd.conv.dm21.a3}},
      {"vwn", to_string(sd.conv.vwn)}};
  json species = json::object();
  for (const auto& [id, gen] : sd.generators) {
    json centers = json::array();
    for (const auto& c : gen.centers) {
      centers.push_back({{"x", c.x},
                         {"y", c.y},
                         {"z", c.z},
                         {"exponent", c.exponent},
                         {"occ_up", c.occ_up},
                         {"occ_down", c.occ_down}});
    }
    const auto& geom = sd.geometry.at(id);
    species[id] = {{"centers", std::move(centers)},
                   {"extent", geom.extent},
                   {"points_per_axis", geom.points_per_axis},
                   {"osc_weight", sd.osc_weight.at(id)}};
  }
  j["species"] = std::move(species);
  return j;
}

double vec_mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double vec_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = vec_mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

int run(int argc, char** argv) {
  CLI::App app{
      "Conventional XC functionals corrected by a learned residual with "
      "per-reaction uncertainty"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_flag;
  std::uint64_t seed_flag = 0;
  app.add_option("--config", config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed_flag, "RNG seed (overrides config)");
  app.add_option("--out", out_flag,
                 "output directory (overrides config and RXCU_OUT_ROOT)");

  // synth
  auto* c_synth =
      app.add_subcommand("synth", "generate a synthetic Gaussian dataset");
  int n_species = 0, n_reactions = 0;
  c_synth->add_option("--n-species", n_species, "number of molecule species");
  c_synth->add_option("--n-reactions", n_reactions, "number of reactions");

  // split
  auto* c_split = app.add_subcommand(
      "split", "partition a dataset's reactions into train/val/test");
  std::string split_data;
  c_split->add_option("--data", split_data, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  // train
  auto* c_train = app.add_subcommand("train", "train the residual network");
  std::string train_data, train_split;
  c_train->add_option("--data", train_data, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_train->add_option("--split", train_split, "split file")
      ->required()
      ->check(CLI::ExistingFile);
  TrainFlags train_flags;
  train_flags.attach(c_train);

  // eval
  auto* c_eval = app.add_subcommand(
      "eval", "evaluate a checkpoint (or freshly trained seeds) on the test "
              "reactions");
  std::string eval_data, eval_split, eval_checkpoint;
  int repetitions_flag = 0;
  c_eval->add_option("--data", eval_data, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_eval->add_option("--split", eval_split, "split file")
      ->required()
      ->check(CLI::ExistingFile);
  c_eval->add_option("--checkpoint", eval_checkpoint, "trained checkpoint")
      ->check(CLI::ExistingFile);
  c_eval->add_option("--repetitions", repetitions_flag,
                     "train this many seeds and report mean/std");
  TrainFlags eval_flags;
  eval_flags.attach(c_eval);

  // export-residuals
  auto* c_export = app.add_subcommand(
      "export-residuals", "dump the learned residual field over one grid");
  std::string exp_data, exp_checkpoint, exp_species;
  c_export->add_option("--data", exp_data, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_export->add_option("--checkpoint", exp_checkpoint, "trained checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  c_export->add_option("--species", exp_species, "species id")->required();

  // sweep
  auto* c_sweep = app.add_subcommand(
      "sweep", "retrain over a grid of clamp constants and tabulate test RMSE");
  std::string sweep_data, sweep_split;
  std::vector<double> sweep_k1_flag, sweep_k2_flag;
  c_sweep->add_option("--data", sweep_data, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_sweep->add_option("--split", sweep_split, "split file")
      ->required()
      ->check(CLI::ExistingFile);
  c_sweep->add_option("--k1", sweep_k1_flag, "k1 values")->delimiter(',');
  c_sweep->add_option("--k2", sweep_k2_flag, "k2 values")->delimiter(',');
  TrainFlags sweep_flags;
  sweep_flags.attach(c_sweep, /*with_clamp=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // app.exit prints help for --help (returning 0) or the error message;
    // every genuine parse failure maps onto the usage/config exit code.
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  RunConfig rc;
  if (!config_path.empty()) rc = parse_config(load_config_file(config_path));
  if (app.count("--seed")) rc.seed = seed_flag;
  rc.train.seed = rc.seed;
  rc.synth.seed = rc.seed;
  rc.synth.conv = rc.conv;

  const std::string out = resolve_out(out_flag, rc.out);
  fs::create_directories(out);
  auto out_path = [&](const std::string& name) {
    return (fs::path(out) / name).string();
  };

  if (c_synth->parsed()) {
    if (c_synth->count("--n-species")) rc.synth.n_species = n_species;
    if (c_synth->count("--n-reactions")) rc.synth.n_reactions = n_reactions;
    rc.synth.validate();
    rxcu::SynthDataset sd = rxcu::make_synthetic_dataset(rc.synth);
    rxcu::save_dataset(sd.data, out);
    std::ofstream tf(out_path("truth.json"), std::ios::binary);
    if (!tf) throw rxcu::data_error("cannot write " + out_path("truth.json"));
    tf << truth_to_json(sd).dump(1, '\t') << "\n";
    std::cout << "species " << sd.data.grids.size() << "\nreactions "
              << sd.data.reactions.size() << "\nwrote " << out << "\n";
    return 0;
  }

  if (c_split->parsed()) {
    rxcu::ManifestData md = rxcu::read_manifest(
        (fs::path(split_data) / "reactions.manifest").string());
    rxcu::SplitAssignment split =
        rxcu::split_dataset(md.reactions, md.compositions, rc.seed);
    rxcu::write_split(split, out_path("split.tsv"));
    std::cout << "train " << split.train.size() << "\nval "
              << split.validation.size() << "\ntest " << split.test.size()
              << "\nwrote " << out_path("split.tsv") << "\n";
    return 0;
  }

  if (c_train->parsed()) {
    train_flags.apply(c_train, rc.train);
    rc.train.validate();
    rxcu::Dataset data = load_dataset_dir(train_data);
    rxcu::SplitAssignment split = rxcu::read_split(train_split);
    rxcu::TrainResult res = rxcu::train(rc.train, data, split, rc.conv);
    rxcu::save_checkpoint(res.model, out_path("checkpoint.json"));
    rxcu::write_train_log(res.log, out_path("train_log.tsv"));
    std::cout << "best_epoch " << res.best_epoch << "\nbest_val_rmse_kcal "
              << rxcu::format_g17(res.best_val_rmse_kcal) << "\nwrote "
              << out_path("checkpoint.json") << "\n";
    return 0;
  }

  if (c_eval->parsed()) {
    eval_flags.apply(c_eval, rc.train);
    if (c_eval->count("--repetitions")) rc.repetitions = repetitions_flag;
    if (rc.repetitions < 1) {
      throw rxcu::config_error("repetitions must be >= 1");
    }
    const bool have_ckpt = !eval_checkpoint.empty();
    if (have_ckpt && rc.repetitions > 1) {
      throw rxcu::config_error(
          "repetitions > 1 retrains from scratch; drop --checkpoint");
    }
    rxcu::Dataset data = load_dataset_dir(eval_data);
    rxcu::SplitAssignment split = rxcu::read_split(eval_split);
    if (split.test.empty()) throw rxcu::data_error("split has no test bucket");

    rxcu::MetricRows rows;
    rows.emplace_back("n_reactions", static_cast<double>(split.test.size()));
    rows.emplace_back("repetitions", static_cast<double>(rc.repetitions));

    rxcu::MetricReport base;
    double rmse_mean = 0;
    if (have_ckpt) {
      rxcu::Model model = rxcu::load_checkpoint(eval_checkpoint);
      if (c_eval->count("--feature-set") &&
          model.feature_set != rc.train.feature_set) {
        throw rxcu::config_error(std::string("checkpoint uses feature set '") +
                                 to_string(model.feature_set) +
                                 "', contradicting --feature-set");
      }
      const rxcu::Model zero =
          rxcu::make_zero_model(model.conv, model.clamp, model.feature_set);
      base = rxcu::evaluate(data, split.test, zero).metrics;
      rxcu::EvalOutcome outcome = rxcu::evaluate(data, split.test, model);
      rxcu::write_eval_report(outcome, out_path("eval_report.tsv"));
      rows.emplace_back("baseline_rmse_kcal", base.rmse);
      rows.emplace_back("baseline_mae_kcal", base.mae);
      rows.emplace_back("baseline_mad_kcal", base.mad);
      rows.emplace_back("rmse_kcal", outcome.metrics.rmse);
      rows.emplace_back("mae_kcal", outcome.metrics.mae);
      rows.emplace_back("mad_kcal", outcome.metrics.mad);
      rmse_mean = outcome.metrics.rmse;
    } else {
      const rxcu::Model zero = rxcu::make_zero_model(
          rc.conv, rc.train.clamp, rc.train.feature_set);
      base = rxcu::evaluate(data, split.test, zero).metrics;
      rows.emplace_back("baseline_rmse_kcal", base.rmse);
      rows.emplace_back("baseline_mae_kcal", base.mae);
      rows.emplace_back("baseline_mad_kcal", base.mad);
      std::vector<double> rmses, maes, mads;
      for (int rep = 0; rep < rc.repetitions; ++rep) {
        rxcu::TrainConfig cfg = rc.train;
        cfg.seed = rc.seed + static_cast<std::uint64_t>(rep);
        rxcu::TrainResult res = rxcu::train(cfg, data, split, rc.conv);
        rxcu::EvalOutcome outcome =
            rxcu::evaluate(data, split.test, res.model);
        const std::string report =
            rc.repetitions == 1
                ? "eval_report.tsv"
                : "eval_report_rep" + std::to_string(rep + 1) + ".tsv";
        rxcu::write_eval_report(outcome, out_path(report));
        rmses.push_back(outcome.metrics.rmse);
        maes.push_back(outcome.metrics.mae);
        mads.push_back(outcome.metrics.mad);
      }
      if (rc.repetitions == 1) {
        rows.emplace_back("rmse_kcal", rmses[0]);
        rows.emplace_back("mae_kcal", maes[0]);
        rows.emplace_back("mad_kcal", mads[0]);
      } else {
        rows.emplace_back("rmse_kcal_mean", vec_mean(rmses));
        rows.emplace_back("rmse_kcal_std", vec_std(rmses));
        rows.emplace_back("mae_kcal_mean", vec_mean(maes));
        rows.emplace_back("mae_kcal_std", vec_std(maes));
        rows.emplace_back("mad_kcal_mean", vec_mean(mads));
        rows.emplace_back("mad_kcal_std", vec_std(mads));
      }
      rmse_mean = vec_mean(rmses);
    }
    rows.emplace_back("improvement_pct_rmse",
                      rxcu::improvement_pct(base.rmse, rmse_mean));
    rxcu::write_metrics(rows, out_path("metrics.tsv"));
    std::cout << "baseline_rmse_kcal " << rxcu::format_g17(base.rmse)
              << "\nrmse_kcal " << rxcu::format_g17(rmse_mean)
              << "\nimprovement_pct "
              << rxcu::format_g17(rxcu::improvement_pct(base.rmse, rmse_mean))
              << "\nwrote " << out_path("metrics.tsv") << "\n";
    return 0;
  }

  if (c_export->parsed()) {
    rxcu::Model model = rxcu::load_checkpoint(exp_checkpoint);
    rxcu::MolecularGrid grid = load_species_grid(exp_data, exp_species);
    auto field = rxcu::export_residual_field(grid, model);
    const std::string path =
        out_path("residual_field_" + exp_species + ".tsv");
    rxcu::write_residual_field(field, path);
    std::cout << "points " << field.size() << "\nwrote " << path << "\n";
    return 0;
  }

  if (c_sweep->parsed()) {
    sweep_flags.apply(c_sweep, rc.train);
    if (c_sweep->count("--k1")) rc.sweep_k1 = sweep_k1_flag;
    if (c_sweep->count("--k2")) rc.sweep_k2 = sweep_k2_flag;
    rxcu::Dataset data = load_dataset_dir(sweep_data);
    rxcu::SplitAssignment split = rxcu::read_split(sweep_split);
    auto rows = rxcu::sweep_clamp(rc.train, data, split, rc.conv, rc.sweep_k1,
                                  rc.sweep_k2);
    rxcu::write_sweep(rows, out_path("sweep.tsv"));
    std::cout << "rows " << rows.size() << "\nwrote " << out_path("sweep.tsv")
              << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const rxcu::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const rxcu::data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const rxcu::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
