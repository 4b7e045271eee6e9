#pragma once

// Model bundle (network + standardizer + clamp + conventional functional
// choice) and its versioned JSON checkpoint format. Doubles are serialized
// with shortest-round-trip text and keys are emitted in sorted order, so
// save/load round-trips are bit-exact and identical models produce
// byte-identical files.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rxcu/common.hpp"
#include "rxcu/functionals.hpp"
#include "rxcu/rbnet.hpp"

namespace rxcu {

struct Model {
  NetworkParams params;
  Standardizer standardizer;
  ClampConfig clamp;
  ConventionalSpec conv;
  LossMode loss_mode = LossMode::kRbnet;
  FeatureSet feature_set = FeatureSet::kY16;
  std::uint64_t seed = 0;

  int input_width() const { return params.input_width(); }

  void validate() const {
    params.validate();
    clamp.validate();
    const int want = feature_set == FeatureSet::kY16 ? 16 : 11;
    if (input_width() != want) {
      throw data_error("network input width " + std::to_string(input_width()) +
                       " does not match feature set " +
                       to_string(feature_set));
    }
    if (standardizer.width() != input_width()) {
      throw data_error("standardizer width does not match network input");
    }
  }
};

// The no-op model: all-zero weights, identity standardization. Its residual
// mean is identically zero, so predictions reduce to the conventional
// functional alone.
inline Model make_zero_model(const ConventionalSpec& conv,
                             const ClampConfig& clamp,
                             FeatureSet fs = FeatureSet::kY16) {
  Model m;
  m.feature_set = fs;
  m.params = zero_params(fs == FeatureSet::kY16 ? 16 : 11);
  m.standardizer = Standardizer::identity(m.input_width());
  m.clamp = clamp;
  m.conv = conv;
  return m;
}

namespace detail {

using json = nlohmann::json;

inline json layers_to_json(const std::vector<LayerParams>& layers) {
  json arr = json::array();
  for (const auto& l : layers) {
    json jl;
    jl["rows"] = l.W.rows();
    jl["cols"] = l.W.cols();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.W.size()));
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) w.push_back(l.W(r, c));
    }
    jl["W"] = w;
    jl["b"] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
    arr.push_back(std::move(jl));
  }
  return arr;
}

inline std::vector<LayerParams> layers_from_json(const json& arr,
                                                 const std::string& what) {
  std::vector<LayerParams> layers;
  for (const auto& jl : arr) {
    const auto rows = jl.at("rows").get<Eigen::Index>();
    const auto cols = jl.at("cols").get<Eigen::Index>();
    const auto w = jl.at("W").get<std::vector<double>>();
    const auto b = jl.at("b").get<std::vector<double>>();
    if (rows < 1 || cols < 1 ||
        w.size() != static_cast<std::size_t>(rows * cols) ||
        b.size() != static_cast<std::size_t>(cols)) {
      throw data_error("corrupt layer shape in checkpoint " + what);
    }
    LayerParams l;
    l.W.resize(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) l.W(r, c) = w[k++];
    }
    l.b = Eigen::Map<const Eigen::RowVectorXd>(b.data(),
                                               static_cast<Eigen::Index>(b.size()));
    layers.push_back(std::move(l));
  }
  return layers;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const Model& m) {
  m.validate();
  nlohmann::json j;
  j["format"] = "rxcu_checkpoint";
  j["version"] = 1;
  j["seed"] = m.seed;
  j["loss_mode"] = to_string(m.loss_mode);
  j["feature_set"] = to_string(m.feature_set);
  j["clamp"] = {{"k1", m.clamp.k1},
                {"k2", m.clamp.k2},
                {"epsilon", m.clamp.epsilon}};
  j["conventional"] = {
      {"kind", to_string(m.conv.kind)},
      {"b3lyp", {m.conv.b3lyp.a, m.conv.b3lyp.b, m.conv.b3lyp.c}},
      {"dm21", {m.conv.dm21.a1, m.conv.dm21.a2, m.conv.dm21.a3}},
      {"vwn", to_string(m.conv.vwn)}};
  j["standardizer"] = {
      {"signed_log", m.standardizer.signed_log},
      {"mean", std::vector<double>(m.standardizer.mean.data(),
                                   m.standardizer.mean.data() +
                                       m.standardizer.mean.size())},
      {"scale", std::vector<double>(m.standardizer.scale.data(),
                                    m.standardizer.scale.data() +
                                        m.standardizer.scale.size())}};
  j["network"] = {{"input_width", m.params.input_width()},
                  {"activation", to_string(m.params.activation)},
                  {"init_scheme", m.params.init_scheme},
                  {"trunk", detail::layers_to_json(m.params.trunk)},
                  {"head_mean", detail::layers_to_json(m.params.head_mean)},
                  {"head_var", detail::layers_to_json(m.params.head_var)}};
  return j;
}

inline Model checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "rxcu_checkpoint" ||
        j.at("version").get<int>() != 1) {
      throw data_error("unrecognized checkpoint format/version");
    }
    Model m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.loss_mode = loss_mode_from_string(j.at("loss_mode").get<std::string>());
    m.feature_set =
        feature_set_from_string(j.at("feature_set").get<std::string>());
    const auto& jc = j.at("clamp");
    m.clamp.k1 = jc.at("k1").get<double>();
    m.clamp.k2 = jc.at("k2").get<double>();
    m.clamp.epsilon = jc.at("epsilon").get<double>();
    const auto& jv = j.at("conventional");
    m.conv.kind = conventional_kind_from_string(jv.at("kind").get<std::string>());
    const auto b3 = jv.at("b3lyp").get<std::vector<double>>();
    const auto dm = jv.at("dm21").get<std::vector<double>>();
    if (b3.size() != 3 || dm.size() != 3) {
      throw data_error("corrupt functional coefficients in checkpoint");
    }
    m.conv.b3lyp = {b3[0], b3[1], b3[2]};
    m.conv.dm21 = {dm[0], dm[1], dm[2]};
    m.conv.vwn = vwn_variant_from_string(jv.at("vwn").get<std::string>());
    const auto& js = j.at("standardizer");
    m.standardizer.signed_log = js.at("signed_log").get<bool>();
    const auto mean = js.at("mean").get<std::vector<double>>();
    const auto scale = js.at("scale").get<std::vector<double>>();
    m.standardizer.mean = Eigen::Map<const Eigen::VectorXd>(
        mean.data(), static_cast<Eigen::Index>(mean.size()));
    m.standardizer.scale = Eigen::Map<const Eigen::VectorXd>(
        scale.data(), static_cast<Eigen::Index>(scale.size()));
    const auto& jn = j.at("network");
    m.params.activation =
        activation_from_string(jn.at("activation").get<std::string>());
    m.params.init_scheme = jn.at("init_scheme").get<std::string>();
    m.params.seed = m.seed;
    m.params.trunk = detail::layers_from_json(jn.at("trunk"), "trunk");
    m.params.head_mean = detail::layers_from_json(jn.at("head_mean"), "head_mean");
    m.params.head_var = detail::layers_from_json(jn.at("head_var"), "head_var");
    if (jn.at("input_width").get<int>() != m.params.input_width()) {
      throw data_error("checkpoint input_width disagrees with trunk shape");
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open checkpoint for writing: " + path);
  out << checkpoint_to_json(m).dump(1, '\t') << "\n";
  if (!out) throw data_error("failed writing checkpoint: " + path);
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace rxcu
