#pragma once

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "astrogate/plasticity.hpp"

namespace astrogate {

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::ordered_json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::MatrixXd matrix_from(const nlohmann::ordered_json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) throw std::runtime_error("checkpoint: bad matrix shape");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw std::runtime_error("checkpoint: bad matrix shape");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Eigen::VectorXd vector_from(const nlohmann::ordered_json& j, Eigen::Index n) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != n) throw std::runtime_error("checkpoint: bad vector length");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
}

}  // namespace detail

/// Architecture, weights, biases, thresholds, momentum buffers and gate/update settings.
inline nlohmann::ordered_json checkpoint_json(const GatedModel& m, const std::string& mode, OutputDelta delta,
                                              std::size_t k_neighbors) {
  nlohmann::ordered_json j;
  j["format"] = "astrogate-checkpoint";
  j["version"] = kCheckpointVersion;
  j["mode"] = mode;
  j["architecture"] = {{"widths", m.net.arch.widths}, {"hidden_activation", activation_name(m.net.arch.hidden)}};
  j["output_delta"] = delta == OutputDelta::literal ? "literal" : "simplified";
  const auto& g = m.gate_cfg;
  j["gate"] = {{"alpha", g.coeffs.alpha}, {"beta", g.coeffs.beta},   {"gamma", g.coeffs.gamma},
               {"delta", g.coeffs.delta}, {"eps_ca", g.coeffs.eps_ca}, {"k_steep", g.k_steep},
               {"eta_theta", g.eta_theta}};
  const auto& h = m.hypers;
  j["hypers"] = {{"eta", h.eta}, {"lambda_m", h.lambda_m}, {"lambda_w", h.lambda_w}, {"xi", h.xi}, {"momentum", h.mu}};
  j["k_neighbors"] = k_neighbors;
  auto layers = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < m.net.n_layers(); ++l)
    layers.push_back({{"w", detail::matrix_json(m.net.w[l])},
                      {"b", detail::vector_json(m.net.b[l])},
                      {"theta", detail::vector_json(m.theta[l])},
                      {"momentum", detail::matrix_json(m.prev_update[l])}});
  j["layers"] = std::move(layers);
  return j;
}

inline void save_checkpoint(const nlohmann::ordered_json& j, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << '\n';
}

inline GatedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  const auto j = nlohmann::ordered_json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "astrogate-checkpoint")
    throw std::runtime_error(path + ": not an astrogate checkpoint");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version");
  MlpArchitecture arch;
  arch.widths = j.at("architecture").at("widths").get<std::vector<std::size_t>>();
  arch.hidden = parse_activation(j.at("architecture").at("hidden_activation").get<std::string>());
  const auto& g = j.at("gate");
  GateConfig gc{{g.at("alpha"), g.at("beta"), g.at("gamma"), g.at("delta"), g.at("eps_ca")}, g.at("k_steep"),
                g.at("eta_theta")};
  const auto& h = j.at("hypers");
  UpdateHypers hp{h.at("eta"), h.at("lambda_m"), h.at("lambda_w"), h.at("xi"), h.at("momentum")};
  GatedModel m = make_gated_model(zero_mlp(arch), gc, hp, j.at("k_neighbors").get<std::size_t>());
  const auto& layers = j.at("layers");
  if (layers.size() != m.net.n_layers()) throw std::runtime_error(path + ": layer count mismatch");
  for (std::size_t l = 0; l < m.net.n_layers(); ++l) {
    const auto rows = m.net.w[l].rows(), cols = m.net.w[l].cols();
    m.net.w[l] = detail::matrix_from(layers[l].at("w"), rows, cols);
    m.net.b[l] = detail::vector_from(layers[l].at("b"), rows);
    m.theta[l] = detail::vector_from(layers[l].at("theta"), rows);
    m.prev_update[l] = detail::matrix_from(layers[l].at("momentum"), rows, cols);
  }
  return m;
}

}  // namespace astrogate
