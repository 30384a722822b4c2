#include "lbc/network.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "lbc/errors.hpp"

namespace lbc {

void Architecture::validate() const {
  if (hidden_layers < 1) throw ParameterError("network.hidden_layers must be at least 1");
  if (hidden_width < 1) throw ParameterError("network.hidden_width must be at least 1");
}

std::vector<int> Architecture::layer_sizes() const {
  std::vector<int> sizes{input_dim};
  for (int k = 0; k < hidden_layers; ++k) sizes.push_back(hidden_width);
  sizes.push_back(output_dim);
  return sizes;
}

Eigen::Index Architecture::parameter_count() const {
  const auto sizes = layer_sizes();
  Eigen::Index count = 0;
  for (std::size_t k = 1; k < sizes.size(); ++k) count += sizes[k] * (sizes[k - 1] + 1);
  return count;
}

NetworkParameters::NetworkParameters(const Architecture& arch) : arch_(arch) {
  arch.validate();
  const auto sizes = arch.layer_sizes();
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    layers_.push_back({Eigen::MatrixXd::Zero(sizes[k], sizes[k - 1]), Eigen::VectorXd::Zero(sizes[k])});
  }
}

Eigen::Index NetworkParameters::size() const {
  Eigen::Index n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Eigen::VectorXd NetworkParameters::flatten() const {
  Eigen::VectorXd flat(size());
  Eigen::Index pos = 0;
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat[pos++] = l.weight(r, c);
    }
    flat.segment(pos, l.bias.size()) = l.bias;
    pos += l.bias.size();
  }
  return flat;
}

void NetworkParameters::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != size()) throw ShapeError("parameter vector length does not match architecture");
  Eigen::Index pos = 0;
  for (auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[pos++];
    }
    l.bias = flat.segment(pos, l.bias.size());
    pos += l.bias.size();
  }
}

bool NetworkParameters::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

std::pair<Eigen::Index, Eigen::Index> NetworkParameters::hidden_range() const {
  Eigen::Index n = 0;
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) n += layers_[k].weight.size() + layers_[k].bias.size();
  return {0, n};
}

bool NetworkParameters::operator==(const NetworkParameters& other) const {
  if (!(arch_ == other.arch_) || layers_.size() != other.layers_.size()) return false;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (layers_[k].weight != other.layers_[k].weight || layers_[k].bias != other.layers_[k].bias) return false;
  }
  return true;
}

NetworkParameters init_network(const Architecture& arch, std::uint64_t seed) {
  NetworkParameters p(arch);
  p.set_seed(seed);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < p.layer_count(); ++k) {
    auto& l = p.layer(k);
    const double limit = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = dist(rng);
    }
    l.bias.setZero();
  }
  return p;
}

Eigen::MatrixXd forward_batch(const NetworkParameters& p, const Eigen::VectorXd& zbar,
                              const Eigen::VectorXd& tbar, const JetLayout& layout) {
  Eigen::MatrixXd x = seed_inputs(zbar, tbar, layout);
  Eigen::MatrixXd a;
  for (std::size_t k = 0; k < p.layer_count(); ++k) {
    kernels::jet_affine(p.layer(k).weight, p.layer(k).bias, x, layout, a);
    if (k + 1 < p.layer_count()) {
      kernels::jet_tanh(a, layout, x);
    } else {
      x.swap(a);
    }
  }
  if (!x.allFinite()) throw NumericalError("non-finite network output");
  return x;
}

std::pair<Jet, Jet> forward_jet(const NetworkParameters& p, double zbar, double tbar) {
  const auto layout = JetLayout::full(1);
  const Eigen::MatrixXd out =
      forward_batch(p, Eigen::VectorXd::Constant(1, zbar), Eigen::VectorXd::Constant(1, tbar), layout);
  auto jet = [&](Eigen::Index row) {
    return Jet{out(row, layout.offset(JetPart::value)), out(row, layout.offset(JetPart::dz)),
               out(row, layout.offset(JetPart::dzz)), out(row, layout.offset(JetPart::dt))};
  };
  return {jet(0), jet(1)};
}

std::pair<double, double> forward(const NetworkParameters& p, double zbar, double tbar) {
  const Eigen::MatrixXd out = forward_batch(p, Eigen::VectorXd::Constant(1, zbar),
                                            Eigen::VectorXd::Constant(1, tbar), JetLayout::value_only(1));
  return {out(0, 0), out(1, 0)};
}

NetworkVars register_parameters(ad::Tape& tape, const NetworkParameters& p) {
  NetworkVars vars;
  for (std::size_t k = 0; k < p.layer_count(); ++k) {
    vars.layers.emplace_back(tape.variable(p.layer(k).weight), tape.variable(p.layer(k).bias));
  }
  return vars;
}

ad::Var record_forward(ad::Tape& tape, const NetworkVars& vars, const Eigen::MatrixXd& seeded_inputs,
                       const JetLayout& layout) {
  ad::Var x = tape.constant(seeded_inputs);
  for (std::size_t k = 0; k < vars.layers.size(); ++k) {
    x = tape.jet_affine(vars.layers[k].first, vars.layers[k].second, x, layout);
    if (k + 1 < vars.layers.size()) x = tape.jet_tanh(x, layout);
  }
  if (!tape.value(x).allFinite()) throw NumericalError("non-finite network output");
  return x;
}

Eigen::VectorXd gather_gradient(const ad::Tape& tape, const NetworkVars& vars) {
  Eigen::Index n = 0;
  for (const auto& [w, b] : vars.layers) n += tape.value(w).size() + tape.value(b).size();
  Eigen::VectorXd flat(n);
  Eigen::Index pos = 0;
  for (const auto& [w, b] : vars.layers) {
    const auto& gw = tape.grad(w);
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw.cols(); ++c) flat[pos++] = gw(r, c);
    }
    const auto& gb = tape.grad(b);
    flat.segment(pos, gb.size()) = gb.col(0);
    pos += gb.size();
  }
  return flat;
}

ValueAndGradient evaluate_with_gradient(const NetworkParameters& p, const Objective& objective) {
  ad::Tape tape;
  const auto vars = register_parameters(tape, p);
  const ad::Var loss = objective(tape, vars);
  ValueAndGradient out;
  out.value = tape.scalar(loss);
  tape.backward(loss);
  out.gradient = gather_gradient(tape, vars);
  return out;
}

nlohmann::json to_json(const NetworkParameters& p) {
  nlohmann::json j;
  j["architecture"] = {{"input_dim", Architecture::input_dim},
                       {"hidden_layers", p.architecture().hidden_layers},
                       {"hidden_width", p.architecture().hidden_width},
                       {"output_dim", Architecture::output_dim}};
  j["seed"] = p.seed();
  auto layers = nlohmann::json::array();
  for (std::size_t k = 0; k < p.layer_count(); ++k) {
    const auto& l = p.layer(k);
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    }
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"weight", w},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  j["layers"] = layers;
  return j;
}

NetworkParameters network_from_json(const nlohmann::json& j) {
  try {
    Architecture arch;
    arch.hidden_layers = j.at("architecture").at("hidden_layers").get<int>();
    arch.hidden_width = j.at("architecture").at("hidden_width").get<int>();
    NetworkParameters p(arch);
    p.set_seed(j.value("seed", std::uint64_t{0}));
    const auto& layers = j.at("layers");
    if (layers.size() != p.layer_count()) throw ShapeError("checkpoint layer count mismatch");
    for (std::size_t k = 0; k < p.layer_count(); ++k) {
      auto& l = p.layer(k);
      const auto w = layers[k].at("weight").get<std::vector<double>>();
      const auto b = layers[k].at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != l.weight.size() ||
          static_cast<Eigen::Index>(b.size()) != l.bias.size()) {
        throw ShapeError("checkpoint layer " + std::to_string(k) + " has wrong shape");
      }
      std::size_t pos = 0;
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = w[pos++];
      }
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = b[static_cast<std::size_t>(r)];
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(std::string("malformed network checkpoint: ") + e.what());
  }
}

void save_checkpoint(const NetworkParameters& p, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << to_json(p).dump() << '\n';
}

NetworkParameters load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  try {
    return network_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::parse_error& e) {
    throw ShapeError(std::string("malformed network checkpoint: ") + e.what());
  }
}

}  // namespace lbc
