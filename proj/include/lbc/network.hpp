#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "lbc/jet.hpp"
#include "lbc/tape.hpp"

namespace lbc {

/// Dense tanh network (zbar, tbar) -> (ua, uw).
struct Architecture {
  static constexpr int input_dim = 2;
  static constexpr int output_dim = 2;
  int hidden_layers = 5;
  int hidden_width = 50;

  void validate() const;
  /// {2, width, ..., width, 2}
  std::vector<int> layer_sizes() const;
  Eigen::Index parameter_count() const;

  bool operator==(const Architecture&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // fan_out x fan_in
  Eigen::VectorXd bias;    // fan_out
};

/// All weights and biases. Flat order: layer by layer, weight row-major then bias.
class NetworkParameters {
 public:
  NetworkParameters() = default;
  explicit NetworkParameters(const Architecture& arch);

  const Architecture& architecture() const noexcept { return arch_; }
  std::uint64_t seed() const noexcept { return seed_; }
  void set_seed(std::uint64_t seed) noexcept { seed_ = seed; }

  std::size_t layer_count() const noexcept { return layers_.size(); }
  const DenseLayer& layer(std::size_t k) const { return layers_.at(k); }
  DenseLayer& layer(std::size_t k) { return layers_.at(k); }

  Eigen::Index size() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  bool all_finite() const;

  /// Flat indices belonging to hidden layers (everything except the output layer).
  std::pair<Eigen::Index, Eigen::Index> hidden_range() const;

  bool operator==(const NetworkParameters& other) const;

 private:
  Architecture arch_;
  std::uint64_t seed_ = 0;
  std::vector<DenseLayer> layers_;
};

/// Xavier-uniform weights, zero biases; deterministic in `seed`.
NetworkParameters init_network(const Architecture& arch, std::uint64_t seed);

/// Value-and-derivative jets for (ua, uw) at one point.
std::pair<Jet, Jet> forward_jet(const NetworkParameters& p, double zbar, double tbar);

/// Plain forward pass at one point.
std::pair<double, double> forward(const NetworkParameters& p, double zbar, double tbar);

/// Batched jets: returns the 2 x layout.columns() output block.
Eigen::MatrixXd forward_batch(const NetworkParameters& p, const Eigen::VectorXd& zbar,
                              const Eigen::VectorXd& tbar, const JetLayout& layout);

/// Parameters registered on a tape, one (W, b) pair per layer.
struct NetworkVars {
  std::vector<std::pair<ad::Var, ad::Var>> layers;
};

NetworkVars register_parameters(ad::Tape& tape, const NetworkParameters& p);

/// Records the forward pass of a batch on the tape; returns the 2 x columns output node.
ad::Var record_forward(ad::Tape& tape, const NetworkVars& vars, const Eigen::MatrixXd& seeded_inputs,
                       const JetLayout& layout);

/// Flat parameter gradient in NetworkParameters::flatten() order.
Eigen::VectorXd gather_gradient(const ad::Tape& tape, const NetworkVars& vars);

using Objective = std::function<ad::Var(ad::Tape&, const NetworkVars&)>;

struct ValueAndGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Records `objective` on a fresh tape and runs one reverse sweep.
ValueAndGradient evaluate_with_gradient(const NetworkParameters& p, const Objective& objective);

nlohmann::json to_json(const NetworkParameters& p);
NetworkParameters network_from_json(const nlohmann::json& j);
void save_checkpoint(const NetworkParameters& p, const std::string& path);
NetworkParameters load_checkpoint(const std::string& path);

}  // namespace lbc
