#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lbc/fd_oracle.hpp"
#include "lbc/physics.hpp"
#include "lbc/trainer.hpp"

namespace lbc {

/// Soil block: either direct coefficients or constitutive constants.
struct SoilBlock {
  std::optional<SoilModel> direct;
  std::optional<ConstitutiveParameters> constitutive;
  double H = 10.0;           // used with the constitutive form
  double ka_over_kw = 1.0;   // permeability ratio the direct coefficients correspond to

  SoilModel resolve() const;
};

struct SegmentationBlock {
  SegmentationScheme scheme = SegmentationScheme::log_uniform;
  int n = 5;       // log_uniform
  int n_rest = 3;  // simplified
};

struct InversionBlock {
  std::vector<Coefficient> free{Coefficient::cva};
  double t_max = 1e8;
  int segments = 1;
  double data_weight = 1.0;
  /// Start values for the free coefficients; unset ones start at the soil block's values.
  std::optional<double> cva, cvw, Ca, Cw;
};

/// One schema shared by every command.
struct RunConfig {
  SoilBlock soil;
  double horizon = 1e10;
  SegmentationBlock segmentation;
  Architecture network;
  SamplingCounts sampling;
  LossWeights weights;
  OptimizerOptions optimizer;
  bool burn_in = false;
  int burn_in_iterations = 100;
  double t_floor = kDefaultTimeFloor;
  GridSpec oracle;  // tmax is replaced by the horizon
  InversionBlock inversion;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int workers = 0;  // 0: hardware concurrency

  /// Throws ConfigError naming the offending field.
  void validate() const;

  SoilModel soil_model() const { return soil.resolve(); }
  SegmentationPlan plan() const;
  TrainConfig train_config() const;
  GridSpec oracle_grid() const;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

/// Applies PORO_SEED when set; throws ConfigError when it is not an unsigned integer.
void apply_environment(RunConfig& c);

}  // namespace lbc
