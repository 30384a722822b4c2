#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lbc/config.hpp"
#include "lbc/fd_oracle.hpp"
#include "lbc/metrics.hpp"
#include "lbc/trainer.hpp"

namespace lbc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Parses argv and dispatches to a command. Never throws; returns an exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Malformed observation files; `line` is 1-based.
class DataError : public ConfigError {
 public:
  DataError(int line, const std::string& message)
      : ConfigError("data:" + std::to_string(line), message), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Reads `z,t,ua,uw` observations; throws DataError.
std::vector<Observation> read_observations(std::istream& in);
std::vector<Observation> read_observations(const std::string& path);
void write_observations(const std::vector<Observation>& obs, std::ostream& os);

/// Adds N(0, (sigma * std(series))^2) to each pressure series; sigma = 0 leaves data untouched.
std::vector<Observation> add_noise(std::vector<Observation> obs, double sigma, std::uint64_t seed);

/// `count` oracle observations, depths uniform in (0, H], times log-uniform in [t_lo, t_hi].
std::vector<Observation> sample_observations(const SolutionGrid& grid, int count, double t_lo, double t_hi,
                                             std::uint64_t seed);

/// Model evaluated on the oracle's nodes.
SolutionGrid tabulate(const FieldModel& model, const SolutionGrid& like);

/// First tabulated time at which max_z |u_a| <= fraction * ua0; empty if never reached.
std::optional<double> air_dissipation_time(const SolutionGrid& g, double ua0, double fraction = 0.01);

/// cva rescaled for a permeability ratio; cvw fixed.
SoilModel with_permeability_ratio(const SoilModel& sm, double reference_ratio, double ratio);

struct TrainOutcome {
  MetricsReport metrics;
  std::optional<double> air_time_model;
  std::optional<double> air_time_oracle;
};

enum class Mode { std, lbc };

/// Full train command for one config: artifacts land in config.output_dir.
TrainOutcome train_and_report(const RunConfig& config, Mode mode);

}  // namespace lbc::cli
