#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lbc/field_model.hpp"
#include "lbc/lbfgs.hpp"
#include "lbc/losses.hpp"
#include "lbc/network.hpp"
#include "lbc/physics.hpp"

namespace lbc {

enum class SegmentationScheme { log_uniform, simplified };

const char* to_string(SegmentationScheme scheme) noexcept;

/// Boundaries T_0 = 0 < T_1 < ... < T_N = T_max.
struct SegmentationPlan {
  std::vector<double> boundaries;
  SegmentationScheme scheme = SegmentationScheme::log_uniform;

  void validate() const;
  int segment_count() const noexcept { return static_cast<int>(boundaries.size()) - 1; }
  double horizon() const { return boundaries.back(); }
  /// 1-based segment.
  Segment segment(int index, double H) const;
  /// Segment owning time t: t in (T_{n-1}, T_n], with t = 0 owned by segment 1.
  int owner(double t) const;
};

/// T_k = 10^{(k/N) log10 T_max} for k = 1..N, T_0 = 0.
SegmentationPlan plan_segments(double t_max, int n);

/// First boundary at the characteristic air time, the rest split log-uniformly.
SegmentationPlan plan_segments_simplified(const SoilModel& sm, double t_max, int n_rest);

struct TrainConfig {
  Architecture arch;
  SamplingCounts counts;
  LossWeights weights;
  OptimizerOptions optimizer;
  std::uint64_t seed = 1;
  bool burn_in = false;         // freeze hidden layers for the first iterations of segments n >= 2
  int burn_in_iterations = 100;
  double t_floor = kDefaultTimeFloor;
  bool verbose = false;
};

struct TraceRow {
  int iteration = 0;
  LossBreakdown loss;
};

struct SegmentTrace {
  int segment = 1;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<TraceRow> rows;
  double wall_seconds = 0.0;
  StopReason reason = StopReason::max_iterations;
  std::string message;
  LossBreakdown final_loss;
  int evaluations = 0;
};

struct TrainReport {
  std::vector<SegmentTrace> segments;
  /// max over depth and both pressures of |u^(n)(z, T_n) - u^(n+1)(z, T_n)| (kPa).
  std::vector<double> interface_jumps;
};

/// Per-segment networks stitched over the whole horizon.
class StitchedModel : public FieldModel {
 public:
  StitchedModel() = default;
  StitchedModel(SegmentationPlan plan, std::vector<NetworkParameters> models, SoilModel soil);

  const SegmentationPlan& plan() const noexcept { return plan_; }
  const std::vector<NetworkParameters>& models() const noexcept { return models_; }
  const SoilModel& soil() const noexcept { return soil_; }

  std::pair<double, double> evaluate(double z, double t) const;
  std::pair<Eigen::VectorXd, Eigen::VectorXd> profile(const Eigen::VectorXd& z, double t) const override;

  bool operator==(const StitchedModel& other) const;

 private:
  SegmentationPlan plan_;
  std::vector<NetworkParameters> models_;
  SoilModel soil_;
};

std::pair<double, double> evaluate_stitched(const StitchedModel& m, double z, double t);

/// Inputs for one segment beyond the segment itself.
struct SegmentContext {
  SoilModel soil;
  TrainConfig config;
  std::optional<Segment> previous_segment;
  std::optional<NetworkParameters> previous_model;
};

/// Deterministic collocation seed of segment `index` within a run seeded by `run_seed`.
std::uint64_t segment_seed(std::uint64_t run_seed, int index);

std::pair<NetworkParameters, SegmentTrace> train_segment(const Segment& seg, NetworkParameters initial,
                                                         const SegmentContext& context);

/// Raised when a segment cannot be trained; carries what was finished.
class TrainingError : public NumericalError {
 public:
  TrainingError(const std::string& message, TrainReport partial)
      : NumericalError(message), partial_(std::move(partial)) {}
  const TrainReport& partial() const noexcept { return partial_; }

 private:
  TrainReport partial_;
};

std::pair<StitchedModel, TrainReport> train_lbc(const SoilModel& sm, const SegmentationPlan& plan,
                                                const TrainConfig& config);

/// Single segment over [0, T_max].
std::pair<StitchedModel, TrainReport> train_std(const SoilModel& sm, double t_max, const TrainConfig& config);

/// `segment,iteration,total,loss_ic,loss_bc,loss_r,loss_s`.
void write_trace_csv(const TrainReport& report, std::ostream& os);

// ---------------------------------------------------------------------------
// Coefficient inversion

struct Observation {
  double z = 0.0;
  double t = 0.0;
  double ua = 0.0;
  double uw = 0.0;
};

enum class Coefficient { cva, cvw, Ca, Cw };

const char* to_string(Coefficient c) noexcept;
Coefficient coefficient_from_string(const std::string& name);

struct InversionConfig {
  SoilModel initial_guess;  // fixed values for the non-free coefficients, start values for the rest
  double t_max = 1e8;
  int segments = 1;         // 1: single-window objective; >1: log-uniform segmented
  TrainConfig train;
  double data_weight = 1.0;
};

struct MisfitRow {
  int segment = 1;
  int iteration = 0;
  double total = 0.0;
  double misfit = 0.0;
  double cva = 0.0;
  double cvw = 0.0;
  double Ca = 0.0;
  double Cw = 0.0;
};

struct InversionResult {
  SoilModel fitted;
  StitchedModel model;
  std::vector<MisfitRow> trace;
};

InversionResult invert_coefficients(const std::vector<Observation>& observations,
                                    const std::vector<Coefficient>& free, const InversionConfig& config);

/// `segment,iteration,total,misfit,cva,cvw,Ca,Cw`.
void write_misfit_csv(const std::vector<MisfitRow>& trace, std::ostream& os);

}  // namespace lbc
