#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "lbc/network.hpp"
#include "lbc/physics.hpp"
#include "lbc/tape.hpp"

namespace lbc {

/// One time window [t_start, t_end] of the layer; index is 1-based.
struct Segment {
  int index = 1;
  double t_start = 0.0;
  double t_end = 1.0;
  double H = 10.0;

  void validate() const;
  double duration() const noexcept { return t_end - t_start; }
};

/// Normalized (zbar, tbar) of a physical point inside `seg`.
std::pair<double, double> to_unit_domain(double z, double t, const Segment& seg);

struct SamplingCounts {
  int n_ic = 2000;
  int n_bc = 2000;
  int n_r = 10000;
  int n_s = 2000;

  void validate() const;
};

/// Normalized collocation points of one segment. Lag points live in the previous
/// segment's frame (lag_t in [0, 1] of that segment).
struct CollocationSet {
  Eigen::VectorXd interior_z;
  Eigen::VectorXd interior_t;
  Eigen::VectorXd boundary_t;
  Eigen::VectorXd initial_z;
  Eigen::VectorXd lag_z;
  Eigen::VectorXd lag_t;
  std::uint64_t seed = 0;
};

/// Lower clamp for log-time sampling when a segment starts at t = 0.
inline constexpr double kDefaultTimeFloor = 1.0;

CollocationSet sample_collocation(const Segment& seg, const std::optional<Segment>& prev,
                                  const SamplingCounts& counts, std::uint64_t seed,
                                  double t_floor = kDefaultTimeFloor);

/// Draws `count` times log10-uniformly from [max(t_start, t_floor), t_end], in physical units.
Eigen::VectorXd sample_log_times(double t_start, double t_end, Eigen::Index count, std::uint64_t seed,
                                 double t_floor = kDefaultTimeFloor);

struct LossWeights {
  double ic = 1.0;
  double bc = 1.0;
  double r = 1.0;
  double s = 1.0;

  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double ic = 0.0;
  double bc = 0.0;
  double r = 0.0;
  double s = 0.0;

  double physics() const noexcept { return ic + bc; }
  double data() const noexcept { return r + s; }
};

/// PDE coefficients as tape nodes (1x1), so inversion can make them trainable.
/// kappa_* = (segment duration / H^2) * cv_*.
struct PdeCoefficientVars {
  ad::Var Ca;
  ad::Var Cw;
  ad::Var kappa_a;
  ad::Var kappa_w;
};

PdeCoefficientVars constant_coefficients(ad::Tape& tape, const SoilModel& sm, const Segment& seg);

// Tape builders: each records its loss as a 1x1 node.
ad::Var record_residual_loss(ad::Tape& tape, const NetworkVars& net, const CollocationSet& set,
                             const PdeCoefficientVars& coeffs);
ad::Var record_ic_loss(ad::Tape& tape, const NetworkVars& net, const CollocationSet& set,
                       const Eigen::VectorXd& target_a, const Eigen::VectorXd& target_w);
ad::Var record_bc_loss(ad::Tape& tape, const NetworkVars& net, const CollocationSet& set);
/// `prev_a`/`prev_w` are the frozen previous-model values at the lag points; the current
/// network is evaluated at the same physical instants expressed in the current frame.
ad::Var record_lag_loss(ad::Tape& tape, const NetworkVars& net, const CollocationSet& set,
                        const Segment& prev, const Segment& current, const Eigen::VectorXd& prev_a,
                        const Eigen::VectorXd& prev_w);

// Value-only forms (same arithmetic as the tape builders).
double residual_loss(const NetworkParameters& p, const CollocationSet& set, const SoilModel& sm,
                     const Segment& seg);
double ic_loss(const NetworkParameters& p, const CollocationSet& set, const Eigen::VectorXd& target_a,
               const Eigen::VectorXd& target_w);
double bc_loss(const NetworkParameters& p, const CollocationSet& set);
double lag_loss(const NetworkParameters& current, const NetworkParameters& previous, const CollocationSet& set,
                const Segment& prev, const Segment& seg);

/// Maps lag points (previous frame) to tbar in the current segment's frame (negative values).
Eigen::VectorXd lag_times_in_current_frame(const CollocationSet& set, const Segment& prev, const Segment& current);

/// Everything that defines one segment's training objective.
struct SegmentProblem {
  Segment segment;
  SoilModel soil;
  LossWeights weights;
  CollocationSet points;
  std::optional<Segment> previous_segment;
  std::optional<NetworkParameters> previous_model;
};

/// Segment objective: IC, BC and residual terms for the first segment, plus the lagged
/// compatibility term once a previous model exists. IC targets are the initial
/// pressures for segment 1 and the previous model at its end time otherwise.
class SegmentObjective {
 public:
  explicit SegmentObjective(SegmentProblem problem);

  const SegmentProblem& problem() const noexcept { return problem_; }
  const Eigen::VectorXd& ic_target_a() const noexcept { return ic_a_; }
  const Eigen::VectorXd& ic_target_w() const noexcept { return ic_w_; }

  LossBreakdown evaluate(const NetworkParameters& p) const;
  LossBreakdown evaluate(const NetworkParameters& p, Eigen::VectorXd& gradient) const;

  /// Records the weighted total on `tape`; fills `parts` with the term values.
  /// `coeffs` overrides the soil-model coefficients (used by inversion).
  ad::Var record(ad::Tape& tape, const NetworkVars& net, LossBreakdown* parts,
                 const PdeCoefficientVars* coeffs = nullptr) const;

 private:
  SegmentProblem problem_;
  Eigen::VectorXd ic_a_, ic_w_;
  Eigen::VectorXd lag_a_, lag_w_;
};

}  // namespace lbc
