#include "lbc/trainer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "lbc/csv.hpp"
#include "lbc/errors.hpp"
#include "lbc/log.hpp"

namespace lbc {

const char* to_string(SegmentationScheme scheme) noexcept {
  return scheme == SegmentationScheme::simplified ? "simplified" : "log_uniform";
}

void SegmentationPlan::validate() const {
  if (boundaries.size() < 2) throw PlanError("a plan needs at least one segment");
  if (boundaries.front() != 0.0) throw PlanError("a plan must start at t = 0");
  for (std::size_t k = 1; k < boundaries.size(); ++k) {
    if (!(boundaries[k] > boundaries[k - 1])) throw PlanError("plan boundaries must be strictly increasing");
  }
}

Segment SegmentationPlan::segment(int index, double H) const {
  if (index < 1 || index > segment_count()) throw RangeError("segment index out of range");
  return Segment{index, boundaries[static_cast<std::size_t>(index - 1)], boundaries[static_cast<std::size_t>(index)], H};
}

int SegmentationPlan::owner(double t) const {
  const double tmax = horizon();
  if (!(t >= 0.0) || t > tmax * (1.0 + 1e-12)) throw RangeError("time " + std::to_string(t) + " outside [0, T_max]");
  if (t == 0.0) return 1;
  for (int n = 1; n <= segment_count(); ++n) {
    if (t <= boundaries[static_cast<std::size_t>(n)]) return n;
  }
  return segment_count();
}

namespace {

double decade_power(double exponent) {
  const double rounded = std::round(exponent);
  if (std::abs(exponent - rounded) < 1e-12) exponent = rounded;
  return std::pow(10.0, exponent);
}

}  // namespace

SegmentationPlan plan_segments(double t_max, int n) {
  if (n < 1) throw PlanError("segment count must be at least 1");
  if (!(t_max > 1.0) || !std::isfinite(t_max)) throw PlanError("T_max must exceed 1 s");
  SegmentationPlan plan;
  plan.scheme = SegmentationScheme::log_uniform;
  plan.boundaries.push_back(0.0);
  const double top = std::log10(t_max);
  for (int k = 1; k < n; ++k) plan.boundaries.push_back(decade_power(k * top / n));
  plan.boundaries.push_back(t_max);
  plan.validate();
  return plan;
}

SegmentationPlan plan_segments_simplified(const SoilModel& sm, double t_max, int n_rest) {
  if (n_rest < 1) throw PlanError("remaining segment count must be at least 1");
  const double ts = characteristic_air_time(sm);
  if (!(ts < t_max)) throw PlanError("characteristic air time " + std::to_string(ts) + " is not below T_max");
  SegmentationPlan plan;
  plan.scheme = SegmentationScheme::simplified;
  plan.boundaries = {0.0, ts};
  const double lo = std::log10(ts), hi = std::log10(t_max);
  for (int k = 1; k < n_rest; ++k) plan.boundaries.push_back(decade_power(lo + k * (hi - lo) / n_rest));
  plan.boundaries.push_back(t_max);
  plan.validate();
  return plan;
}

StitchedModel::StitchedModel(SegmentationPlan plan, std::vector<NetworkParameters> models, SoilModel soil)
    : plan_(std::move(plan)), models_(std::move(models)), soil_(soil) {
  plan_.validate();
  if (static_cast<int>(models_.size()) != plan_.segment_count()) {
    throw ShapeError("stitched model needs one network per segment");
  }
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> StitchedModel::profile(const Eigen::VectorXd& z, double t) const {
  const int n = plan_.owner(t);
  const Segment seg = plan_.segment(n, soil_.H);
  const double tol = 1e-12 * soil_.H;
  if ((z.array() < -tol).any() || (z.array() > soil_.H + tol).any()) throw RangeError("depth outside [0, H]");
  const Eigen::VectorXd zbar = (z.array() / soil_.H).cwiseMax(0.0).cwiseMin(1.0).matrix();
  const double tbar = std::clamp((t - seg.t_start) / seg.duration(), 0.0, 1.0);
  const Eigen::MatrixXd out = forward_batch(models_[static_cast<std::size_t>(n - 1)], zbar,
                                            Eigen::VectorXd::Constant(z.size(), tbar),
                                            JetLayout::value_only(z.size()));
  return {out.row(0).transpose(), out.row(1).transpose()};
}

std::pair<double, double> StitchedModel::evaluate(double z, double t) const {
  const auto [ua, uw] = profile(Eigen::VectorXd::Constant(1, z), t);
  return {ua[0], uw[0]};
}

bool StitchedModel::operator==(const StitchedModel& other) const {
  return plan_.boundaries == other.plan_.boundaries && models_ == other.models_;
}

std::pair<double, double> evaluate_stitched(const StitchedModel& m, double z, double t) { return m.evaluate(z, t); }

std::uint64_t segment_seed(std::uint64_t run_seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5e67u};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::pair<NetworkParameters, SegmentTrace> train_segment(const Segment& seg, NetworkParameters initial,
                                                         const SegmentContext& context) {
  seg.validate();
  const auto& cfg = context.config;
  cfg.optimizer.validate();

  SegmentProblem problem;
  problem.segment = seg;
  problem.soil = context.soil;
  problem.weights = cfg.weights;
  problem.points = sample_collocation(seg, context.previous_segment, cfg.counts, segment_seed(cfg.seed, seg.index),
                                      cfg.t_floor);
  problem.previous_segment = context.previous_segment;
  problem.previous_model = context.previous_model;
  const SegmentObjective objective(std::move(problem));

  SegmentTrace trace;
  trace.segment = seg.index;
  trace.t_start = seg.t_start;
  trace.t_end = seg.t_end;
  const auto started = std::chrono::steady_clock::now();

  NetworkParameters work = initial;
  Eigen::VectorXd last_x;
  LossBreakdown last;
  bool freeze_hidden = false;
  const auto hidden = work.hidden_range();

  const GradientObjective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    work.assign(x);
    last = objective.evaluate(work, g);
    last_x = x;
    if (freeze_hidden) g.segment(hidden.first, hidden.second - hidden.first).setZero();
    return last.total;
  };
  int iteration_offset = 0;
  const IterationCallback record = [&](const IterationRecord& it, const Eigen::VectorXd& x) {
    if (it.iteration == 0 && !trace.rows.empty()) return;  // phase restart repeats the start point
    LossBreakdown b = last;
    if (x.size() != last_x.size() || x != last_x) {
      work.assign(x);
      b = objective.evaluate(work);
    }
    trace.rows.push_back({iteration_offset + it.iteration, b});
    if (cfg.verbose && (it.iteration % 100 == 0)) {
      std::ostringstream os;
      os << "segment " << seg.index << " iter " << iteration_offset + it.iteration << " loss " << b.total
         << " (ic " << b.ic << ", bc " << b.bc << ", r " << b.r << ", s " << b.s << ")";
      log::info(os.str());
    }
  };

  Eigen::VectorXd x = initial.flatten();
  OptimizerOptions opts = cfg.optimizer;
  int remaining = opts.max_iterations;
  if (cfg.burn_in && context.previous_model && cfg.burn_in_iterations > 0 && remaining > 0) {
    freeze_hidden = true;
    OptimizerOptions burn = opts;
    burn.max_iterations = std::min(cfg.burn_in_iterations, remaining);
    const auto r = lbfgs_minimize(f, x, burn, record);
    x = r.x;
    trace.evaluations += r.evaluations;
    iteration_offset = static_cast<int>(r.trace.size()) - 1;
    remaining -= iteration_offset;
    freeze_hidden = false;
  }
  opts.max_iterations = remaining;
  const auto result = lbfgs_minimize(f, x, opts, record);
  trace.evaluations += result.evaluations;
  trace.reason = result.reason;
  trace.message = result.message;
  if (result.reason == StopReason::line_search_failed) {
    log::info("segment " + std::to_string(seg.index) + ": line search failed (" + result.message +
              "); keeping best parameters so far");
  }
  work.assign(result.x);
  trace.final_loss = trace.rows.empty() ? objective.evaluate(work) : trace.rows.back().loss;
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (cfg.verbose) {
    std::ostringstream os;
    os << "segment " << seg.index << " [" << seg.t_start << ", " << seg.t_end << "] done: loss "
       << trace.final_loss.total << ", " << trace.rows.size() - 1 << " iterations, " << trace.wall_seconds << " s ("
       << to_string(trace.reason) << ")";
    log::info(os.str());
  }
  return {std::move(work), std::move(trace)};
}

namespace {

double interface_jump(const NetworkParameters& left, const NetworkParameters& right) {
  constexpr Eigen::Index kDepths = 101;
  const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(kDepths, 0.0, 1.0);
  const auto layout = JetLayout::value_only(kDepths);
  const Eigen::MatrixXd a = forward_batch(left, z, Eigen::VectorXd::Ones(kDepths), layout);
  const Eigen::MatrixXd b = forward_batch(right, z, Eigen::VectorXd::Zero(kDepths), layout);
  return (a - b).cwiseAbs().maxCoeff();
}

void check_trainable(const SoilModel& sm, const TrainConfig& config) {
  sm.validate();
  if (!validate_coupling(sm).dissipative) throw WellPosednessError("soil model is not dissipative");
  config.arch.validate();
  config.counts.validate();
  config.weights.validate();
  config.optimizer.validate();
}

}  // namespace

std::pair<StitchedModel, TrainReport> train_lbc(const SoilModel& sm, const SegmentationPlan& plan,
                                                const TrainConfig& config) {
  check_trainable(sm, config);
  plan.validate();
  TrainReport report;
  std::vector<NetworkParameters> models;
  NetworkParameters params = init_network(config.arch, config.seed);
  for (int n = 1; n <= plan.segment_count(); ++n) {
    SegmentContext ctx;
    ctx.soil = sm;
    ctx.config = config;
    if (n >= 2) {
      ctx.previous_segment = plan.segment(n - 1, sm.H);
      ctx.previous_model = models.back();
    }
    try {
      auto [trained, trace] = train_segment(plan.segment(n, sm.H), params, ctx);
      report.segments.push_back(std::move(trace));
      models.push_back(trained);
      params = std::move(trained);  // warm start for the next window
    } catch (const Error& e) {
      throw TrainingError("segment " + std::to_string(n) + " failed: " + e.what(), report);
    }
  }
  for (std::size_t k = 0; k + 1 < models.size(); ++k) report.interface_jumps.push_back(interface_jump(models[k], models[k + 1]));
  return {StitchedModel(plan, std::move(models), sm), std::move(report)};
}

std::pair<StitchedModel, TrainReport> train_std(const SoilModel& sm, double t_max, const TrainConfig& config) {
  return train_lbc(sm, plan_segments(t_max, 1), config);
}

void write_trace_csv(const TrainReport& report, std::ostream& os) {
  os << "segment,iteration,total,loss_ic,loss_bc,loss_r,loss_s\n";
  for (const auto& seg : report.segments) {
    for (const auto& row : seg.rows) {
      os << seg.segment << ',' << row.iteration << ',' << csv::fmt(row.loss.total) << ',' << csv::fmt(row.loss.ic)
         << ',' << csv::fmt(row.loss.bc) << ',' << csv::fmt(row.loss.r) << ',' << csv::fmt(row.loss.s) << '\n';
    }
  }
}

}  // namespace lbc
