#include "lbc/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lbc/errors.hpp"

namespace lbc {

void Segment::validate() const {
  if (index < 1) throw SegmentError("segment index must be 1-based");
  if (!(t_start >= 0.0 && t_start < t_end)) throw SegmentError("segment requires 0 <= t_start < t_end");
  if (!(H > 0.0)) throw SegmentError("segment thickness must be positive");
}

std::pair<double, double> to_unit_domain(double z, double t, const Segment& seg) {
  const double ztol = 1e-12 * seg.H;
  const double ttol = 1e-12 * seg.t_end;
  if (!(z >= -ztol && z <= seg.H + ztol)) throw RangeError("depth outside [0, H]");
  if (!(t >= seg.t_start - ttol && t <= seg.t_end + ttol)) throw RangeError("time outside the segment");
  return {z / seg.H, (t - seg.t_start) / seg.duration()};
}

void SamplingCounts::validate() const {
  if (n_ic < 1 || n_bc < 1 || n_r < 1 || n_s < 1) throw ParameterError("sampling counts must be positive");
}

void LossWeights::validate() const {
  if (!(ic >= 0.0 && bc >= 0.0 && r >= 0.0 && s >= 0.0)) throw ParameterError("loss weights must be nonnegative");
}

Eigen::VectorXd sample_log_times(double t_start, double t_end, Eigen::Index count, std::uint64_t seed,
                                 double t_floor) {
  const double lo = std::max(t_start, t_floor);
  if (!(t_end > lo)) {
    throw SegmentError("log-time sampling needs t_end > " + std::to_string(lo) + " (got " + std::to_string(t_end) + ")");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double a = std::log10(lo), b = std::log10(t_end);
  Eigen::VectorXd t(count);
  for (Eigen::Index k = 0; k < count; ++k) t[k] = std::min(t_end, std::pow(10.0, a + (b - a) * unit(rng)));
  return t;
}

namespace {

Eigen::VectorXd uniform_unit(Eigen::Index count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd v(count);
  for (Eigen::Index k = 0; k < count; ++k) v[k] = unit(rng);
  return v;
}

Eigen::VectorXd normalize_times(const Eigen::VectorXd& t, const Segment& seg) {
  return ((t.array() - seg.t_start) / seg.duration()).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

// Independent deterministic streams per point family.
std::uint64_t substream(std::uint64_t seed, std::uint64_t family) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(family)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

CollocationSet sample_collocation(const Segment& seg, const std::optional<Segment>& prev,
                                  const SamplingCounts& counts, std::uint64_t seed, double t_floor) {
  seg.validate();
  counts.validate();
  if ((seg.index >= 2) != prev.has_value()) {
    throw SegmentError("a previous segment is required exactly when index >= 2");
  }
  CollocationSet set;
  set.seed = seed;

  std::mt19937_64 zrng(substream(seed, 1));
  set.interior_z = uniform_unit(counts.n_r, zrng);
  set.interior_t = normalize_times(sample_log_times(seg.t_start, seg.t_end, counts.n_r, substream(seed, 2), t_floor), seg);
  set.boundary_t = normalize_times(sample_log_times(seg.t_start, seg.t_end, counts.n_bc, substream(seed, 3), t_floor), seg);
  std::mt19937_64 icrng(substream(seed, 4));
  set.initial_z = uniform_unit(counts.n_ic, icrng);
  if (prev) {
    prev->validate();
    std::mt19937_64 lrng(substream(seed, 5));
    set.lag_z = uniform_unit(counts.n_s, lrng);
    set.lag_t = normalize_times(sample_log_times(prev->t_start, prev->t_end, counts.n_s, substream(seed, 6), t_floor), *prev);
  }
  return set;
}

PdeCoefficientVars constant_coefficients(ad::Tape& tape, const SoilModel& sm, const Segment& seg) {
  const double scale = seg.duration() / (sm.H * sm.H);
  auto c = [&](double v) { return tape.constant(Eigen::MatrixXd::Constant(1, 1, v)); };
  return {c(sm.Ca), c(sm.Cw), c(scale * sm.cva), c(scale * sm.cvw)};
}

ad::Var record_residual_loss(ad::Tape& tape, const NetworkVars& net, const CollocationSet& set,
                             const PdeCoefficientVars& k) {
  const Eigen::Index n = set.interior_z.size();
  const auto layout = JetLayout::full(n);
  const ad::Var out = record_forward(tape, net, seed_inputs(set.interior_z, set.interior_t, layout), layout);
  const ad::Var at = tape.jet_part(out, layout, 0, JetPart::dt);
  const ad::Var wt = tape.jet_part(out, layout, 1, JetPart::dt);
  const ad::Var azz = tape.jet_part(out, layout, 0, JetPart::dzz);
  const ad::Var wzz = tape.jet_part(out, layout, 1, JetPart::dzz);
  // Dissipative form: u_t + C u'_t - kappa u_zz = 0.
  const ad::Var ra = tape.axpby(1.0, tape.axpby(1.0, at, 1.0, tape.mul(k.Ca, wt)), -1.0, tape.mul(k.kappa_a, azz));
  const ad::Var rw = tape.axpby(1.0, tape.axpby(1.0, wt, 1.0, tape.mul(k.Cw, at)), -1.0, tape.mul(k.kappa_w, wzz));
  const std::array<ad::Var, 2> terms{tape.mean_square(ra), tape.mean_square(rw)};
  const std::array<double, 2> ones{1.0, 1.0};
  return tape.sum(terms, ones);
}

ad::Var record_ic_loss(ad::Tape& tape, const NetworkVars& net, const CollocationSet& set,
                       const Eigen::VectorXd& target_a, const Eigen::VectorXd& target_w) {
  const Eigen::Index n = set.initial_z.size();
  if (target_a.size() != n || target_w.size() != n) throw ShapeError("IC targets must match the initial points");
  const auto layout = JetLayout::value_only(n);
  const ad::Var out =
      record_forward(tape, net, seed_inputs(set.initial_z, Eigen::VectorXd::Zero(n), layout), layout);
  const ad::Var da = tape.add_constant(tape.jet_part(out, layout, 0, JetPart::value), -target_a.transpose());
  const ad::Var dw = tape.add_constant(tape.jet_part(out, layout, 1, JetPart::value), -target_w.transpose());
  const std::array<ad::Var, 2> terms{tape.mean_square(da), tape.mean_square(dw)};
  const std::array<double, 2> ones{1.0, 1.0};
  return tape.sum(terms, ones);
}

ad::Var record_bc_loss(ad::Tape& tape, const NetworkVars& net, const CollocationSet& set) {
  const Eigen::Index n = set.boundary_t.size();
  const auto top = JetLayout::value_only(n);
  const ad::Var drained = record_forward(tape, net, seed_inputs(Eigen::VectorXd::Zero(n), set.boundary_t, top), top);
  const auto bottom = JetLayout::with_dz(n);
  const ad::Var sealed =
      record_forward(tape, net, seed_inputs(Eigen::VectorXd::Ones(n), set.boundary_t, bottom), bottom);
  const std::array<ad::Var, 4> terms{
      tape.mean_square(tape.jet_part(drained, top, 0, JetPart::value)),
      tape.mean_square(tape.jet_part(drained, top, 1, JetPart::value)),
      tape.mean_square(tape.jet_part(sealed, bottom, 0, JetPart::dz)),
      tape.mean_square(tape.jet_part(sealed, bottom, 1, JetPart::dz)),
  };
  const std::array<double, 4> ones{1.0, 1.0, 1.0, 1.0};
  return tape.sum(terms, ones);
}

Eigen::VectorXd lag_times_in_current_frame(const CollocationSet& set, const Segment& prev, const Segment& current) {
  for (Eigen::Index k = 0; k < set.lag_t.size(); ++k) {
    if (!(set.lag_t[k] >= 0.0 && set.lag_t[k] <= 1.0) || !(set.lag_z[k] >= 0.0 && set.lag_z[k] <= 1.0)) {
      throw RangeError("lag point outside the previous segment");
    }
  }
  const Eigen::ArrayXd physical = prev.t_start + set.lag_t.array() * prev.duration();
  return ((physical - current.t_start) / current.duration()).matrix();
}

ad::Var record_lag_loss(ad::Tape& tape, const NetworkVars& net, const CollocationSet& set, const Segment& prev,
                        const Segment& current, const Eigen::VectorXd& prev_a, const Eigen::VectorXd& prev_w) {
  const Eigen::Index n = set.lag_z.size();
  if (prev_a.size() != n || prev_w.size() != n) throw ShapeError("lag targets must match the lag points");
  const auto layout = JetLayout::value_only(n);
  const Eigen::VectorXd tcur = lag_times_in_current_frame(set, prev, current);
  const ad::Var out = record_forward(tape, net, seed_inputs(set.lag_z, tcur, layout), layout);
  const ad::Var da = tape.add_constant(tape.jet_part(out, layout, 0, JetPart::value), -prev_a.transpose());
  const ad::Var dw = tape.add_constant(tape.jet_part(out, layout, 1, JetPart::value), -prev_w.transpose());
  const std::array<ad::Var, 2> terms{tape.mean_square(da), tape.mean_square(dw)};
  const std::array<double, 2> ones{1.0, 1.0};
  return tape.sum(terms, ones);
}

double residual_loss(const NetworkParameters& p, const CollocationSet& set, const SoilModel& sm, const Segment& seg) {
  const auto report = validate_coupling(sm);
  (void)report;
  ad::Tape tape;
  const auto net = register_parameters(tape, p);
  return tape.scalar(record_residual_loss(tape, net, set, constant_coefficients(tape, sm, seg)));
}

double ic_loss(const NetworkParameters& p, const CollocationSet& set, const Eigen::VectorXd& target_a,
               const Eigen::VectorXd& target_w) {
  ad::Tape tape;
  const auto net = register_parameters(tape, p);
  return tape.scalar(record_ic_loss(tape, net, set, target_a, target_w));
}

double bc_loss(const NetworkParameters& p, const CollocationSet& set) {
  ad::Tape tape;
  const auto net = register_parameters(tape, p);
  return tape.scalar(record_bc_loss(tape, net, set));
}

double lag_loss(const NetworkParameters& current, const NetworkParameters& previous, const CollocationSet& set,
                const Segment& prev, const Segment& seg) {
  if (set.lag_z.size() == 0) throw SegmentError("lag loss needs lag points");
  const auto layout = JetLayout::value_only(set.lag_z.size());
  const Eigen::MatrixXd old = forward_batch(previous, set.lag_z, set.lag_t, layout);
  ad::Tape tape;
  const auto net = register_parameters(tape, current);
  return tape.scalar(record_lag_loss(tape, net, set, prev, seg, old.row(0).transpose(), old.row(1).transpose()));
}

SegmentObjective::SegmentObjective(SegmentProblem problem) : problem_(std::move(problem)) {
  problem_.segment.validate();
  problem_.weights.validate();
  const Eigen::Index nic = problem_.points.initial_z.size();
  if (problem_.previous_model) {
    if (!problem_.previous_segment) throw SegmentError("previous model given without its segment");
    const auto& prev = *problem_.previous_model;
    // IC targets: previous model at the end of its own window (tbar = 1).
    const Eigen::MatrixXd at_interface =
        forward_batch(prev, problem_.points.initial_z, Eigen::VectorXd::Ones(nic), JetLayout::value_only(nic));
    ic_a_ = at_interface.row(0).transpose();
    ic_w_ = at_interface.row(1).transpose();
    const Eigen::Index ns = problem_.points.lag_z.size();
    if (ns == 0) throw SegmentError("segment " + std::to_string(problem_.segment.index) + " has no lag points");
    lag_times_in_current_frame(problem_.points, *problem_.previous_segment, problem_.segment);
    const Eigen::MatrixXd old =
        forward_batch(prev, problem_.points.lag_z, problem_.points.lag_t, JetLayout::value_only(ns));
    lag_a_ = old.row(0).transpose();
    lag_w_ = old.row(1).transpose();
  } else {
    ic_a_ = Eigen::VectorXd::Constant(nic, problem_.soil.ua0);
    ic_w_ = Eigen::VectorXd::Constant(nic, problem_.soil.uw0);
  }
}

ad::Var SegmentObjective::record(ad::Tape& tape, const NetworkVars& net, LossBreakdown* parts,
                                 const PdeCoefficientVars* coeffs) const {
  const auto& pr = problem_;
  const PdeCoefficientVars k = coeffs ? *coeffs : constant_coefficients(tape, pr.soil, pr.segment);
  std::vector<ad::Var> terms;
  std::vector<double> weights;
  const ad::Var ic = record_ic_loss(tape, net, pr.points, ic_a_, ic_w_);
  const ad::Var bc = record_bc_loss(tape, net, pr.points);
  const ad::Var r = record_residual_loss(tape, net, pr.points, k);
  terms = {ic, bc, r};
  weights = {pr.weights.ic, pr.weights.bc, pr.weights.r};
  LossBreakdown b;
  b.ic = tape.scalar(ic);
  b.bc = tape.scalar(bc);
  b.r = tape.scalar(r);
  if (pr.previous_model) {
    const ad::Var s = record_lag_loss(tape, net, pr.points, *pr.previous_segment, pr.segment, lag_a_, lag_w_);
    b.s = tape.scalar(s);
    terms.push_back(s);
    weights.push_back(pr.weights.s);
  }
  const ad::Var total = tape.sum(terms, weights);
  b.total = tape.scalar(total);
  if (parts) *parts = b;
  return total;
}

LossBreakdown SegmentObjective::evaluate(const NetworkParameters& p) const {
  ad::Tape tape;
  const auto net = register_parameters(tape, p);
  LossBreakdown b;
  record(tape, net, &b);
  return b;
}

LossBreakdown SegmentObjective::evaluate(const NetworkParameters& p, Eigen::VectorXd& gradient) const {
  ad::Tape tape;
  const auto net = register_parameters(tape, p);
  LossBreakdown b;
  const ad::Var total = record(tape, net, &b);
  tape.backward(total);
  gradient = gather_gradient(tape, net);
  return b;
}

}  // namespace lbc
