#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "lbc/csv.hpp"
#include "lbc/errors.hpp"
#include "lbc/log.hpp"
#include "lbc/trainer.hpp"

namespace lbc {

const char* to_string(Coefficient c) noexcept {
  switch (c) {
    case Coefficient::cva: return "cva";
    case Coefficient::cvw: return "cvw";
    case Coefficient::Ca: return "Ca";
    case Coefficient::Cw: return "Cw";
  }
  return "?";
}

Coefficient coefficient_from_string(const std::string& name) {
  if (name == "cva") return Coefficient::cva;
  if (name == "cvw") return Coefficient::cvw;
  if (name == "Ca") return Coefficient::Ca;
  if (name == "Cw") return Coefficient::Cw;
  throw ParameterError("unknown coefficient '" + name + "' (expected cva, cvw, Ca or Cw)");
}

namespace {

constexpr double kCouplingLimit = 1.0 - 1e-3;

// Trainable scalars: log cva, log cvw (positivity), Ca, Cw (raw).
struct CoefficientState {
  bool free_cva = false, free_cvw = false, free_Ca = false, free_Cw = false;
  double log_cva = 0.0, log_cvw = 0.0, Ca = 0.0, Cw = 0.0;

  Eigen::Index count() const { return free_cva + free_cvw + free_Ca + free_Cw; }

  Eigen::VectorXd pack() const {
    Eigen::VectorXd v(count());
    Eigen::Index k = 0;
    if (free_cva) v[k++] = log_cva;
    if (free_cvw) v[k++] = log_cvw;
    if (free_Ca) v[k++] = Ca;
    if (free_Cw) v[k++] = Cw;
    return v;
  }

  void unpack(const Eigen::VectorXd& v) {
    Eigen::Index k = 0;
    if (free_cva) log_cva = v[k++];
    if (free_cvw) log_cvw = v[k++];
    if (free_Ca) Ca = v[k++];
    if (free_Cw) Cw = v[k++];
    project();
  }

  // Pulls Ca*Cw back below 1 so the iterate stays dissipative.
  void project() {
    if (!(Ca * Cw > kCouplingLimit)) return;
    if (free_Ca && free_Cw) {
      const double f = std::sqrt(kCouplingLimit / (Ca * Cw));
      Ca *= f;
      Cw *= f;
    } else if (free_Ca) {
      Ca = kCouplingLimit / Cw;
    } else if (free_Cw) {
      Cw = kCouplingLimit / Ca;
    }
  }

  SoilModel apply(SoilModel sm) const {
    sm.cva = std::exp(log_cva);
    sm.cvw = std::exp(log_cvw);
    sm.Ca = Ca;
    sm.Cw = Cw;
    return sm;
  }
};

struct ObservationBlock {
  Eigen::VectorXd zbar, tbar, ua, uw;
};

}  // namespace

InversionResult invert_coefficients(const std::vector<Observation>& observations,
                                    const std::vector<Coefficient>& free, const InversionConfig& config) {
  if (free.empty()) throw ParameterError("inversion needs at least one free coefficient");
  if (observations.empty()) throw ParameterError("inversion needs at least one observation");
  if (!(config.data_weight >= 0.0)) throw ParameterError("data weight must be nonnegative");
  const SoilModel& guess = config.initial_guess;
  guess.validate();
  if (!(guess.cva > 0.0 && guess.cvw > 0.0)) throw ParameterError("inversion needs positive cva and cvw");
  const auto plan = plan_segments(config.t_max, config.segments);

  CoefficientState state;
  for (auto c : free) {
    switch (c) {
      case Coefficient::cva: state.free_cva = true; break;
      case Coefficient::cvw: state.free_cvw = true; break;
      case Coefficient::Ca: state.free_Ca = true; break;
      case Coefficient::Cw: state.free_Cw = true; break;
    }
  }
  state.log_cva = std::log(guess.cva);
  state.log_cvw = std::log(guess.cvw);
  state.Ca = guess.Ca;
  state.Cw = guess.Cw;
  state.project();

  // Bucket observations by owning segment, normalized into that segment's frame.
  std::vector<std::vector<Observation>> buckets(static_cast<std::size_t>(plan.segment_count()));
  for (const auto& o : observations) {
    if (!(o.z >= 0.0 && o.z <= guess.H)) throw RangeError("observation depth outside [0, H]");
    buckets[static_cast<std::size_t>(plan.owner(o.t) - 1)].push_back(o);
  }

  InversionResult result;
  std::vector<NetworkParameters> models;
  NetworkParameters params = init_network(config.train.arch, config.train.seed);
  const auto& cfg = config.train;

  for (int n = 1; n <= plan.segment_count(); ++n) {
    const Segment seg = plan.segment(n, guess.H);
    const auto& bucket = buckets[static_cast<std::size_t>(n - 1)];
    ObservationBlock obs;
    const auto m = static_cast<Eigen::Index>(bucket.size());
    obs.zbar.resize(m);
    obs.tbar.resize(m);
    obs.ua.resize(m);
    obs.uw.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto [zb, tb] = to_unit_domain(bucket[static_cast<std::size_t>(k)].z, bucket[static_cast<std::size_t>(k)].t, seg);
      obs.zbar[k] = zb;
      obs.tbar[k] = tb;
      obs.ua[k] = bucket[static_cast<std::size_t>(k)].ua;
      obs.uw[k] = bucket[static_cast<std::size_t>(k)].uw;
    }

    SegmentProblem problem;
    problem.segment = seg;
    problem.soil = state.apply(guess);
    problem.weights = cfg.weights;
    std::optional<Segment> prev;
    if (n >= 2) {
      prev = plan.segment(n - 1, guess.H);
      problem.previous_segment = prev;
      problem.previous_model = models.back();
    }
    problem.points = sample_collocation(seg, prev, cfg.counts, segment_seed(cfg.seed, n), cfg.t_floor);
    const SegmentObjective objective(std::move(problem));

    const Eigen::Index P = params.size();
    const double kappa_scale = seg.duration() / (guess.H * guess.H);
    NetworkParameters work = params;
    double last_misfit = 0.0;
    Eigen::VectorXd last_x;

    const GradientObjective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      work.assign(x.head(P));
      CoefficientState s = state;
      s.unpack(x.tail(x.size() - P));
      ad::Tape tape;
      const auto net = register_parameters(tape, work);
      auto scalar = [&](double v, bool trainable) {
        const Eigen::MatrixXd value = Eigen::MatrixXd::Constant(1, 1, v);
        return trainable ? tape.variable(value) : tape.constant(value);
      };
      const ad::Var log_cva = scalar(s.log_cva, s.free_cva);
      const ad::Var log_cvw = scalar(s.log_cvw, s.free_cvw);
      PdeCoefficientVars k;
      k.Ca = scalar(s.Ca, s.free_Ca);
      k.Cw = scalar(s.Cw, s.free_Cw);
      k.kappa_a = tape.scale(kappa_scale, tape.exp(log_cva));
      k.kappa_w = tape.scale(kappa_scale, tape.exp(log_cvw));
      LossBreakdown parts;
      std::vector<ad::Var> terms{objective.record(tape, net, &parts, &k)};
      std::vector<double> weights{1.0};
      double misfit = 0.0;
      if (m > 0) {
        const auto layout = JetLayout::value_only(m);
        const ad::Var out = record_forward(tape, net, seed_inputs(obs.zbar, obs.tbar, layout), layout);
        const ad::Var da = tape.add_constant(tape.jet_part(out, layout, 0, JetPart::value), -obs.ua.transpose());
        const ad::Var dw = tape.add_constant(tape.jet_part(out, layout, 1, JetPart::value), -obs.uw.transpose());
        const std::array<ad::Var, 2> pair{tape.mean_square(da), tape.mean_square(dw)};
        const std::array<double, 2> ones{1.0, 1.0};
        const ad::Var mis = tape.sum(pair, ones);
        misfit = tape.scalar(mis);
        terms.push_back(mis);
        weights.push_back(config.data_weight);
      }
      const ad::Var total = tape.sum(terms, weights);
      tape.backward(total);
      g.resize(x.size());
      g.head(P) = gather_gradient(tape, net);
      Eigen::Index pos = P;
      if (s.free_cva) g[pos++] = tape.grad(log_cva)(0, 0);
      if (s.free_cvw) g[pos++] = tape.grad(log_cvw)(0, 0);
      if (s.free_Ca) g[pos++] = tape.grad(k.Ca)(0, 0);
      if (s.free_Cw) g[pos++] = tape.grad(k.Cw)(0, 0);
      last_misfit = misfit;
      last_x = x;
      return tape.scalar(total);
    };

    Eigen::VectorXd x0(P + state.count());
    x0.head(P) = params.flatten();
    x0.tail(state.count()) = state.pack();

    const IterationCallback on_iteration = [&](const IterationRecord& it, const Eigen::VectorXd& x) {
      CoefficientState s = state;
      s.unpack(x.tail(x.size() - P));
      const SoilModel sm = s.apply(guess);
      result.trace.push_back({n, it.iteration, it.loss, (last_x.size() == x.size() && last_x == x) ? last_misfit : std::nan(""), sm.cva, sm.cvw,
                              sm.Ca, sm.Cw});
      if (cfg.verbose && it.iteration % 100 == 0) {
        std::ostringstream os;
        os << "inversion segment " << n << " iter " << it.iteration << " loss " << it.loss << " misfit "
           << last_misfit << " cva " << sm.cva << " cvw " << sm.cvw << " Ca " << sm.Ca << " Cw " << sm.Cw;
        log::info(os.str());
      }
    };
    const auto r = lbfgs_minimize(f, x0, cfg.optimizer, on_iteration);
    if (r.reason == StopReason::line_search_failed) {
      log::info("inversion segment " + std::to_string(n) + ": line search failed (" + r.message + ")");
    }
    params.assign(r.x.head(P));
    state.unpack(r.x.tail(r.x.size() - P));
    models.push_back(params);
  }

  result.fitted = state.apply(guess);
  result.model = StitchedModel(plan, std::move(models), result.fitted);
  return result;
}

void write_misfit_csv(const std::vector<MisfitRow>& trace, std::ostream& os) {
  os << "segment,iteration,total,misfit,cva,cvw,Ca,Cw\n";
  for (const auto& r : trace) {
    os << r.segment << ',' << r.iteration << ',' << csv::fmt(r.total) << ',' << csv::fmt(r.misfit) << ','
       << csv::fmt(r.cva) << ',' << csv::fmt(r.cvw) << ',' << csv::fmt(r.Ca) << ',' << csv::fmt(r.Cw) << '\n';
  }
}

}  // namespace lbc
