#include "lbc/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "lbc/errors.hpp"

namespace lbc {

void OptimizerOptions::validate() const {
  if (!(0.0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
    throw ParameterError("optimizer requires 0 < wolfe_c1 < wolfe_c2 < 1");
  }
  if (memory < 1) throw ParameterError("optimizer.memory must be at least 1");
  if (max_iterations < 0) throw ParameterError("optimizer.max_iterations must be nonnegative");
  if (max_line_search < 1) throw ParameterError("optimizer.max_line_search must be positive");
  if (!(grad_tol >= 0.0) || !(loss_change_tol >= 0.0)) throw ParameterError("optimizer tolerances must be nonnegative");
}

const char* to_string(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::gradient_tolerance: return "gradient_tolerance";
    case StopReason::loss_change: return "loss_change";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::line_search_failed: return "line_search_failed";
  }
  return "?";
}

namespace {

struct Probe {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd gradient;
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db); NaN if it does not exist.
double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
}

}  // namespace

LineSearchResult strong_wolfe_search(const GradientObjective& f, const Eigen::VectorXd& x, double f0,
                                     const Eigen::VectorXd& g0, const Eigen::VectorXd& direction,
                                     double alpha_init, const OptimizerOptions& opts) {
  const double slope0 = g0.dot(direction);
  if (!(slope0 < 0.0)) throw LineSearchError("search direction is not a descent direction");
  int evals = 0;
  auto probe = [&](double alpha) {
    Probe p;
    p.alpha = alpha;
    p.x = x + alpha * direction;
    p.gradient.resize(x.size());
    p.value = f(p.x, p.gradient);
    p.slope = p.gradient.dot(direction);
    ++evals;
    return p;
  };
  auto accept = [&](Probe& p) {
    return LineSearchResult{p.alpha, p.value, std::move(p.x), std::move(p.gradient), evals};
  };
  auto armijo_ok = [&](const Probe& p) {
    return std::isfinite(p.value) && p.value <= f0 + opts.wolfe_c1 * p.alpha * slope0;
  };
  auto curvature_ok = [&](const Probe& p) { return std::abs(p.slope) <= -opts.wolfe_c2 * slope0; };

  Probe prev;
  prev.alpha = 0.0;
  prev.value = f0;
  prev.slope = slope0;
  double alpha = alpha_init;
  Probe lo, hi;
  bool bracketed = false;

  while (evals < opts.max_line_search) {
    Probe cur = probe(alpha);
    if (!std::isfinite(cur.value) || !cur.gradient.allFinite()) {
      // Step into a non-finite region: shrink toward the last good point.
      alpha = prev.alpha + 0.1 * (alpha - prev.alpha);
      continue;
    }
    if (!armijo_ok(cur) || (prev.alpha > 0.0 && cur.value >= prev.value)) {
      lo = prev;
      hi = std::move(cur);
      bracketed = true;
      break;
    }
    if (curvature_ok(cur)) return accept(cur);
    if (cur.slope >= 0.0) {
      lo = std::move(cur);
      hi = prev;
      bracketed = true;
      break;
    }
    prev = std::move(cur);
    alpha = 2.0 * alpha;
  }
  if (!bracketed) throw LineSearchError("no bracketing step within the evaluation budget");

  // Zoom phase.
  while (evals < opts.max_line_search) {
    const double left = std::min(lo.alpha, hi.alpha);
    const double right = std::max(lo.alpha, hi.alpha);
    const double width = right - left;
    if (width <= std::numeric_limits<double>::epsilon() * std::max(1.0, right)) break;
    double trial = std::isfinite(hi.value)
                       ? cubic_minimizer(lo.alpha, lo.value, lo.slope, hi.alpha, hi.value, hi.slope)
                       : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(trial) || trial < left + 0.1 * width || trial > right - 0.1 * width) {
      trial = 0.5 * (lo.alpha + hi.alpha);
    }
    Probe cur = probe(trial);
    if (!std::isfinite(cur.value) || !armijo_ok(cur) || cur.value >= lo.value) {
      hi = std::move(cur);
      continue;
    }
    if (curvature_ok(cur)) return accept(cur);
    if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
    lo = std::move(cur);
  }
  LineSearchError error("strong Wolfe conditions not met within " + std::to_string(opts.max_line_search) +
                        " evaluations");
  if (lo.alpha > 0.0 && lo.value < f0) {
    // The low end satisfies sufficient decrease; hand it back as the best point so far.
    throw LineSearchFallback(accept(lo), error.what());
  }
  throw error;
}

LbfgsResult lbfgs_minimize(const GradientObjective& f, Eigen::VectorXd x0, const OptimizerOptions& opts,
                           const IterationCallback& on_iteration) {
  opts.validate();
  LbfgsResult res;
  res.x = std::move(x0);
  res.gradient.resize(res.x.size());
  res.loss = f(res.x, res.gradient);
  res.evaluations = 1;
  if (!std::isfinite(res.loss) || !res.gradient.allFinite()) {
    throw NumericalError("objective is not finite at the starting point");
  }
  IterationRecord rec{0, res.loss, res.gradient.norm(), 0.0, 1};
  res.trace.push_back(rec);
  if (on_iteration) on_iteration(rec, res.x);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> alpha_buf;

  for (int iter = 1;; ++iter) {
    if (res.gradient.norm() <= opts.grad_tol) {
      res.reason = StopReason::gradient_tolerance;
      break;
    }
    if (iter > opts.max_iterations) {
      res.reason = StopReason::max_iterations;
      break;
    }

    // Two-loop recursion: d = -H g.
    Eigen::VectorXd q = res.gradient;
    const std::size_t m = s_hist.size();
    alpha_buf.assign(m, 0.0);
    for (std::size_t k = m; k-- > 0;) {
      alpha_buf[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha_buf[k] * y_hist[k];
    }
    if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += s_hist[k] * (alpha_buf[k] - beta);
    }
    Eigen::VectorXd direction = -q;
    if (!(direction.dot(res.gradient) < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -res.gradient;
    }
    const double alpha_init =
        s_hist.empty() ? std::min(1.0, 1.0 / std::max(res.gradient.lpNorm<1>(), 1e-300)) : 1.0;

    LineSearchResult ls;
    try {
      ls = strong_wolfe_search(f, res.x, res.loss, res.gradient, direction, alpha_init, opts);
    } catch (LineSearchFallback& fb) {
      res.evaluations += fb.result.evaluations;
      res.x = std::move(fb.result.x);
      res.loss = fb.result.value;
      res.gradient = std::move(fb.result.gradient);
      rec = IterationRecord{iter, res.loss, res.gradient.norm(), fb.result.alpha, fb.result.evaluations};
      res.trace.push_back(rec);
      if (on_iteration) on_iteration(rec, res.x);
      res.reason = StopReason::line_search_failed;
      res.message = fb.what();
      break;
    } catch (const LineSearchError& e) {
      res.reason = StopReason::line_search_failed;
      res.message = e.what();
      break;
    }
    res.evaluations += ls.evaluations;

    Eigen::VectorXd s = ls.x - res.x;
    Eigen::VectorXd y = ls.gradient - res.gradient;
    const double previous_loss = res.loss;
    res.x = std::move(ls.x);
    res.loss = ls.value;
    res.gradient = std::move(ls.gradient);

    const double sy = s.dot(y);
    if (sy > 1e-12 * std::sqrt(s.squaredNorm() * y.squaredNorm())) {
      if (static_cast<int>(s_hist.size()) == opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      rho_hist.push_back(1.0 / sy);
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
    }

    rec = IterationRecord{iter, res.loss, res.gradient.norm(), ls.alpha, ls.evaluations};
    res.trace.push_back(rec);
    if (on_iteration) on_iteration(rec, res.x);

    if (std::abs(previous_loss - res.loss) <= opts.loss_change_tol) {
      res.reason = StopReason::loss_change;
      break;
    }
  }
  return res;
}

}  // namespace lbc
