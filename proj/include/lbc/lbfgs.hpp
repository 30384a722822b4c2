#pragma once

#include <functional>
#include <utility>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lbc/errors.hpp"

namespace lbc {

struct OptimizerOptions {
  int max_iterations = 2000;
  int memory = 20;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  double grad_tol = 1e-9;
  double loss_change_tol = 1e-11;
  int max_line_search = 50;  // evaluations per line search before giving up

  void validate() const;
};

enum class StopReason {
  gradient_tolerance,
  loss_change,
  max_iterations,
  line_search_failed,
};

const char* to_string(StopReason reason) noexcept;

/// f(x) with its gradient written into `grad`.
using GradientObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct IterationRecord {
  int iteration = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  int evaluations = 0;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double loss = 0.0;
  Eigen::VectorXd gradient;
  std::vector<IterationRecord> trace;  // entry 0 is the starting point
  StopReason reason = StopReason::max_iterations;
  int evaluations = 0;
  std::string message;
};

/// Called after every accepted iterate (and once for the start point).
using IterationCallback = std::function<void(const IterationRecord&, const Eigen::VectorXd& x)>;

/// Limited-memory BFGS (two-loop recursion) with a strong-Wolfe line search.
/// A line-search failure ends the run with the best point found so far.
LbfgsResult lbfgs_minimize(const GradientObjective& f, Eigen::VectorXd x0, const OptimizerOptions& opts,
                           const IterationCallback& on_iteration = {});

struct LineSearchResult {
  double alpha = 0.0;
  double value = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd gradient;
  int evaluations = 0;
};

/// Line-search failure whose low bracket end still satisfies sufficient decrease.
class LineSearchFallback : public LineSearchError {
 public:
  LineSearchFallback(LineSearchResult best, const std::string& message)
      : LineSearchError(message), result(std::move(best)) {}
  LineSearchResult result;
};

/// Strong-Wolfe search along `direction` from (x, f0, g0); throws LineSearchError after
/// `opts.max_line_search` evaluations without a Wolfe point.
LineSearchResult strong_wolfe_search(const GradientObjective& f, const Eigen::VectorXd& x, double f0,
                                     const Eigen::VectorXd& g0, const Eigen::VectorXd& direction,
                                     double alpha_init, const OptimizerOptions& opts);

}  // namespace lbc
