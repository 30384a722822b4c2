#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lbc/lbfgs.hpp"

using namespace lbc;

namespace {

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
  g.resize(2);
  g[0] = -2.0 * a - 400.0 * x[0] * b;
  g[1] = 200.0 * b;
  return a * a + 100.0 * b * b;
}

// Extended Rosenbrock in n dimensions.
double rosenbrock_n(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  g.setZero(x.size());
  double f = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = 1.0 - x[i], b = x[i + 1] - x[i] * x[i];
    f += a * a + 100.0 * b * b;
    g[i] += -2.0 * a - 400.0 * x[i] * b;
    g[i + 1] += 200.0 * b;
  }
  return f;
}

bool nonincreasing(const LbfgsResult& r) {
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    if (r.trace[k].loss > r.trace[k - 1].loss) return false;
  }
  return true;
}

}  // namespace

TEST(Lbfgs, RosenbrockFromClassicStart) {
  OptimizerOptions o;
  o.loss_change_tol = 0.0;
  o.grad_tol = 1e-10;
  const auto r = lbfgs_minimize(rosenbrock, Eigen::Vector2d(-1.2, 1.0), o);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
  EXPECT_LT(r.loss, 1e-12);
  EXPECT_TRUE(nonincreasing(r));
  EXPECT_EQ(r.trace.front().iteration, 0);
}

TEST(Lbfgs, RosenbrockRandomStarts) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  OptimizerOptions o;
  o.loss_change_tol = 0.0;
  o.grad_tol = 1e-10;
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd x0(6);
    for (auto& v : x0) v = u(rng);
    const auto r = lbfgs_minimize(rosenbrock_n, x0, o);
    // Extended Rosenbrock has a second local minimum near x0 = -1 for n >= 4.
    if (r.x[0] < 0.0) continue;
    EXPECT_LT((r.x.array() - 1.0).abs().maxCoeff(), 1e-6);
    EXPECT_TRUE(nonincreasing(r));
  }
}

TEST(Lbfgs, QuadraticIsExactInFewIterations) {
  const Eigen::Vector3d d(1.0, 10.0, 100.0);
  auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = d.cwiseProduct(x);
    return 0.5 * x.dot(g);
  };
  OptimizerOptions o;
  o.grad_tol = 1e-12;
  o.loss_change_tol = 0.0;
  const auto r = lbfgs_minimize(f, Eigen::Vector3d(1.0, 1.0, 1.0), o);
  EXPECT_EQ(r.reason, StopReason::gradient_tolerance);
  EXPECT_LT(r.x.norm(), 1e-10);
  EXPECT_LE(r.trace.size(), 20u);
}

TEST(Lbfgs, IterationCapAndCallback) {
  OptimizerOptions o;
  o.max_iterations = 5;
  int calls = 0;
  const auto r = lbfgs_minimize(rosenbrock, Eigen::Vector2d(-1.2, 1.0), o,
                                [&](const IterationRecord& rec, const Eigen::VectorXd& x) {
                                  EXPECT_EQ(rec.iteration, calls);
                                  EXPECT_EQ(x.size(), 2);
                                  ++calls;
                                });
  EXPECT_EQ(r.reason, StopReason::max_iterations);
  EXPECT_EQ(calls, 6);
  EXPECT_EQ(r.trace.size(), 6u);
  int evals = 0;
  for (const auto& t : r.trace) evals += t.evaluations;
  EXPECT_EQ(evals, r.evaluations);
}

TEST(Lbfgs, ZeroIterationsReturnsStart) {
  OptimizerOptions o;
  o.max_iterations = 0;
  const auto r = lbfgs_minimize(rosenbrock, Eigen::Vector2d(-1.2, 1.0), o);
  EXPECT_EQ(r.x, Eigen::VectorXd(Eigen::Vector2d(-1.2, 1.0)));
  EXPECT_DOUBLE_EQ(r.loss, 24.2);
}

TEST(Lbfgs, StrongWolfeConditionsHold) {
  OptimizerOptions o;
  const Eigen::VectorXd x = Eigen::Vector2d(-1.2, 1.0);
  Eigen::VectorXd g0;
  const double f0 = rosenbrock(x, g0);
  const Eigen::VectorXd d = -g0;
  const auto ls = strong_wolfe_search(rosenbrock, x, f0, g0, d, 1e-3, o);
  EXPECT_LE(ls.value, f0 + o.wolfe_c1 * ls.alpha * g0.dot(d));
  EXPECT_LE(std::abs(ls.gradient.dot(d)), o.wolfe_c2 * std::abs(g0.dot(d)));
  EXPECT_TRUE(ls.x.isApprox(x + ls.alpha * d));
}

TEST(Lbfgs, AscentDirectionIsRejected) {
  OptimizerOptions o;
  const Eigen::VectorXd x = Eigen::Vector2d(-1.2, 1.0);
  Eigen::VectorXd g0;
  const double f0 = rosenbrock(x, g0);
  EXPECT_THROW(strong_wolfe_search(rosenbrock, x, f0, g0, g0, 1.0, o), LineSearchError);
}

TEST(Lbfgs, NonFiniteStartThrows) {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = x;
    return std::log(x[0]);
  };
  EXPECT_THROW(lbfgs_minimize(f, Eigen::VectorXd::Constant(1, -1.0), OptimizerOptions{}), NumericalError);
}

TEST(Lbfgs, InconsistentGradientEndsWithLineSearchFailure) {
  // The gradient points the wrong way, so no step can decrease f.
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = -x;
    return 0.5 * x.squaredNorm();
  };
  OptimizerOptions o;
  o.max_line_search = 10;
  const auto r = lbfgs_minimize(f, Eigen::Vector2d(1.0, 2.0), o);
  EXPECT_EQ(r.reason, StopReason::line_search_failed);
  EXPECT_FALSE(r.message.empty());
  EXPECT_TRUE(nonincreasing(r));
}

TEST(Lbfgs, OptionsValidation) {
  OptimizerOptions o;
  o.wolfe_c1 = 0.95;
  EXPECT_THROW(o.validate(), ParameterError);
  o = {};
  o.memory = 0;
  EXPECT_THROW(o.validate(), ParameterError);
  o = {};
  o.max_line_search = 0;
  EXPECT_THROW(o.validate(), ParameterError);
  EXPECT_STREQ(to_string(StopReason::loss_change), "loss_change");
  EXPECT_STREQ(to_string(StopReason::line_search_failed), "line_search_failed");
}
