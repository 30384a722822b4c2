// Acceptance checks 1-9 plus the smoke sweep. One PASS/FAIL line per criterion.
// Training budgets are pinned below; LBC_ACCEPT_ITERS overrides them for quick local runs
// and the binary then reports every training criterion as FAIL (budget not the pinned one).

#include <malloc.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "lbc/cli.hpp"
#include "lbc/fd_oracle.hpp"
#include "lbc/lbfgs.hpp"
#include "lbc/losses.hpp"
#include "lbc/metrics.hpp"
#include "lbc/network.hpp"
#include "lbc/physics.hpp"
#include "lbc/trainer.hpp"

using namespace lbc;

namespace {

// ---- pinned tolerances and budgets -------------------------------------------------

constexpr double kHorizon = 1e10;
constexpr int kPinnedIters = 250;  // per segment; 3 seeds x 5 segments fit in 30 min on one core
constexpr int kInversionIters = 1500;
constexpr std::uint64_t kSeeds[3] = {1, 2, 3};

// 1
constexpr double kTerzaghiTol = 1e-3;
constexpr double kTerzaghiTvMin = 2e-3;
constexpr double kConvLo = 3.0, kConvHi = 5.0;
constexpr double kBudget1 = 10.0;
// 2
constexpr double kAirReleaseTime = 5e7, kAirFraction = 0.01;
constexpr double kShoulderLo = 1e7, kShoulderHi = 1e8, kShoulderFlatness = 0.1;
constexpr double kFinalFraction = 0.01;
constexpr double kBudget2 = 30.0;
// 3
constexpr double kMae3 = 0.02, kR2 = 0.99, kBudget3 = 1800.0;
// 4
constexpr double kSegFactor = 5.0, kPlateau = 0.3, kBudget4 = 7200.0;
// 5
constexpr double kMae5 = 0.03, kBudget5 = 7200.0;
// 6
constexpr double kSimplifiedFactor = 2.0, kBudget6 = 1800.0;
// 7
constexpr double kFdRel = 1e-5, kBudget7 = 60.0;
constexpr int kFdCases = 100;
// 8
constexpr double kRosenbrockTol = 1e-6, kBudget8 = 60.0;
// 9
constexpr double kInvClean = 0.20, kInvNoisy = 0.40, kNoise = 0.05, kBudget9 = 1800.0;
constexpr int kObservations = 200;

int iterations = kPinnedIters;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("CRITERION %d %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- memoized training runs --------------------------------------------------------

struct Run {
  MetricsReport metrics;
  TrainReport report;
  double seconds = 0.0;
};

const SolutionGrid& oracle_for(const SoilModel& sm) {
  static std::map<std::pair<double, double>, SolutionGrid> cache;
  const auto key = std::make_pair(sm.cva, sm.cvw);
  auto it = cache.find(key);
  if (it == cache.end()) {
    GridSpec gs;
    gs.tmax = kHorizon;
    it = cache.emplace(key, solve_coupled_fd(sm, gs)).first;
  }
  return it->second;
}

std::vector<Run*> all_runs;

Run& train_run(const SoilModel& sm, const SegmentationPlan& plan, std::uint64_t seed) {
  static std::map<std::tuple<std::vector<double>, double, std::uint64_t>, Run> cache;
  const auto key = std::make_tuple(plan.boundaries, sm.cva, seed);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  TrainConfig cfg;
  cfg.optimizer.max_iterations = iterations;
  cfg.seed = seed;
  const auto t0 = Clock::now();
  Run run;
  try {
    auto [model, rep] = train_lbc(sm, plan, cfg);
    run.report = std::move(rep);
    run.metrics = compare_to_oracle(model, oracle_for(sm), sm.ua0, sm.uw0);
  } catch (const TrainingError& e) {
    std::printf("  training failed: %s\n", e.what());
    run.report = e.partial();
    run.metrics.combined.mae = INFINITY;
  }
  run.seconds = seconds_since(t0);
  std::printf("  run segments=%d cva=%.3g seed=%llu: MAE %.4g R2 %.4g (%.0f s)\n", plan.segment_count(), sm.cva,
              static_cast<unsigned long long>(seed), run.metrics.combined.mae,
              run.metrics.combined.r2.value_or(NAN), run.seconds);
  std::fflush(stdout);
  Run& stored = cache.emplace(key, std::move(run)).first->second;
  all_runs.push_back(&stored);
  return stored;
}

struct SeedSummary {
  double mae = 0.0;
  double r2 = 0.0;
  double seconds = 0.0;
};

SeedSummary three_seeds(const SoilModel& sm, const SegmentationPlan& plan) {
  std::vector<double> mae, r2;
  SeedSummary s;
  for (auto seed : kSeeds) {
    Run& r = train_run(sm, plan, seed);
    mae.push_back(r.metrics.combined.mae);
    r2.push_back(r.metrics.combined.r2.value_or(-INFINITY));
    s.seconds += r.seconds;
  }
  s.mae = median3(mae);
  s.r2 = median3(r2);
  return s;
}

bool budget_pinned() { return iterations == kPinnedIters; }

// ---- criteria ----------------------------------------------------------------------

void criterion1() {
  const auto t0 = Clock::now();
  const double cv = 6.3e-6, H = 10.0;
  SoilModel sm = table1_soil();
  sm.Ca = 0.0;
  sm.Cw = 0.0;
  sm.cva = cv;
  sm.cvw = cv;
  GridSpec gs;
  gs.nz = 101;
  gs.tmin = kTerzaghiTvMin * H * H / cv;
  gs.tmax = 1e8;
  gs.nt = 60;
  const auto g = solve_coupled_fd(sm, gs);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < g.t.size(); ++j) {
    for (Eigen::Index i = 0; i < g.z.size(); ++i) {
      const double ref = terzaghi_series(cv, H, 1.0, g.z[i], g.t[j], 400);
      worst = std::max({worst, std::abs(g.ua(i, j) / sm.ua0 - ref), std::abs(g.uw(i, j) / sm.uw0 - ref)});
    }
  }

  // Self-convergence on the coupled reference problem against a 641-node reference.
  const SoilModel t1 = table1_soil();
  GridSpec cs;
  cs.tmin = 1e6;
  cs.tmax = 1e9;
  cs.nt = 7;
  cs.steps_per_decade = 400;
  auto at = [&](int nz) {
    GridSpec s = cs;
    s.nz = nz;
    return solve_coupled_fd(t1, s);
  };
  const auto fine = at(641);
  auto l2_to_fine = [&](const SolutionGrid& g) {
    const Eigen::Index stride = (fine.z.size() - 1) / (g.z.size() - 1);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < g.t.size(); ++j) {
      for (Eigen::Index i = 0; i < g.z.size(); ++i) {
        const double da = (g.ua(i, j) - fine.ua(i * stride, j)) / t1.ua0;
        const double dw = (g.uw(i, j) - fine.uw(i * stride, j)) / t1.uw0;
        sum += da * da + dw * dw;
      }
    }
    return std::sqrt(sum / (2.0 * static_cast<double>(g.z.size() * g.t.size())));
  };
  const double e21 = l2_to_fine(at(21)), e41 = l2_to_fine(at(41)), e81 = l2_to_fine(at(81));
  const double r1 = e21 / e41, r2 = e41 / e81;
  const double secs = seconds_since(t0);
  const bool pass = worst <= kTerzaghiTol && r1 >= kConvLo && r1 <= kConvHi && r2 >= kConvLo && r2 <= kConvHi &&
                    secs <= kBudget1;
  report(1, pass,
         fmt("max|FD-Terzaghi|/u0 = %.3g (tol %.0e, Tv >= %.0e); ratios %.2f, %.2f (in [%.0f,%.0f]); %.1f s (<= %.0f)",
             worst, kTerzaghiTol, kTerzaghiTvMin, r1, r2, kConvLo, kConvHi, secs, kBudget1));
}

void criterion2() {
  const auto t0 = Clock::now();
  const SoilModel sm = table1_soil();
  GridSpec gs;
  gs.tmin = 1.0;
  gs.tmax = kHorizon;
  gs.nt = 201;
  const auto g = solve_coupled_fd(sm, gs);
  const Eigen::Index last = g.z.size() - 1;

  // Air released: max over depth at the first tabulated time >= 5e7.
  Eigen::Index j_air = 0;
  while (j_air < g.t.size() - 1 && g.t[j_air] < kAirReleaseTime * (1.0 - 1e-12)) ++j_air;
  const double air = g.ua.col(j_air).cwiseAbs().maxCoeff() / sm.ua0;

  // Shoulder: the flattest point of uw(H) in log time over [1e6, 1e9] lies in [1e7, 1e8]
  // and is much flatter than the late decay.
  double min_slope = INFINITY, min_at = 0.0, late_slope = 0.0;
  for (Eigen::Index j = 0; j + 1 < g.t.size(); ++j) {
    const double slope = std::abs(g.uw(last, j + 1) - g.uw(last, j)) / sm.uw0 /
                         (std::log10(g.t[j + 1]) - std::log10(g.t[j]));
    const double mid = std::sqrt(g.t[j] * g.t[j + 1]);
    if (mid >= 1e6 && mid <= 1e9 && slope < min_slope) {
      min_slope = slope;
      min_at = mid;
    }
    if (mid >= 1e8) late_slope = std::max(late_slope, slope);
  }
  const double final_w = g.uw.col(g.t.size() - 1).cwiseAbs().maxCoeff() / sm.uw0;
  const double secs = seconds_since(t0);
  const bool shoulder = min_at >= kShoulderLo && min_at <= kShoulderHi && min_slope < kShoulderFlatness * late_slope;
  const bool pass = air < kAirFraction && shoulder && final_w < kFinalFraction && secs <= kBudget2;
  report(2, pass,
         fmt("max ua/ua0 at %.3g s = %.3g (< %.2f); uw(H) flattest at %.3g s, slope %.3g vs late %.3g; "
             "max uw/uw0 at 1e10 = %.3g (< %.2f); %.1f s (<= %.0f)",
             g.t[j_air], air, kAirFraction, min_at, min_slope, late_slope, final_w, kFinalFraction, secs, kBudget2));
}

SeedSummary reference_n5;

void criterion3() {
  const auto s = three_seeds(table1_soil(), plan_segments(kHorizon, 5));
  reference_n5 = s;
  const bool pass = s.mae <= kMae3 && s.r2 >= kR2 && s.seconds <= kBudget3 && budget_pinned();
  report(3, pass,
         fmt("N=5 median MAE %.4g (<= %.2f), median R2 %.4g (>= %.2f); %d iters/segment; %.0f s (<= %.0f)", s.mae,
             kMae3, s.r2, kR2, iterations, s.seconds, kBudget3));
}

void criterion4() {
  const auto sm = table1_soil();
  const auto n2 = three_seeds(sm, plan_segments(kHorizon, 2));
  const auto n6 = three_seeds(sm, plan_segments(kHorizon, 6));
  const double m5 = reference_n5.mae;
  const double plateau = std::abs(m5 - n6.mae) / m5;
  const double secs = n2.seconds + n6.seconds;
  const bool pass = n2.mae >= kSegFactor * m5 && plateau <= kPlateau && secs <= kBudget4 && budget_pinned();
  report(4, pass,
         fmt("MAE N=2 %.4g, N=5 %.4g, N=6 %.4g; N2/N5 = %.2f (>= %.0f); |N5-N6|/N5 = %.2f (<= %.1f); %.0f s (<= %.0f)",
             n2.mae, m5, n6.mae, n2.mae / m5, kSegFactor, plateau, kPlateau, secs, kBudget4));
}

void criterion5() {
  const auto base = table1_soil();
  const auto plan = plan_segments(kHorizon, 5);
  std::map<double, double> mae;
  double secs = 0.0;
  for (double ratio : {0.01, 0.1, 1.0, 100.0}) {
    const SoilModel sm = cli::with_permeability_ratio(base, 1.0, ratio);
    const bool reused = ratio == 1.0;
    Run& r = train_run(sm, plan, kSeeds[0]);
    mae[ratio] = r.metrics.combined.mae;
    if (!reused) secs += r.seconds;
  }
  const bool each = mae[0.01] <= kMae5 && mae[1.0] <= kMae5 && mae[100.0] <= kMae5;
  const bool dip = mae[0.1] >= mae[1.0];
  const bool pass = each && dip && secs <= kBudget5 && budget_pinned();
  report(5, pass,
         fmt("MAE ka/kw 0.01: %.4g, 1: %.4g, 100: %.4g (each <= %.2f); 0.1: %.4g (>= MAE(1)); %.0f s (<= %.0f)",
             mae[0.01], mae[1.0], mae[100.0], kMae5, mae[0.1], secs, kBudget5));
}

void criterion6() {
  const auto sm = table1_soil();
  const auto plan = plan_segments_simplified(sm, kHorizon, 3);
  const auto s = three_seeds(sm, plan);
  const bool pass = s.mae <= kSimplifiedFactor * reference_n5.mae && s.seconds <= kBudget6 && budget_pinned();
  std::string bounds;
  for (double b : plan.boundaries) bounds += fmt("%.0e ", b);
  report(6, pass,
         fmt("plan { %s}: median MAE %.4g vs N=5 %.4g (<= %.0fx); %.0f s (<= %.0f)", bounds.c_str(), s.mae,
             reference_n5.mae, kSimplifiedFactor, s.seconds, kBudget6));
}

double rel_err(double got, double want, double floor) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

void criterion7() {
  const auto t0 = Clock::now();
  double worst_jet = 0.0, worst_grad = 0.0;
  const auto sm = table1_soil();
  const Segment s1{1, 0.0, 1e2, sm.H}, s2{2, 1e2, 1e4, sm.H};
  for (int c = 0; c < kFdCases; ++c) {
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(c);
    Architecture arch;
    arch.hidden_layers = 1;
    arch.hidden_width = 5;
    NetworkParameters p = init_network(arch, seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.5);
    Eigen::VectorXd x = p.flatten();
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += n(rng);
    p.assign(x);

    // Input-derivative jets against central differences of the plain forward pass.
    std::uniform_real_distribution<double> u(0.05, 0.95);
    const double z = u(rng), t = u(rng), h = 1e-4;
    const auto [ja, jw] = forward_jet(p, z, t);
    const auto f0 = forward(p, z, t);
    const auto zp = forward(p, z + h, t), zm = forward(p, z - h, t);
    const auto tp = forward(p, z, t + h), tm = forward(p, z, t - h);
    const Jet* jets[2] = {&ja, &jw};
    const double c0[2] = {f0.first, f0.second};
    const double zpv[2] = {zp.first, zp.second}, zmv[2] = {zm.first, zm.second};
    const double tpv[2] = {tp.first, tp.second}, tmv[2] = {tm.first, tm.second};
    for (int o = 0; o < 2; ++o) {
      worst_jet = std::max({worst_jet, rel_err(jets[o]->dz, (zpv[o] - zmv[o]) / (2 * h), 1e-2),
                            rel_err(jets[o]->dt, (tpv[o] - tmv[o]) / (2 * h), 1e-2),
                            rel_err(jets[o]->dzz, (zpv[o] - 2 * c0[o] + zmv[o]) / (h * h), 1e-2)});
    }

    // Parameter gradient of a full segment-2 objective (IC, BC, residual and lag terms).
    SegmentProblem pr;
    pr.segment = s2;
    pr.soil = sm;
    pr.points = sample_collocation(s2, s1, SamplingCounts{8, 8, 16, 8}, seed);
    pr.previous_segment = s1;
    NetworkParameters prev = init_network(arch, seed + 7);
    pr.previous_model = prev;
    const SegmentObjective obj(pr);
    Eigen::VectorXd g;
    obj.evaluate(p, g);
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    NetworkParameters q = p;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double hp = 1e-6 * std::max(1.0, std::abs(x[i]));
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += hp;
      xm[i] -= hp;
      q.assign(xp);
      const double fp = obj.evaluate(q).total;
      q.assign(xm);
      const double fm = obj.evaluate(q).total;
      worst_grad = std::max(worst_grad, rel_err(g[i], (fp - fm) / (2 * hp), 1e-3 * scale));
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_jet <= kFdRel && worst_grad <= kFdRel && secs <= kBudget7;
  report(7, pass,
         fmt("%d cases: worst jet rel err %.2g, worst gradient rel err %.2g (<= %.0e); %.1f s (<= %.0f)", kFdCases,
             worst_jet, worst_grad, kFdRel, secs, kBudget7));
}

void criterion8() {
  const auto t0 = Clock::now();
  const GradientObjective rosen = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g.resize(2);
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  OptimizerOptions opts;
  opts.max_iterations = 1000;
  opts.grad_tol = 1e-12;
  opts.loss_change_tol = 0.0;
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const auto res = lbfgs_minimize(rosen, x0, opts);
  const double dist = (res.x - Eigen::Vector2d(1.0, 1.0)).cwiseAbs().maxCoeff();

  int segments = 0, violations = 0;
  for (const Run* r : all_runs) {
    for (const auto& seg : r->report.segments) {
      ++segments;
      for (std::size_t k = 1; k < seg.rows.size(); ++k) {
        if (seg.rows[k].loss.total > seg.rows[k - 1].loss.total) ++violations;
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = dist <= kRosenbrockTol && violations == 0 && segments > 0 && secs <= kBudget8;
  report(8, pass,
         fmt("Rosenbrock |x-(1,1)|max = %.2g (<= %.0e) in %d iters; %d trained segments, %d loss increases; %.1f s "
             "(<= %.0f)",
             dist, kRosenbrockTol, static_cast<int>(res.trace.size()) - 1, segments, violations, secs, kBudget8));
}

void criterion9() {
  const auto t0 = Clock::now();
  const SoilModel truth = table1_soil();
  const double t_max = 1e8;
  GridSpec gs;
  gs.tmax = t_max;
  const auto grid = solve_coupled_fd(truth, gs);
  const auto clean = cli::sample_observations(grid, kObservations, 1e3, t_max, 11);
  const auto noisy = cli::add_noise(clean, kNoise, 12);

  InversionConfig ic;
  ic.initial_guess = truth;
  ic.initial_guess.cva = 2.0 * truth.cva;
  ic.t_max = t_max;
  ic.train.optimizer.max_iterations = budget_pinned() ? kInversionIters : iterations;
  ic.train.seed = 5;
  double err[2];
  double fitted[2];
  int k = 0;
  for (const auto* obs : {&clean, &noisy}) {
    try {
      const auto res = invert_coefficients(*obs, {Coefficient::cva}, ic);
      fitted[k] = res.fitted.cva;
    } catch (const Error& e) {
      std::printf("  inversion failed: %s\n", e.what());
      fitted[k] = NAN;
    }
    err[k] = std::abs(fitted[k] - truth.cva) / truth.cva;
    ++k;
  }
  const double secs = seconds_since(t0);
  const bool pass = err[0] <= kInvClean && err[1] <= kInvNoisy && secs <= kBudget9 && budget_pinned();
  report(9, pass,
         fmt("cva from 2x start: noiseless %.3g (err %.1f%%, <= %.0f%%), %.0f%% noise %.3g (err %.1f%%, <= %.0f%%); "
             "%.0f s (<= %.0f)",
             fitted[0], 100 * err[0], 100 * kInvClean, 100 * kNoise, fitted[1], 100 * err[1], 100 * kInvNoisy, secs,
             kBudget9));
}

void smoke_sweep() {
  const auto sm = table1_soil();
  const auto plan = plan_segments(1e6, 2);
  bool ok = true;
  std::string detail;
  for (int variant = 0; variant < 2; ++variant) {
    TrainConfig cfg;
    cfg.optimizer.max_iterations = 20;
    if (variant == 0) {
      cfg.arch.hidden_layers = 3;
      cfg.arch.hidden_width = 30;
    } else {
      cfg.counts = SamplingCounts{500, 500, 2500, 500};
    }
    try {
      auto [model, rep] = train_lbc(sm, plan, cfg);
      GridSpec gs;
      gs.tmax = 1e6;
      gs.nt = 40;
      const auto m = compare_to_oracle(model, solve_coupled_fd(sm, gs), sm.ua0, sm.uw0);
      ok = ok && std::isfinite(m.combined.mae);
      detail += fmt("%s MAE %.3g; ", variant == 0 ? "3x30 network" : "quarter sampling", m.combined.mae);
    } catch (const Error& e) {
      ok = false;
      detail += fmt("variant %d failed: %s; ", variant, e.what());
    }
  }
  if (!ok) ++failures;
  std::printf("SMOKE %s  %s\n", ok ? "PASS" : "FAIL", detail.c_str());
}

}  // namespace

int main() {
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  if (const char* env = std::getenv("LBC_ACCEPT_ITERS")) iterations = std::max(1, std::atoi(env));
  if (!budget_pinned()) std::printf("note: %d iterations per segment instead of %d\n", iterations, kPinnedIters);

  // Quick criteria first; 8 reads the traces of every training run before it.
  const std::vector<std::pair<int, std::function<void()>>> steps = {
      {1, criterion1}, {2, criterion2}, {7, criterion7}, {3, criterion3}, {4, criterion4},
      {5, criterion5}, {6, criterion6}, {8, criterion8}, {9, criterion9}, {0, smoke_sweep}};
  for (const auto& [id, step] : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      if (id == 0) {
        ++failures;
        std::printf("SMOKE FAIL  aborted: %s\n", e.what());
      } else {
        report(id, false, std::string("aborted: ") + e.what());
      }
    }
  }
  std::printf("%d failing\n", failures);
  return failures == 0 ? 0 : 1;
}
