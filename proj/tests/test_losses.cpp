#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lbc/errors.hpp"
#include "lbc/losses.hpp"

using namespace lbc;

namespace {

NetworkParameters small_net(std::uint64_t seed, double spread = 0.5) {
  Architecture a;
  a.hidden_layers = 2;
  a.hidden_width = 6;
  auto p = init_network(a, seed);
  std::mt19937_64 rng(seed + 100);
  std::normal_distribution<double> n(0.0, spread);
  Eigen::VectorXd flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] += n(rng);
  p.assign(flat);
  return p;
}

// Pointwise residual from scalar jets.
double pointwise_residual(const NetworkParameters& p, const CollocationSet& set, const SoilModel& sm,
                          const Segment& seg) {
  const double scale = seg.duration() / (sm.H * sm.H);
  double sa = 0.0, sw = 0.0;
  const auto n = set.interior_z.size();
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto [a, w] = forward_jet(p, set.interior_z[k], set.interior_t[k]);
    const double ra = a.dt + sm.Ca * w.dt - scale * sm.cva * a.dzz;
    const double rw = w.dt + sm.Cw * a.dt - scale * sm.cvw * w.dzz;
    sa += ra * ra;
    sw += rw * rw;
  }
  return sa / n + sw / n;
}

}  // namespace

TEST(Losses, UnitDomainMapping) {
  const Segment seg{2, 100.0, 1e4, 10.0};
  const auto [zb, tb] = to_unit_domain(2.5, 5050.0, seg);
  EXPECT_DOUBLE_EQ(zb, 0.25);
  EXPECT_DOUBLE_EQ(tb, 0.5);
  EXPECT_THROW(to_unit_domain(11.0, 200.0, seg), RangeError);
  EXPECT_THROW(to_unit_domain(1.0, 50.0, seg), RangeError);
  EXPECT_THROW((Segment{0, 0.0, 1.0, 1.0}.validate()), SegmentError);
  EXPECT_THROW((Segment{1, 5.0, 1.0, 1.0}.validate()), SegmentError);
}

TEST(Losses, LogTimesStayInRangeAndAreLogUniform) {
  const auto t = sample_log_times(0.0, 1e8, 20000, 3);
  EXPECT_GE(t.minCoeff(), 1.0);
  EXPECT_LE(t.maxCoeff(), 1e8);
  const double mean_log = t.array().log10().mean();
  EXPECT_NEAR(mean_log, 4.0, 0.05);
  // Fraction below 1e2 is 2/8 for a log-uniform law.
  const double frac = (t.array() < 1e2).cast<double>().mean();
  EXPECT_NEAR(frac, 0.25, 0.015);
  EXPECT_TRUE((t.array() == sample_log_times(0.0, 1e8, 20000, 3).array()).all());
  EXPECT_THROW(sample_log_times(0.0, 0.5, 10, 1), SegmentError);
  const auto shifted = sample_log_times(1e4, 1e6, 100, 1);
  EXPECT_GE(shifted.minCoeff(), 1e4);
}

TEST(Losses, CollocationShapesAndRanges) {
  const Segment s1{1, 0.0, 1e2, 10.0}, s2{2, 1e2, 1e4, 10.0};
  SamplingCounts c{30, 40, 50, 60};
  const auto a = sample_collocation(s1, std::nullopt, c, 9);
  EXPECT_EQ(a.initial_z.size(), 30);
  EXPECT_EQ(a.boundary_t.size(), 40);
  EXPECT_EQ(a.interior_z.size(), 50);
  EXPECT_EQ(a.interior_t.size(), 50);
  EXPECT_EQ(a.lag_z.size(), 0);
  const auto b = sample_collocation(s2, s1, c, 9);
  EXPECT_EQ(b.lag_z.size(), 60);
  for (const auto* v : {&b.initial_z, &b.boundary_t, &b.interior_z, &b.interior_t, &b.lag_z, &b.lag_t}) {
    EXPECT_GE(v->minCoeff(), 0.0);
    EXPECT_LE(v->maxCoeff(), 1.0);
  }
  EXPECT_THROW(sample_collocation(s2, std::nullopt, c, 1), SegmentError);
  EXPECT_THROW(sample_collocation(s1, s1, c, 1), SegmentError);
  EXPECT_THROW(sample_collocation(s1, std::nullopt, SamplingCounts{0, 1, 1, 1}, 1), ParameterError);
  const auto again = sample_collocation(s2, s1, c, 9);
  EXPECT_TRUE((again.interior_t.array() == b.interior_t.array()).all());
  const auto other = sample_collocation(s2, s1, c, 10);
  EXPECT_FALSE((other.interior_t.array() == b.interior_t.array()).all());
}

TEST(Losses, FirstSegmentSamplesUseTimeFloor) {
  const Segment s1{1, 0.0, 1e4, 10.0};
  const auto set = sample_collocation(s1, std::nullopt, SamplingCounts{10, 500, 500, 10}, 4, 10.0);
  EXPECT_GE(set.interior_t.minCoeff(), 10.0 / 1e4 - 1e-15);
  EXPECT_GE(set.boundary_t.minCoeff(), 10.0 / 1e4 - 1e-15);
}

TEST(Losses, LagTimesAreNegativeInCurrentFrame) {
  const Segment s1{1, 0.0, 1e2, 10.0}, s2{2, 1e2, 1e4, 10.0};
  CollocationSet set;
  set.lag_z = Eigen::VectorXd::Constant(3, 0.5);
  set.lag_t = (Eigen::VectorXd(3) << 0.0, 0.5, 1.0).finished();
  const auto t = lag_times_in_current_frame(set, s1, s2);
  EXPECT_DOUBLE_EQ(t[0], -100.0 / 9900.0);
  EXPECT_DOUBLE_EQ(t[1], -50.0 / 9900.0);
  EXPECT_DOUBLE_EQ(t[2], 0.0);
  set.lag_t[1] = 1.5;
  EXPECT_THROW(lag_times_in_current_frame(set, s1, s2), RangeError);
}

TEST(Losses, ResidualMatchesPointwiseJets) {
  const auto sm = table1_soil();
  for (const Segment seg : {Segment{1, 0.0, 1e2, 10.0}, Segment{4, 1e6, 1e8, 10.0}}) {
    // 2500 points: not a multiple of the internal chunk.
    const auto set = sample_collocation(seg, seg.index > 1 ? std::optional<Segment>(Segment{seg.index - 1, 1e4, 1e6, 10.0})
                                                          : std::nullopt,
                                        SamplingCounts{5, 5, 2500, 5}, 21);
    const auto p = small_net(seg.index);
    const double got = residual_loss(p, set, sm, seg);
    const double want = pointwise_residual(p, set, sm, seg);
    EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, want));
  }
}

TEST(Losses, InitialAndBoundaryLossesForZeroNetwork) {
  Architecture a;
  a.hidden_layers = 1;
  a.hidden_width = 3;
  NetworkParameters zero(a);
  const auto sm = table1_soil();
  const Segment s1{1, 0.0, 1e2, 10.0};
  SegmentProblem pr;
  pr.segment = s1;
  pr.soil = sm;
  pr.points = sample_collocation(s1, std::nullopt, SamplingCounts{50, 50, 50, 50}, 1);
  const SegmentObjective obj(pr);
  const auto b = obj.evaluate(zero);
  EXPECT_DOUBLE_EQ(b.ic, sm.ua0 * sm.ua0 + sm.uw0 * sm.uw0);
  EXPECT_DOUBLE_EQ(b.bc, 0.0);
  EXPECT_DOUBLE_EQ(b.r, 0.0);
  EXPECT_DOUBLE_EQ(b.s, 0.0);
  EXPECT_DOUBLE_EQ(b.total, b.ic);
}

TEST(Losses, BoundaryLossMatchesPointwise) {
  const Segment s1{1, 0.0, 1e2, 10.0};
  const auto set = sample_collocation(s1, std::nullopt, SamplingCounts{5, 300, 5, 5}, 2);
  const auto p = small_net(7);
  double s = 0.0;
  for (Eigen::Index k = 0; k < set.boundary_t.size(); ++k) {
    const auto [a0, w0] = forward_jet(p, 0.0, set.boundary_t[k]);
    const auto [a1, w1] = forward_jet(p, 1.0, set.boundary_t[k]);
    s += a0.v * a0.v + w0.v * w0.v + a1.dz * a1.dz + w1.dz * w1.dz;
  }
  EXPECT_NEAR(bc_loss(p, set), s / set.boundary_t.size(), 1e-12);
}

TEST(Losses, LaterSegmentTargetsComeFromPreviousModel) {
  const auto sm = table1_soil();
  const Segment s1{1, 0.0, 1e2, 10.0}, s2{2, 1e2, 1e4, 10.0};
  const auto prev = small_net(3);
  SegmentProblem pr;
  pr.segment = s2;
  pr.soil = sm;
  pr.points = sample_collocation(s2, s1, SamplingCounts{40, 40, 40, 40}, 5);
  pr.previous_segment = s1;
  pr.previous_model = prev;
  const SegmentObjective obj(pr);
  for (Eigen::Index k = 0; k < 40; ++k) {
    const auto [ua, uw] = forward(prev, pr.points.initial_z[k], 1.0);
    EXPECT_DOUBLE_EQ(obj.ic_target_a()[k], ua);
    EXPECT_DOUBLE_EQ(obj.ic_target_w()[k], uw);
  }
  // The previous model continued into the new frame is not generally consistent.
  const auto cur = small_net(4);
  double s = 0.0;
  const auto tcur = lag_times_in_current_frame(pr.points, s1, s2);
  for (Eigen::Index k = 0; k < 40; ++k) {
    const auto [pa, pw] = forward(prev, pr.points.lag_z[k], pr.points.lag_t[k]);
    const auto [ca, cw] = forward(cur, pr.points.lag_z[k], tcur[k]);
    s += (ca - pa) * (ca - pa) + (cw - pw) * (cw - pw);
  }
  EXPECT_NEAR(lag_loss(cur, prev, pr.points, s1, s2), s / 40.0, 1e-12);
  const auto b = obj.evaluate(cur);
  EXPECT_NEAR(b.s, s / 40.0, 1e-12);
  EXPECT_NEAR(b.total, b.ic + b.bc + b.r + b.s, 1e-12 * b.total);

  SegmentProblem bad = pr;
  bad.previous_segment.reset();
  EXPECT_THROW(SegmentObjective{bad}, SegmentError);
}

TEST(Losses, WeightsScaleTerms) {
  const auto sm = table1_soil();
  const Segment s1{1, 0.0, 1e2, 10.0};
  SegmentProblem pr;
  pr.segment = s1;
  pr.soil = sm;
  pr.points = sample_collocation(s1, std::nullopt, SamplingCounts{30, 30, 30, 30}, 5);
  pr.weights = {2.0, 3.0, 0.5, 7.0};
  const auto p = small_net(9);
  const auto b = SegmentObjective(pr).evaluate(p);
  EXPECT_NEAR(b.total, 2.0 * b.ic + 3.0 * b.bc + 0.5 * b.r, 1e-12 * b.total);
  pr.weights.r = -1.0;
  EXPECT_THROW(SegmentObjective{pr}, ParameterError);
}

TEST(Losses, SegmentGradientMatchesFiniteDifferences) {
  const auto sm = table1_soil();
  const Segment s1{1, 0.0, 1e2, 10.0}, s2{2, 1e2, 1e4, 10.0};
  SegmentProblem pr;
  pr.segment = s2;
  pr.soil = sm;
  pr.points = sample_collocation(s2, s1, SamplingCounts{20, 20, 1100, 20}, 8);
  pr.previous_segment = s1;
  pr.previous_model = small_net(1, 0.2);
  const SegmentObjective obj(pr);
  auto p = small_net(2, 0.2);
  Eigen::VectorXd g;
  obj.evaluate(p, g);
  const Eigen::VectorXd x = p.flatten();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd d(x.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = n(rng);
    const double h = 1e-6;
    p.assign(x + h * d);
    const double fp = obj.evaluate(p).total;
    p.assign(x - h * d);
    const double fm = obj.evaluate(p).total;
    const double fd = (fp - fm) / (2 * h);
    const double an = g.dot(d);
    EXPECT_NEAR(an, fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}
