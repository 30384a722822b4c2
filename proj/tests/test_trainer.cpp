#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lbc/errors.hpp"
#include "lbc/trainer.hpp"

using namespace lbc;

namespace {

TrainConfig tiny_config(int iterations = 30) {
  TrainConfig c;
  c.arch.hidden_layers = 2;
  c.arch.hidden_width = 8;
  c.counts = {64, 64, 256, 64};
  c.optimizer.max_iterations = iterations;
  c.seed = 3;
  return c;
}

bool monotone(const SegmentTrace& t) {
  for (std::size_t k = 1; k < t.rows.size(); ++k) {
    if (t.rows[k].loss.total > t.rows[k - 1].loss.total) return false;
  }
  return true;
}

}  // namespace

TEST(Plan, LogUniformBoundaries) {
  const auto p = plan_segments(1e10, 5);
  EXPECT_EQ(p.boundaries, (std::vector<double>{0.0, 1e2, 1e4, 1e6, 1e8, 1e10}));
  EXPECT_EQ(p.segment_count(), 5);
  EXPECT_EQ(p.scheme, SegmentationScheme::log_uniform);
  const auto p2 = plan_segments(1e10, 2);
  EXPECT_EQ(p2.boundaries, (std::vector<double>{0.0, 1e5, 1e10}));
  const auto p6 = plan_segments(1e10, 6);
  ASSERT_EQ(p6.boundaries.size(), 7u);
  EXPECT_NEAR(p6.boundaries[1], std::pow(10.0, 10.0 / 6.0), 1e-9);
  EXPECT_EQ(p6.boundaries[3], 1e5);
  EXPECT_EQ(plan_segments(1e6, 1).boundaries, (std::vector<double>{0.0, 1e6}));
  EXPECT_THROW(plan_segments(1e10, 0), PlanError);
  EXPECT_THROW(plan_segments(0.5, 2), PlanError);
}

TEST(Plan, SimplifiedStartsAtAirTime) {
  const auto p = plan_segments_simplified(table1_soil(), 1e10, 3);
  EXPECT_EQ(p.scheme, SegmentationScheme::simplified);
  ASSERT_EQ(p.boundaries.size(), 5u);
  EXPECT_EQ(p.boundaries[0], 0.0);
  EXPECT_EQ(p.boundaries[1], 1e7);
  EXPECT_EQ(p.boundaries[2], 1e8);
  EXPECT_EQ(p.boundaries[3], 1e9);
  EXPECT_EQ(p.boundaries[4], 1e10);
  EXPECT_THROW(plan_segments_simplified(table1_soil(), 1e6, 3), PlanError);
  EXPECT_THROW(plan_segments_simplified(table1_soil(), 1e10, 0), PlanError);
}

TEST(Plan, OwnershipAndValidation) {
  const auto p = plan_segments(1e10, 5);
  EXPECT_EQ(p.owner(0.0), 1);
  EXPECT_EQ(p.owner(1e2), 1);
  EXPECT_EQ(p.owner(1e2 * (1 + 1e-9)), 2);
  EXPECT_EQ(p.owner(1e10), 5);
  EXPECT_THROW(p.owner(-1.0), RangeError);
  EXPECT_THROW(p.owner(2e10), RangeError);
  const auto s = p.segment(3, 10.0);
  EXPECT_EQ(s.t_start, 1e4);
  EXPECT_EQ(s.t_end, 1e6);
  EXPECT_THROW(p.segment(6, 10.0), RangeError);
  SegmentationPlan bad{{0.0, 5.0, 5.0}};
  EXPECT_THROW(bad.validate(), PlanError);
  bad.boundaries = {1.0, 2.0};
  EXPECT_THROW(bad.validate(), PlanError);
}

TEST(Plan, SegmentSeedsAreDistinctAndStable) {
  EXPECT_EQ(segment_seed(1, 1), segment_seed(1, 1));
  EXPECT_NE(segment_seed(1, 1), segment_seed(1, 2));
  EXPECT_NE(segment_seed(1, 1), segment_seed(2, 1));
}

TEST(Trainer, SegmentTraceIsMonotoneAndReducesLoss) {
  const auto sm = table1_soil();
  const Segment s1{1, 0.0, 1e2, sm.H};
  SegmentContext ctx{sm, tiny_config(40), std::nullopt, std::nullopt};
  const auto init = init_network(ctx.config.arch, 3);
  const auto [trained, trace] = train_segment(s1, init, ctx);
  ASSERT_GE(trace.rows.size(), 2u);
  EXPECT_EQ(trace.rows.front().iteration, 0);
  EXPECT_TRUE(monotone(trace));
  EXPECT_LT(trace.final_loss.total, 0.5 * trace.rows.front().loss.total);
  EXPECT_LE(static_cast<int>(trace.rows.size()) - 1, 40);
  EXPECT_FALSE(trained == init);
}

TEST(Trainer, BurnInFreezesHiddenLayers) {
  const auto sm = table1_soil();
  const Segment s1{1, 0.0, 1e2, sm.H}, s2{2, 1e2, 1e4, sm.H};
  auto cfg = tiny_config(5);
  cfg.burn_in = true;
  cfg.burn_in_iterations = 5;
  const auto prev = init_network(cfg.arch, 9);
  SegmentContext ctx{sm, cfg, s1, prev};
  const auto [trained, trace] = train_segment(s2, prev, ctx);
  const auto [lo, hi] = prev.hidden_range();
  const Eigen::VectorXd a = prev.flatten(), b = trained.flatten();
  EXPECT_TRUE((a.segment(lo, hi - lo).array() == b.segment(lo, hi - lo).array()).all());
  EXPECT_FALSE((a.tail(a.size() - hi).array() == b.tail(b.size() - hi).array()).all());
  EXPECT_TRUE(monotone(trace));
}

TEST(Trainer, LbcRunIsDeterministicAndStitches) {
  const auto sm = table1_soil();
  const auto plan = plan_segments(1e6, 3);
  const auto cfg = tiny_config(15);
  const auto [m1, r1] = train_lbc(sm, plan, cfg);
  const auto [m2, r2] = train_lbc(sm, plan, cfg);
  EXPECT_TRUE(m1 == m2);
  ASSERT_EQ(r1.segments.size(), 3u);
  ASSERT_EQ(r1.interface_jumps.size(), 2u);
  for (const auto& s : r1.segments) EXPECT_TRUE(monotone(s));
  // Stitched evaluation uses the owning network in its own frame.
  const auto& nets = m1.models();
  const auto [ua, uw] = m1.evaluate(5.0, 5e4);
  const auto [ea, ew] = forward(nets[2], 0.5, (5e4 - 1e4) / (1e6 - 1e4));
  EXPECT_DOUBLE_EQ(ua, ea);
  EXPECT_DOUBLE_EQ(uw, ew);
  const auto [ba, bw] = m1.evaluate(0.0, 1e2);
  EXPECT_DOUBLE_EQ(ba, forward(nets[0], 0.0, 1.0).first);
  (void)bw;
  // The reported jump agrees with an independent depth scan.
  double jump = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const auto [la, lw] = forward(nets[0], k / 100.0, 1.0);
    const auto [ra, rw] = forward(nets[1], k / 100.0, 0.0);
    jump = std::max({jump, std::abs(la - ra), std::abs(lw - rw)});
  }
  EXPECT_NEAR(r1.interface_jumps[0], jump, 1e-12);
  EXPECT_THROW(m1.evaluate(11.0, 1.0), RangeError);
  EXPECT_THROW(m1.evaluate(1.0, 2e6), RangeError);
}

TEST(Trainer, StdIsOneSegment) {
  const auto [m, r] = train_std(table1_soil(), 1e6, tiny_config(3));
  EXPECT_EQ(m.plan().segment_count(), 1);
  EXPECT_TRUE(r.interface_jumps.empty());
}

TEST(Trainer, RejectsIllPosedSoil) {
  auto sm = table1_soil();
  sm.cva = -1e-6;
  EXPECT_THROW(train_lbc(sm, plan_segments(1e6, 2), tiny_config(1)), Error);
  auto cfg = tiny_config(1);
  cfg.counts.n_r = 0;
  EXPECT_THROW(train_lbc(table1_soil(), plan_segments(1e6, 2), cfg), ParameterError);
}

TEST(Trainer, TraceCsvLayout) {
  const auto [m, r] = train_lbc(table1_soil(), plan_segments(1e4, 2), tiny_config(2));
  std::ostringstream os;
  write_trace_csv(r, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "segment,iteration,total,loss_ic,loss_bc,loss_r,loss_s");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  }
  EXPECT_EQ(rows, r.segments[0].rows.size() + r.segments[1].rows.size());
}
