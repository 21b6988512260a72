#include "toffoli/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace toffoli;

namespace {

double combined_se(const EnsembleStats& a, const EnsembleStats& b) {
  return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}

// One cheap local optimum, shared by the suites below.
const ControlSchedule& optimized_schedule() {
  static const ControlSchedule s = [] {
    OptimizeOptions o;
    o.n_starts = 1;
    o.seed = 7;
    o.threads = 1;
    return optimize(SystemConfig{}, o).best_schedule;
  }();
  return s;
}

bool same(const std::vector<SweepResult>& a, const std::vector<SweepResult>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].points.size() != b[i].points.size()) return false;
    for (std::size_t k = 0; k < a[i].points.size(); ++k) {
      const auto& p = a[i].points[k];
      const auto& q = b[i].points[k];
      if (p.abscissa != q.abscissa || p.stats.mean != q.stats.mean || p.stats.std_error != q.stats.std_error ||
          p.stats.n_realizations != q.stats.n_realizations)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST(Grids, LinearGridByIndex) {
  const auto g = linear_grid(0.0, 2.0, 0.05);
  ASSERT_EQ(g.size(), 41u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g[7], 7 * 0.05);
  EXPECT_NEAR(g.back(), 2.0, 1e-15);
  EXPECT_EQ(default_delta_grid().size(), 51u);
  EXPECT_EQ(default_coupling_grid().size(), 81u);
  EXPECT_EQ(default_tgfc_list(), (std::vector<double>{1, 2, 5, 10, 20, 40, 100, 200}));
  EXPECT_THROW(linear_grid(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST(Grids, LogLogSlopeOfPowerLaw) {
  const std::vector<double> x{10, 100, 1000, 10000};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.5));
  EXPECT_NEAR(log_log_slope(x, y), -0.5, 1e-12);
  EXPECT_THROW(log_log_slope({1.0}, {1.0}), std::invalid_argument);
}

TEST(DynamicSweep, ZeroSigmaRowIsNoiseless) {
  const SystemConfig cfg;
  const ControlSchedule& u = optimized_schedule();
  const double f0 = objective_standard(cfg, u);
  const auto res = run_dynamic_sweep(cfg, u, {0.0, 0.3}, {1, 5, 200}, 50, 11, 1);
  ASSERT_EQ(res.size(), 3u);
  for (const auto& r : res) {
    EXPECT_NEAR(r.at(0.0).stats.mean, f0, 1e-14);
    EXPECT_EQ(r.points.size(), 2u);
    EXPECT_EQ(r.provenance.n_realizations, 50u);
    EXPECT_EQ(r.provenance.seed, 11u);
    EXPECT_EQ(r.abscissa_name, "sigma");
  }
  EXPECT_NEAR(sweep_tgfc(res[0]), 1.0, 1e-12);
  EXPECT_NEAR(sweep_tgfc(res[2]), 200.0, 1e-9);
  EXPECT_THROW(res[0].at(0.15), std::out_of_range);
}

TEST(DynamicSweep, BitIdenticalRerunsAndThreadCounts) {
  const SystemConfig cfg;
  const ControlSchedule& u = optimized_schedule();
  const auto a = run_dynamic_sweep(cfg, u, {0.2, 0.8}, {2, 40}, 64, 5, 1);
  const auto b = run_dynamic_sweep(cfg, u, {0.2, 0.8}, {2, 40}, 64, 5, 1);
  const auto c = run_dynamic_sweep(cfg, u, {0.2, 0.8}, {2, 40}, 64, 5, 4);
  EXPECT_TRUE(same(a, b));
  EXPECT_TRUE(same(a, c));
  const auto d = run_dynamic_sweep(cfg, u, {0.2, 0.8}, {2, 40}, 64, 6, 1);
  EXPECT_FALSE(same(a, d));
}

TEST(DynamicSweep, MoreSourcesDecayFaster) {
  const SystemConfig cfg;
  const ControlSchedule& u = optimized_schedule();
  const auto one = run_dynamic_sweep(cfg, u, {0.4}, {10}, 400, 21, 0, 1);
  for (int sources : {3, 6}) {
    const auto more = run_dynamic_sweep(cfg, u, {0.4}, {10}, 400, 21, 0, sources);
    const auto& p = one[0].points[0].stats;
    const auto& q = more[0].points[0].stats;
    EXPECT_LE(q.mean, p.mean + 2 * combined_se(p, q)) << sources << " sources";
  }
}

TEST(StaticSweep, ZeroDeltaAndMonotone) {
  const SystemConfig cfg;
  const ControlSchedule& u = optimized_schedule();
  const auto grid = linear_grid(0.0, 0.3, 0.05);
  const auto res = run_static_sweep(cfg, {{"opt", u}, {"zero", ControlSchedule::zeros(20)}}, grid, 400, 13, 0);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_EQ(res[0].provenance.schedule_id, "opt");
  EXPECT_EQ(res[1].provenance.schedule_id, "zero");
  EXPECT_EQ(res[0].abscissa_name, "delta");
  EXPECT_NEAR(res[0].at(0.0).stats.mean, objective_standard(cfg, u), 1e-14);
  const auto& pts = res[0].points;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    EXPECT_LE(pts[k].stats.mean, pts[k - 1].stats.mean + 2 * combined_se(pts[k].stats, pts[k - 1].stats))
        << "delta " << pts[k].abscissa;
  }
  const auto again = run_static_sweep(cfg, {{"opt", u}, {"zero", ControlSchedule::zeros(20)}}, grid, 400, 13, 3);
  EXPECT_TRUE(same(res, again));
}

TEST(Convergence, NoiselessDistancesVanish) {
  ConvergenceOptions o;
  o.seed = 4;
  const auto t = run_convergence_check(0.0, 0.209, {10, 100}, 20, o);
  for (const auto& p : t.points) {
    EXPECT_LT(p.median, 1e-12);
    EXPECT_LT(p.p90, 1e-12);
  }
}

TEST(Convergence, SlopeNearMinusOneHalf) {
  ConvergenceOptions o;
  o.seed = 4;
  const auto t = run_convergence_check(0.3, 0.209, {10, 100, 1000}, 60, o);
  ASSERT_EQ(t.points.size(), 3u);
  EXPECT_LT(t.points[2].median, t.points[0].median);
  EXPECT_GE(t.slope, -0.65);
  EXPECT_LE(t.slope, -0.35);
}

TEST(Robustness, ChainOnSmallGrid) {
  const SystemConfig cfg;
  RobustnessOptions o;
  o.standard_schedule = optimized_schedule();
  o.weighted.grid_points = 7;
  o.weighted.delta1 = 0.04;
  o.smoothed.grid_points = 7;
  o.weighted_starts = 1;
  o.n_realizations = 100;
  o.coupling_grid = {0.9, 1.0, 1.1};
  o.threads = 1;
  const RobustnessComparison c = run_robustness_comparison(cfg, o);
  ASSERT_EQ(c.rows.size(), 3u);
  ASSERT_EQ(c.curves.size(), 3u);
  EXPECT_EQ(c.rows[0].name, "standard");
  EXPECT_EQ(c.rows[1].name, "weighted");
  EXPECT_EQ(c.rows[2].name, "smoothed");
  const OptimizationReport* reports[] = {&c.standard, &c.weighted, &c.smoothed};
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(c.curves[i].size(), 3u);
    EXPECT_EQ(c.curves[i][1].second, objective_standard(cfg, reports[i]->best_schedule));
    EXPECT_EQ(c.rows[i].nominal_fidelity, reports[i]->best_fidelity_at_nominal);
    EXPECT_EQ(c.rows[i].at_delta.n_realizations, 100u);
  }
  EXPECT_EQ(c.standard.best_schedule, optimized_schedule());
  // The smoothed run starts from the weighted optimum, so it cannot end lower.
  EXPECT_GE(c.smoothed.best_objective,
            evaluate_objective(cfg, c.weighted.best_schedule, ObjectiveKind::Smoothed, o.smoothed));
}
