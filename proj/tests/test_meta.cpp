#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ratelat/meta.hpp"
#include "ratelat/model.hpp"
#include "ratelat/sim.hpp"

using namespace ratelat;

namespace {
DefaultConfig paper(double wt_mw) { return default_paper_config(wt_mw); }
}  // namespace

TEST_CASE("tsp moments: empty field and vanishing threshold give certainty") {
  auto cfg = paper(10.0);
  cfg.field.density = 0.0;
  const auto m = meta::tsp_moments(cfg.link, cfg.field, 15.0);
  CHECK(m.mu == 1.0);
  CHECK(m.nu == 1.0);

  auto cfg2 = paper(10.0);
  const auto m2 = meta::tsp_moments(cfg2.link, cfg2.field, 1e-15);
  CHECK(m2.mu == Catch::Approx(1.0).margin(1e-6));
  CHECK(m2.nu == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("tsp moments at the default parameterization") {
  // hand evaluation of the closed forms: Upsilon = 200 pi^2, theta^{1/2} =
  // sqrt(15), sum_v (w_v/w_t)^{1/2} kappa_v lambda_v = 2.34850466e-4
  const auto cfg = paper(10.0);
  const auto m = meta::tsp_moments(cfg.link, cfg.field, 15.0);
  CHECK(m.mu == Catch::Approx(0.166057186481).epsilon(1e-9));
  CHECK(m.nu == Catch::Approx(0.0385068509112).epsilon(1e-9));
}

TEST_CASE("tsp moments against the Monte Carlo field oracle") {
  // ensemble mean and second moment of the exact per-realization TSP must
  // sit within 3 standard errors of the closed forms
  const auto cfg = paper(10.0);
  const auto ladder = build_rate_ladder(cfg.link);
  const auto emp = sim::empirical_meta(cfg.link, cfg.field, 2000, 77, 2500.0);
  for (int n = 1; n <= ladder.num_rates(); ++n) {
    const auto m = meta::tsp_moments(cfg.link, cfg.field, ladder.threshold(n));
    const double rows = static_cast<double>(emp.tsps.rows());
    const double m1 = emp.mean(n);
    const double se1 = std::sqrt(
        (emp.tsps.col(n - 1).array() - m1).square().mean() / rows);
    CHECK(std::fabs(m1 - m.mu) < 3.0 * se1);
    const double m2 = emp.second_moment(n);
    const double se2 = std::sqrt(
        (emp.tsps.col(n - 1).array().square() - m2).square().mean() / rows);
    CHECK(std::fabs(m2 - m.nu) < 3.0 * se2);
  }
}

TEST_CASE("moment ordering and beta-mean reconstruction") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> theta_dist(0.05, 40.0);
  std::uniform_real_distribution<double> wt_dist(1e-3, 0.1);
  for (int i = 0; i < 100; ++i) {
    auto cfg = paper(10.0);
    cfg.link.tx_power = wt_dist(rng);
    const double theta = theta_dist(rng);
    const auto m = meta::tsp_moments(cfg.link, cfg.field, theta);
    CHECK(m.mu * m.mu <= m.nu + 1e-15);
    CHECK(m.nu <= m.mu + 1e-15);
    const auto r = meta::make_rate_meta(m);
    if (!r.degenerate) {
      CHECK(r.beta_a > 0.0);
      CHECK(r.beta_b > 0.0);
      CHECK(r.beta_a / (r.beta_a + r.beta_b) ==
            Catch::Approx(m.mu).margin(1e-9));
    }
  }
}

TEST_CASE("meta ccdf endpoints, uniform case, monotonicity") {
  const auto cfg = paper(10.0);
  const auto ladder = build_rate_ladder(cfg.link);
  const auto dist = meta::build_meta(cfg.link, cfg.field, ladder);
  for (int n = 1; n <= 5; ++n) {
    CHECK(meta::meta_ccdf(dist, n, 0.0) == 1.0);
    CHECK(meta::meta_ccdf(dist, n, 1.0) == Catch::Approx(0.0).margin(1e-12));
  }
  // uniform TSP law: moments (1/2, 1/3) give Beta(1,1)
  meta::MetaDistribution uniform;
  uniform.per_rate.push_back(meta::make_rate_meta({0.5, 1.0 / 3.0}));
  CHECK(uniform.per_rate[0].beta_a == Catch::Approx(1.0).margin(1e-12));
  CHECK(uniform.per_rate[0].beta_b == Catch::Approx(1.0).margin(1e-12));
  CHECK(meta::meta_ccdf(uniform, 1, 0.25) == Catch::Approx(0.75).margin(1e-12));

  // nonincreasing in gamma, nondecreasing in the rate index (slower rates
  // have lower thresholds, hence stochastically larger TSPs)
  for (int n = 1; n <= 5; ++n) {
    double prev = 1.0;
    for (double g = 0.0; g <= 1.0; g += 0.02) {
      const double v = meta::meta_ccdf(dist, n, g);
      CHECK(v <= prev + 1e-12);
      prev = v;
    }
  }
  for (double g = 0.05; g < 1.0; g += 0.1)
    for (int n = 2; n <= 5; ++n)
      CHECK(meta::meta_ccdf(dist, n, g) >=
            meta::meta_ccdf(dist, n - 1, g) - 1e-12);
}

TEST_CASE("degenerate variance short-circuits to a step at mu") {
  auto cfg = paper(10.0);
  cfg.field.density = 0.0;  // TSP identically 1
  const auto ladder = build_rate_ladder(cfg.link);
  const auto dist = meta::build_meta(cfg.link, cfg.field, ladder);
  REQUIRE(dist.rate(1).degenerate);
  CHECK(meta::meta_ccdf(dist, 1, 0.0) == 1.0);
  CHECK(meta::meta_ccdf(dist, 1, 0.999) == 1.0);
  CHECK(meta::meta_ccdf(dist, 1, 1.0) == 0.0);
  const auto row = meta::discretize(dist, 1, 4);
  for (double rep : row.reps) CHECK(rep == 1.0);
}

TEST_CASE("discretize: uniform quartiles and the M=1 median") {
  meta::MetaDistribution uniform;
  uniform.per_rate.push_back(meta::make_rate_meta({0.5, 1.0 / 3.0}));
  const auto row = meta::discretize(uniform, 1, 4);
  const std::vector<double> edges{0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> reps{0.125, 0.375, 0.625, 0.875};
  for (int m = 0; m <= 4; ++m)
    CHECK(row.edges[m] == Catch::Approx(edges[m]).margin(1e-9));
  for (int m = 0; m < 4; ++m)
    CHECK(row.reps[m] == Catch::Approx(reps[m]).margin(1e-9));

  const auto single = meta::discretize(uniform, 1, 1);
  CHECK(single.reps[0] == Catch::Approx(0.5).margin(1e-9));  // overall median
}

TEST_CASE("grid classes are equiprobable with within-class medians") {
  const auto cfg = paper(10.0);
  const auto ladder = build_rate_ladder(cfg.link);
  const auto dist = meta::build_meta(cfg.link, cfg.field, ladder);
  const int M = cfg.link.num_classes;
  const auto grid = meta::build_tsp_grid(dist, M);
  for (int n = 1; n <= grid.num_rates; ++n) {
    const auto& r = dist.rate(n);
    for (int m = 1; m <= M; ++m) {
      // class mass 1/M between consecutive edges
      const double mass = reg_inc_beta(grid.edge(n, m), r.beta_a, r.beta_b) -
                          reg_inc_beta(grid.edge(n, m - 1), r.beta_a, r.beta_b);
      CHECK(mass == Catch::Approx(1.0 / M).margin(1e-8));
      // representative inside its class, CDF level (2m-1)/(2M)
      CHECK(grid.rep(n, m) >= grid.edge(n, m - 1) - 1e-12);
      CHECK(grid.rep(n, m) <= grid.edge(n, m) + 1e-12);
      CHECK(1.0 - meta::meta_ccdf(dist, n, grid.rep(n, m)) ==
            Catch::Approx((2.0 * m - 1.0) / (2.0 * M)).margin(1e-8));
      if (m > 1) CHECK(grid.rep(n, m) > grid.rep(n, m - 1));
    }
  }
}

TEST_CASE("grid representatives match empirical TSP quantiles") {
  const auto cfg = paper(10.0);
  const auto ladder = build_rate_ladder(cfg.link);
  const auto dist = meta::build_meta(cfg.link, cfg.field, ladder);
  const auto grid = meta::build_tsp_grid(dist, 8);
  const auto emp = sim::empirical_meta(cfg.link, cfg.field, 2000, 93, 2500.0);
  for (int n = 1; n <= 5; ++n) {
    std::vector<double> samples(emp.tsps.rows());
    for (Eigen::Index i = 0; i < emp.tsps.rows(); ++i)
      samples[i] = emp.tsps(i, n - 1);
    std::sort(samples.begin(), samples.end());
    for (int m = 1; m <= 8; ++m) {
      const double q = (2.0 * m - 1.0) / 16.0;
      const double emp_quantile =
          samples[static_cast<std::size_t>(q * (samples.size() - 1))];
      CHECK(std::fabs(grid.rep(n, m) - emp_quantile) < 0.03);
    }
  }
}
