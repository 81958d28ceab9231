#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "tailrisk/dependence.hpp"
#include "tailrisk/weighted_sums.hpp"

using namespace tailrisk;

namespace {

Copula random_copula(testgen::Gen& g) {
  switch (g.integer(0, 3)) {
    case 0: return Copula::independence();
    case 1: return Copula::fgm(g.uniform(-1.0, 1.0));
    case 2: return Copula::ali_mikhail_haq(g.uniform(-1.0, 0.99));
    default: return Copula::frank(g.coin() ? g.uniform(0.1, 15.0) : -g.uniform(0.1, 15.0));
  }
}

double frank_corner_density(double theta) { return theta / (1.0 - std::exp(-theta)); }

}  // namespace

TEST_SUITE("dependence") {

TEST_CASE("parameter ranges") {
  CHECK_THROWS_AS(Copula::fgm(1.5), ConfigError);
  CHECK_THROWS_AS(Copula::ali_mikhail_haq(1.0), ConfigError);
  CHECK_THROWS_AS(Copula::frank(0.0), ConfigError);
  CHECK_NOTHROW(Copula::fgm(-1.0));
  CHECK_NOTHROW(Copula::ali_mikhail_haq(-1.0));
}

TEST_CASE("SAI constants against the corner densities") {
  CHECK(*Copula::independence().sai_constant() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(*Copula::fgm(1.0).sai_constant() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(*Copula::fgm(0.3).sai_constant() == doctest::Approx(1.3).epsilon(1e-9));
  CHECK(*Copula::ali_mikhail_haq(0.5).sai_constant() == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(*Copula::frank(2.0).sai_constant() == doctest::Approx(frank_corner_density(2.0)).epsilon(1e-9));
  CHECK(*Copula::frank(-3.0).sai_constant() == doctest::Approx(frank_corner_density(-3.0)).epsilon(1e-9));
  CHECK_FALSE(Copula::fgm(-1.0).sai_constant().has_value());
}

TEST_CASE("SAI extrapolation rejects short grids") {
  CHECK_THROWS_AS(sai_constant(Copula::fgm(0.5), {1e-2, 1e-3}), ConfigError);
}

TEST_CASE("property: survival matches u + v - 1 + C(1-u, 1-v) away from the corner") {
  testgen::Gen g(301);
  for (int c = 0; c < testgen::kCases; ++c) {
    CAPTURE(c);
    const Copula cop = random_copula(g);
    const double u = g.uniform(0.05, 0.95), v = g.uniform(0.05, 0.95);
    CHECK(cop.survival(u, v) == doctest::Approx(u + v - 1.0 + cop.cdf(1.0 - u, 1.0 - v)).epsilon(1e-10));
  }
}

TEST_CASE("property: copula axioms and Fréchet bounds") {
  testgen::Gen g(302);
  for (int c = 0; c < testgen::kCases; ++c) {
    CAPTURE(c);
    const Copula cop = random_copula(g);
    const double u = g.uniform(0.0, 1.0), v = g.uniform(0.0, 1.0);
    CHECK(cop.cdf(u, 1.0) == doctest::Approx(u).epsilon(1e-12));
    CHECK(cop.cdf(1.0, v) == doctest::Approx(v).epsilon(1e-12));
    CHECK(cop.cdf(u, 0.0) == doctest::Approx(0.0));
    const double cuv = cop.cdf(u, v);
    CHECK(cuv <= std::min(u, v) + 1e-12);
    CHECK(cuv >= std::max(0.0, u + v - 1.0) - 1e-12);
    // 2-increasing on a random rectangle
    const double u2 = std::min(1.0, u + g.uniform(0.0, 0.3)), v2 = std::min(1.0, v + g.uniform(0.0, 0.3));
    CHECK(cop.cdf(u2, v2) - cop.cdf(u, v2) - cop.cdf(u2, v) + cop.cdf(u, v) >= -1e-12);
  }
}

TEST_CASE("property: conditional is dC/du and conditional_inverse inverts it") {
  testgen::Gen g(303);
  for (int c = 0; c < testgen::kCases; ++c) {
    CAPTURE(c);
    const Copula cop = random_copula(g);
    const double u = g.uniform(0.01, 0.99), v = g.uniform(0.01, 0.99);
    const double h = 1e-6;
    const double fd = (cop.cdf(u + h, v) - cop.cdf(u - h, v)) / (2.0 * h);
    CHECK(cop.conditional(u, v) == doctest::Approx(fd).epsilon(1e-6));
    const double w = g.uniform(0.0, 1.0);
    const double inv = cop.conditional_inverse(u, w);
    CHECK(inv >= 0.0);
    CHECK(inv <= 1.0);
    CHECK(cop.conditional(u, inv) == doctest::Approx(w).epsilon(1e-9));
  }
}

TEST_CASE("sampled pairs reproduce the copula") {
  for (const Copula& cop : {Copula::fgm(1.0), Copula::ali_mikhail_haq(0.5), Copula::frank(5.0)}) {
    CAPTURE(to_string(cop.family()));
    const RunPlan plan{.master_seed = 4, .n_samples = 200000};
    const Estimate e = run_mc(plan, [&](RngStream& r) {
      const auto [u, v] = sample_copula(cop, r);
      return (u <= 0.3 && v <= 0.6) ? 1.0 : 0.0;
    });
    CHECK(std::abs(e.mean - cop.cdf(0.3, 0.6)) < 1.5 * e.ci95_halfwidth());
  }
}

TEST_CASE("multivariate FGM: validity region and bivariate margins") {
  const std::vector<std::vector<double>> ok = {{0, 0.3, 0.3, 0.3}, {0.3, 0, 0.3, 0.3}, {0.3, 0.3, 0, 0.3}, {0.3, 0.3, 0.3, 0}};
  CHECK_NOTHROW(MultivariateFgm{ok});
  auto bad = ok;
  for (auto& row : bad)
    for (auto& x : row)
      if (x != 0.0) x = 0.6;
  CHECK_THROWS_AS(MultivariateFgm{bad}, ConfigError);
  CHECK_THROWS_AS(MultivariateFgm({{0, 0.3}, {0.2, 0}}), ConfigError);

  const MultivariateFgm fgm(ok);
  const double u[4] = {0.1, 0.2, 1.0, 1.0};
  CHECK(fgm.survival(u) == doctest::Approx(Copula::fgm(0.3).survival(0.1, 0.2)).epsilon(1e-12));
  const double w[4] = {0.1, 0.2, 0.3, 0.4};
  double prod = 0.1 * 0.2 * 0.3 * 0.4, pairs = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) pairs += 0.3 * (1 - w[i]) * (1 - w[j]);
  CHECK(fgm.survival(w) == doctest::Approx(prod * (1.0 + pairs)).epsilon(1e-12));
}

TEST_CASE("multivariate FGM sampler reproduces the joint survival") {
  const MultivariateFgm fgm({{0, 0.5, -0.2}, {0.5, 0, 0.3}, {-0.2, 0.3, 0}});
  const RunPlan plan{.master_seed = 12, .n_samples = 400000};
  const double q[3] = {0.4, 0.5, 0.6};
  const Estimate e = run_mc(plan, [&](RngStream& r) {
    double u[3];
    fgm.sample(r, u);
    return (u[0] > 1 - q[0] && u[1] > 1 - q[1] && u[2] > 1 - q[2]) ? 1.0 : 0.0;
  });
  CHECK(std::abs(e.mean - fgm.survival(q)) < 1.5 * e.ci95_halfwidth());
}

TEST_CASE("GTAI passes for independent primaries") {
  BivariateSumSpec s;
  s.x_laws = {TailLaw::pareto(2.0, 1.0), TailLaw::pareto(2.0, 1.0)};
  s.y_laws = {TailLaw::pareto(2.0, 1.0)};
  s.pair_copulas = {Copula::independence()};
  s.theta_weights = {WeightSpec::point(1.0), WeightSpec::point(1.0)};
  s.delta_weights = {WeightSpec::point(1.0)};
  const RunPlan plan{.master_seed = 3, .n_samples = 1'000'000};
  const auto rep = gtai_diagnostic(s, {2.0, 4.0, 6.0}, plan, {.tolerance = 0.05});
  CHECK(rep.passed);
  CHECK(rep.max_conditional < 0.3);
  CHECK(rep.grid.size() == 2 * 3);
  for (const auto& cell : rep.grid) {
    if (cell.threshold == 6.0) CHECK(cell.estimate == doctest::Approx(1.0 / 36.0).epsilon(0.3));
  }
  CHECK_THROWS_AS(gtai_diagnostic(s, {12.0, 14.0}, plan.with_samples(10000)), ConfigError);
  CHECK_THROWS_AS(gtai_diagnostic(s, {4.0, 2.0}, plan), ConfigError);
}

TEST_CASE("GTAI fails for duplicated primaries") {
  BivariateSumSpec s;
  s.x_laws = {TailLaw::pareto(2.0, 1.0), TailLaw::pareto(2.0, 1.0)};
  s.y_laws = {TailLaw::pareto(2.0, 1.0)};
  s.pair_copulas = {Copula::independence()};
  s.theta_weights = {WeightSpec::point(1.0), WeightSpec::point(1.0)};
  s.delta_weights = {WeightSpec::point(1.0)};
  s.primary_sampler = [](RngStream& r, std::span<double> x, std::span<double> y) {
    x[0] = x[1] = 1.0 / std::sqrt(r.uniform_open());
    y[0] = 1.0 / std::sqrt(r.uniform_open());
  };
  const auto rep = gtai_diagnostic(s, {2.0, 4.0}, RunPlan{.master_seed = 3, .n_samples = 400000});
  CHECK_FALSE(rep.passed);
  CHECK(rep.max_conditional == doctest::Approx(1.0));
}

TEST_CASE("WUOD bound check") {
  testgen::Gen g(310);
  SampleMatrix indep{3, {}}, como{3, {}};
  for (int i = 0; i < 200000; ++i) {
    const double z = 1.0 / std::sqrt(g.uniform(1e-12, 1.0));
    for (int c = 0; c < 3; ++c) {
      indep.values.push_back(1.0 / std::sqrt(g.uniform(1e-12, 1.0)));
      como.values.push_back(z);
    }
  }
  const auto ok = wuod_bound_check(indep, {1.0, 1.0, 1.0}, {1.5, 2.0});
  CHECK(ok.passed);
  CHECK(ok.cells.size() == 2 * 4);
  const auto bad = wuod_bound_check(como, {1.0, 1.5, 1.5}, {2.0});
  CHECK_FALSE(bad.passed);
  CHECK_THROWS_AS(wuod_bound_check(indep, {1.0}, {2.0}), ConfigError);
}

}
