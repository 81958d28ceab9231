#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "tailrisk/risk_measures.hpp"

using namespace tailrisk;

namespace {

// ∫_0^1 u^{-1/α} dg(u) for a piecewise-linear table with jumps, in closed form.
double table_c_alpha(const std::vector<std::pair<double, double>>& knots, double alpha) {
  const double e = 1.0 - 1.0 / alpha;
  double s = 0.0;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const auto [u0, g0] = knots[k - 1];
    const auto [u1, g1] = knots[k];
    if (u1 == u0) {
      s += (g1 - g0) * std::pow(u0, -1.0 / alpha);
    } else {
      s += (g1 - g0) / (u1 - u0) * (std::pow(u1, e) - std::pow(u0, e)) / e;
    }
  }
  return s;
}

Distortion random_distortion(testgen::Gen& g, double alpha) {
  switch (g.integer(0, 3)) {
    case 0: return Distortion::identity();
    case 1: return Distortion::power(g.uniform(1.0 / alpha + 0.2, 3.0));
    case 2: return Distortion::proportional_hazard(g.uniform(1.0, 0.8 * alpha));
    default: {
      const double u1 = g.uniform(0.05, 0.4), u2 = g.uniform(0.5, 0.9);
      const double g1 = g.uniform(0.2, 0.5), g2 = g.uniform(0.6, 0.95);
      return Distortion::table({{0.0, 0.0}, {u1, g1}, {u2, g2}, {1.0, 1.0}});
    }
  }
}

}  // namespace

TEST_SUITE("risk_measures") {

TEST_CASE("distortion construction") {
  CHECK_THROWS_AS(Distortion::power(0.0), ConfigError);
  CHECK_THROWS_AS(Distortion::proportional_hazard(0.5), ConfigError);
  CHECK_THROWS_AS(Distortion::table({{0.0, 0.0}, {0.5, 0.4}}), ConfigError);
  CHECK_THROWS_AS(Distortion::table({{0.0, 0.0}, {0.5, 0.6}, {0.4, 0.8}, {1.0, 1.0}}), ConfigError);
  CHECK_THROWS_AS(Distortion::table({{0.0, 0.0}, {0.0, 0.3}, {1.0, 1.0}}), ConfigError);
  const auto t = Distortion::table({{0.0, 0.0}, {0.5, 0.4}, {0.5, 0.6}, {1.0, 1.0}});
  CHECK(t(0.25) == doctest::Approx(0.2));
  CHECK(t(0.5) == doctest::Approx(0.6));
  CHECK(t(0.75) == doctest::Approx(0.8));
  CHECK(Distortion::power(2.0)(0.5) == doctest::Approx(0.25));
  CHECK(Distortion::proportional_hazard(2.0)(0.25) == doctest::Approx(0.5));
}

TEST_CASE("identity TDRM is the conditional tail expectation") {
  const auto law = TailLaw::pareto(2.0, 1.0);
  for (double p : {0.9, 0.99, 0.999, 0.99999}) {
    CAPTURE(p);
    const double c = cte(law, p);
    CHECK(std::abs(tdrm_exact(law, Distortion::identity(), p) - c) < 1e-9 * c);
    CHECK(tdrm_exact(law, Distortion::identity(), p) / var(law, p) == doctest::Approx(2.0).epsilon(1e-12));
  }
  CHECK(c_alpha(Distortion::identity(), 2.0) == doctest::Approx(2.0));
}

TEST_CASE("closed-form C_alpha") {
  CHECK(c_alpha(Distortion::power(1.5), 2.0) == doctest::Approx(1.5));
  CHECK(c_alpha(Distortion::proportional_hazard(1.5), 3.0) == doctest::Approx((1 / 1.5) / (1 / 1.5 - 1.0 / 3.0)));
  CHECK(c_alpha_quadrature(Distortion::identity(), 2.0) == doctest::Approx(2.0).epsilon(1e-9));
  const std::vector<std::pair<double, double>> knots = {{0.0, 0.0}, {0.1, 0.3}, {0.1, 0.4}, {0.6, 0.8}, {1.0, 1.0}};
  CHECK(c_alpha(Distortion::table(knots), 2.5) == doctest::Approx(table_c_alpha(knots, 2.5)).epsilon(1e-9));
}

TEST_CASE("property: quadrature C_alpha agrees with closed forms") {
  testgen::Gen g(701);
  for (int c = 0; c < 60; ++c) {
    CAPTURE(c);
    const double alpha = g.uniform(1.2, 5.0);
    const Distortion d = random_distortion(g, alpha);
    CAPTURE(to_string(d.family()));
    const double oracle = d.family() == DistortionFamily::Table ? table_c_alpha(d.knots(), alpha) : c_alpha(d, alpha);
    CHECK(c_alpha_quadrature(d, alpha) == doctest::Approx(oracle).epsilon(1e-8));
  }
}

TEST_CASE("property: TDRM of a Pareto law is C_alpha times VaR, in both integral forms") {
  testgen::Gen g(702);
  for (int c = 0; c < 60; ++c) {
    CAPTURE(c);
    const double alpha = g.uniform(1.2, 5.0);
    const auto law = TailLaw::pareto(alpha, g.uniform(0.5, 3.0));
    const Distortion d = random_distortion(g, alpha);
    CAPTURE(to_string(d.family()));
    const double p = 1.0 - g.log_uniform(1e-6, 0.1);
    const double target = c_alpha(d, alpha) * var(law, p);
    CHECK(tdrm_exact(law, d, p) == doctest::Approx(target).epsilon(1e-6));
    CHECK(tdrm_definition(law, d, p) == doctest::Approx(target).epsilon(1e-6));
  }
}

TEST_CASE("integrability condition") {
  const auto r = condition_check(Distortion::power(0.4), 2.0);
  CHECK_FALSE(r.ok);
  CHECK(condition_check(Distortion::power(0.6), 2.0).ok);
  CHECK(condition_check(Distortion::identity(), 1.5).ok);
  const BackgroundRiskModel model{ProductMRVSpec{MRVSpec(2.0, 1.0, {{{0.5, 0.5}, 1.0}})}, {0.5, 0.5}};
  CHECK_THROWS_AS(tdrm_asymptotic(model, Distortion::power(0.4), 0.99, RunPlan{}), ConditionError);
}

TEST_CASE("empirical TDRM and CTE match order statistics") {
  const auto law = TailLaw::empirical({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  CHECK(cte(law, 0.8) == doctest::Approx(9.5));
  CHECK(tdrm_exact(law, Distortion::identity(), 0.8) == doctest::Approx(9.5));
  CHECK(tdrm_definition(law, Distortion::identity(), 0.8) == doctest::Approx(9.5));
}

TEST_CASE("empirical VaR bracket has about 95% coverage") {
  const auto law = TailLaw::pareto(2.0, 1.0);
  int covered = 0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    auto draws = run_sample(RunPlan{.master_seed = 1000u + r, .n_samples = 5000}, [&](RngStream& s) { return law.sample(s); });
    const auto q = empirical_var(TailLaw::empirical(std::move(draws)), 0.99);
    CHECK_FALSE(q.exact);
    CHECK(q.lo <= q.value);
    CHECK(q.value <= q.hi);
    covered += (q.lo <= 10.0 && 10.0 <= q.hi) ? 1 : 0;
  }
  const double rate = static_cast<double>(covered) / reps;
  CHECK(rate > 0.9);
  CHECK(rate < 0.995);
}

TEST_CASE("comonotone single-atom model: exact and asymptotic TDRM coincide") {
  const BackgroundRiskModel model{ProductMRVSpec{MRVSpec(2.0, 1.0, {{{0.5, 0.5}, 1.0}})}, {0.5, 0.5}};
  const auto g = Distortion::power(1.5);
  const double p = 1.0 - 1e-5;
  const double ex = model_tdrm_exact(model, g, p, RunPlan{});
  const auto asy = tdrm_asymptotic(model, g, p, RunPlan{});
  CHECK(ex / asy.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(model_aggregate_law(model, RunPlan{}).exact);
}

TEST_CASE("Breiman VaR scaling for a uniform weight") {
  const auto law = TailLaw::pareto(2.0, 1.0);
  const auto q = product_var(WeightSpec::uniform(0.0, 1.0), law, 0.999, RunPlan{.master_seed = 3, .n_samples = 2'000'000});
  CHECK(q.value / var(law, 0.999) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(0.03));
}

TEST_CASE("corollary with independent weights") {
  const BackgroundRiskModel model{
      ProductMRVSpec{MRVSpec(2.5, 1.0, {{{1.0, 0.0}, 0.5}, {{0.0, 1.0}, 0.5}}), ThetaMode::IndependentVector,
                     {WeightSpec::uniform(0.5, 1.0), WeightSpec::uniform(0.0, 1.0)}},
      {0.5, 0.5}};
  const auto r = corollary_independent(model, Distortion::identity(), 0.999, RunPlan{.master_seed = 2, .n_samples = 500000});
  REQUIRE(r.table.size() == 2);
  for (const auto& row : r.table) CHECK(row.ratio == doctest::Approx(row.moment_factor).epsilon(0.05));
  CHECK(r.value > 0.0);
  CHECK(r.c_alpha == doctest::Approx(2.5 / 1.5));
}

}
