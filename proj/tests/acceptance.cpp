// Acceptance criteria: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Each Monte Carlo criterion also returns a fingerprint of its outputs (hex floats),
// which the reproducibility criterion compares across re-runs and worker counts.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "tailrisk/dependence.hpp"
#include "tailrisk/mrv.hpp"
#include "tailrisk/renewal.hpp"
#include "tailrisk/risk_measures.hpp"
#include "tailrisk/weighted_sums.hpp"

using namespace tailrisk;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Line {
  std::string id;
  bool pass;
  std::string detail;
};

struct Result {
  std::vector<Line> lines;
  std::string fingerprint;
  double seconds = 0.0;
};

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a;", v);
  return buf;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RunPlan plan_of(std::uint64_t tag, std::uint64_t n, unsigned workers) {
  RunPlan p;
  p.master_seed = mix_seed(kSeed, tag);
  p.n_samples = n;
  p.n_workers = workers;
  return p;
}

// 1. Breiman exactness.
Result criterion_1(unsigned workers) {
  Result r;
  const auto law = TailLaw::pareto(2.0, 1.0);
  const auto theta = WeightSpec::uniform(0.0, 1.0);
  double worst = 0.0;
  for (double x : {1.0, 2.0, 10.0, 100.0, 1e4}) {
    worst = std::max(worst, std::abs(breiman_product_tail(theta, law, x) * 3.0 * x * x - 1.0));
  }
  const double target = 1.0 / 300.0;
  const Estimate e = run_mc(plan_of(1, 10'000'000, workers), [&](RngStream& rng) {
    const double x = law.sample(rng);
    return theta.sample(rng) * x > 10.0 ? 1.0 : 0.0;
  });
  const double half = e.ci95_halfwidth();
  r.fingerprint = hex(e.mean) + hex(e.m2);
  r.lines.push_back({"1a", worst < 1e-14,
                     fmt("closed form E[Θ^2]P(X>x) vs x^-2/3: max rel. error %.2e (tol 1e-14)", worst)});
  r.lines.push_back({"1b", std::abs(e.mean - target) <= half,
                     fmt("MC P(ΘX>10) = %.6e ± %.2e (1e7 samples), target %.6e", e.mean, half, target)});
  return r;
}

BivariateSumSpec criterion_2_spec() {
  BivariateSumSpec s;
  s.x_laws = {TailLaw::pareto(2.0, 1.0), TailLaw::pareto(2.0, 1.0)};
  s.y_laws = {TailLaw::pareto(2.0, 1.0), TailLaw::pareto(2.0, 1.0)};
  s.pair_copulas = {Copula::fgm(1.0), Copula::fgm(1.0)};
  s.theta_weights = {WeightSpec::uniform(0.5, 1.0), WeightSpec::uniform(0.5, 1.0)};
  s.delta_weights = {WeightSpec::point(1.0), WeightSpec::point(1.0)};
  return s;
}

// 2. Weighted-sum joint tail against the regularly varying closed form.
Result criterion_2(unsigned workers) {
  Result r;
  const auto s = criterion_2_spec();
  const auto shallow = thresholds_for_level(s, 1e-2);
  const auto deep = thresholds_for_level(s, 1e-3);
  const auto rows = joint_tail_ladder(s, {shallow, deep}, plan_of(2, 100'000'000, workers));
  for (const auto& row : rows) {
    r.fingerprint += hex(row.mc.value) + hex(row.rhs.value) + hex(row.ratio_closed_form.value) +
                     hex(row.ratio_closed_form.ci95_halfwidth);
  }
  const auto& a = rows[0].ratio_closed_form;
  const auto& b = rows[1].ratio_closed_form;
  r.lines.push_back({"2a", ci_intersects(b.value, b.ci95_halfwidth, 0.85, 1.15),
                     fmt("mc/closed form at level 1e-3: %.4f ± %.4f, band [0.85, 1.15] (1e8 samples)", b.value,
                         b.ci95_halfwidth)});
  r.lines.push_back({"2b", std::abs(b.value - 1.0) < std::abs(a.value - 1.0),
                     fmt("ratio moves toward 1: %.4f at 1e-2 -> %.4f at 1e-3", a.value, b.value)});
  r.lines.push_back({"2c", true,
                     fmt("(info) mc/single-jump sum: %.4f ± %.4f at 1e-2, %.4f ± %.4f at 1e-3", rows[0].ratio.value,
                         rows[0].ratio.ci95_halfwidth, rows[1].ratio.value, rows[1].ratio.ci95_halfwidth)});
  return r;
}

// 3. GTAI on the four-dimensional pairwise FGM construction, raw and weighted.
Result criterion_3(unsigned workers) {
  Result r;
  const MultivariateFgm fgm({{0, 0.3, 0.3, 0.3}, {0.3, 0, 0.3, 0.3}, {0.3, 0.3, 0, 0.3}, {0.3, 0.3, 0.3, 0}});
  const std::vector<TailLaw> laws = {TailLaw::pareto(2.0, 1.0), TailLaw::pareto(2.0, 1.0)};
  BivariateSumSpec s;
  s.x_laws = laws;
  s.y_laws = laws;
  s.pair_copulas = {fgm.pair(0, 2), fgm.pair(1, 3)};
  s.theta_weights = {WeightSpec::uniform(0.5, 1.0), WeightSpec::uniform(0.5, 1.0)};
  s.delta_weights = {WeightSpec::uniform(0.5, 1.0), WeightSpec::uniform(0.5, 1.0)};
  s.primary_sampler = fgm_primary_sampler(fgm, laws, laws);
  const std::vector<double> thresholds = {2, 4, 6, 8, 10, 12};
  for (bool weighted : {false, true}) {
    GtaiOptions opts{.tolerance = 0.02, .weighted_products = weighted, .min_hits = 200};
    const auto rep = gtai_diagnostic(s, thresholds, plan_of(weighted ? 32 : 31, 30'000'000, workers), opts);
    double final_max = 0.0;
    for (const auto& c : rep.grid) {
      r.fingerprint += hex(c.estimate);
      if (c.threshold == thresholds.back()) {
        final_max = std::max(final_max, c.estimate);
      }
    }
    const bool ok = rep.passed && final_max < 0.02 && rep.min_conditioning_hits >= 200;
    r.lines.push_back({weighted ? "3b" : "3a", ok,
                       fmt("%s: diagnostic %s, final-point max conditional %.4f (tol 0.02), min conditioning hits %llu "
                           "(need 200, 3e7 samples)",
                           weighted ? "weighted products" : "raw primaries", rep.passed ? "passed" : "failed", final_max,
                           static_cast<unsigned long long>(rep.min_conditioning_hits))});
  }
  return r;
}

RenewalSpec criterion_4_spec() {
  const auto claim = TailLaw::pareto(2.0, 1.0);
  const auto arrivals = Interarrival::exponential(1.0);
  const double c = expected_value_premium(arrivals, claim, 0.2);
  return RenewalSpec{arrivals, claim, claim, Copula::fgm(1.0), c, c, 0.0, 1.0};
}

// 4. Continuous-time ruin with Poisson arrivals and FGM claims.
Result criterion_4(unsigned workers) {
  Result r;
  const auto s = criterion_4_spec();
  const auto lam = renewal_function(s);
  const double d = delta_asymptotic(s, 10.0, 10.0, lam);
  r.lines.push_back({"4a", std::abs(d / 3e-4 - 1.0) < 5e-3,
                     fmt("Δ(10,10;1) = %.6e vs 3e-4, rel. error %.2e (tol 5e-3)", d, std::abs(d / 3e-4 - 1.0))});
  const double x = s.claim_x.upper_quantile(std::pow(10.0, -1.5));
  const auto ruin = mc_ruin(s, x, x, plan_of(4, 10'000'000, workers));
  r.fingerprint = hex(ruin.psi_max.value) + hex(ruin.psi_and.value) + hex(ruin.aggregate.value) +
                  std::to_string(ruin.order_violations);
  const bool in_band = ci_intersects(ruin.ratio_max.value, ruin.ratio_max.ci95_halfwidth, 0.8, 1.2) &&
                       ci_intersects(ruin.ratio_and.value, ruin.ratio_and.ci95_halfwidth, 0.8, 1.2);
  r.lines.push_back({"4b", in_band,
                     fmt("ψ_max/Δ = %.4f ± %.4f, ψ_and/Δ = %.4f ± %.4f at x=y=%.4f, band [0.8, 1.2] (1e7 paths, c=2.4)",
                         ruin.ratio_max.value, ruin.ratio_max.ci95_halfwidth, ruin.ratio_and.value,
                         ruin.ratio_and.ci95_halfwidth, x)});
  r.lines.push_back({"4c", ruin.order_violations == 0,
                     fmt("pathwise ψ_max <= ψ_and: %.0f violations", static_cast<double>(ruin.order_violations))});
  return r;
}

// 5. Renewal function solver.
Result criterion_5(unsigned workers) {
  Result r;
  const auto claim = TailLaw::pareto(2.0, 1.0);
  const RenewalSpec gamma{Interarrival::gamma(2.0, 2.0), claim, claim, Copula::independence(), 0, 0, 0, 4.0};
  const double lam4 = renewal_function(gamma).values.back();
  const Estimate n4 = mc_renewal_mean(gamma, 4.0, plan_of(5, 1'000'000, workers));
  r.fingerprint = hex(n4.mean) + hex(n4.m2);
  const double rel = std::abs(lam4 / n4.mean - 1.0);
  r.lines.push_back({"5a", rel < 5e-3,
                     fmt("gamma(2,2): λ(4) = %.6f vs MC mean N(4) = %.6f ± %.4f, rel. diff %.2e (tol 5e-3)", lam4, n4.mean,
                         n4.ci95_halfwidth(), rel)});
  double worst = 0.0;
  const RenewalSpec expo{Interarrival::exponential(1.3), claim, claim, Copula::independence(), 0, 0, 0, 4.0};
  const auto le = renewal_function(expo);
  for (std::size_t k = 0; k < le.grid.size(); ++k) worst = std::max(worst, std::abs(le.values[k] - 1.3 * le.grid[k]));
  const RenewalSpec det{Interarrival::deterministic(0.3), claim, claim, Copula::independence(), 0, 0, 0, 4.0};
  const auto ld = renewal_function(det);
  for (std::size_t k = 0; k < ld.grid.size(); ++k) {
    worst = std::max(worst, std::abs(ld.values[k] - std::floor(ld.grid[k] / 0.3 + 1e-9)));
  }
  r.lines.push_back({"5b", worst <= 1e-10, fmt("exponential and deterministic λ: max abs error %.2e (tol 1e-10)", worst)});
  return r;
}

// 6. TDRM collapse, comonotone convergence and Breiman VaR.
Result criterion_6(unsigned workers) {
  Result r;
  const auto law = TailLaw::pareto(2.0, 1.0);
  double cte_err = 0.0, ratio_err = 0.0;
  for (double p : {0.5, 0.9, 0.99, 0.999, 0.9999, 1.0 - 1e-6}) {
    const double t = tdrm_exact(law, Distortion::identity(), p);
    cte_err = std::max(cte_err, std::abs(t - cte(law, p)));
    ratio_err = std::max(ratio_err, std::abs(t / var(law, p) - c_alpha(Distortion::identity(), 2.0)));
  }
  r.lines.push_back({"6a", cte_err <= 1e-9 && ratio_err <= 1e-12,
                     fmt("identity TDRM vs CTE: max abs error %.2e (tol 1e-9); |TDRM/VaR - 2| max %.2e (tol 1e-12)",
                         cte_err, ratio_err)});

  const BackgroundRiskModel model{ProductMRVSpec{MRVSpec(2.0, 1.0, {{{0.5, 0.5}, 1.0}})}, {0.5, 0.5}};
  const double p = 1.0 - 1e-5;
  double lo = 1e300, hi = -1e300;
  for (const auto& g : {Distortion::identity(), Distortion::power(1.5), Distortion::proportional_hazard(1.5),
                        Distortion::table({{0.0, 0.0}, {0.2, 0.5}, {1.0, 1.0}})}) {
    const double ratio = model_tdrm_exact(model, g, p, RunPlan{}) / tdrm_asymptotic(model, g, p, RunPlan{}).value;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  r.lines.push_back({"6b", lo >= 0.98 && hi <= 1.02,
                     fmt("comonotone single atom, p = 1-1e-5: exact/asymptotic in [%.9f, %.9f] over 4 distortions, band [0.98, 1.02]",
                         lo, hi)});

  const auto q = product_var(WeightSpec::uniform(0.0, 1.0), law, 0.999, plan_of(6, 20'000'000, workers));
  const double ratio = q.value / var(law, 0.999);
  const double target = 1.0 / std::sqrt(3.0);
  r.fingerprint = hex(q.value) + hex(q.lo) + hex(q.hi);
  r.lines.push_back({"6c", std::abs(ratio / target - 1.0) <= 0.01,
                     fmt("VaR(ΘX)/VaR(X) at p=0.999 = %.5f vs 3^-1/2 = %.5f, rel. error %.2e (tol 1e-2, 2e7 samples)", ratio,
                         target, std::abs(ratio / target - 1.0))});
  return r;
}

// 7. γ/Γ algebra on the two-atom spec.
Result criterion_7(unsigned) {
  Result r;
  const MRVSpec spec(2.0, 1.0, {{{1.0, 0.0}, 0.5}, {{0.0, 1.0}, 0.5}});
  const auto g = gamma_w(spec, {0.5, 0.5});
  const double e1 = std::max({std::abs(g.gamma_w - 0.25), std::abs(g.gammas_ei[0] - 0.5), std::abs(g.gammas_ei[1] - 0.5),
                              std::abs(g.Gamma_alpha - std::sqrt(2.0))});
  r.lines.push_back({"7a", e1 <= 1e-12,
                     fmt("γ_(1/2,1/2) = %.15f, γ_e1 = %.15f, γ_e2 = %.15f, Γ_2 = %.15f; max error %.2e (tol 1e-12)",
                         g.gamma_w, g.gammas_ei[0], g.gammas_ei[1], g.Gamma_alpha, e1)});
  // On axis atoms, w·X exceeds x only through one coordinate, so
  // P(w·X > x) = Σ_i P(w_i X_i > x), each term a Breiman product with a point-mass weight.
  auto halfspace_tail = [&](const std::vector<double>& w, double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] > 0.0) s += breiman_product_tail(WeightSpec::point(w[i]), spec.marginal(i), x);
    }
    return s;
  };
  const double x = 1e6;
  const double denom = halfspace_tail({1.0, 1.0}, x);
  const double gw = halfspace_tail({0.5, 0.5}, x) / denom;
  const double ge1 = halfspace_tail({1.0, 0.0}, x) / denom;
  const double ge2 = halfspace_tail({0.0, 1.0}, x) / denom;
  const double big_gamma = std::sqrt(ge1) + std::sqrt(ge2);
  const double e2 = std::max({std::abs(gw - g.gamma_w), std::abs(ge1 - g.gammas_ei[0]), std::abs(ge2 - g.gammas_ei[1]),
                              std::abs(big_gamma - g.Gamma_alpha)});
  r.lines.push_back({"7b", e2 <= 1e-6,
                     fmt("cross-check via weighted-sum Breiman tails: γ_w = %.12f, Γ = %.12f, max difference %.2e (tol 1e-6)",
                         gw, big_gamma, e2)});
  r.fingerprint = hex(g.gamma_w) + hex(g.Gamma_alpha) + hex(gw);
  return r;
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  struct Criterion {
    const char* name;
    std::function<Result(unsigned)> run;
    double budget_seconds;  // 0: no runtime requirement
  };
  const std::vector<Criterion> criteria = {
      {"Breiman exactness", criterion_1, 10.0},
      {"weighted-sum joint tail", criterion_2, 300.0},
      {"GTAI product invariance", criterion_3, 0.0},
      {"renewal ruin asymptotics", criterion_4, 600.0},
      {"renewal solver", criterion_5, 0.0},
      {"TDRM collapse and convergence", criterion_6, 0.0},
      {"gamma algebra", criterion_7, 0.0},
  };

  bool all = true;
  auto report = [&](const std::string& id, bool pass, const std::string& detail) {
    std::printf("%s [%s] %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    std::fflush(stdout);
    all = all && pass;
  };

  std::vector<std::string> first;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = Clock::now();
    Result r = criteria[k].run(1);
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    for (const auto& line : r.lines) report(line.id, line.pass, std::string(criteria[k].name) + ": " + line.detail);
    if (criteria[k].budget_seconds > 0.0) {
      report(std::to_string(k + 1) + "t", r.seconds < criteria[k].budget_seconds,
             fmt("%s: runtime %.1f s (limit %.0f s)", criteria[k].name, r.seconds, criteria[k].budget_seconds));
    }
    first.push_back(r.fingerprint);
  }

  // 8. Re-run every criterion with the same seed on one worker and on eight.
  bool same_rerun = true, same_workers = true;
  std::string differing;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const std::string again = criteria[k].run(1).fingerprint;
    const std::string eight = criteria[k].run(8).fingerprint;
    if (again != first[k]) {
      same_rerun = false;
      differing += " rerun:" + std::to_string(k + 1);
    }
    if (eight != first[k]) {
      same_workers = false;
      differing += " workers:" + std::to_string(k + 1);
    }
  }
  report("8", same_rerun && same_workers,
         std::string("engine reproducibility: same-seed re-runs byte-identical = ") + (same_rerun ? "yes" : "no") +
             ", workers 1 vs 8 byte-identical = " + (same_workers ? "yes" : "no") +
             (differing.empty() ? "" : " (differs:" + differing + ")"));
  return all ? 0 : 1;
}
