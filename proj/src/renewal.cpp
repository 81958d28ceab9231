#include "tailrisk/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/special_functions/gamma.hpp>

namespace tailrisk {

Interarrival Interarrival::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("interarrival: rate must be positive");
  return Interarrival(ExponentialArrivals{rate});
}

Interarrival Interarrival::deterministic(double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw ConfigError("interarrival: deterministic spacing must be positive (no atom at 0)");
  }
  return Interarrival(DeterministicArrivals{spacing});
}

Interarrival Interarrival::gamma(double shape, double rate) {
  if (!(shape > 0.0 && rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw ConfigError("interarrival: gamma shape and rate must be positive");
  }
  return Interarrival(GammaArrivals{shape, rate});
}

Interarrival Interarrival::uniform(double lo, double hi) {
  if (!(lo >= 0.0 && hi > lo) || !std::isfinite(hi)) {
    throw ConfigError("interarrival: uniform needs 0 <= lo < hi < inf");
  }
  return Interarrival(UniformArrivals{lo, hi});
}

double Interarrival::cdf(double t) const {
  if (t <= 0.0) return 0.0;
  if (const auto* e = std::get_if<ExponentialArrivals>(&law_)) return -std::expm1(-e->rate * t);
  if (const auto* d = std::get_if<DeterministicArrivals>(&law_)) return t >= d->spacing ? 1.0 : 0.0;
  if (const auto* g = std::get_if<GammaArrivals>(&law_)) return boost::math::gamma_p(g->shape, g->rate * t);
  const auto& u = std::get<UniformArrivals>(law_);
  return std::clamp((t - u.lo) / (u.hi - u.lo), 0.0, 1.0);
}

double Interarrival::mean() const {
  if (const auto* e = std::get_if<ExponentialArrivals>(&law_)) return 1.0 / e->rate;
  if (const auto* d = std::get_if<DeterministicArrivals>(&law_)) return d->spacing;
  if (const auto* g = std::get_if<GammaArrivals>(&law_)) return g->shape / g->rate;
  const auto& u = std::get<UniformArrivals>(law_);
  return 0.5 * (u.lo + u.hi);
}

double Interarrival::sample(RngStream& rng) const {
  if (const auto* e = std::get_if<ExponentialArrivals>(&law_)) return -std::log(rng.uniform_open()) / e->rate;
  if (const auto* d = std::get_if<DeterministicArrivals>(&law_)) return d->spacing;
  if (const auto* g = std::get_if<GammaArrivals>(&law_)) {
    std::gamma_distribution<double> dist(g->shape, 1.0 / g->rate);
    return dist(rng);
  }
  const auto& u = std::get<UniformArrivals>(law_);
  return u.lo + (u.hi - u.lo) * rng.uniform();
}

void RenewalSpec::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("renewal: horizon must be positive");
  if (!(interest >= 0.0) || !std::isfinite(interest)) throw ConfigError("renewal: interest must be >= 0");
  if (!(premium_1 >= 0.0 && premium_2 >= 0.0)) throw ConfigError("renewal: premium rates must be >= 0");
  if (!(interarrival.cdf(horizon) > 0.0)) throw ConfigError("renewal: lambda(T) must be positive");
}

double RenewalSpec::discounted_premium(double rate, double t) const {
  if (interest == 0.0) return rate * t;
  return -rate * std::expm1(-interest * t) / interest;
}

double RenewalFunction::at(double t) const {
  if (t <= 0.0) return values.front();
  const auto k = static_cast<std::size_t>(std::floor(t / step + 1e-9));
  return values[std::min(k, values.size() - 1)];
}

RenewalFunction renewal_function(const RenewalSpec& spec, std::optional<double> step) {
  spec.validate();
  const double h = step.value_or(spec.horizon / 2000.0);
  if (!(h > 0.0 && h <= spec.horizon / 10.0)) {
    throw ConfigError("renewal_function: step must lie in (0, T/10]");
  }
  const auto k_max = static_cast<std::size_t>(std::llround(spec.horizon / h));
  RenewalFunction out;
  out.step = spec.horizon / static_cast<double>(k_max);
  out.grid.resize(k_max + 1);
  for (std::size_t k = 0; k <= k_max; ++k) out.grid[k] = out.step * static_cast<double>(k);
  out.values.assign(k_max + 1, 0.0);

  const auto& law = spec.interarrival.law();
  if (const auto* e = std::get_if<ExponentialArrivals>(&law)) {
    for (std::size_t k = 0; k <= k_max; ++k) out.values[k] = e->rate * out.grid[k];
    return out;
  }
  if (const auto* d = std::get_if<DeterministicArrivals>(&law)) {
    for (std::size_t k = 0; k <= k_max; ++k) out.values[k] = std::floor(out.grid[k] / d->spacing + 1e-9);
    return out;
  }

  // λ_k = F(t_k) + Σ_{j=1..k} λ_{k-j} [F(t_j) - F(t_{j-1})]
  std::vector<double> cdf(k_max + 1), dF(k_max + 1, 0.0);
  for (std::size_t k = 0; k <= k_max; ++k) cdf[k] = spec.interarrival.cdf(out.grid[k]);
  for (std::size_t k = 1; k <= k_max; ++k) dF[k] = cdf[k] - cdf[k - 1];
  for (std::size_t k = 1; k <= k_max; ++k) {
    double acc = cdf[k];
    for (std::size_t j = 1; j <= k; ++j) acc += out.values[k - j] * dF[j];
    out.values[k] = acc;
  }
  return out;
}

PathRecord sample_path(const RenewalSpec& spec, RngStream& rng) {
  PathRecord p;
  double t = spec.interarrival.sample(rng);
  while (t <= spec.horizon) {
    const auto [cx, cy] = sample_pair(spec.copula, spec.claim_x, spec.claim_y, rng);
    const double disc = spec.interest == 0.0 ? 1.0 : std::exp(-spec.interest * t);
    p.arrivals.push_back(t);
    p.claims_x.push_back(cx);
    p.claims_y.push_back(cy);
    p.discounted_x.push_back(cx * disc);
    p.discounted_y.push_back(cy * disc);
    p.aggregate_x += cx * disc;
    p.aggregate_y += cy * disc;
    t += spec.interarrival.sample(rng);
  }
  return p;
}

double delta_asymptotic(const RenewalSpec& spec, double x, double y, const RenewalFunction& lam) {
  spec.validate();
  const auto c = spec.copula.sai_constant();
  if (!c) throw ConfigError("delta_asymptotic: copula has no positive SAI constant");
  if (lam.grid.size() < 2 || lam.grid.back() < spec.horizon * (1.0 - 1e-12)) {
    throw ConfigError("delta_asymptotic: renewal function grid must cover [0, T]");
  }
  const std::size_t k_max = lam.grid.size() - 1;
  const double h = lam.step;
  const double r = spec.interest;

  std::vector<double> fx(2 * k_max + 1), gy(2 * k_max + 1);
  for (std::size_t k = 0; k <= 2 * k_max; ++k) {
    const double g = std::exp(r * h * static_cast<double>(k));
    fx[k] = spec.claim_x.tail(x * g);
    gy[k] = spec.claim_y.tail(y * g);
  }
  std::vector<double> dl(k_max + 1, 0.0);
  for (std::size_t k = 1; k <= k_max; ++k) dl[k] = lam.values[k] - lam.values[k - 1];

  // Cell (a, b) covers s in (t_{a-1}, t_a], t in (t_{b-1}, t_b]; kept when s_{a-1} + t_{b-1} <= T.
  double dbl = 0.0;
  for (std::size_t b = 1; b <= k_max; ++b) {
    if (dl[b] == 0.0) continue;
    double inner = 0.0;
    for (std::size_t a = 1; a + b <= k_max + 2 && a <= k_max; ++a) {
      if (dl[a] == 0.0) continue;
      inner += (fx[a + b] * gy[b] + fx[b] * gy[a + b]) * dl[a];
    }
    dbl += inner * dl[b];
  }
  double single = 0.0;
  for (std::size_t k = 1; k <= k_max; ++k) single += fx[k] * gy[k] * dl[k];
  return dbl + *c * single;
}

namespace {

struct RuinParts {
  Estimate psi_max, psi_and, aggregate;
  std::uint64_t violations = 0;
};

RuinParts merge(const RuinParts& a, const RuinParts& b) {
  return {tailrisk::merge(a.psi_max, b.psi_max), tailrisk::merge(a.psi_and, b.psi_and),
          tailrisk::merge(a.aggregate, b.aggregate), a.violations + b.violations};
}

void check_thresholds(double x, double y) {
  if (!(x >= 0.0 && y >= 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
    throw DomainError("ruin: initial surpluses must be non-negative and finite");
  }
}

}  // namespace

RuinEstimate mc_ruin(const RenewalSpec& spec, double x, double y, const RunPlan& plan,
                     std::optional<double> step) {
  spec.validate();
  check_thresholds(x, y);
  const RuinParts parts = run_chunked<RuinParts>(plan, [&](RngStream& rng, std::uint64_t count) {
    RuinParts local;
    for (std::uint64_t s = 0; s < count; ++s) {
      const PathRecord p = sample_path(spec, rng);
      bool both_at_once = false;
      bool ruined_1 = false;
      bool ruined_2 = false;
      double d1 = 0.0;
      double d2 = 0.0;
      for (std::size_t i = 0; i < p.arrivals.size(); ++i) {
        d1 += p.discounted_x[i];
        d2 += p.discounted_y[i];
        const bool neg_1 = x + spec.discounted_premium(spec.premium_1, p.arrivals[i]) - d1 < 0.0;
        const bool neg_2 = y + spec.discounted_premium(spec.premium_2, p.arrivals[i]) - d2 < 0.0;
        ruined_1 = ruined_1 || neg_1;
        ruined_2 = ruined_2 || neg_2;
        both_at_once = both_at_once || (neg_1 && neg_2);
      }
      const bool both = ruined_1 && ruined_2;
      const bool agg = p.aggregate_x > x && p.aggregate_y > y;
      local.psi_max.add(both_at_once ? 1.0 : 0.0);
      local.psi_and.add(both ? 1.0 : 0.0);
      local.aggregate.add(agg ? 1.0 : 0.0);
      if ((both_at_once && !both) || (both && !agg)) ++local.violations;
    }
    return local;
  });

  RuinEstimate out;
  out.psi_max = JointTailEstimate::from(parts.psi_max, x, y);
  out.psi_and = JointTailEstimate::from(parts.psi_and, x, y);
  out.aggregate = JointTailEstimate::from(parts.aggregate, x, y);
  out.order_violations = parts.violations;
  if (x > 0.0 && y > 0.0) {
    out.delta = delta_asymptotic(spec, x, y, renewal_function(spec, step));
    out.ratio_max = ratio_to_constant(parts.psi_max, out.delta);
    out.ratio_and = ratio_to_constant(parts.psi_and, out.delta);
  }
  return out;
}

JointTailEstimate joint_aggregate_tail(const RenewalSpec& spec, double x, double y, const RunPlan& plan) {
  spec.validate();
  check_thresholds(x, y);
  const Estimate e = run_mc(plan, [&](RngStream& rng) {
    const PathRecord p = sample_path(spec, rng);
    return p.aggregate_x > x && p.aggregate_y > y ? 1.0 : 0.0;
  });
  return JointTailEstimate::from(e, x, y);
}

Estimate mc_renewal_mean(const RenewalSpec& spec, double t, const RunPlan& plan) {
  spec.validate();
  if (!(t > 0.0 && t <= spec.horizon)) throw DomainError("mc_renewal_mean: t must lie in (0, T]");
  return run_mc(plan, [&](RngStream& rng) {
    double count = 0.0;
    for (double s = spec.interarrival.sample(rng); s <= t; s += spec.interarrival.sample(rng)) count += 1.0;
    return count;
  });
}

double expected_value_premium(const Interarrival& arrivals, const TailLaw& claim, double loading) {
  double mean = 0.0;
  if (const auto* p = claim.as_pareto()) {
    if (!(p->alpha > 1.0)) throw ConfigError("expected_value_premium: claim mean is infinite");
    mean = p->loc + p->xmin * p->alpha / (p->alpha - 1.0);
  } else if (const auto* m = claim.as_mixture()) {
    for (const auto& c : m->components) {
      if (!(c.alpha > 1.0)) throw ConfigError("expected_value_premium: claim mean is infinite");
      mean += c.weight * c.xmin * c.alpha / (c.alpha - 1.0);
    }
  } else {
    const auto& s = claim.as_empirical()->sorted;
    for (double v : s) mean += v / static_cast<double>(s.size());
  }
  return (1.0 + loading) * mean / arrivals.mean();
}

}  // namespace tailrisk
