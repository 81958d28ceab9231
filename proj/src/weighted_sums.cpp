#include "tailrisk/weighted_sums.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>

namespace tailrisk {

WeightSpec WeightSpec::point(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ConfigError("weight: point mass must be non-negative and finite");
  }
  return WeightSpec(PointMassWeight{value});
}

WeightSpec WeightSpec::uniform(double lo, double hi) {
  if (!(lo >= 0.0 && hi > lo) || !std::isfinite(hi)) {
    throw ConfigError("weight: uniform needs 0 <= lo < hi < inf");
  }
  return WeightSpec(UniformWeight{lo, hi});
}

WeightSpec WeightSpec::scaled_beta(double a, double b, double scale) {
  for (double v : {a, b, scale}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("weight: beta parameters must be positive");
  }
  return WeightSpec(ScaledBetaWeight{a, b, scale});
}

double WeightSpec::upper_bound() const {
  if (const auto* p = std::get_if<PointMassWeight>(&law_)) return p->value;
  if (const auto* u = std::get_if<UniformWeight>(&law_)) return u->hi;
  return std::get<ScaledBetaWeight>(law_).scale;
}

double WeightSpec::moment(double power) const {
  if (const auto* p = std::get_if<PointMassWeight>(&law_)) return std::pow(p->value, power);
  if (const auto* u = std::get_if<UniformWeight>(&law_)) {
    return (std::pow(u->hi, power + 1.0) - std::pow(u->lo, power + 1.0)) /
           ((power + 1.0) * (u->hi - u->lo));
  }
  const auto& b = std::get<ScaledBetaWeight>(law_);
  return std::pow(b.scale, power) * std::exp(std::lgamma(b.a + power) + std::lgamma(b.a + b.b) -
                                             std::lgamma(b.a) - std::lgamma(b.a + b.b + power));
}

double WeightSpec::from_uniform(double u) const {
  if (const auto* p = std::get_if<PointMassWeight>(&law_)) return p->value;
  if (const auto* w = std::get_if<UniformWeight>(&law_)) return w->lo + (w->hi - w->lo) * u;
  const auto& b = std::get<ScaledBetaWeight>(law_);
  return b.scale * boost::math::ibeta_inv(b.a, b.b, u);
}

PrimarySampler fgm_primary_sampler(const MultivariateFgm& copula, std::vector<TailLaw> x_laws,
                                   std::vector<TailLaw> y_laws) {
  if (copula.dims() != x_laws.size() + y_laws.size()) {
    throw ConfigError("fgm_primary_sampler: copula dimension must equal n + m");
  }
  return [copula, xs = std::move(x_laws), ys = std::move(y_laws)](RngStream& rng, std::span<double> x,
                                                                   std::span<double> y) {
    std::vector<double> u(copula.dims());
    copula.sample(rng, u);
    for (std::size_t i = 0; i < xs.size(); ++i) x[i] = xs[i].from_uniform(u[i]);
    for (std::size_t j = 0; j < ys.size(); ++j) y[j] = ys[j].from_uniform(u[xs.size() + j]);
  };
}

void BivariateSumSpec::validate() const {
  if (n() == 0 || m() == 0) throw ConfigError("weighted sum: needs at least one X and one Y law");
  if (pair_copulas.size() != std::min(n(), m())) {
    throw ConfigError("weighted sum: expected min(n, m) pair copulas");
  }
  if (theta_weights.size() != n() || delta_weights.size() != m()) {
    throw ConfigError("weighted sum: expected one weight per primary");
  }
  for (const auto* ws : {&theta_weights, &delta_weights}) {
    for (const auto& w : *ws) {
      if (w.is_point_mass() && w.upper_bound() == 0.0) {
        throw ConfigError("weighted sum: a weight is degenerate at zero");
      }
    }
  }
}

void BivariateSumSpec::sample_primaries(RngStream& rng, std::span<double> x, std::span<double> y) const {
  if (primary_sampler) {
    primary_sampler(rng, x, y);
    return;
  }
  const std::size_t k = pair_copulas.size();
  for (std::size_t i = 0; i < k; ++i) {
    std::tie(x[i], y[i]) = sample_pair(pair_copulas[i], x_laws[i], y_laws[i], rng);
  }
  for (std::size_t i = k; i < n(); ++i) x[i] = x_laws[i].sample(rng);
  for (std::size_t j = k; j < m(); ++j) y[j] = y_laws[j].sample(rng);
}

void BivariateSumSpec::sample_weights(RngStream& rng, std::span<double> theta,
                                      std::span<double> delta) const {
  if (joint_coupling) {
    joint_coupling(rng, theta, delta);
    return;
  }
  for (std::size_t i = 0; i < n(); ++i) theta[i] = theta_weights[i].sample(rng);
  for (std::size_t j = 0; j < m(); ++j) delta[j] = delta_weights[j].sample(rng);
}

JointTailEstimate JointTailEstimate::from(const Estimate& e, double x, double y) {
  JointTailEstimate out;
  out.value = e.mean;
  out.ci_halfwidth = e.ci95_halfwidth();
  out.n_samples = e.n;
  out.hits = e.hit_count;
  out.x = x;
  out.y = y;
  out.ci_valid = e.hit_count >= 100;
  out.rule_of_three = e.zero_hits();
  return out;
}

JointTailEstimate JointTailEstimate::exact(double value, double x, double y) {
  JointTailEstimate out;
  out.value = value;
  out.x = x;
  out.y = y;
  return out;
}

std::pair<double, double> thresholds_for_level(const BivariateSumSpec& spec, double level) {
  spec.validate();
  return {spec.x_laws.front().upper_quantile(level), spec.y_laws.front().upper_quantile(level)};
}

namespace {

void check_thresholds(double x, double y) {
  if (!(x > 0.0 && y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
    throw DomainError("joint tail: thresholds must be positive and finite");
  }
}

// Scratch buffers for one joint draw.
struct Draw {
  std::vector<double> x, y, theta, delta;
  explicit Draw(const BivariateSumSpec& s) : x(s.n()), y(s.m()), theta(s.n()), delta(s.m()) {}

  void sample(const BivariateSumSpec& s, RngStream& rng) {
    s.sample_primaries(rng, x, y);
    s.sample_weights(rng, theta, delta);
  }
  double sum_x() const {
    double t = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) t += theta[i] * x[i];
    return t;
  }
  double sum_y() const {
    double t = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) t += delta[j] * y[j];
    return t;
  }
};

bool independent_point_weights(const BivariateSumSpec& s) {
  if (s.joint_coupling) return false;
  for (const auto& w : s.theta_weights) {
    if (!w.is_point_mass()) return false;
  }
  for (const auto& w : s.delta_weights) {
    if (!w.is_point_mass()) return false;
  }
  return true;
}

// P(θ X > x), θ >= 0, x > 0.
double scaled_tail(const TailLaw& law, double theta, double x) {
  return theta > 0.0 ? law.tail(x / theta) : 0.0;
}

// Σ_i Σ_j P(θ_i X_i > x, δ_j Y_j > y) for fixed weights.
double rhs_given_weights(const BivariateSumSpec& s, double x, double y, std::span<const double> theta,
                         std::span<const double> delta) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i) {
    const double fx = scaled_tail(s.x_laws[i], theta[i], x);
    if (fx == 0.0) continue;
    for (std::size_t j = 0; j < s.m(); ++j) {
      const double gy = scaled_tail(s.y_laws[j], delta[j], y);
      total += (i == j) ? s.pair_copulas[i].survival(fx, gy) : fx * gy;
    }
  }
  return total;
}

// Σ_i Σ_j 1{θ_i X_i > x} 1{δ_j Y_j > y} on a full draw.
double rhs_indicators(const Draw& d, double x, double y) {
  double cx = 0.0;
  double cy = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) cx += d.theta[i] * d.x[i] > x ? 1.0 : 0.0;
  for (std::size_t j = 0; j < d.y.size(); ++j) cy += d.delta[j] * d.y[j] > y ? 1.0 : 0.0;
  return cx * cy;
}

bool all_indexed(const BivariateSumSpec& s) {
  for (const auto& l : s.x_laws) {
    if (!l.rv_index()) return false;
  }
  for (const auto& l : s.y_laws) {
    if (!l.rv_index()) return false;
  }
  return true;
}

}  // namespace

JointTailEstimate mc_joint_tail(const BivariateSumSpec& spec, double x, double y, const RunPlan& plan) {
  spec.validate();
  check_thresholds(x, y);
  const Estimate e = run_chunked<Estimate>(plan, [&](RngStream& rng, std::uint64_t count) {
    Draw d(spec);
    Estimate local;
    for (std::uint64_t s = 0; s < count; ++s) {
      d.sample(spec, rng);
      local.add(d.sum_x() > x && d.sum_y() > y ? 1.0 : 0.0);
    }
    return local;
  });
  return JointTailEstimate::from(e, x, y);
}

JointTailEstimate single_jump_rhs(const BivariateSumSpec& spec, double x, double y, const RunPlan& plan) {
  spec.validate();
  check_thresholds(x, y);
  if (!spec.primary_sampler && independent_point_weights(spec)) {
    std::vector<double> theta(spec.n()), delta(spec.m());
    for (std::size_t i = 0; i < spec.n(); ++i) theta[i] = spec.theta_weights[i].upper_bound();
    for (std::size_t j = 0; j < spec.m(); ++j) delta[j] = spec.delta_weights[j].upper_bound();
    return JointTailEstimate::exact(rhs_given_weights(spec, x, y, theta, delta), x, y);
  }
  const Estimate e = run_chunked<Estimate>(plan, [&](RngStream& rng, std::uint64_t count) {
    Draw d(spec);
    Estimate local;
    for (std::uint64_t s = 0; s < count; ++s) {
      if (spec.primary_sampler) {
        d.sample(spec, rng);
        local.add(rhs_indicators(d, x, y));
      } else {
        spec.sample_weights(rng, d.theta, d.delta);
        local.add(rhs_given_weights(spec, x, y, d.theta, d.delta));
      }
    }
    return local;
  });
  return JointTailEstimate::from(e, x, y);
}

ClosedFormValue rv_closed_form(const BivariateSumSpec& spec, double x, double y, const RunPlan& moment_plan) {
  spec.validate();
  check_thresholds(x, y);
  if (!all_indexed(spec)) throw ConfigError("rv_closed_form: every law needs a regular-variation index");
  const std::size_t n = spec.n();
  const std::size_t m = spec.m();

  // coefficient of E[Θ_i^{α_i} Δ_j^{α'_j}]
  std::vector<double> coef(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double base = spec.x_laws[i].tail(x) * spec.y_laws[j].tail(y);
      const double c = i == j ? spec.pair_copulas[i].sai_constant().value_or(0.0) : 1.0;
      coef[i * m + j] = c * base;
    }
  }

  ClosedFormValue out;
  if (!spec.joint_coupling) {
    for (std::size_t i = 0; i < n; ++i) {
      const double mt = spec.theta_weights[i].moment(*spec.x_laws[i].rv_index());
      for (std::size_t j = 0; j < m; ++j) {
        out.value += coef[i * m + j] * mt * spec.delta_weights[j].moment(*spec.y_laws[j].rv_index());
      }
    }
    return out;
  }

  const CoupledEstimate est = run_mc_coupled(moment_plan, n * m, [&](RngStream& rng, std::span<double> v) {
    std::vector<double> theta(n), delta(m);
    spec.sample_weights(rng, theta, delta);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = std::pow(theta[i], *spec.x_laws[i].rv_index());
      for (std::size_t j = 0; j < m; ++j) v[i * m + j] = a * std::pow(delta[j], *spec.y_laws[j].rv_index());
    }
  });
  double var = 0.0;
  for (std::size_t a = 0; a < n * m; ++a) {
    out.value += coef[a] * est.mean(a);
    for (std::size_t b = 0; b < n * m; ++b) var += coef[a] * coef[b] * est.covariance(a, b);
  }
  out.ci_halfwidth = 1.96 * std::sqrt(std::max(var, 0.0) / static_cast<double>(est.n()));
  out.exact_moments = false;
  return out;
}

namespace {

struct SandwichParts {
  Estimate sums, maxima, positive;
  std::uint64_t violations = 0;
};

SandwichParts merge(const SandwichParts& a, const SandwichParts& b) {
  return {tailrisk::merge(a.sums, b.sums), tailrisk::merge(a.maxima, b.maxima),
          tailrisk::merge(a.positive, b.positive), a.violations + b.violations};
}

double running_max(std::span<const double> w, std::span<const double> v) {
  double partial = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    partial += w[i] * v[i];
    best = std::max(best, partial);
  }
  return best;
}

double positive_sum(std::span<const double> w, std::span<const double> v) {
  double t = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) t += w[i] * std::max(v[i], 0.0);
  return t;
}

}  // namespace

JointTailEstimate max_joint_tail(const BivariateSumSpec& spec, double x, double y, const RunPlan& plan) {
  spec.validate();
  check_thresholds(x, y);
  const Estimate e = run_chunked<Estimate>(plan, [&](RngStream& rng, std::uint64_t count) {
    Draw d(spec);
    Estimate local;
    for (std::uint64_t s = 0; s < count; ++s) {
      d.sample(spec, rng);
      local.add(running_max(d.theta, d.x) > x && running_max(d.delta, d.y) > y ? 1.0 : 0.0);
    }
    return local;
  });
  return JointTailEstimate::from(e, x, y);
}

SandwichReport max_sum_sandwich(const BivariateSumSpec& spec, double x, double y, const RunPlan& plan) {
  spec.validate();
  check_thresholds(x, y);
  const SandwichParts parts = run_chunked<SandwichParts>(plan, [&](RngStream& rng, std::uint64_t count) {
    Draw d(spec);
    SandwichParts local;
    for (std::uint64_t s = 0; s < count; ++s) {
      d.sample(spec, rng);
      const bool sum = d.sum_x() > x && d.sum_y() > y;
      const bool mx = running_max(d.theta, d.x) > x && running_max(d.delta, d.y) > y;
      const bool pos = positive_sum(d.theta, d.x) > x && positive_sum(d.delta, d.y) > y;
      local.sums.add(sum ? 1.0 : 0.0);
      local.maxima.add(mx ? 1.0 : 0.0);
      local.positive.add(pos ? 1.0 : 0.0);
      if ((sum && !mx) || (mx && !pos)) ++local.violations;
    }
    return local;
  });
  return {JointTailEstimate::from(parts.sums, x, y), JointTailEstimate::from(parts.maxima, x, y),
          JointTailEstimate::from(parts.positive, x, y), parts.violations};
}

DiscreteRuinResult discrete_ruin_psi(const BivariateSumSpec& spec, double x, double y,
                                     std::size_t n_periods, const RunPlan& plan) {
  spec.validate();
  if (n_periods != spec.n() || n_periods != spec.m()) {
    throw ConfigError("discrete_ruin_psi: n_periods must equal n and m");
  }
  DiscreteRuinResult out{max_joint_tail(spec, x, y, plan), std::nullopt};
  if (all_indexed(spec)) out.asymptotic = rv_closed_form(spec, x, y).value;
  return out;
}

double breiman_product_tail(const WeightSpec& theta, const TailLaw& law, double x) {
  const auto alpha = law.rv_index();
  if (!alpha) throw ConfigError("breiman_product_tail: law needs a regular-variation index");
  return theta.moment(*alpha) * law.tail(x);
}

std::vector<LadderRow> joint_tail_ladder(const BivariateSumSpec& spec,
                                         const std::vector<std::pair<double, double>>& thresholds,
                                         const RunPlan& plan) {
  spec.validate();
  if (thresholds.empty()) throw ConfigError("joint_tail_ladder: empty threshold list");
  for (const auto& [x, y] : thresholds) check_thresholds(x, y);
  const std::size_t levels = thresholds.size();

  const CoupledEstimate est = run_mc_coupled(plan, 2 * levels, [&](RngStream& rng, std::span<double> v) {
    Draw d(spec);
    d.sample(spec, rng);
    const double sx = d.sum_x();
    const double sy = d.sum_y();
    for (std::size_t l = 0; l < levels; ++l) {
      const auto [x, y] = thresholds[l];
      v[2 * l] = sx > x && sy > y ? 1.0 : 0.0;
      v[2 * l + 1] = spec.primary_sampler ? rhs_indicators(d, x, y)
                                          : rhs_given_weights(spec, x, y, d.theta, d.delta);
    }
  });

  const bool indexed = all_indexed(spec);
  std::vector<LadderRow> rows;
  for (std::size_t l = 0; l < levels; ++l) {
    LadderRow row;
    std::tie(row.x, row.y) = thresholds[l];
    row.mc = JointTailEstimate::from(est.component(2 * l), row.x, row.y);
    row.rhs = JointTailEstimate::from(est.component(2 * l + 1), row.x, row.y);
    row.ratio = ratio(est, 2 * l, 2 * l + 1);
    if (indexed) {
      row.closed_form = rv_closed_form(spec, row.x, row.y, plan.with_seed_tag(0xC105ED));
      row.ratio_closed_form = ratio_to_constant(est.component(2 * l), row.closed_form.value);
    } else {
      row.closed_form.value = std::numeric_limits<double>::quiet_NaN();
      row.ratio_closed_form.value = std::numeric_limits<double>::quiet_NaN();
      row.ratio_closed_form.ci95_halfwidth = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<std::string> weight_warnings(const BivariateSumSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<std::string> out;
  if (!spec.joint_coupling) return out;
  const std::size_t n = spec.n();
  const std::size_t m = spec.m();
  RunPlan plan;
  plan.master_seed = seed;
  plan.n_samples = 10'000;
  const CoupledEstimate zeros = run_mc_coupled(plan, n + m, [&](RngStream& rng, std::span<double> v) {
    std::vector<double> theta(n), delta(m);
    spec.sample_weights(rng, theta, delta);
    for (std::size_t i = 0; i < n; ++i) v[i] = theta[i] == 0.0 ? 1.0 : 0.0;
    for (std::size_t j = 0; j < m; ++j) v[n + j] = delta[j] == 0.0 ? 1.0 : 0.0;
  });
  for (std::size_t k = 0; k < n + m; ++k) {
    const double p = zeros.mean(k);
    if (p > 0.9) {
      const std::string name = k < n ? "Theta" + std::to_string(k + 1) : "Delta" + std::to_string(k - n + 1);
      out.push_back("weight " + name + " is zero with estimated probability " + std::to_string(p));
    }
  }
  return out;
}

}  // namespace tailrisk
