#include "tailrisk/risk_measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace tailrisk {

std::string to_string(DistortionFamily f) {
  switch (f) {
    case DistortionFamily::Identity: return "identity";
    case DistortionFamily::Power: return "power";
    case DistortionFamily::ProportionalHazard: return "ph";
    case DistortionFamily::Table: return "table";
  }
  return "unknown";
}

Distortion Distortion::identity() { return Distortion(DistortionFamily::Identity, 1.0); }

Distortion Distortion::power(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("distortion: power beta must be positive");
  return Distortion(DistortionFamily::Power, beta);
}

Distortion Distortion::proportional_hazard(double kappa) {
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw ConfigError("distortion: ph kappa must be >= 1");
  return Distortion(DistortionFamily::ProportionalHazard, kappa);
}

Distortion Distortion::table(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) throw ConfigError("distortion table: needs at least two knots");
  if (knots.front() != std::pair<double, double>{0.0, 0.0}) {
    throw ConfigError("distortion table: first knot must be (0, 0)");
  }
  if (knots.back().first != 1.0 || knots.back().second != 1.0) {
    throw ConfigError("distortion table: last knot must be (1, 1)");
  }
  if (knots[1].first == 0.0) throw ConfigError("distortion table: g must not jump at 0");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const auto [u0, g0] = knots[i - 1];
    const auto [u1, g1] = knots[i];
    if (!(u1 >= u0) || !(g1 >= g0) || !(g1 <= 1.0)) {
      throw ConfigError("distortion table: knots must be non-decreasing within [0, 1]");
    }
    if (i >= 2 && u1 == u0 && knots[i - 2].first == u0) {
      throw ConfigError("distortion table: at most one jump per abscissa");
    }
  }
  return Distortion(DistortionFamily::Table, 0.0, std::move(knots));
}

double Distortion::operator()(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  switch (family_) {
    case DistortionFamily::Identity: return u;
    case DistortionFamily::Power: return std::pow(u, param_);
    case DistortionFamily::ProportionalHazard: return std::pow(u, 1.0 / param_);
    case DistortionFamily::Table: break;
  }
  // last knot with abscissa <= u; repeated abscissae resolve to the right value
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), u,
                                   [](double v, const auto& k) { return v < k.first; });
  const auto& left = *(it - 1);
  if (it == knots_.end() || left.first == u) return left.second;
  const auto& right = *it;
  return left.second + (right.second - left.second) * (u - left.first) / (right.first - left.first);
}

TailEnvelope Distortion::tail_envelope() const {
  switch (family_) {
    case DistortionFamily::Identity: return {1.0, 1.0, 1.0};
    case DistortionFamily::Power: return {1.0, param_, 1.0};
    case DistortionFamily::ProportionalHazard: return {1.0, 1.0 / param_, 1.0};
    case DistortionFamily::Table: break;
  }
  const auto& k = knots_[1];
  return {k.second / k.first, 1.0, k.first};
}

double var(const TailLaw& law, double p) { return law.quantile(p); }

double cte(const TailLaw& law, double p) {
  const double v = law.quantile(p);
  if (const auto* par = law.as_pareto()) {
    if (!(par->alpha > 1.0)) throw ConditionError("cte: tail mean is infinite for alpha <= 1");
    return par->loc + par->alpha / (par->alpha - 1.0) * (v - par->loc);
  }
  if (const auto* m = law.as_mixture()) {
    double integral = 0.0;  // ∫_v^∞ F̄(x) dx
    for (const auto& c : m->components) {
      if (!(c.alpha > 1.0)) throw ConditionError("cte: tail mean is infinite for alpha <= 1");
      const double start = std::max(v, c.xmin);
      integral += c.weight * (std::max(c.xmin - v, 0.0) +
                              std::pow(c.xmin, c.alpha) * std::pow(start, 1.0 - c.alpha) / (c.alpha - 1.0));
    }
    return v + integral / law.tail(v);
  }
  const auto& s = law.as_empirical()->sorted;
  const auto first = std::upper_bound(s.begin(), s.end(), v);
  if (first == s.end()) return v;
  return std::accumulate(first, s.end(), 0.0) / static_cast<double>(s.end() - first);
}

std::vector<double> default_zeta_grid() { return {0.01, 0.05, 0.1, 0.25, 0.5, 1.0}; }

ConditionResult condition_check(const Distortion& g, double alpha, const std::vector<double>& zeta_grid) {
  if (!(alpha > 0.0)) throw ConfigError("condition_check: alpha must be positive");
  std::vector<double> grid = zeta_grid;
  std::sort(grid.begin(), grid.end());
  const double beta = g.tail_envelope().exponent;
  ConditionResult out;
  for (double zeta : grid) {
    if (zeta > 0.0 && alpha / (1.0 + zeta) * beta > 1.0) {
      out.ok = true;
      out.zeta = zeta;
      break;
    }
  }
  return out;
}

double c_alpha_quadrature(const Distortion& g, double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("c_alpha: alpha must be positive");
  const TailEnvelope env = g.tail_envelope();
  const double ab = alpha * env.exponent;
  if (!(ab > 1.0)) throw ConditionError("c_alpha: integral diverges (alpha * beta <= 1)");

  // ∫_Y^∞ K y^{-αβ} dy < target, with Y beyond the envelope's reach.
  constexpr double target = 1e-11;
  const double y_reach = std::pow(env.reach, -1.0 / alpha);
  const double y_tail = std::pow(target * (ab - 1.0) / env.scale, 1.0 / (1.0 - ab));
  const double s_max = std::log(std::max({1.0, y_reach, y_tail}));

  // y = e^s: ∫_0^{s_max} g(e^{-αs}) e^s ds, split at kinks and on a doubling grid.
  std::vector<double> cuts{0.0, s_max};
  for (double s = 1.0; s < s_max; s *= 2.0) cuts.push_back(s);
  for (const auto& [u, gv] : g.knots()) {
    if (u > 0.0 && u < 1.0) {
      const double s = -std::log(u) / alpha;
      if (s < s_max) cuts.push_back(s);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto f = [&](double s) { return g(std::exp(-alpha * s)) * std::exp(s); };
  double total = 1.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 20, 1e-14);
  }
  return total;
}

double c_alpha(const Distortion& g, double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("c_alpha: alpha must be positive");
  if (g.family() == DistortionFamily::Table) return c_alpha_quadrature(g, alpha);
  const double ab = alpha * g.tail_envelope().exponent;
  if (!(ab > 1.0)) throw ConditionError("c_alpha: integral diverges (alpha * beta <= 1)");
  return ab / (ab - 1.0);
}

namespace {

void check_level(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("risk measure: p must lie in (0, 1)");
}

void check_condition(const TailLaw& law, const Distortion& g) {
  if (const auto a = law.rv_index()) {
    if (!condition_check(g, *a).ok) {
      throw ConditionError("tdrm: integrability condition fails for this distortion and tail index");
    }
  }
}

// ∫_0^1 U(y q) g(dy) over order statistics, U the empirical upper quantile.
double empirical_tdrm(const std::vector<double>& s, const Distortion& g, double q) {
  const double n = static_cast<double>(s.size());
  double total = 0.0;
  for (std::size_t k = s.size(); k >= 1; --k) {
    // U(yq) = s_k for n(1 - yq) in (k - 1, k]
    const double y_lo = std::max(0.0, (1.0 - static_cast<double>(k) / n) / q);
    const double y_hi = std::min(1.0, (1.0 - static_cast<double>(k - 1) / n) / q);
    if (y_lo >= 1.0) break;
    total += s[k - 1] * (g(y_hi) - g(y_lo));
  }
  return total;
}

}  // namespace

double tdrm_exact(const TailLaw& law, const Distortion& g, double p) {
  check_level(p);
  check_condition(law, g);
  const double q = 1.0 - p;
  if (const auto* e = law.as_empirical()) return empirical_tdrm(e->sorted, g, q);

  auto upper = [&](double y) {
    return law.upper_quantile(std::clamp(y * q, std::numeric_limits<double>::min(), q));
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  switch (g.family()) {
    case DistortionFamily::Identity:
      return ts.integrate([&](double y) { return upper(y); }, 0.0, 1.0, 1e-14);
    case DistortionFamily::Power:
    case DistortionFamily::ProportionalHazard: {
      const double beta = g.tail_envelope().exponent;
      return ts.integrate([&](double y) { return upper(y) * beta * std::pow(y, beta - 1.0); }, 0.0, 1.0, 1e-14);
    }
    case DistortionFamily::Table: break;
  }
  const auto& k = g.knots();
  double total = 0.0;
  for (std::size_t i = 1; i < k.size(); ++i) {
    const auto [u0, g0] = k[i - 1];
    const auto [u1, g1] = k[i];
    if (u1 == u0) {
      total += (g1 - g0) * upper(u0);  // right-continuous jump
    } else if (g1 > g0) {
      const double slope = (g1 - g0) / (u1 - u0);
      total += slope * ts.integrate([&](double y) { return upper(y); }, u0, u1, 1e-14);
    }
  }
  return total;
}

double tdrm_definition(const TailLaw& law, const Distortion& g, double p) {
  check_level(p);
  check_condition(law, g);
  const double v = law.quantile(p);
  const double tv = law.tail(v);
  if (!(tv > 0.0)) return v;
  if (const auto* e = law.as_empirical()) {
    const auto& s = e->sorted;
    const double n = static_cast<double>(s.size());
    double total = v;
    auto it = std::upper_bound(s.begin(), s.end(), v);
    double left = v;
    for (; it != s.end(); ++it) {
      const double above = static_cast<double>(s.end() - it) / n;
      total += (*it - left) * g(above / tv);
      left = *it;
    }
    return total;
  }
  // Split at the kinks of the integrand: table knots and mixture component thresholds.
  std::vector<double> cuts;
  if (g.family() == DistortionFamily::Table) {
    for (const auto& [u, gu] : g.knots()) {
      if (u > 0.0 && u < 1.0) cuts.push_back(law.upper_quantile(tv * u) - v);
    }
  }
  if (const auto* m = law.as_mixture()) {
    for (const auto& c : m->components) cuts.push_back(c.xmin - v);
  }
  std::erase_if(cuts, [](double c) { return !(c > 0.0); });
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto f = [&](double t) { return g(law.tail(v + t) / tv); };
  double integral = 0.0;
  double left = 0.0;
  for (double c : cuts) {
    integral += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, left, c, 15, 1e-14);
    left = c;
  }
  boost::math::quadrature::exp_sinh<double> es;
  integral += es.integrate([&](double t) { return f(left + t); }, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
  return v + integral;
}

QuantileEstimate empirical_var(const TailLaw& empirical, double p) {
  check_level(p);
  const auto* e = empirical.as_empirical();
  if (!e) {
    const double v = empirical.quantile(p);
    return {v, v, v, true};
  }
  const auto& s = e->sorted;
  const double n = static_cast<double>(s.size());
  const double half = 1.96 * std::sqrt(n * p * (1.0 - p));
  const double k = std::clamp(std::ceil(n * p), 1.0, n);
  const auto idx = [&](double j) { return static_cast<std::size_t>(std::clamp(j, 1.0, n)) - 1; };
  return {s[idx(k)], s[idx(std::floor(k - half))], s[idx(std::ceil(k + half))], false};
}

void BackgroundRiskModel::validate() const {
  product.validate();
  if (weights.size() != product.base.dim()) throw ConfigError("background model: one weight per component");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("background model: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("background model: weights must sum to 1");
}

ModelLaw model_aggregate_law(const BackgroundRiskModel& model, const RunPlan& plan) {
  model.validate();
  if (model.product.mode == ThetaMode::Identity) return {projection_law(model.product.base, model.weights), true};
  const std::size_t d = model.product.base.dim();
  auto draws = run_sample(plan, [&](RngStream& rng) {
    std::vector<double> z(d);
    model.product.sample(rng, z);
    return std::inner_product(z.begin(), z.end(), model.weights.begin(), 0.0);
  });
  return {TailLaw::empirical(std::move(draws)), false};
}

ModelLaw model_component_law(const BackgroundRiskModel& model, std::size_t i, const RunPlan& plan) {
  model.validate();
  if (i >= model.product.base.dim()) throw DomainError("background model: component out of range");
  if (model.product.mode == ThetaMode::Identity) return {model.product.base.marginal(i), true};
  const std::size_t d = model.product.base.dim();
  auto draws = run_sample(plan, [&](RngStream& rng) {
    std::vector<double> z(d);
    model.product.sample(rng, z);
    return z[i];
  });
  return {TailLaw::empirical(std::move(draws)), false};
}

QuantileEstimate model_var(const BackgroundRiskModel& model, double p, const RunPlan& plan) {
  check_level(p);
  return empirical_var(model_aggregate_law(model, plan).law, p);
}

double model_tdrm_exact(const BackgroundRiskModel& model, const Distortion& g, double p, const RunPlan& plan) {
  check_level(p);
  return tdrm_exact(model_aggregate_law(model, plan).law, g, p);
}

AsymptoticTdrm tdrm_asymptotic(const BackgroundRiskModel& model, const Distortion& g, double p,
                               const RunPlan& plan) {
  model.validate();
  check_level(p);
  const double alpha = model.product.base.alpha();
  if (!condition_check(g, alpha).ok) throw ConditionError("tdrm_asymptotic: integrability condition fails");
  AsymptoticTdrm out;
  out.c_alpha = c_alpha(g, alpha);
  out.gammas = gamma_w(model.product, model.weights, plan.with_seed_tag(1));
  double sum = 0.0;
  for (std::size_t i = 0; i < model.product.base.dim(); ++i) {
    const ModelLaw law = model_component_law(model, i, plan.with_seed_tag(100 + i));
    out.component_vars.push_back(empirical_var(law.law, p));
    sum += out.component_vars.back().value;
  }
  out.value = out.c_alpha * std::pow(out.gammas.gamma_w, 1.0 / alpha) / out.gammas.Gamma_alpha * sum;
  return out;
}

QuantileEstimate product_var(const WeightSpec& theta, const TailLaw& law, double p, const RunPlan& plan) {
  check_level(p);
  auto draws = run_sample(plan, [&](RngStream& rng) {
    const double x = law.sample(rng);
    return theta.sample(rng) * x;
  });
  return empirical_var(TailLaw::empirical(std::move(draws)), p);
}

CorollaryResult corollary_independent(const BackgroundRiskModel& model, const Distortion& g, double p,
                                      const RunPlan& plan, bool with_table) {
  model.validate();
  check_level(p);
  // Every supported theta mode draws Θ independently of X, which is all the corollary needs.
  const auto& base = model.product.base;
  const double alpha = base.alpha();
  if (!condition_check(g, alpha).ok) throw ConditionError("corollary_independent: integrability condition fails");
  CorollaryResult out;
  out.c_alpha = c_alpha(g, alpha);
  out.gammas = gamma_w(model.product, model.weights, plan.with_seed_tag(1));
  double sum = 0.0;
  for (std::size_t i = 0; i < base.dim(); ++i) {
    const TailLaw xi = base.marginal(i);
    const double var_x = xi.quantile(p);
    double factor = 1.0;
    const WeightSpec* theta = nullptr;
    if (model.product.mode == ThetaMode::CommonScalar) theta = &model.product.theta_laws[0];
    if (model.product.mode == ThetaMode::IndependentVector) theta = &model.product.theta_laws[i];
    if (theta) factor = std::pow(theta->moment(alpha), 1.0 / alpha);
    sum += factor * var_x;
    if (with_table) {
      BreimanVarRow row;
      row.component = i;
      row.moment_factor = factor;
      row.var_x = var_x;
      row.var_product = theta ? product_var(*theta, xi, p, plan.with_seed_tag(200 + i))
                              : QuantileEstimate{var_x, var_x, var_x, true};
      row.ratio = row.var_product.value / var_x;
      out.table.push_back(row);
    }
  }
  out.value = out.c_alpha * std::pow(out.gammas.gamma_w, 1.0 / alpha) / out.gammas.Gamma_alpha * sum;
  return out;
}

}  // namespace tailrisk
