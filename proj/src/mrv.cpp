#include "tailrisk/mrv.hpp"

#include <cmath>
#include <numeric>

namespace tailrisk {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_weights(const std::vector<double>& w, std::size_t dim, const char* what) {
  if (w.size() != dim) throw ConfigError(std::string(what) + ": dimension mismatch");
  bool nonzero = false;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + ": entries must be >= 0");
    nonzero = nonzero || v > 0.0;
  }
  if (!nonzero) throw DomainError(std::string(what) + ": vector must not be zero");
}

}  // namespace

TailLaw projection_law(const MRVSpec& spec, const std::vector<double>& l) {
  check_weights(l, spec.dim(), "projection_law");
  std::vector<MixtureComponent> comps;
  double zero = 0.0;
  for (const auto& a : spec.atoms()) {
    const double proj = dot(l, a.direction);
    if (proj > 0.0) {
      comps.push_back({a.weight, spec.alpha(), spec.xmin() * proj});
    } else {
      zero += a.weight;
    }
  }
  if (comps.empty()) throw ConfigError("mrv: projection vanishes on every atom");
  // Renormalize rounding so the mixture validates.
  double total = zero;
  for (const auto& c : comps) total += c.weight;
  for (auto& c : comps) c.weight /= total;
  return TailLaw::pareto_mixture(std::move(comps), zero / total);
}

MRVSpec::MRVSpec(double alpha, double xmin, std::vector<SpectralAtom> atoms)
    : alpha_(alpha), xmin_(xmin), atoms_(std::move(atoms)) {
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw ConfigError("mrv: alpha must be positive");
  if (!(xmin_ > 0.0) || !std::isfinite(xmin_)) throw ConfigError("mrv: xmin must be positive");
  if (atoms_.empty()) throw ConfigError("mrv: needs at least one atom");
  const std::size_t d = atoms_.front().direction.size();
  if (d == 0) throw ConfigError("mrv: directions must be non-empty");
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (a.direction.size() != d) throw ConfigError("mrv: atoms must share one dimension");
    double s = 0.0;
    for (double v : a.direction) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("mrv: directions must be non-negative");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("mrv: directions must sum to 1");
    if (!(a.weight > 0.0)) throw ConfigError("mrv: atom weights must be positive");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mrv: atom weights must sum to 1");
}

TailLaw MRVSpec::marginal(std::size_t i) const {
  if (i >= dim()) throw DomainError("mrv: component index out of range");
  std::vector<double> e(dim(), 0.0);
  e[i] = 1.0;
  return projection_law(*this, e);
}

void mrv_sample(const MRVSpec& spec, RngStream& rng, std::span<double> out) {
  const double u = rng.uniform();
  const auto& atoms = spec.atoms();
  std::size_t k = 0;
  double cum = atoms[0].weight;
  while (u >= cum && k + 1 < atoms.size()) cum += atoms[++k].weight;
  const double r = spec.xmin() * std::pow(rng.uniform_open(), -1.0 / spec.alpha());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r * atoms[k].direction[i];
}

std::vector<double> mrv_sample(const MRVSpec& spec, RngStream& rng) {
  std::vector<double> out(spec.dim());
  mrv_sample(spec, rng, out);
  return out;
}

double limit_measure_halfspace(const MRVSpec& spec, const std::vector<double>& w) {
  check_weights(w, spec.dim(), "limit_measure_halfspace");
  double total = 0.0;
  for (const auto& a : spec.atoms()) total += a.weight * std::pow(dot(w, a.direction), spec.alpha());
  return total * std::pow(spec.xmin(), spec.alpha());
}

std::string to_string(ThetaMode m) {
  switch (m) {
    case ThetaMode::Identity: return "identity";
    case ThetaMode::IndependentVector: return "independent";
    case ThetaMode::CommonScalar: return "common";
  }
  return "unknown";
}

void ProductMRVSpec::validate() const {
  switch (mode) {
    case ThetaMode::Identity:
      if (!theta_laws.empty()) throw ConfigError("product mrv: identity mode takes no theta laws");
      break;
    case ThetaMode::CommonScalar:
      if (theta_laws.size() != 1) throw ConfigError("product mrv: common mode takes one theta law");
      break;
    case ThetaMode::IndependentVector:
      if (theta_laws.size() != base.dim()) {
        throw ConfigError("product mrv: independent mode takes one theta law per component");
      }
      break;
  }
  for (const auto& t : theta_laws) {
    if (t.is_point_mass() && t.upper_bound() == 0.0) throw ConfigError("product mrv: theta is degenerate at 0");
  }
}

void ProductMRVSpec::sample(RngStream& rng, std::span<double> out) const {
  mrv_sample(base, rng, out);
  if (mode == ThetaMode::CommonScalar) {
    const double t = theta_laws[0].sample(rng);
    for (double& v : out) v *= t;
  } else if (mode == ThetaMode::IndependentVector) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= theta_laws[i].sample(rng);
  }
}

GammaResult gamma_w(const MRVSpec& spec, const std::vector<double>& w) {
  check_weights(w, spec.dim(), "gamma_w");
  if (std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) > 1e-9) {
    throw DomainError("gamma_w: weights must sum to 1");
  }
  const std::size_t n = spec.dim();
  const double denom = limit_measure_halfspace(spec, std::vector<double>(n, 1.0));
  if (!(denom > 0.0)) throw ConfigError("gamma_w: degenerate spec, aggregate measure is zero");
  GammaResult out;
  out.gamma_w = limit_measure_halfspace(spec, w) / denom;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    const double g = limit_measure_halfspace(spec, e) / denom;
    out.gammas_ei.push_back(g);
    out.gammas_ei_ci.push_back(0.0);
    out.Gamma_alpha += std::pow(g, 1.0 / spec.alpha());
  }
  return out;
}

GammaResult gamma_w(const ProductMRVSpec& product, const std::vector<double>& w, const RunPlan& plan) {
  product.validate();
  if (product.mode != ThetaMode::IndependentVector) return gamma_w(product.base, w);
  check_weights(w, product.base.dim(), "gamma_w");
  if (std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) > 1e-9) {
    throw DomainError("gamma_w: weights must sum to 1");
  }
  const MRVSpec& spec = product.base;
  const std::size_t n = spec.dim();
  const double alpha = spec.alpha();

  // dims: 0 numerator (w), 1 denominator (1), 2+i axis e_i
  const CoupledEstimate est = run_mc_coupled(plan, n + 2, [&](RngStream& rng, std::span<double> v) {
    std::vector<double> theta(n);
    for (std::size_t i = 0; i < n; ++i) theta[i] = product.theta_laws[i].sample(rng);
    std::fill(v.begin(), v.end(), 0.0);
    for (const auto& a : spec.atoms()) {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double ts = theta[i] * a.direction[i];
        num += w[i] * ts;
        den += ts;
        v[2 + i] += a.weight * std::pow(ts, alpha);
      }
      v[0] += a.weight * std::pow(num, alpha);
      v[1] += a.weight * std::pow(den, alpha);
    }
  });
  if (!(est.mean(1) > 0.0)) throw ConfigError("gamma_w: degenerate spec, aggregate measure is zero");

  GammaResult out;
  out.exact = false;
  const RatioEstimate gw = ratio(est, 0, 1);
  out.gamma_w = gw.value;
  out.gamma_w_ci = gw.ci95_halfwidth;

  // Γ = Σ (m_i / m_d)^{1/α}; delta method over (m_1..m_n, m_d).
  std::vector<double> grad(n + 1, 0.0);
  const double md = est.mean(1);
  for (std::size_t i = 0; i < n; ++i) {
    const RatioEstimate g = ratio(est, 2 + i, 1);
    out.gammas_ei.push_back(g.value);
    out.gammas_ei_ci.push_back(g.ci95_halfwidth);
    const double term = std::pow(g.value, 1.0 / alpha);
    out.Gamma_alpha += term;
    if (g.value > 0.0) {
      grad[i] = term / (alpha * est.mean(2 + i));
      grad[n] -= term / (alpha * md);
    }
  }
  auto idx = [&](std::size_t k) { return k < n ? 2 + k : std::size_t{1}; };
  double var = 0.0;
  for (std::size_t a = 0; a <= n; ++a) {
    for (std::size_t b = 0; b <= n; ++b) var += grad[a] * grad[b] * est.covariance(idx(a), idx(b));
  }
  out.Gamma_alpha_ci = 1.96 * std::sqrt(std::max(var, 0.0) / static_cast<double>(est.n()));
  return out;
}

std::variant<MRVSpec, McOnlyMarker> multivariate_breiman(const ProductMRVSpec& product) {
  product.validate();
  switch (product.mode) {
    case ThetaMode::Identity: return product.base;
    case ThetaMode::CommonScalar: {
      const double m = product.theta_laws[0].moment(product.base.alpha());
      return MRVSpec(product.base.alpha(), product.base.xmin() * std::pow(m, 1.0 / product.base.alpha()),
                     product.base.atoms());
    }
    case ThetaMode::IndependentVector:
      break;
  }
  return McOnlyMarker{"independent-vector theta: halfspace measures need Monte Carlo (see gamma_w)"};
}

LinearTailReport linear_combination_tail_check(const MRVSpec& spec, const std::vector<double>& l,
                                               const std::vector<double>& levels, double t,
                                               const RunPlan& plan) {
  check_weights(l, spec.dim(), "linear_combination_tail_check");
  if (!(t > 1.0)) throw ConfigError("linear_combination_tail_check: t must exceed 1");
  LinearTailReport report;
  bool any = false;
  for (const auto& a : spec.atoms()) any = any || dot(l, a.direction) > 0.0;
  if (!any) {
    report.degenerate = true;
    return report;
  }
  const TailLaw law = projection_law(spec, l);
  std::vector<double> xs;
  for (double q : levels) xs.push_back(law.upper_quantile(q));
  const std::size_t k = levels.size();

  const CoupledEstimate est = run_mc_coupled(plan, 2 * k, [&](RngStream& rng, std::span<double> v) {
    std::vector<double> z(spec.dim());
    mrv_sample(spec, rng, z);
    const double s = dot(l, z);
    for (std::size_t i = 0; i < k; ++i) {
      v[2 * i] = s > xs[i] ? 1.0 : 0.0;
      v[2 * i + 1] = s > t * xs[i] ? 1.0 : 0.0;
    }
  });
  for (std::size_t i = 0; i < k; ++i) {
    report.rows.push_back({levels[i], xs[i], t, ratio(est, 2 * i + 1, 2 * i), std::pow(t, -spec.alpha())});
  }
  return report;
}

std::vector<MeasureAgreementRow> sampler_measure_check(const MRVSpec& spec, const std::vector<double>& w,
                                                       const std::vector<double>& xs, const RunPlan& plan) {
  const double target = limit_measure_halfspace(spec, w);
  const std::size_t k = xs.size();
  const CoupledEstimate est = run_mc_coupled(plan, k, [&](RngStream& rng, std::span<double> v) {
    std::vector<double> z(spec.dim());
    mrv_sample(spec, rng, z);
    const double s = dot(w, z);
    for (std::size_t i = 0; i < k; ++i) v[i] = s > std::pow(xs[i], 1.0 / spec.alpha()) ? xs[i] : 0.0;
  });
  std::vector<MeasureAgreementRow> rows;
  for (std::size_t i = 0; i < k; ++i) rows.push_back({xs[i], est.component(i), target});
  return rows;
}

}  // namespace tailrisk
