#include "tailrisk/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tailrisk {

namespace {

double pareto_tail(double alpha, double xmin, double z) {
  return z <= xmin ? 1.0 : std::pow(z / xmin, -alpha);
}

void check_positive_finite(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string("tail law: ") + what + " must be positive and finite");
  }
}

double mixture_tail(const ParetoMixtureParams& m, double x) {
  if (x < 0.0) return 1.0;
  double total = 0.0;
  for (const auto& c : m.components) total += c.weight * pareto_tail(c.alpha, c.xmin, x);
  return total;
}

double mixture_upper_quantile(const ParetoMixtureParams& m, double q) {
  const double positive_mass = 1.0 - m.zero_mass;
  if (q >= positive_mass) return 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& c : m.components) {
    lo = std::min(lo, c.xmin);
    hi = std::max(hi, c.xmin * std::pow(q / positive_mass, -1.0 / c.alpha));
  }
  // tail(lo) = positive_mass > q and tail(hi) <= q; bisect geometrically.
  for (int it = 0; it < 400 && hi > lo * (1.0 + 1e-16); ++it) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    if (mixture_tail(m, mid) <= q) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

std::string TailClassSet::to_string() const {
  std::string s;
  if (contains(TailClass::H)) s += 'H';
  if (contains(TailClass::L)) s += 'L';
  if (contains(TailClass::D)) s += 'D';
  if (contains(TailClass::S)) s += 'S';
  if (contains(TailClass::R)) s += 'R';
  return s;
}

TailLaw TailLaw::pareto(double alpha, double xmin, double loc) {
  check_positive_finite(alpha, "alpha");
  check_positive_finite(xmin, "xmin");
  if (!std::isfinite(loc)) throw ConfigError("tail law: loc must be finite");
  return TailLaw(ParetoParams{alpha, xmin, loc});
}

TailLaw TailLaw::pareto_mixture(std::vector<MixtureComponent> components, double zero_mass) {
  if (components.empty()) throw ConfigError("pareto mixture: needs at least one component");
  if (!(zero_mass >= 0.0 && zero_mass < 1.0)) {
    throw ConfigError("pareto mixture: zero_mass must lie in [0, 1)");
  }
  double total = zero_mass;
  for (const auto& c : components) {
    check_positive_finite(c.weight, "mixture weight");
    check_positive_finite(c.alpha, "alpha");
    check_positive_finite(c.xmin, "xmin");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("pareto mixture: weights and zero_mass must sum to 1");
  }
  return TailLaw(ParetoMixtureParams{std::move(components), zero_mass});
}

TailLaw TailLaw::empirical(std::vector<double> data) {
  if (data.empty()) throw ConfigError("empirical law: needs at least one observation");
  for (double v : data) {
    if (!std::isfinite(v)) throw ConfigError("empirical law: observations must be finite");
  }
  std::sort(data.begin(), data.end());
  return TailLaw(EmpiricalParams{std::move(data)});
}

LawFamily TailLaw::family() const {
  switch (params_.index()) {
    case 0: return LawFamily::Pareto;
    case 1: return LawFamily::ParetoMixture;
    default: return LawFamily::Empirical;
  }
}

std::optional<double> TailLaw::rv_index() const {
  if (const auto* p = as_pareto()) return p->alpha;
  if (const auto* m = as_mixture()) {
    double a = std::numeric_limits<double>::infinity();
    for (const auto& c : m->components) a = std::min(a, c.alpha);
    return a;
  }
  return std::nullopt;
}

TailClassSet TailLaw::class_tags() const {
  if (family() == LawFamily::Empirical) return {};
  return {TailClass::H, TailClass::L, TailClass::D, TailClass::S, TailClass::R};
}

double TailLaw::tail(double x) const {
  if (const auto* p = as_pareto()) return pareto_tail(p->alpha, p->xmin, x - p->loc);
  if (const auto* m = as_mixture()) return mixture_tail(*m, x);
  const auto& s = as_empirical()->sorted;
  const auto above = s.end() - std::upper_bound(s.begin(), s.end(), x);
  return static_cast<double>(above) / static_cast<double>(s.size());
}

double TailLaw::upper_quantile(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile: tail level must lie in (0,1)");
  if (const auto* p = as_pareto()) return p->loc + p->xmin * std::pow(q, -1.0 / p->alpha);
  if (const auto* m = as_mixture()) return mixture_upper_quantile(*m, q);
  return quantile(1.0 - q);
}

double TailLaw::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0,1)");
  if (const auto* e = as_empirical()) {
    const auto n = static_cast<double>(e->sorted.size());
    auto k = static_cast<std::size_t>(std::ceil(n * p));
    k = std::clamp<std::size_t>(k, 1, e->sorted.size());
    return e->sorted[k - 1];
  }
  return upper_quantile(1.0 - p);
}

double TailLaw::b_transform(double s) const {
  if (!(s >= 1.0)) throw DomainError("b_transform: s must be >= 1");
  if (s == 1.0) return lower_endpoint();
  if (std::isinf(s)) return std::numeric_limits<double>::infinity();
  return upper_quantile(1.0 / s);
}

double TailLaw::lower_endpoint() const {
  if (const auto* p = as_pareto()) return p->loc + p->xmin;
  if (const auto* m = as_mixture()) {
    if (m->zero_mass > 0.0) return 0.0;
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& c : m->components) lo = std::min(lo, c.xmin);
    return lo;
  }
  return as_empirical()->sorted.front();
}

double TailLaw::from_uniform(double u) const {
  u = std::clamp(u, kUniformEpsilon, 1.0 - kUniformEpsilon);
  if (family() == LawFamily::Empirical) return quantile(u);
  return upper_quantile(1.0 - u);
}

TailClassReport classify(const TailLaw& law, const std::vector<double>& grid,
                         const std::vector<double>& t_grid) {
  if (grid.size() < 3) throw ConfigError("classify: grid needs at least 3 points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw ConfigError("classify: grid must be positive and strictly increasing");
    }
  }
  if (t_grid.empty()) throw ConfigError("classify: t_grid must not be empty");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 1.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1]))) {
      throw ConfigError("classify: t_grid must be strictly increasing within (1, inf)");
    }
  }

  TailClassReport report;
  const double x_top = grid.back();
  const double tail_top = law.tail(x_top);
  if (!(tail_top > 0.0)) throw EstimationError("classify: tail vanishes at the largest grid point");

  report.upper_matuszewska = -std::numeric_limits<double>::infinity();
  report.lower_matuszewska = std::numeric_limits<double>::infinity();
  for (double t : t_grid) {
    const double r = law.tail(t * x_top) / tail_top;
    const double exponent = r > 0.0 ? -std::log(r) / std::log(t) : std::numeric_limits<double>::infinity();
    report.upper_matuszewska = std::max(report.upper_matuszewska, exponent);
    report.lower_matuszewska = std::min(report.lower_matuszewska, exponent);
  }

  std::vector<double> deviation;
  for (double x : grid) {
    const double tx = law.tail(x);
    report.long_tail_ratio_at.push_back({x, law.tail(x - 1.0) / tx});
    for (double t : t_grid) report.dominated_ratio_at.push_back({t, x, law.tail(t * x) / tx});
    const double a = std::sqrt(x);
    deviation.push_back(std::max(std::abs(law.tail(x - a) / tx - 1.0),
                                 std::abs(law.tail(x + a) / tx - 1.0)));
  }
  report.insensitivity_ok = deviation.back() < 0.05 && deviation.back() <= deviation.front();
  return report;
}

}  // namespace tailrisk
