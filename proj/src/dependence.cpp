#include "tailrisk/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tailrisk/weighted_sums.hpp"

namespace tailrisk {

namespace {

double bisect_conditional(const Copula& cop, double u, double w) {
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (cop.conditional(u, mid) < w) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double richardson_limit(const std::vector<double>& h, const std::vector<double>& values) {
  std::vector<double> extrapolated;
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    extrapolated.push_back((h[k] * values[k + 1] - h[k + 1] * values[k]) / (h[k] - h[k + 1]));
  }
  for (std::size_t k = 2; k < values.size(); ++k) {
    const double prev = std::abs(values[k - 1] - values[k - 2]);
    const double curr = std::abs(values[k] - values[k - 1]);
    if (!std::isfinite(values[k]) || curr > prev * (1.0 + 1e-6) + 1e-12) {
      std::ostringstream msg;
      msg << "sai_constant: ratio sequence does not converge; table (u, ratio):";
      for (std::size_t i = 0; i <= k; ++i) msg << " (" << h[i] << ", " << values[i] << ")";
      throw EstimationError(msg.str());
    }
  }
  return extrapolated.back();
}

}  // namespace

std::string to_string(CopulaFamily f) {
  switch (f) {
    case CopulaFamily::Independence: return "independence";
    case CopulaFamily::FGM: return "fgm";
    case CopulaFamily::AliMikhailHaq: return "amh";
    case CopulaFamily::Frank: return "frank";
  }
  return "unknown";
}

Copula::Copula(CopulaFamily f, double theta) : family_(f), theta_(theta) {
  const double c = tailrisk::sai_constant(*this, default_sai_grid());
  if (c > 1e-9) sai_ = c;
}

Copula Copula::independence() { return Copula(CopulaFamily::Independence, 0.0); }

Copula Copula::fgm(double theta) {
  if (!(theta >= -1.0 && theta <= 1.0)) throw ConfigError("fgm copula: theta must lie in [-1, 1]");
  return Copula(CopulaFamily::FGM, theta);
}

Copula Copula::ali_mikhail_haq(double theta) {
  if (!(theta >= -1.0 && theta < 1.0)) throw ConfigError("amh copula: theta must lie in [-1, 1)");
  return Copula(CopulaFamily::AliMikhailHaq, theta);
}

Copula Copula::frank(double theta) {
  if (!(theta != 0.0) || !std::isfinite(theta)) {
    throw ConfigError("frank copula: theta must be finite and nonzero");
  }
  return Copula(CopulaFamily::Frank, theta);
}

double Copula::cdf(double u, double v) const {
  switch (family_) {
    case CopulaFamily::Independence: return u * v;
    case CopulaFamily::FGM: return u * v * (1.0 + theta_ * (1.0 - u) * (1.0 - v));
    case CopulaFamily::AliMikhailHaq: return u * v / (1.0 - theta_ * (1.0 - u) * (1.0 - v));
    case CopulaFamily::Frank:
      return -std::log1p(std::expm1(-theta_ * u) * std::expm1(-theta_ * v) / std::expm1(-theta_)) /
             theta_;
  }
  return 0.0;
}

double Copula::survival(double u, double v) const {
  switch (family_) {
    case CopulaFamily::Independence: return u * v;
    // FGM and Frank are radially symmetric.
    case CopulaFamily::FGM: return cdf(u, v);
    case CopulaFamily::Frank: return cdf(u, v);
    case CopulaFamily::AliMikhailHaq:
      return u * v * (1.0 + theta_ * (1.0 - u) * (1.0 - v) / (1.0 - theta_ * u * v));
  }
  return 0.0;
}

double Copula::conditional(double u, double v) const {
  switch (family_) {
    case CopulaFamily::Independence: return v;
    case CopulaFamily::FGM: return v * (1.0 + theta_ * (1.0 - 2.0 * u) * (1.0 - v));
    case CopulaFamily::AliMikhailHaq: {
      const double d = 1.0 - theta_ * (1.0 - u) * (1.0 - v);
      return v * (1.0 - theta_ * (1.0 - v)) / (d * d);
    }
    case CopulaFamily::Frank: {
      const double a = std::expm1(-theta_ * u);
      const double b = std::expm1(-theta_ * v);
      return std::exp(-theta_ * u) * b / (std::expm1(-theta_) + a * b);
    }
  }
  return 0.0;
}

double Copula::conditional_inverse(double u, double w) const {
  switch (family_) {
    case CopulaFamily::Independence: return w;
    case CopulaFamily::FGM: {
      const double a = theta_ * (1.0 - 2.0 * u);
      return 2.0 * w / ((1.0 + a) + std::sqrt((1.0 + a) * (1.0 + a) - 4.0 * a * w));
    }
    case CopulaFamily::AliMikhailHaq: {
      // v (1 - θ + θ v) = w (1 - b + b v)^2 with b = θ (1 - u).
      const double b = theta_ * (1.0 - u);
      const double c = w * (1.0 - b) * (1.0 - b);
      const double qa = theta_ - w * b * b;
      const double qb = (1.0 - theta_) - 2.0 * w * b * (1.0 - b);
      const double disc = qb * qb + 4.0 * qa * c;
      const double denom = qb + std::sqrt(std::max(disc, 0.0));
      const double v = denom > 0.0 ? 2.0 * c / denom : -1.0;
      if (v >= 0.0 && v <= 1.0) return v;
      return bisect_conditional(*this, u, w);
    }
    case CopulaFamily::Frank: return bisect_conditional(*this, u, w);
  }
  return w;
}

std::vector<double> default_sai_grid() { return {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7}; }

double sai_constant(const Copula& cop, const std::vector<double>& u_grid) {
  if (u_grid.size() < 4) throw ConfigError("sai_constant: grid needs at least 4 points");
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    if (!(u_grid[i] > 0.0 && u_grid[i] < 1.0) || (i > 0 && !(u_grid[i] < u_grid[i - 1]))) {
      throw ConfigError("sai_constant: grid must decrease strictly within (0, 1)");
    }
  }
  std::vector<double> ratios;
  for (double u : u_grid) ratios.push_back(cop.survival(u, u) / (u * u));
  return richardson_limit(u_grid, ratios);
}

std::pair<double, double> sample_copula(const Copula& cop, RngStream& rng) {
  const double u = rng.uniform_open();
  const double w = rng.uniform_open();
  const double v = std::clamp(cop.conditional_inverse(u, w), kUniformEpsilon, 1.0 - kUniformEpsilon);
  return {u, v};
}

std::pair<double, double> sample_pair(const Copula& cop, const TailLaw& law_x, const TailLaw& law_y,
                                      RngStream& rng) {
  const auto [u, v] = sample_copula(cop, rng);
  return {law_x.from_uniform(u), law_y.from_uniform(v)};
}

MultivariateFgm::MultivariateFgm(std::vector<std::vector<double>> theta) : theta_(std::move(theta)) {
  const std::size_t d = theta_.size();
  if (d < 2 || d > 12) throw ConfigError("multivariate fgm: dimension must lie in [2, 12]");
  for (std::size_t i = 0; i < d; ++i) {
    if (theta_[i].size() != d) throw ConfigError("multivariate fgm: theta must be square");
    if (theta_[i][i] != 0.0) throw ConfigError("multivariate fgm: theta diagonal must be zero");
    for (std::size_t j = 0; j < d; ++j) {
      if (theta_[i][j] != theta_[j][i] || !(std::abs(theta_[i][j]) <= 1.0)) {
        throw ConfigError("multivariate fgm: theta must be symmetric with entries in [-1, 1]");
      }
    }
  }
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    double dens = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i + 1; j < d; ++j) {
        const double ei = (mask >> i) & 1u ? 1.0 : -1.0;
        const double ej = (mask >> j) & 1u ? 1.0 : -1.0;
        dens += theta_[i][j] * ei * ej;
      }
    }
    if (dens < -1e-12) throw ConfigError("multivariate fgm: theta gives a negative density");
  }
}

double MultivariateFgm::survival(std::span<const double> u) const {
  const std::size_t d = dims();
  double prod = 1.0;
  double bracket = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    prod *= u[i];
    for (std::size_t j = i + 1; j < d; ++j) bracket += theta_[i][j] * (1.0 - u[i]) * (1.0 - u[j]);
  }
  return prod * bracket;
}

void MultivariateFgm::sample(RngStream& rng, std::span<double> u) const {
  // Marginal density of the first k coordinates: c_k = 1 + Σ_{i<j<=k} θ_ij a_i a_j,
  // a_i = 1 - 2u_i; the k-th conditional is 1 + b (1 - 2u) with b = Σ_i θ_ik a_i / c_{k-1}.
  const std::size_t d = dims();
  std::vector<double> a(d);
  double c = 1.0;
  for (std::size_t k = 0; k < d; ++k) {
    double link = 0.0;
    for (std::size_t i = 0; i < k; ++i) link += theta_[i][k] * a[i];
    const double b = c > 0.0 ? link / c : 0.0;
    const double w = rng.uniform_open();
    const double v = 2.0 * w / ((1.0 + b) + std::sqrt((1.0 + b) * (1.0 + b) - 4.0 * b * w));
    u[k] = std::clamp(v, kUniformEpsilon, 1.0 - kUniformEpsilon);
    a[k] = 1.0 - 2.0 * u[k];
    c += a[k] * link;
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Triple {
  bool target_is_x;
  std::size_t target;
  std::size_t cond_x;
  std::size_t cond_y;
  std::string label;
};

struct Counts {
  std::vector<std::uint64_t> c;
};

Counts merge(const Counts& a, const Counts& b) {
  if (a.c.empty()) return b;
  Counts out = a;
  for (std::size_t i = 0; i < b.c.size(); ++i) out.c[i] += b.c[i];
  return out;
}

}  // namespace

GtaiReport gtai_diagnostic(const BivariateSumSpec& system, const std::vector<double>& thresholds,
                           const RunPlan& plan, const GtaiOptions& options) {
  system.validate();
  if (thresholds.empty()) throw ConfigError("gtai_diagnostic: empty threshold grid");
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > thresholds[i - 1])) {
      throw ConfigError("gtai_diagnostic: thresholds must increase strictly");
    }
  }
  const std::size_t n = system.n();
  const std::size_t m = system.m();

  std::vector<Triple> triples;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (i == k) continue;
      for (std::size_t j = 0; j < m; ++j) {
        triples.push_back({true, i, k, j,
                           "X" + std::to_string(i + 1) + "|X" + std::to_string(k + 1) + ",Y" +
                               std::to_string(j + 1)});
      }
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) {
      if (j == k) continue;
      for (std::size_t i = 0; i < n; ++i) {
        triples.push_back({false, j, i, k,
                           "Y" + std::to_string(j + 1) + "|X" + std::to_string(i + 1) + ",Y" +
                               std::to_string(k + 1)});
      }
    }
  }
  if (triples.empty()) throw ConfigError("gtai_diagnostic: needs n >= 2 or m >= 2");

  if (!options.weighted_products && !system.primary_sampler) {
    const double t0 = thresholds.front();
    for (const auto& tr : triples) {
      const double fx = system.x_laws[tr.cond_x].tail(t0);
      const double gy = system.y_laws[tr.cond_y].tail(t0);
      const double p = (tr.cond_x == tr.cond_y && tr.cond_x < system.pair_copulas.size())
                           ? system.pair_copulas[tr.cond_x].survival(fx, gy)
                           : fx * gy;
      if (p * static_cast<double>(plan.n_samples) < 200.0) {
        throw ConfigError("gtai_diagnostic: n_samples too small for 200 expected conditioning hits"
                          " in triple " + tr.label);
      }
    }
  }

  const std::size_t g = thresholds.size();
  const std::size_t cells = triples.size() * g;
  const Counts counts = run_chunked<Counts>(plan, [&](RngStream& rng, std::uint64_t count) {
    Counts local{std::vector<std::uint64_t>(2 * cells, 0)};
    std::vector<double> x(n), y(m), theta(n), delta(m);
    for (std::uint64_t s = 0; s < count; ++s) {
      system.sample_primaries(rng, x, y);
      if (options.weighted_products) {
        system.sample_weights(rng, theta, delta);
        for (std::size_t i = 0; i < n; ++i) x[i] *= theta[i];
        for (std::size_t j = 0; j < m; ++j) y[j] *= delta[j];
      }
      for (std::size_t t = 0; t < triples.size(); ++t) {
        const auto& tr = triples[t];
        const double cx = x[tr.cond_x];
        const double cy = y[tr.cond_y];
        const double target = std::abs(tr.target_is_x ? x[tr.target] : y[tr.target]);
        for (std::size_t k = 0; k < g; ++k) {
          const double th = thresholds[k];
          if (cx > th && cy > th) {
            ++local.c[2 * (t * g + k)];
            if (target > th) ++local.c[2 * (t * g + k) + 1];
          } else {
            break;  // thresholds increase, so later cells fail too
          }
        }
      }
    }
    return local;
  });

  GtaiReport report;
  report.passed = true;
  report.min_conditioning_hits = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t t = 0; t < triples.size(); ++t) {
    const GtaiCell* prev = nullptr;
    const GtaiCell* last = nullptr;
    bool monotone = true;
    for (std::size_t k = 0; k < g; ++k) {
      GtaiCell cell;
      cell.triple = triples[t].label;
      cell.threshold = thresholds[k];
      cell.conditioning_hits = counts.c[2 * (t * g + k)];
      const std::uint64_t joint = counts.c[2 * (t * g + k) + 1];
      report.min_conditioning_hits = std::min(report.min_conditioning_hits, cell.conditioning_hits);
      cell.inconclusive = cell.conditioning_hits < options.min_hits;
      if (cell.conditioning_hits > 0) {
        const double hits = static_cast<double>(cell.conditioning_hits);
        cell.estimate = static_cast<double>(joint) / hits;
        cell.ci_halfwidth = joint == 0 ? 3.0 / hits
                                       : 1.96 * std::sqrt(cell.estimate * (1.0 - cell.estimate) / hits);
      }
      report.grid.push_back(cell);
    }
    for (std::size_t k = 0; k < g; ++k) {
      const GtaiCell& cell = report.grid[report.grid.size() - g + k];
      if (cell.inconclusive) continue;
      report.max_conditional = std::max(report.max_conditional, cell.estimate);
      if (prev && cell.estimate > prev->estimate + prev->ci_halfwidth + cell.ci_halfwidth) {
        monotone = false;
      }
      prev = &cell;
      last = &cell;
    }
    if (!last || !monotone || !(last->estimate < options.tolerance)) report.passed = false;
  }
  return report;
}

WuodReport wuod_bound_check(const SampleMatrix& samples, const std::vector<double>& g_u,
                            const std::vector<double>& thresholds) {
  const std::size_t d = samples.dims;
  if (d < 2 || d > 4) throw ConfigError("wuod_bound_check: supports 2 to 4 components");
  if (g_u.size() < d) throw ConfigError("wuod_bound_check: g_u needs one bound per subset size");
  const std::size_t rows = samples.rows();
  if (rows == 0) throw ConfigError("wuod_bound_check: no samples");
  const double n = static_cast<double>(rows);

  WuodReport report;
  for (double z : thresholds) {
    std::vector<std::uint64_t> marginal(d, 0);
    std::vector<std::uint64_t> joint(std::size_t{1} << d, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      unsigned mask = 0;
      for (std::size_t c = 0; c < d; ++c) {
        if (samples.at(r, c) > z) {
          mask |= 1u << c;
          ++marginal[c];
        }
      }
      // every subset of the exceedance mask is jointly exceeded
      for (unsigned sub = mask; sub != 0; sub = (sub - 1) & mask) ++joint[sub];
    }
    for (unsigned subset = 1; subset < (1u << d); ++subset) {
      const int size = __builtin_popcount(subset);
      if (size < 2) continue;
      WuodCell cell;
      cell.threshold = z;
      cell.product_of_marginals = 1.0;
      for (std::size_t c = 0; c < d; ++c) {
        if (subset & (1u << c)) {
          cell.subset.push_back(c);
          cell.product_of_marginals *= static_cast<double>(marginal[c]) / n;
        }
      }
      cell.joint = static_cast<double>(joint[subset]) / n;
      cell.bound = g_u[static_cast<std::size_t>(size) - 1];
      cell.ratio = cell.product_of_marginals > 0.0 ? cell.joint / cell.product_of_marginals : 0.0;
      const double half = 1.96 * std::sqrt(cell.joint * (1.0 - cell.joint) / n);
      cell.violated = cell.joint - half > cell.bound * cell.product_of_marginals;
      if (cell.violated) report.passed = false;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace tailrisk
