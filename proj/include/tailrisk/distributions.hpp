#pragma once

// One-dimensional heavy-tailed laws: Pareto, finite Pareto mixtures and
// empirical samples, with exact tail/quantile algebra and finite-x
// diagnostics of the heavy-tail classes.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tailrisk/engine.hpp"

namespace tailrisk {

/// Heavy-tail class memberships: heavy (H), long (L), dominatedly varying (D),
/// subexponential (S), regularly varying (R).
enum class TailClass : std::uint8_t { H = 1, L = 2, D = 4, S = 8, R = 16 };

class TailClassSet {
 public:
  constexpr TailClassSet() = default;
  constexpr TailClassSet(std::initializer_list<TailClass> classes) {
    for (auto c : classes) bits_ |= static_cast<std::uint8_t>(c);
  }
  constexpr bool contains(TailClass c) const { return bits_ & static_cast<std::uint8_t>(c); }
  constexpr bool empty() const { return bits_ == 0; }
  std::string to_string() const;  // e.g. "HLDSR"

 private:
  std::uint8_t bits_ = 0;
};

/// X = loc + xmin * P with P standard Pareto: tail ((x - loc)/xmin)^-alpha beyond loc + xmin.
struct ParetoParams {
  double alpha;
  double xmin;
  double loc = 0.0;
};

struct MixtureComponent {
  double weight;
  double alpha;
  double xmin;
};

/// Finite mixture of Pareto laws plus an optional atom at zero.
struct ParetoMixtureParams {
  std::vector<MixtureComponent> components;
  double zero_mass = 0.0;
};

struct EmpiricalParams {
  std::vector<double> sorted;
};

enum class LawFamily { Pareto, ParetoMixture, Empirical };

class TailLaw {
 public:
  static TailLaw pareto(double alpha, double xmin, double loc = 0.0);
  static TailLaw pareto_mixture(std::vector<MixtureComponent> components, double zero_mass = 0.0);
  static TailLaw empirical(std::vector<double> data);

  LawFamily family() const;
  const ParetoParams* as_pareto() const { return std::get_if<ParetoParams>(&params_); }
  const ParetoMixtureParams* as_mixture() const { return std::get_if<ParetoMixtureParams>(&params_); }
  const EmpiricalParams* as_empirical() const { return std::get_if<EmpiricalParams>(&params_); }

  /// Tail index alpha; the smallest component index for mixtures; empty for data.
  std::optional<double> rv_index() const;
  TailClassSet class_tags() const;

  /// P(X > x).
  double tail(double x) const;
  double cdf(double x) const { return 1.0 - tail(x); }
  /// inf{x : F(x) >= p}; DomainError unless 0 < p < 1.
  double quantile(double p) const;
  /// quantile(1 - q) without forming 1 - q; q in (0,1).
  double upper_quantile(double q) const;
  /// B(s) = quantile(1 - 1/s), s >= 1; the left endpoint at s = 1.
  double b_transform(double s) const;
  double lower_endpoint() const;

  /// Inverse transform of a uniform draw clamped to [2^-53, 1 - 2^-53].
  double from_uniform(double u) const;
  double sample(RngStream& rng) const { return from_uniform(rng.uniform()); }

 private:
  explicit TailLaw(std::variant<ParetoParams, ParetoMixtureParams, EmpiricalParams> p)
      : params_(std::move(p)) {}

  std::variant<ParetoParams, ParetoMixtureParams, EmpiricalParams> params_;
};

struct LongTailPoint {
  double x;
  double ratio;  // tail(x - 1) / tail(x)
};

struct DominatedPoint {
  double t;
  double x;
  double ratio;  // tail(t x) / tail(x)
};

struct TailClassReport {
  double upper_matuszewska = 0.0;
  double lower_matuszewska = 0.0;
  std::vector<LongTailPoint> long_tail_ratio_at;
  std::vector<DominatedPoint> dominated_ratio_at;
  bool insensitivity_ok = false;
};

/// Finite-x class diagnostics. The Matuszewska estimates are the extreme values of
/// -log(tail(t x)/tail(x))/log t over t_grid at the largest grid point; the
/// insensitivity check uses a(x) = sqrt(x).
TailClassReport classify(const TailLaw& law, const std::vector<double>& grid,
                         const std::vector<double>& t_grid);

}  // namespace tailrisk
