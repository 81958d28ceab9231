#pragma once

// Distortion risk measures: VaR, CTE, the tail distortion risk measure
//   ρ_g[X | X > VaR_p(X)] = ∫_0^1 B_X(1/(y(1-p))) g(dy),
// the constant C_α(g) = ∫_0^1 y^{-1/α} g(dy) = 1 + ∫_1^∞ g(y^{-α}) dy and the
// asymptotic TDRM of the background risk model ΘX(w) = Σ w_i Θ_i X_i.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tailrisk/distributions.hpp"
#include "tailrisk/engine.hpp"
#include "tailrisk/mrv.hpp"

namespace tailrisk {

enum class DistortionFamily { Identity, Power, ProportionalHazard, Table };

std::string to_string(DistortionFamily f);

/// g(u) <= scale * u^exponent on [0, reach].
struct TailEnvelope {
  double scale;
  double exponent;
  double reach;
};

class Distortion {
 public:
  static Distortion identity();
  /// g(u) = u^beta, beta > 0.
  static Distortion power(double beta);
  /// g(u) = u^{1/kappa}, kappa >= 1.
  static Distortion proportional_hazard(double kappa);
  /// Piecewise linear through knots (u_k, g_k) from (0, 0) to (1, 1). A repeated u_k is a
  /// jump; g takes the right value there (right-continuous). No jump at 0.
  static Distortion table(std::vector<std::pair<double, double>> knots);

  DistortionFamily family() const { return family_; }
  double param() const { return param_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  double operator()(double u) const;
  TailEnvelope tail_envelope() const;

 private:
  Distortion(DistortionFamily f, double param, std::vector<std::pair<double, double>> knots = {})
      : family_(f), param_(param), knots_(std::move(knots)) {}

  DistortionFamily family_;
  double param_;
  std::vector<std::pair<double, double>> knots_;
};

/// VaR_p = inf{x : F(x) >= p}.
double var(const TailLaw& law, double p);

/// E[X | X > VaR_p]; closed form for Pareto laws and mixtures, tail average for data.
/// ConditionError when the tail mean is infinite (α <= 1).
double cte(const TailLaw& law, double p);

struct ConditionResult {
  bool ok = false;
  std::optional<double> zeta;  // smallest grid ζ with ∫_1^∞ g(y^{-α/(1+ζ)}) dy < ∞
};

std::vector<double> default_zeta_grid();

/// Integrability condition decided from the tail envelope: convergent iff exponent α/(1+ζ) > 1.
ConditionResult condition_check(const Distortion& g, double alpha,
                                const std::vector<double>& zeta_grid = default_zeta_grid());

/// 1 + ∫_1^∞ g(y^{-α}) dy by adaptive quadrature; truncation chosen so the envelope
/// remainder is below 1e-11. ConditionError when the integral diverges.
double c_alpha_quadrature(const Distortion& g, double alpha);

/// Closed forms for identity (α/(α-1)), power and proportional hazard (αβ/(αβ-1));
/// c_alpha_quadrature for tables.
double c_alpha(const Distortion& g, double alpha);

/// ρ_g[X | X > VaR_p(X)] in the quantile form. Smooth g integrate against g'(y) dy by
/// tanh-sinh quadrature; table jumps add atoms; empirical laws use an exact sum over
/// order statistics. ConditionError when the condition fails for the law's index.
double tdrm_exact(const TailLaw& law, const Distortion& g, double p);

/// VaR_p + ∫_{VaR_p}^∞ g(F̄(x)/F̄(VaR_p)) dx by exp-sinh quadrature.
double tdrm_definition(const TailLaw& law, const Distortion& g, double p);

struct QuantileEstimate {
  double value = 0.0;
  double lo = 0.0;  // order-statistic bracket at 95%
  double hi = 0.0;
  bool exact = false;
};

/// Empirical VaR_p with its order-statistic bracket.
QuantileEstimate empirical_var(const TailLaw& empirical, double p);

struct BackgroundRiskModel {
  ProductMRVSpec product;
  std::vector<double> weights;  // w_i > 0, Σ w_i = 1

  void validate() const;
};

struct ModelLaw {
  TailLaw law;
  bool exact = false;  // false: empirical law from plan.n_samples draws
};

/// Law of ΘX(w): an exact Pareto mixture for identity Θ, otherwise simulated.
ModelLaw model_aggregate_law(const BackgroundRiskModel& model, const RunPlan& plan);
/// Law of Θ_i X_i: exact for identity Θ, otherwise simulated.
ModelLaw model_component_law(const BackgroundRiskModel& model, std::size_t i, const RunPlan& plan);

QuantileEstimate model_var(const BackgroundRiskModel& model, double p, const RunPlan& plan);
double model_tdrm_exact(const BackgroundRiskModel& model, const Distortion& g, double p, const RunPlan& plan);

struct AsymptoticTdrm {
  double value = 0.0;
  double c_alpha = 0.0;
  GammaResult gammas;
  std::vector<QuantileEstimate> component_vars;  // VaR_p(Θ_i X_i)
};

/// C_α(g) γ_w^{1/α} / Γ_α Σ_i VaR_p(Θ_i X_i).
AsymptoticTdrm tdrm_asymptotic(const BackgroundRiskModel& model, const Distortion& g, double p,
                               const RunPlan& plan);

struct BreimanVarRow {
  std::size_t component = 0;
  double moment_factor = 0.0;  // E[Θ_i^α]^{1/α}
  double var_x = 0.0;          // VaR_p(X_i)
  QuantileEstimate var_product;  // VaR_p(Θ_i X_i), simulated
  double ratio = 0.0;            // var_product / var_x
};

struct CorollaryResult {
  double value = 0.0;
  double c_alpha = 0.0;
  GammaResult gammas;
  std::vector<BreimanVarRow> table;
};

/// C_α(g) γ_w^{1/α} / Γ_α Σ_i E[Θ_i^α]^{1/α} VaR_p(X_i) for Θ independent of X, with the
/// per-component check VaR_p(Θ_i X_i) / VaR_p(X_i) against E[Θ_i^α]^{1/α}.
CorollaryResult corollary_independent(const BackgroundRiskModel& model, const Distortion& g, double p,
                                      const RunPlan& plan, bool with_table = true);

/// Simulated VaR_p(ΘX) for Θ independent of X.
QuantileEstimate product_var(const WeightSpec& theta, const TailLaw& law, double p, const RunPlan& plan);

}  // namespace tailrisk
