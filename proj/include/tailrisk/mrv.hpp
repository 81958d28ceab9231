#pragma once

// Multivariate regular variation with a finite spectral measure: X = R s_K with
// R ~ Pareto(alpha, xmin) and a random atom s_K on the l1 simplex, plus the
// background-risk functionals γ_w and Γ_α and products ΘX.

#include <string>
#include <variant>
#include <vector>

#include "tailrisk/distributions.hpp"
#include "tailrisk/engine.hpp"
#include "tailrisk/weighted_sums.hpp"

namespace tailrisk {

struct SpectralAtom {
  std::vector<double> direction;  // non-negative, sums to 1
  double weight;
};

class MRVSpec {
 public:
  /// Throws ConfigError unless directions lie on the simplex (tolerance 1e-9), share one
  /// dimension, and the weights are positive and sum to 1.
  MRVSpec(double alpha, double xmin, std::vector<SpectralAtom> atoms);

  double alpha() const { return alpha_; }
  double xmin() const { return xmin_; }
  std::size_t dim() const { return atoms_.front().direction.size(); }
  const std::vector<SpectralAtom>& atoms() const { return atoms_; }

  /// Law of component i: a Pareto mixture with an atom at 0 for directions with s_ki = 0.
  TailLaw marginal(std::size_t i) const;

 private:
  double alpha_;
  double xmin_;
  std::vector<SpectralAtom> atoms_;
};

/// Writes one draw R s_k into out (size dim).
void mrv_sample(const MRVSpec& spec, RngStream& rng, std::span<double> out);
std::vector<double> mrv_sample(const MRVSpec& spec, RngStream& rng);

/// μ{z : w·z > 1} = Σ p_k (w·s_k)^α xmin^α under the normalization b(x) = x^{1/α}.
double limit_measure_halfspace(const MRVSpec& spec, const std::vector<double>& w);

/// Law of l·X = R (l·s_K): a Pareto mixture, with an atom at 0 for atoms orthogonal to l.
TailLaw projection_law(const MRVSpec& spec, const std::vector<double>& l);

enum class ThetaMode { Identity, IndependentVector, CommonScalar };

std::string to_string(ThetaMode m);

struct ProductMRVSpec {
  MRVSpec base;
  ThetaMode mode = ThetaMode::Identity;
  std::vector<WeightSpec> theta_laws;  // empty, one per component, or a single law

  void validate() const;
  /// Draws X then Θ and writes the products Θ_i X_i.
  void sample(RngStream& rng, std::span<double> out) const;
};

struct GammaResult {
  double gamma_w = 0.0;
  double gamma_w_ci = 0.0;
  std::vector<double> gammas_ei;
  std::vector<double> gammas_ei_ci;
  double Gamma_alpha = 0.0;
  double Gamma_alpha_ci = 0.0;
  bool exact = true;
};

/// γ_w = μ{w·z>1}/μ{1·z>1}, γ_{e_i} and Γ_α = Σ γ_{e_i}^{1/α}; w non-negative, summing to 1.
GammaResult gamma_w(const MRVSpec& spec, const std::vector<double>& w);

/// Exact for identity and common-scalar Θ. For independent-vector Θ the halfspace measures
/// of ΘX are E_Θ[Σ_k p_k (Σ_i w_i Θ_i s_ki)^α] xmin^α, estimated by Monte Carlo over Θ with
/// shared draws for numerator and denominator.
GammaResult gamma_w(const ProductMRVSpec& product, const std::vector<double>& w,
                    const RunPlan& plan = RunPlan{});

struct McOnlyMarker {
  std::string reason;
};

/// ΘX as an MRVSpec: unchanged for identity Θ; radial scale xmin E[Θ^α]^{1/α} for a
/// common scalar Θ. Independent-vector Θ has no closed form here.
std::variant<MRVSpec, McOnlyMarker> multivariate_breiman(const ProductMRVSpec& product);

struct LinearTailRow {
  double level = 0.0;  // P(l·X > x)
  double x = 0.0;
  double t = 0.0;
  RatioEstimate ratio;  // P(l·X > t x) / P(l·X > x)
  double target = 0.0;  // t^{-α}
};

struct LinearTailReport {
  bool degenerate = false;  // l·s_k = 0 for every atom
  std::vector<LinearTailRow> rows;
};

/// Tail-ratio check of l·X along marginal levels; x solves μ(l) x^{-α} = level.
LinearTailReport linear_combination_tail_check(const MRVSpec& spec, const std::vector<double>& l,
                                               const std::vector<double>& levels, double t,
                                               const RunPlan& plan);

struct MeasureAgreementRow {
  double x = 0.0;
  Estimate scaled;  // x P(w·X > x^{1/α})
  double target = 0.0;
};

/// x P(X / x^{1/α} ∈ {w·z > 1}) along x, against μ{w·z > 1}.
std::vector<MeasureAgreementRow> sampler_measure_check(const MRVSpec& spec, const std::vector<double>& w,
                                                       const std::vector<double>& xs, const RunPlan& plan);

}  // namespace tailrisk
