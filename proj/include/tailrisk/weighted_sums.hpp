#pragma once

// Joint tails of two randomly weighted sums
//   X_n(Θ) = Σ Θ_i X_i,   Y_m(Δ) = Σ Δ_j Y_j
// with same-index SAI pairs (X_i, Y_i), cross-index independence and bounded
// weights independent of the primaries; the single-big-jump right-hand side,
// its regularly varying closed form, running maxima and Breiman's product tail.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tailrisk/dependence.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/engine.hpp"

namespace tailrisk {

struct PointMassWeight {
  double value;
};
struct UniformWeight {
  double lo;
  double hi;
};
/// scale * Beta(a, b).
struct ScaledBetaWeight {
  double a;
  double b;
  double scale;
};

/// Bounded non-negative random weight.
class WeightSpec {
 public:
  static WeightSpec point(double value);
  static WeightSpec uniform(double lo, double hi);
  static WeightSpec scaled_beta(double a, double b, double scale);

  const std::variant<PointMassWeight, UniformWeight, ScaledBetaWeight>& law() const { return law_; }
  bool is_point_mass() const { return std::holds_alternative<PointMassWeight>(law_); }
  double upper_bound() const;
  /// E[Θ^power], exact for all supported families.
  double moment(double power) const;
  double from_uniform(double u) const;
  double sample(RngStream& rng) const { return from_uniform(rng.uniform()); }

 private:
  explicit WeightSpec(std::variant<PointMassWeight, UniformWeight, ScaledBetaWeight> law)
      : law_(law) {}
  std::variant<PointMassWeight, UniformWeight, ScaledBetaWeight> law_;
};

/// Draws all n + m weights jointly (overrides the independent per-weight laws).
using WeightCoupling = std::function<void(RngStream&, std::span<double> theta, std::span<double> delta)>;
/// Draws all n + m primaries jointly (overrides the pairwise copula construction).
using PrimarySampler = std::function<void(RngStream&, std::span<double> x, std::span<double> y)>;

/// Primary sampler drawing (X_1..X_n, Y_1..Y_m) from a multivariate FGM copula whose
/// coordinates are ordered X first, then Y.
PrimarySampler fgm_primary_sampler(const MultivariateFgm& copula, std::vector<TailLaw> x_laws,
                                   std::vector<TailLaw> y_laws);

struct BivariateSumSpec {
  std::vector<TailLaw> x_laws;
  std::vector<TailLaw> y_laws;
  std::vector<Copula> pair_copulas;  // links (X_i, Y_i), i < min(n, m)
  std::vector<WeightSpec> theta_weights;
  std::vector<WeightSpec> delta_weights;
  WeightCoupling joint_coupling;
  PrimarySampler primary_sampler;

  std::size_t n() const { return x_laws.size(); }
  std::size_t m() const { return y_laws.size(); }
  void validate() const;

  void sample_primaries(RngStream& rng, std::span<double> x, std::span<double> y) const;
  void sample_weights(RngStream& rng, std::span<double> theta, std::span<double> delta) const;
};

struct JointTailEstimate {
  double value = 0.0;
  double ci_halfwidth = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t hits = 0;
  double x = 0.0;
  double y = 0.0;
  bool ci_valid = true;      // false when fewer than 100 hits
  bool rule_of_three = false;  // zero hits: ci_halfwidth is the one-sided 3/n bound

  static JointTailEstimate from(const Estimate& e, double x, double y);
  static JointTailEstimate exact(double value, double x, double y);
};

/// Thresholds (x, y) at which the first X law and the first Y law have tail `level`.
std::pair<double, double> thresholds_for_level(const BivariateSumSpec& spec, double level);

/// P(X_n(Θ) > x, Y_m(Δ) > y) by plain Monte Carlo.
JointTailEstimate mc_joint_tail(const BivariateSumSpec& spec, double x, double y, const RunPlan& plan);

/// Σ_i Σ_j P(Θ_i X_i > x, Δ_j Y_j > y). Exact for point-mass weights; otherwise Monte
/// Carlo over the weights with exact conditional pair tails (or over full draws when a
/// custom primary sampler is configured).
JointTailEstimate single_jump_rhs(const BivariateSumSpec& spec, double x, double y, const RunPlan& plan);

struct ClosedFormValue {
  double value = 0.0;
  double ci_halfwidth = 0.0;  // nonzero only when weight moments were simulated
  bool exact_moments = true;
};

/// Regularly varying closed form
///   Σ_i Σ_{j≠i} E[Θ_i^{α_i} Δ_j^{α'_j}] F̄_i(x) Ḡ_j(y) + Σ_i C_i E[Θ_i^{α_i} Δ_i^{α'_i}] F̄_i(x) Ḡ_i(y).
/// Moments are exact for independent weights and simulated under a joint coupling.
ClosedFormValue rv_closed_form(const BivariateSumSpec& spec, double x, double y,
                               const RunPlan& moment_plan = RunPlan{.n_samples = 10'000'000});

/// P(max_k X_k(Θ) > x, max_k Y_k(Δ) > y) over the partial sums.
JointTailEstimate max_joint_tail(const BivariateSumSpec& spec, double x, double y, const RunPlan& plan);

struct SandwichReport {
  JointTailEstimate sums;
  JointTailEstimate maxima;
  JointTailEstimate positive_parts;
  std::uint64_t violations = 0;  // paths breaking sums <= maxima <= positive parts
};

/// The three joint tails evaluated on identical sample paths.
SandwichReport max_sum_sandwich(const BivariateSumSpec& spec, double x, double y, const RunPlan& plan);

struct DiscreteRuinResult {
  JointTailEstimate psi;
  std::optional<double> asymptotic;  // rv_closed_form when every law carries an index
};

/// ψ(x, y, n): both discrete-time surpluses fall below zero within n periods.
DiscreteRuinResult discrete_ruin_psi(const BivariateSumSpec& spec, double x, double y,
                                     std::size_t n_periods, const RunPlan& plan);

/// E[Θ^α] P(Z > x) for Z regularly varying with index α.
double breiman_product_tail(const WeightSpec& theta, const TailLaw& law, double x);

/// One row of a threshold ladder with coupled estimates.
struct LadderRow {
  double x = 0.0;
  double y = 0.0;
  JointTailEstimate mc;
  JointTailEstimate rhs;
  ClosedFormValue closed_form;
  RatioEstimate ratio;               // mc / rhs, delta method on shared draws
  RatioEstimate ratio_closed_form;   // mc / closed form
};

/// mc_joint_tail and single_jump_rhs on the same weight draws for every threshold pair.
std::vector<LadderRow> joint_tail_ladder(const BivariateSumSpec& spec,
                                         const std::vector<std::pair<double, double>>& thresholds,
                                         const RunPlan& plan);

/// Warnings for weights that are zero with probability above 0.9 (checked by sampling
/// when a joint coupling is configured). Throws ConfigError for weights that are
/// identically zero.
std::vector<std::string> weight_warnings(const BivariateSumSpec& spec, std::uint64_t seed = 1);

}  // namespace tailrisk
