#pragma once

// Bivariate continuous-time renewal risk model with constant interest force r:
//   U_k(t) = u_k + ∫_0^t e^{-rs} dC_k(s) - Σ_{i<=N(t)} Z^{(k)}_i e^{-r T_i},  k = 1, 2,
// with claim pairs (X_i, Y_i) i.i.d. through one SAI copula, linear premiums
// C_k(t) = c_k t and a renewal counting process N.

#include <optional>
#include <variant>
#include <vector>

#include "tailrisk/dependence.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/engine.hpp"
#include "tailrisk/weighted_sums.hpp"

namespace tailrisk {

struct ExponentialArrivals {
  double rate;
};
struct DeterministicArrivals {
  double spacing;
};
struct GammaArrivals {
  double shape;
  double rate;
};
struct UniformArrivals {
  double lo;
  double hi;
};

class Interarrival {
 public:
  static Interarrival exponential(double rate);
  static Interarrival deterministic(double spacing);
  static Interarrival gamma(double shape, double rate);
  /// lo >= 0; an interval starting at 0 carries no atom there.
  static Interarrival uniform(double lo, double hi);

  const std::variant<ExponentialArrivals, DeterministicArrivals, GammaArrivals, UniformArrivals>& law() const {
    return law_;
  }
  double cdf(double t) const;
  double mean() const;
  double sample(RngStream& rng) const;

 private:
  using Law = std::variant<ExponentialArrivals, DeterministicArrivals, GammaArrivals, UniformArrivals>;
  explicit Interarrival(Law law) : law_(law) {}
  Law law_;
};

struct RenewalSpec {
  Interarrival interarrival;
  TailLaw claim_x;
  TailLaw claim_y;
  Copula copula;
  double premium_1 = 0.0;
  double premium_2 = 0.0;
  double interest = 0.0;
  double horizon = 1.0;

  void validate() const;
  /// ∫_0^t e^{-rs} c ds.
  double discounted_premium(double rate, double t) const;
};

struct RenewalFunction {
  std::vector<double> grid;    // t_k = k h, k = 0..K
  std::vector<double> values;  // λ(t_k)
  double step = 0.0;

  /// λ at the largest grid point not exceeding t.
  double at(double t) const;
};

/// λ(t) = E N(t) on [0, horizon]. Exponential and deterministic inter-arrivals use the
/// exact form; otherwise the renewal equation is discretized with the right-endpoint
/// rule. Default step horizon / 2000; requires 0 < step <= horizon / 10.
RenewalFunction renewal_function(const RenewalSpec& spec, std::optional<double> step = std::nullopt);

struct PathRecord {
  std::vector<double> arrivals;
  std::vector<double> claims_x;
  std::vector<double> claims_y;
  std::vector<double> discounted_x;  // X_i e^{-r T_i}
  std::vector<double> discounted_y;
  double aggregate_x = 0.0;          // D_r^{(1)}(T)
  double aggregate_y = 0.0;
};

/// One path on [0, horizon]: inter-arrival draw, then the claim pair, per arrival.
PathRecord sample_path(const RenewalSpec& spec, RngStream& rng);

/// Δ(x, y; T) by increment-weighted summation against λ on its grid. Throws
/// ConfigError when the copula has no positive SAI constant.
double delta_asymptotic(const RenewalSpec& spec, double x, double y, const RenewalFunction& lam);

struct RuinEstimate {
  JointTailEstimate psi_max;
  JointTailEstimate psi_and;
  JointTailEstimate aggregate;  // P(D_r^{(1)}(T) > x, D_r^{(2)}(T) > y)
  double delta = 0.0;
  RatioEstimate ratio_max;
  RatioEstimate ratio_and;
  std::uint64_t order_violations = 0;  // paths with ψ_max hit but not ψ_and, or ψ_and but not aggregate
};

/// Both ruin probabilities, checked at claim instants, plus the aggregate joint tail on
/// the same paths and their ratios to Δ.
RuinEstimate mc_ruin(const RenewalSpec& spec, double x, double y, const RunPlan& plan,
                     std::optional<double> step = std::nullopt);

JointTailEstimate joint_aggregate_tail(const RenewalSpec& spec, double x, double y, const RunPlan& plan);

/// Mean of N(t) over simulated paths.
Estimate mc_renewal_mean(const RenewalSpec& spec, double t, const RunPlan& plan);

/// Premium rate (1 + loading) E[N(1)] E[Z] of the expected value principle;
/// E[N(1)] is taken as 1 / E[inter-arrival].
double expected_value_premium(const Interarrival& arrivals, const TailLaw& claim, double loading);

}  // namespace tailrisk
