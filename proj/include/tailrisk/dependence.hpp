#pragma once

// Bivariate copulas with strong asymptotic independence (SAI), the GTAI
// diagnostic for interdependent sequences and the WUOD bound check.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tailrisk/distributions.hpp"
#include "tailrisk/engine.hpp"

namespace tailrisk {

enum class CopulaFamily { Independence, FGM, AliMikhailHaq, Frank };

std::string to_string(CopulaFamily f);

class Copula {
 public:
  /// Throws ConfigError when theta is outside the family range
  /// (FGM [-1,1], AMH [-1,1), Frank nonzero).
  static Copula independence();
  static Copula fgm(double theta);
  static Copula ali_mikhail_haq(double theta);
  static Copula frank(double theta);

  CopulaFamily family() const { return family_; }
  double theta() const { return theta_; }

  /// C(u, v).
  double cdf(double u, double v) const;
  /// Survival copula u + v - 1 + C(1-u, 1-v), evaluated in a cancellation-free form.
  double survival(double u, double v) const;
  /// dC/du (u, v), the conditional law of V given U = u.
  double conditional(double u, double v) const;
  /// v with conditional(u, v) = w.
  double conditional_inverse(double u, double w) const;

  /// lim Ĉ(u,u)/u^2 as u -> 0, computed once on the default grid u = 1e-2..1e-7.
  /// Empty when the limit is not positive (e.g. FGM with theta = -1).
  std::optional<double> sai_constant() const { return sai_; }

 private:
  Copula(CopulaFamily f, double theta);

  CopulaFamily family_;
  double theta_;
  std::optional<double> sai_;
};

/// Richardson-extrapolated limit of Ĉ(u,u)/u^2 along a decreasing grid (>= 4 points).
/// Throws EstimationError, carrying the partial table in its message, when
/// successive estimates stop contracting.
double sai_constant(const Copula& cop, const std::vector<double>& u_grid);

std::vector<double> default_sai_grid();

/// (X, Y) with marginals law_x, law_y and copula cop, by conditional inversion.
std::pair<double, double> sample_pair(const Copula& cop, const TailLaw& law_x, const TailLaw& law_y,
                                      RngStream& rng);

/// Uniform pair (U, V) from the copula.
std::pair<double, double> sample_copula(const Copula& cop, RngStream& rng);

/// d-dimensional FGM copula with pairwise terms only:
///   C(u) = Π u_i [1 + Σ_{i<j} θ_ij (1-u_i)(1-u_j)].
/// Every pair and every triple is SAI; bivariate margins are FGM(θ_ij).
class MultivariateFgm {
 public:
  /// theta: symmetric d x d, zero diagonal. Throws ConfigError unless the density
  /// 1 + Σ θ_ij ε_i ε_j is non-negative for every sign vector ε (d <= 12).
  explicit MultivariateFgm(std::vector<std::vector<double>> theta);

  std::size_t dims() const { return theta_.size(); }
  double theta(std::size_t i, std::size_t j) const { return theta_[i][j]; }
  Copula pair(std::size_t i, std::size_t j) const { return Copula::fgm(theta_[i][j]); }

  /// P(U_i > 1 - u_i for all i).
  double survival(std::span<const double> u) const;
  /// Sequential conditional inversion, one uniform per coordinate.
  void sample(RngStream& rng, std::span<double> u) const;

 private:
  std::vector<std::vector<double>> theta_;
};

// ---------------------------------------------------------------------------
// GTAI diagnostic

struct BivariateSumSpec;  // weighted_sums.hpp

struct GtaiCell {
  std::string triple;      // e.g. "X1|X2,Y1"
  double threshold = 0.0;  // common threshold for all three variables
  double estimate = 0.0;
  double ci_halfwidth = 0.0;
  std::uint64_t conditioning_hits = 0;
  bool inconclusive = false;
};

struct GtaiReport {
  double max_conditional = 0.0;
  std::vector<GtaiCell> grid;
  std::uint64_t min_conditioning_hits = 0;
  bool passed = false;
};

struct GtaiOptions {
  double tolerance = 0.02;
  bool weighted_products = false;  // test Θ_i X_i, Δ_j Y_j instead of the primaries
  std::uint64_t min_hits = 30;     // below this a cell is inconclusive
};

/// Empirical conditional probabilities P(|X_i|>t | X_k>t, Y_j>t) for every i != k
/// and every j, and symmetrically P(|Y_j|>t | X_i>t, Y_k>t), along the thresholds.
/// Passes when every triple is non-increasing along the grid (within CI) and its last
/// conclusive cell is below the tolerance.
GtaiReport gtai_diagnostic(const BivariateSumSpec& system, const std::vector<double>& thresholds,
                           const RunPlan& plan, const GtaiOptions& options = {});

/// Row-major sample matrix, one joint draw per row.
struct SampleMatrix {
  std::size_t dims = 0;
  std::vector<double> values;

  std::size_t rows() const { return dims == 0 ? 0 : values.size() / dims; }
  double at(std::size_t row, std::size_t col) const { return values[row * dims + col]; }
};

struct WuodCell {
  std::vector<std::size_t> subset;
  double threshold = 0.0;
  double joint = 0.0;
  double product_of_marginals = 0.0;
  double ratio = 0.0;
  double bound = 0.0;
  bool violated = false;
};

struct WuodReport {
  std::vector<WuodCell> cells;
  bool passed = true;
};

/// Checks P(∩{Z_i > z}) <= g_u(|S|) Π P(Z_i > z) for every subset S of size >= 2 and every
/// grid threshold z. g_u[k] bounds subsets of size k + 1. A cell is violated only when the
/// joint estimate exceeds the bound by more than its 95% half-width.
WuodReport wuod_bound_check(const SampleMatrix& samples, const std::vector<double>& g_u,
                            const std::vector<double>& thresholds);

}  // namespace tailrisk
