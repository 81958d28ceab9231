#pragma once

// Reproducible parallel Monte Carlo substrate.
//
// Every estimator in the library draws its randomness from counter-based
// Philox4x32-10 streams keyed by (master seed, chunk index). A run is split
// into fixed-size chunks; chunk results are merged in chunk order, so the
// output depends on (seed, chunk_size) only and never on the worker count.

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tailrisk/errors.hpp"

namespace tailrisk {

/// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// A deterministic random stream; satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint32_t stream_index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0,1) with 53 random bits.
  double uniform();
  /// Uniform clamped to [2^-53, 1 - 2^-53]; safe for quantile inversion.
  double uniform_open();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_index_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

inline constexpr double kUniformEpsilon = 0x1p-53;

/// Stream for one chunk of a run. Throws DomainError if chunk_index >= 2^32.
RngStream derive_stream(std::uint64_t master_seed, std::uint64_t chunk_index);

/// SplitMix64 finalizer applied to (seed, tag); used to give independent
/// sub-experiments of one run their own master seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

struct RunPlan {
  std::uint64_t master_seed = 20240601;
  std::uint64_t n_samples = 1'000'000;
  std::uint64_t chunk_size = 1u << 16;
  unsigned n_workers = 1;

  void validate() const;
  std::uint64_t chunk_count() const;
  /// Same plan with a derived master seed.
  RunPlan with_seed_tag(std::uint64_t tag) const;
  RunPlan with_samples(std::uint64_t n) const;
};

/// Running mean/variance of a scalar estimand.
struct Estimate {
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations
  std::uint64_t n = 0;
  std::uint64_t hit_count = 0;  // observations != 0

  void add(double value);
  double variance() const;
  /// 1.96 * sqrt(variance / n); the rule-of-three bound 3/n when nothing was hit.
  double ci95_halfwidth() const;
  bool zero_hits() const { return n > 0 && hit_count == 0; }
};

/// Pooled estimate of two disjoint samples. Symmetric in its arguments bit for bit.
Estimate merge(const Estimate& a, const Estimate& b);

/// Means and co-moments of K estimands evaluated on the same draws.
class CoupledEstimate {
 public:
  CoupledEstimate() = default;
  explicit CoupledEstimate(std::size_t dims);

  void add(std::span<const double> values);
  std::size_t dims() const { return means_.size(); }
  std::uint64_t n() const { return n_; }
  double mean(std::size_t i) const { return means_.at(i); }
  double covariance(std::size_t i, std::size_t j) const;
  Estimate component(std::size_t i) const;

  friend CoupledEstimate merge(const CoupledEstimate& a, const CoupledEstimate& b);

 private:
  std::uint64_t n_ = 0;
  std::vector<double> means_;
  std::vector<double> comoments_;  // row-major dims x dims
  std::vector<std::uint64_t> hits_;
};

struct RatioEstimate {
  double value = 0.0;
  double ci95_halfwidth = 0.0;
};

/// Delta-method ratio mean(i)/mean(j) with its 95% half-width.
RatioEstimate ratio(const CoupledEstimate& est, std::size_t numerator, std::size_t denominator);
/// Ratio of a noisy estimate to an exact constant.
RatioEstimate ratio_to_constant(const Estimate& est, double constant);

/// True when [value - half, value + half] meets [lo, hi].
bool ci_intersects(double value, double half, double lo, double hi);

/// A chunk failed; carries the index of the first failing chunk.
class WorkerError : public EstimationError {
 public:
  WorkerError(std::uint64_t chunk, const std::string& what);
  std::uint64_t chunk() const { return chunk_; }

 private:
  std::uint64_t chunk_;
};

/// Calls body(chunk_index, stream, count) for every chunk, on plan.n_workers threads.
void for_each_chunk(const RunPlan& plan,
                    const std::function<void(std::uint64_t, RngStream&, std::uint64_t)>& body);

/// Evaluates chunk_fn per chunk and merges the results in chunk order.
template <class Result, class ChunkFn>
Result run_chunked(const RunPlan& plan, ChunkFn&& chunk_fn) {
  plan.validate();
  std::vector<Result> parts(plan.chunk_count());
  for_each_chunk(plan, [&](std::uint64_t chunk, RngStream& rng, std::uint64_t count) {
    parts[chunk] = chunk_fn(rng, count);
  });
  Result total = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) total = merge(total, parts[i]);
  return total;
}

/// Scalar Monte Carlo: one estimand value per draw.
Estimate run_mc(const RunPlan& plan, const std::function<double(RngStream&)>& estimand);

/// Coupled Monte Carlo: dims estimand values per draw, written into the span.
CoupledEstimate run_mc_coupled(const RunPlan& plan, std::size_t dims,
                               const std::function<void(RngStream&, std::span<double>)>& estimand);

/// One value per draw, stored in draw order.
std::vector<double> run_sample(const RunPlan& plan, const std::function<double(RngStream&)>& draw);

}  // namespace tailrisk
