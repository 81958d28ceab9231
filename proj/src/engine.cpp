#include "tailrisk/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace tailrisk {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint32_t stream_index)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_index_(stream_index) {}

void RngStream::refill() {
  const auto out = philox4x32({static_cast<std::uint32_t>(block_),
                               static_cast<std::uint32_t>(block_ >> 32), stream_index_, 0u},
                              key_);
  ++block_;
  buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  buffered_ = 2;
}

RngStream::result_type RngStream::operator()() {
  if (buffered_ == 0) refill();
  return buffer_[2 - buffered_--];
}

double RngStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1p-53; }

double RngStream::uniform_open() {
  return std::clamp(uniform(), kUniformEpsilon, 1.0 - kUniformEpsilon);
}

RngStream derive_stream(std::uint64_t master_seed, std::uint64_t chunk_index) {
  if (chunk_index >= (std::uint64_t{1} << 32)) {
    throw DomainError("derive_stream: chunk index must be below 2^32");
  }
  return RngStream(master_seed, static_cast<std::uint32_t>(chunk_index));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void RunPlan::validate() const {
  if (n_samples == 0) throw ConfigError("run plan: n_samples must be positive");
  if (chunk_size == 0) throw ConfigError("run plan: chunk_size must be positive");
  if (n_workers == 0) throw ConfigError("run plan: n_workers must be positive");
  if (chunk_count() > (std::uint64_t{1} << 32)) {
    throw ConfigError("run plan: more than 2^32 chunks; raise chunk_size");
  }
}

std::uint64_t RunPlan::chunk_count() const { return (n_samples + chunk_size - 1) / chunk_size; }

RunPlan RunPlan::with_seed_tag(std::uint64_t tag) const {
  RunPlan p = *this;
  p.master_seed = mix_seed(master_seed, tag);
  return p;
}

RunPlan RunPlan::with_samples(std::uint64_t n) const {
  RunPlan p = *this;
  p.n_samples = n;
  return p;
}

void Estimate::add(double value) {
  ++n;
  if (value != 0.0) ++hit_count;
  const double delta = value - mean;
  mean += delta / static_cast<double>(n);
  m2 += delta * (value - mean);
}

double Estimate::variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }

double Estimate::ci95_halfwidth() const {
  if (n == 0) return std::numeric_limits<double>::infinity();
  if (hit_count == 0) return 3.0 / static_cast<double>(n);
  return 1.96 * std::sqrt(variance() / static_cast<double>(n));
}

Estimate merge(const Estimate& a, const Estimate& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  Estimate out;
  out.n = a.n + b.n;
  out.hit_count = a.hit_count + b.hit_count;
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double n = static_cast<double>(out.n);
  out.mean = (na * a.mean + nb * b.mean) / n;
  const double delta = b.mean - a.mean;
  out.m2 = a.m2 + b.m2 + delta * delta * (na * nb / n);
  return out;
}

CoupledEstimate::CoupledEstimate(std::size_t dims)
    : means_(dims, 0.0), comoments_(dims * dims, 0.0), hits_(dims, 0) {}

void CoupledEstimate::add(std::span<const double> values) {
  const std::size_t k = means_.size();
  ++n_;
  const double n = static_cast<double>(n_);
  // Welford update of the co-moment matrix: C += (x - old_mean)(x - new_mean)^T
  double old_delta[16];
  std::vector<double> heap;
  double* d = old_delta;
  if (k > 16) {
    heap.resize(k);
    d = heap.data();
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (values[i] != 0.0) ++hits_[i];
    d[i] = values[i] - means_[i];
    means_[i] += d[i] / n;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double new_delta = values[i] - means_[i];
    for (std::size_t j = 0; j < k; ++j) comoments_[j * k + i] += d[j] * new_delta;
  }
}

double CoupledEstimate::covariance(std::size_t i, std::size_t j) const {
  const std::size_t k = means_.size();
  return n_ > 1 ? comoments_.at(i * k + j) / static_cast<double>(n_ - 1) : 0.0;
}

Estimate CoupledEstimate::component(std::size_t i) const {
  Estimate e;
  e.n = n_;
  e.mean = means_.at(i);
  e.m2 = comoments_.at(i * means_.size() + i);
  e.hit_count = hits_.at(i);
  return e;
}

CoupledEstimate merge(const CoupledEstimate& a, const CoupledEstimate& b) {
  if (a.n_ == 0) return b;
  if (b.n_ == 0) return a;
  if (a.dims() != b.dims()) throw EstimationError("merge: dimension mismatch");
  const std::size_t k = a.dims();
  CoupledEstimate out(k);
  out.n_ = a.n_ + b.n_;
  const double na = static_cast<double>(a.n_);
  const double nb = static_cast<double>(b.n_);
  const double n = static_cast<double>(out.n_);
  const double w = na * nb / n;
  for (std::size_t i = 0; i < k; ++i) {
    out.means_[i] = (na * a.means_[i] + nb * b.means_[i]) / n;
    out.hits_[i] = a.hits_[i] + b.hits_[i];
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double di = b.means_[i] - a.means_[i];
      const double dj = b.means_[j] - a.means_[j];
      out.comoments_[i * k + j] = a.comoments_[i * k + j] + b.comoments_[i * k + j] + di * dj * w;
    }
  }
  return out;
}

RatioEstimate ratio(const CoupledEstimate& est, std::size_t numerator, std::size_t denominator) {
  const double a = est.mean(numerator);
  const double b = est.mean(denominator);
  if (b == 0.0) throw EstimationError("ratio: denominator estimate is zero");
  const double r = a / b;
  const double var = (est.covariance(numerator, numerator) -
                      2.0 * r * est.covariance(numerator, denominator) +
                      r * r * est.covariance(denominator, denominator)) /
                     (b * b * static_cast<double>(est.n()));
  return {r, 1.96 * std::sqrt(std::max(var, 0.0))};
}

RatioEstimate ratio_to_constant(const Estimate& est, double constant) {
  if (constant == 0.0) throw EstimationError("ratio: reference value is zero");
  return {est.mean / constant, est.ci95_halfwidth() / std::abs(constant)};
}

bool ci_intersects(double value, double half, double lo, double hi) {
  return value + half >= lo && value - half <= hi;
}

WorkerError::WorkerError(std::uint64_t chunk, const std::string& what)
    : EstimationError("chunk " + std::to_string(chunk) + ": " + what), chunk_(chunk) {}

void for_each_chunk(const RunPlan& plan,
                    const std::function<void(std::uint64_t, RngStream&, std::uint64_t)>& body) {
  plan.validate();
  const std::uint64_t chunks = plan.chunk_count();
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::optional<std::pair<std::uint64_t, std::string>> first_error;

  auto worker = [&] {
    for (;;) {
      if (stop.load(std::memory_order_relaxed)) return;
      const std::uint64_t chunk = next.fetch_add(1);
      if (chunk >= chunks) return;
      const std::uint64_t begin = chunk * plan.chunk_size;
      const std::uint64_t count = std::min(plan.chunk_size, plan.n_samples - begin);
      try {
        RngStream rng = derive_stream(plan.master_seed, chunk);
        body(chunk, rng, count);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!first_error || chunk < first_error->first) first_error.emplace(chunk, e.what());
        stop = true;
      }
    }
  };

  const auto threads = static_cast<unsigned>(std::min<std::uint64_t>(plan.n_workers, chunks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) throw WorkerError(first_error->first, first_error->second);
}

Estimate run_mc(const RunPlan& plan, const std::function<double(RngStream&)>& estimand) {
  return run_chunked<Estimate>(plan, [&](RngStream& rng, std::uint64_t count) {
    Estimate e;
    for (std::uint64_t s = 0; s < count; ++s) e.add(estimand(rng));
    return e;
  });
}

CoupledEstimate run_mc_coupled(const RunPlan& plan, std::size_t dims,
                               const std::function<void(RngStream&, std::span<double>)>& estimand) {
  return run_chunked<CoupledEstimate>(plan, [&](RngStream& rng, std::uint64_t count) {
    CoupledEstimate e(dims);
    std::vector<double> values(dims);
    for (std::uint64_t s = 0; s < count; ++s) {
      std::fill(values.begin(), values.end(), 0.0);
      estimand(rng, values);
      e.add(values);
    }
    return e;
  });
}

std::vector<double> run_sample(const RunPlan& plan, const std::function<double(RngStream&)>& draw) {
  plan.validate();
  std::vector<double> out(plan.n_samples);
  for_each_chunk(plan, [&](std::uint64_t chunk, RngStream& rng, std::uint64_t count) {
    double* dst = out.data() + chunk * plan.chunk_size;
    for (std::uint64_t s = 0; s < count; ++s) dst[s] = draw(rng);
  });
  return out;
}

}  // namespace tailrisk
