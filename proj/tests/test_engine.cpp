#include <doctest.h>

#include <cmath>
#include <set>

#include "gen.hpp"
#include "tailrisk/engine.hpp"

using namespace tailrisk;

TEST_SUITE("engine") {

TEST_CASE("philox known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are deterministic and distinct across chunks") {
  auto a = derive_stream(7, 3);
  auto b = derive_stream(7, 3);
  auto c = derive_stream(7, 4);
  auto d = derive_stream(8, 3);
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    CHECK(va == b());
    CHECK(va != c());
    CHECK(va != d());
  }
  CHECK_THROWS_AS(derive_stream(1, std::uint64_t{1} << 32), DomainError);
}

TEST_CASE("uniform draws stay in range and have the right mean") {
  auto rng = derive_stream(11, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double v = rng.uniform_open();
    REQUIRE(v >= kUniformEpsilon);
    REQUIRE(v <= 1.0 - kUniformEpsilon);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("run plan validation") {
  RunPlan p;
  p.n_samples = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = RunPlan{};
  p.chunk_size = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = RunPlan{};
  p.n_workers = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = RunPlan{.n_samples = 10, .chunk_size = 4};
  CHECK(p.chunk_count() == 3);
  CHECK(p.with_seed_tag(1).master_seed != p.master_seed);
  CHECK(p.with_seed_tag(1).master_seed == p.with_seed_tag(1).master_seed);
}

TEST_CASE("estimate mean, variance and rule of three") {
  Estimate e;
  for (double v : {1.0, 2.0, 3.0, 4.0}) e.add(v);
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.variance() == doctest::Approx(5.0 / 3.0));
  CHECK(e.ci95_halfwidth() == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0 / 4.0)));
  Estimate z;
  for (int i = 0; i < 1000; ++i) z.add(0.0);
  CHECK(z.zero_hits());
  CHECK(z.ci95_halfwidth() == doctest::Approx(3.0 / 1000.0));
}

TEST_CASE("property: merge equals sequential accumulation and is symmetric") {
  testgen::Gen g(101);
  for (int c = 0; c < testgen::kCases; ++c) {
    CAPTURE(c);
    const auto na = g.integer(1, 50);
    const auto nb = g.integer(1, 50);
    Estimate a, b, all;
    for (std::uint64_t i = 0; i < na + nb; ++i) {
      const double v = g.coin(0.3) ? 0.0 : g.uniform(-5.0, 5.0);
      (i < na ? a : b).add(v);
      all.add(v);
    }
    const Estimate ab = merge(a, b);
    const Estimate ba = merge(b, a);
    CHECK(ab.n == all.n);
    CHECK(ab.hit_count == all.hit_count);
    CHECK(ab.mean == doctest::Approx(all.mean).epsilon(1e-12));
    CHECK(ab.m2 == doctest::Approx(all.m2).epsilon(1e-10));
    CHECK(ab.mean == ba.mean);
    CHECK(ab.m2 == ba.m2);
  }
}

TEST_CASE("coupled estimate covariance and delta-method ratio") {
  CoupledEstimate est(2);
  testgen::Gen g(5);
  std::vector<double> xs, ys;
  for (int i = 0; i < 5000; ++i) {
    const double x = g.uniform(1.0, 2.0);
    const double y = x + g.uniform(0.0, 0.1);
    const double v[2] = {x, y};
    est.add(v);
    xs.push_back(x);
    ys.push_back(y);
  }
  double mx = 0, my = 0;
  for (int i = 0; i < 5000; ++i) mx += xs[i], my += ys[i];
  mx /= 5000, my /= 5000;
  double cxy = 0;
  for (int i = 0; i < 5000; ++i) cxy += (xs[i] - mx) * (ys[i] - my);
  cxy /= 4999;
  CHECK(est.mean(0) == doctest::Approx(mx));
  CHECK(est.covariance(0, 1) == doctest::Approx(cxy));
  const RatioEstimate r = ratio(est, 0, 1);
  CHECK(r.value == doctest::Approx(mx / my));
  // Strong positive coupling makes the ratio much tighter than the components.
  CHECK(r.ci95_halfwidth < est.component(0).ci95_halfwidth() / mx);
}

TEST_CASE("property: results are invariant to the worker count") {
  testgen::Gen g(77);
  for (int c = 0; c < 20; ++c) {
    CAPTURE(c);
    RunPlan p{.master_seed = g.integer(0, 1u << 30), .n_samples = g.integer(1, 50000),
              .chunk_size = g.integer(1, 4096)};
    auto f = [](RngStream& rng) { return rng.uniform() < 0.1 ? rng.uniform() : 0.0; };
    const Estimate one = run_mc(p, f);
    p.n_workers = 1 + static_cast<unsigned>(g.integer(1, 7));
    const Estimate many = run_mc(p, f);
    CHECK(one.mean == many.mean);
    CHECK(one.m2 == many.m2);
    CHECK(one.n == p.n_samples);
  }
}

TEST_CASE("run_sample keeps draw order independent of workers") {
  RunPlan p{.master_seed = 3, .n_samples = 10007, .chunk_size = 1000};
  const auto a = run_sample(p, [](RngStream& r) { return r.uniform(); });
  p.n_workers = 4;
  const auto b = run_sample(p, [](RngStream& r) { return r.uniform(); });
  CHECK(a == b);
  CHECK(a.size() == 10007);
  auto s = derive_stream(3, 1);
  CHECK(a[1000] == s.uniform());
}

TEST_CASE("worker failures surface as WorkerError with the chunk index") {
  RunPlan p{.master_seed = 1, .n_samples = 100, .chunk_size = 10, .n_workers = 3};
  try {
    for_each_chunk(p, [](std::uint64_t chunk, RngStream&, std::uint64_t) {
      if (chunk == 4) throw std::runtime_error("boom");
    });
    FAIL("expected WorkerError");
  } catch (const WorkerError& e) {
    CHECK(e.chunk() == 4);
  }
}

TEST_CASE("ci_intersects") {
  CHECK(ci_intersects(1.2, 0.1, 0.8, 1.15));
  CHECK_FALSE(ci_intersects(1.3, 0.1, 0.8, 1.15));
  CHECK(ci_intersects(0.5, 0.4, 0.85, 1.15));
  CHECK_FALSE(ci_intersects(0.5, 0.3, 0.85, 1.15));
}

}
