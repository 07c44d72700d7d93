#include <doctest.h>

#include <set>
#include <vector>

#include "r2r/rng.hpp"
#include "test_support.hpp"

using namespace r2r;

TEST_CASE("counter rng is reproducible and position addressable") {
  CounterRng a(42);
  CounterRng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  CounterRng c(43);
  CHECK(CounterRng(42)() != c());
  CHECK(a.counter() == 100);
}

TEST_CASE("derive_seed separates tags and indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(7, tag_hash("path"), i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(7, tag_hash("a")) != derive_seed(7, tag_hash("b")));
  CHECK(derive_seed(7, 1, 2) == derive_seed(derive_seed(7, 1), 2));
  CHECK(tag_hash("replication") == tag_hash("replication"));
}

TEST_CASE("uniform stays in the open unit interval with mean one half") {
  CounterRng rng(1);
  std::vector<double> v;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    v.push_back(u);
  }
  CHECK(std::abs(test::sample_mean(v) - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / 1e5));
}

TEST_CASE("normal draws have unit moments") {
  CounterRng rng(2);
  std::vector<double> v;
  for (int i = 0; i < 200000; ++i) v.push_back(rng.normal());
  const double n = static_cast<double>(v.size());
  CHECK(std::abs(test::sample_mean(v)) < 3.0 / std::sqrt(n));
  CHECK(std::abs(test::sample_variance(v) - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("gamma draws match shape and scale moments") {
  for (double shape : {0.36, 1.0, 4.5}) {
    CounterRng rng(3);
    const double scale = 0.64;
    std::vector<double> v;
    for (int i = 0; i < 100000; ++i) {
      const double g = rng.gamma(shape, scale);
      REQUIRE(g >= 0.0);
      v.push_back(g);
    }
    const double var = shape * scale * scale;
    CHECK(std::abs(test::sample_mean(v) - shape * scale) < 3.0 * std::sqrt(var / 1e5));
    CHECK(std::abs(test::sample_variance(v) - var) / var < 0.05);
  }
}
