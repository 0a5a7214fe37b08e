#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "tagcf/rng.hpp"

using tagcf::Rng;
using tagcf::mix64;

TEST_CASE("mix64 is deterministic and collision-free on consecutive inputs") {
  CHECK(mix64(0) == mix64(0));
  CHECK(mix64(1) != mix64(2));
  std::set<std::uint64_t> outputs;
  for (std::uint64_t i = 0; i < 4096; ++i) outputs.insert(mix64(i));
  CHECK(outputs.size() == 4096);
}

TEST_CASE("uniform_below stays in range and covers all buckets") {
  Rng rng(7);
  std::vector<int> hits(13, 0);
  for (int i = 0; i < 20000; ++i) {
    const std::uint64_t x = rng.uniform_below(13);
    REQUIRE(x < 13);
    ++hits[x];
  }
  // Expected ~1538 per bucket; a 4-sigma window is ~150 wide.
  for (const int h : hits) {
    CHECK(h > 1300);
    CHECK(h < 1800);
  }
}

TEST_CASE("uniform_int covers the inclusive range") {
  Rng rng(11);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t x = rng.uniform_int(-3, 3);
    REQUIRE(x >= -3);
    REQUIRE(x <= 3);
    seen.insert(x);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("uniform01 lies in the half-open unit interval") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform01();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
}

TEST_CASE("normal sample moments match the requested distribution") {
  Rng rng(123);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(2.0, 3.0);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  // 4-sigma window on the sample mean: 4 * 3 / sqrt(n) = 0.038.
  CHECK(std::abs(mean - 2.0) < 0.038);
  CHECK(std::abs(std::sqrt(var) - 3.0) < 0.05);
}

TEST_CASE("shuffle is a permutation, deterministic per seed") {
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  std::vector<int> a = v, b = v, c = v;
  Rng(42).shuffle(a);
  Rng(42).shuffle(b);
  Rng(43).shuffle(c);
  CHECK(a == b);
  CHECK(a != c);
  std::sort(a.begin(), a.end());
  CHECK(a == v);
}

TEST_CASE("child streams are deterministic and independent") {
  const Rng root(99);
  Rng c1 = root.child(1);
  Rng c1_again = root.child(1);
  Rng c2 = root.child(2);
  CHECK(c1.next_u64() == c1_again.next_u64());
  Rng c1b = root.child(1);
  CHECK(c1b.next_u64() != c2.next_u64());

  // Consuming draws from one child must not perturb a sibling.
  Rng left = root.child(10);
  for (int i = 0; i < 17; ++i) left.next_u64();
  Rng right = root.child(11);
  CHECK(right.next_u64() == root.child(11).next_u64());
}
