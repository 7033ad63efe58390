#include "dqrec/rng.hpp"

#include <doctest.h>

#include <numeric>
#include <vector>

using namespace dqrec;

TEST_CASE("same seed reproduces the same stream") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  CHECK(a.uniform() == b.uniform());
  CHECK(a.normal() == b.normal());
  CHECK(a.uniform_int(17) == b.uniform_int(17));
}

TEST_CASE("fork derives an independent stream without consuming state") {
  Rng base(7);
  Rng f1 = base.fork(1);
  const auto first = base.next_u64();
  Rng base2(7);
  Rng f2 = base2.fork(1);
  CHECK(first == base2.next_u64());          // forking consumed nothing
  CHECK(f1.next_u64() == f2.next_u64());     // forks agree
  CHECK(base.fork(1).next_u64() != base.fork(2).next_u64());
}

TEST_CASE("uniform_int stays in range and covers all values") {
  Rng rng(99);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 5000; ++i) {
    const auto v = rng.uniform_int(5);
    REQUIRE(v >= 0);
    REQUIRE(v < 5);
    counts[static_cast<std::size_t>(v)] += 1;
  }
  for (const int c : counts) CHECK(c > 800);  // ~1000 expected each
}

TEST_CASE("shuffle yields a permutation") {
  Rng rng(5);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto shuffled = v;
  rng.shuffle(shuffled);
  CHECK(shuffled != v);
  std::sort(shuffled.begin(), shuffled.end());
  CHECK(shuffled == v);
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(31);
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}
