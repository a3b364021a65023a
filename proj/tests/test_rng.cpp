#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "wordimp/rng.hpp"

using wordimp::Rng;

TEST_CASE("same seed reproduces the stream exactly") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("named substreams are independent of each other") {
  Rng root(7);
  Rng s1 = root.substream("train-order", 0);
  Rng s2 = root.substream("word-dropout", 0);
  Rng s3 = root.substream("train-order", 1);
  CHECK(s1.next_u64() != s2.next_u64());
  CHECK(Rng(7).substream("train-order", 0).next_u64() !=
        Rng(7).substream("train-order", 1).next_u64());
  CHECK(s3.next_u64() != Rng(7).substream("train-order", 0).next_u64());
  // Substreams are a pure function of (seed, name, index).
  CHECK(Rng(7).substream("train-order", 0).next_u64() ==
        Rng(7).substream("train-order", 0).next_u64());
}

TEST_CASE("drawing from one substream never perturbs another") {
  Rng root(9);
  Rng before = root.substream("replacement", 3);
  std::uint64_t expect = before.next_u64();
  Rng other = root.substream("random-estimator", 0);
  for (int i = 0; i < 50; ++i) other.next_u64();
  CHECK(root.substream("replacement", 3).next_u64() == expect);
}

TEST_CASE("uniform lies in [0,1) and covers the range") {
  Rng rng(3);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("uniform_int is in range and roughly uniform") {
  Rng rng(4);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    int v = rng.uniform_int(7);
    REQUIRE(v >= 0);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.05));
}

TEST_CASE("gaussian moments") {
  Rng rng(5);
  double sum = 0.0, sq = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    double g = rng.gaussian();
    sum += g;
    sq += g * g;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02).scale(1));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("shuffle is a permutation and seed-deterministic") {
  std::vector<int> v(20);
  for (int i = 0; i < 20; ++i) v[i] = i;
  std::vector<int> a = v, b = v;
  Rng r1(11), r2(11);
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);
  CHECK(a != v);  // 20! permutations; identity is effectively impossible
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == v);
}
