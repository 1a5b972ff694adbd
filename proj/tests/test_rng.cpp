#include <doctest.h>

#include <cmath>
#include <vector>

#include "d3gd/rng.hpp"

using namespace d3gd;

TEST_CASE("streams are deterministic and independent") {
  Rng a(42, StreamPurpose::agent_labels, 3);
  Rng b(42, StreamPurpose::agent_labels, 3);
  for (int t = 0; t < 100; ++t) CHECK(a.next_u64() == b.next_u64());

  // draws on one stream do not depend on activity elsewhere
  Rng c(42, StreamPurpose::agent_labels, 4);
  Rng d(42, StreamPurpose::agent_features, 3);
  CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("uniform stays in [0,1) and uniform_pos in (0,1]") {
  Rng rng(7, StreamPurpose::misc);
  for (int t = 0; t < 10000; ++t) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform_pos();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("normal moments") {
  Rng rng(1, StreamPurpose::misc);
  const int N = 200000;
  double sum = 0.0, sq = 0.0;
  for (int t = 0; t < N; ++t) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / N) < 0.01);
  CHECK(std::abs(sq / N - 1.0) < 0.02);
}

TEST_CASE("gamma moments for both sampler branches") {
  for (double alpha : {0.1, 2.5}) {
    Rng rng(5, StreamPurpose::misc, static_cast<std::uint64_t>(alpha * 10));
    const int N = 200000;
    double sum = 0.0, sq = 0.0;
    for (int t = 0; t < N; ++t) {
      const double g = rng.gamma(alpha);
      CHECK(g >= 0.0);
      sum += g;
      sq += g * g;
    }
    const double mean = sum / N;
    const double var = sq / N - mean * mean;
    CHECK(mean == doctest::Approx(alpha).epsilon(0.05));
    CHECK(var == doctest::Approx(alpha).epsilon(0.08));
  }
  Rng rng(5, StreamPurpose::misc);
  CHECK_THROWS_AS(rng.gamma(0.0), std::invalid_argument);
}

TEST_CASE("dirichlet sums to one, multinomial counts sum to M") {
  Rng rng(9, StreamPurpose::misc);
  for (int rep = 0; rep < 50; ++rep) {
    const auto p = rng.dirichlet(0.3, 6);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    const auto counts = rng.multinomial(37, p);
    int total = 0;
    for (int c : counts) total += c;
    CHECK(total == 37);
  }
}
