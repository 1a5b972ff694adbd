#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace d3gd {

// SplitMix64 (Steele/Lea/Flood). Small, fast, and fully reproducible across
// platforms; all randomness in this project flows through it.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Stream purposes. A stream is addressed by (purpose, index); draws on one
// stream never perturb another, so e.g. growing the agent count leaves the
// data of existing agents untouched.
enum class StreamPurpose : std::uint64_t {
  class_means = 0,
  agent_labels = 1,
  agent_features = 2,
  theta_init = 3,
  graph = 4,
  misc = 5,
};

// Deterministic stream-addressed generator: Rng(seed, purpose, index) yields
// an independent sequence per (seed, purpose, index) triple.
//
// Distributions:
//  - uniform:      53-bit mantissa in [0,1)
//  - normal:       Box-Muller on the uniform stream (pairs cached)
//  - gamma:        Marsaglia-Tsang squeeze; alpha < 1 via the boost
//                  Gamma(alpha) = Gamma(alpha+1) * U^(1/alpha)
//  - dirichlet:    normalized gamma draws
//  - multinomial:  sequential categorical draws
class Rng {
 public:
  Rng(std::uint64_t seed, StreamPurpose purpose, std::uint64_t index = 0)
      : gen_(mix(mix(seed, (static_cast<std::uint64_t>(purpose) << 32) | 0x9d3ULL), index)) {}

  std::uint64_t next_u64() { return gen_.next_u64(); }

  // [0, 1)
  double uniform() { return static_cast<double>(gen_.next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_pos() { return 1.0 - uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double gamma(double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("gamma: alpha must be positive");
    if (alpha < 1.0) {
      const double g = gamma(alpha + 1.0);
      return g * std::pow(uniform_pos(), 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::vector<double> dirichlet(double alpha, int K) {
    std::vector<double> p(static_cast<std::size_t>(K));
    for (;;) {
      double sum = 0.0;
      for (auto& v : p) {
        v = gamma(alpha);
        sum += v;
      }
      if (sum > 0.0 && std::isfinite(sum)) {
        for (auto& v : p) v /= sum;
        return p;
      }
      // all draws underflowed (possible for very small alpha); redraw
    }
  }

  int categorical(const std::vector<double>& p) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      acc += p[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(p.size()) - 1;
  }

  std::vector<int> multinomial(int M, const std::vector<double>& p) {
    std::vector<int> counts(p.size(), 0);
    for (int m = 0; m < M; ++m) counts[static_cast<std::size_t>(categorical(p))]++;
    return counts;
  }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 0x632be59bd9b4e019ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  SplitMix64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace d3gd
