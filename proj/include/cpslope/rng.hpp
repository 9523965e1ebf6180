#pragma once

#include <cstdint>
#include <random>

namespace cpslope {

// Random stream backed by mt19937_64. Distribution objects are constructed
// per call so that every draw depends only on the engine state, never on
// cached values from unrelated call sites.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  // Uniform integer on the inclusive range [lo, hi].
  int uniform_int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }

  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }

  // Gamma with the given shape and scale (mean shape * scale).
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }

  int poisson(double mean) {
    return std::poisson_distribution<int>(mean)(engine_);
  }

  int binomial(int trials, double prob) {
    return std::binomial_distribution<int>(trials, prob)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; good avalanche for deriving independent seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-series stream seed derived from one master seed. Streams for distinct
// indices are independent of the execution schedule, which is what makes
// parallel and serial runs produce identical chains.
inline std::uint64_t series_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(master_seed ^ splitmix64(index + 1));
}

}  // namespace cpslope
