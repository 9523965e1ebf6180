#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cpslope/dataset.hpp"

namespace cpslope {

enum class NoiseKind { noisy, exact };
enum class VarianceKind { free_per_series, shared_across_series };

// Benchmark generator parameters. The exact kind produces data that satisfies
// the sampling model exactly (replicates iid given series and time); the
// noisy kind adds per-replicate change-time jitter and endpoint noise.
struct SimScenario {
  int n_times = 1000;
  int n_series = 1000;
  int n_reps = 3;
  int ell_min = 0;
  int ell_max = 9;
  NoiseKind noise = NoiseKind::noisy;
  VarianceKind variance = VarianceKind::free_per_series;
  int jitter_trials = 100;     // binomial jitter of the global positions
  double jitter_prob = 0.5;
  double replicate_jitter_mean = 2.0;  // Poisson mean of per-replicate shifts
  double slope_sd = 0.3;
  double sign_flip_prob = 0.8;
  double endpoint_sd2 = 1.0;   // per-replicate phase-endpoint variance
  std::uint64_t seed = 1;
  int max_retries = 1000;

  void validate() const;
};

struct SeriesTruth {
  std::string id;
  std::vector<int> tau;

  int ell() const { return static_cast<int>(tau.size()); }
};

struct SimResult {
  Dataset data;  // true observation variances included
  std::vector<SeriesTruth> truth;
  std::vector<std::vector<double>> slopes;      // S_1..S_ell per series
  std::vector<Eigen::VectorXd> mean_curves;     // noise-free mean per series
};

// Expected-variance profile of the observation noise: the gamma rate at
// 1-based time t, decreasing linearly from 1 at t=1 to 0.1 at t=T.
double variance_gamma_rate(int t, int n_times);

SimResult simulate_dataset(const SimScenario& scenario);

}  // namespace cpslope
