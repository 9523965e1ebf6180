#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpslope/sampler.hpp"
#include "cpslope/synthetic.hpp"

namespace cpslope {

// Empirical distribution of one change-point location conditional on the MAP
// number of change-points. Quantiles use type-7 linear interpolation.
struct LocationMarginal {
  double min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
  std::map<int, std::int64_t> histogram;  // time-point -> count
};

struct SeriesSummary {
  std::string series_id;
  int n_times = 0;
  int n_records = 0;
  int n_conditioned = 0;  // records with ell == ell_map
  std::vector<double> ell_posterior;  // over {0..max_ell}
  int ell_map = 0;
  std::vector<LocationMarginal> location_marginals;
  std::vector<std::int64_t> z_counts;  // per time-point, over conditioned records
  std::vector<double> z_probs;
  Eigen::VectorXd fitted_mean;
  Eigen::VectorXd fitted_sd;
  double band_multiplier = 2.0;  // band = mean +/- multiplier * sd
};

// Mode of the empirical pmf of ell; ties break toward the smaller value.
// Throws std::invalid_argument on an empty trace.
int map_ell(const Trace& trace);

// Throws std::invalid_argument when no recorded state has ell == ell_map.
std::vector<LocationMarginal> conditional_location_marginals(const Trace& trace,
                                                             int ell_map);

// Per time-point count (and fraction) of conditioned states whose tau
// contains it. The counts sum to ell_map * n_conditioned exactly.
void z_probabilities(const Trace& trace, int ell_map,
                     std::vector<std::int64_t>& counts,
                     std::vector<double>& probs);

// Mean and standard deviation of the piecewise mean at every time-point
// across all recorded states.
void fitted_mean_band(const Trace& trace, Eigen::VectorXd& mean,
                      Eigen::VectorXd& sd);

SeriesSummary summarize_series(const Trace& trace, const std::string& series_id,
                               double band_multiplier = 2.0);

struct MaeRow {
  int true_ell = 0;
  int count = 0;
  double mae = 0.0;
  std::optional<double> se;  // absent for singleton strata
};

struct BenchmarkScore {
  std::vector<MaeRow> rows;                         // ordered by true_ell
  std::map<int, std::int64_t> signed_error_histogram;  // (ell_hat - ell) -> count
};

// MAE of the MAP estimates stratified by the true number of change-points.
// Throws std::invalid_argument when an estimated id is missing from truth.
BenchmarkScore score_benchmark(
    const std::vector<std::pair<std::string, int>>& estimates,
    const std::vector<SeriesTruth>& truth);

}  // namespace cpslope
