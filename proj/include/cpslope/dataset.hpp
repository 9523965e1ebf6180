#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace cpslope {

// Replicated time series: N series observed at T common time-points with R
// replicates each. values[n] is a T x R matrix (row = time-point, column =
// replicate). Optional per-(series, time) observation variances are N x T.
struct Dataset {
  int n_series = 0;
  int n_times = 0;
  int n_reps = 0;
  std::vector<std::string> series_ids;
  std::vector<Eigen::MatrixXd> values;
  std::optional<Eigen::MatrixXd> variances;

  // Throws ConfigError on dimension mismatches, non-finite values or
  // non-positive variances.
  void validate() const;
};

// Mean over all series and replicates at each time-point; the default prior
// mean mu0.
Eigen::VectorXd grand_mean(const Dataset& data);

}  // namespace cpslope
