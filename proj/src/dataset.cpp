#include "cpslope/dataset.hpp"

#include "cpslope/errors.hpp"

namespace cpslope {

void Dataset::validate() const {
  if (n_series < 1 || n_reps < 1) {
    throw ConfigError("dataset: need at least one series and one replicate");
  }
  if (n_times < 3) {
    throw ConfigError("dataset: need at least three time-points, got " +
                      std::to_string(n_times));
  }
  if (static_cast<int>(values.size()) != n_series ||
      static_cast<int>(series_ids.size()) != n_series) {
    throw ConfigError("dataset: series count mismatch");
  }
  for (int n = 0; n < n_series; ++n) {
    if (values[n].rows() != n_times || values[n].cols() != n_reps) {
      throw ConfigError("dataset: series " + series_ids[n] +
                        " has inconsistent dimensions");
    }
    if (!values[n].allFinite()) {
      throw ConfigError("dataset: series " + series_ids[n] +
                        " contains non-finite values");
    }
  }
  if (variances) {
    if (variances->rows() != n_series || variances->cols() != n_times) {
      throw ConfigError("dataset: variance matrix must be N x T");
    }
    if (!variances->allFinite() || (variances->array() <= 0.0).any()) {
      throw ConfigError("dataset: variances must be strictly positive and finite");
    }
  }
}

Eigen::VectorXd grand_mean(const Dataset& data) {
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(data.n_times);
  for (const auto& x : data.values) {
    mu0 += x.rowwise().sum();
  }
  return mu0 / static_cast<double>(data.n_series * data.n_reps);
}

}  // namespace cpslope
