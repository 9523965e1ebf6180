#pragma once

#include <Eigen/Dense>

#include "cpslope/chain_state.hpp"

namespace cpslope {

inline double log_normal_density(double x, double mean, double var) {
  constexpr double log_two_pi = 1.8378770664093454836;
  const double d = x - mean;
  return -0.5 * (log_two_pi + std::log(var)) - d * d / (2.0 * var);
}

// Piecewise linear mean at 1-based time index t: linear interpolation of
// theta between the two active points (change-points or boundaries 1, T)
// bracketing t. At an active point the stored theta is returned exactly.
// Throws std::domain_error if t is outside [1, T].
double piecewise_mean(int t, const ChainState& state);

// The mean at every time-point; mean_curve(state)(t - 1) equals
// piecewise_mean(t, state) bit for bit.
Eigen::VectorXd mean_curve(const ChainState& state);

// Sum over all (t, r) of the log normal density of x(t-1, r) with mean
// piecewise_mean(t) and variance sigma2(t-1). x is T x R.
// Throws std::domain_error on non-positive variances.
double log_likelihood(const Eigen::MatrixXd& x, const ChainState& state,
                      const Eigen::VectorXd& sigma2);

// log_likelihood(after) - log_likelihood(before), computed over the 1-based
// time range [t_lo, t_hi] only. The states must agree outside the range and
// the range must be flanked by active points common to both states; when that
// cannot be established the difference is recomputed in full instead (no
// error).
double log_likelihood_delta(const Eigen::MatrixXd& x, const ChainState& before,
                            const ChainState& after,
                            const Eigen::VectorXd& sigma2, int t_lo, int t_hi);

}  // namespace cpslope
