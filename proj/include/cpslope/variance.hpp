#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cpslope/chain_state.hpp"
#include "cpslope/dataset.hpp"
#include "cpslope/priors.hpp"
#include "cpslope/rng.hpp"

namespace cpslope {

class Rng;

// s1 = fixed_free, s2 = fixed_shared (plug-in posterior-mean estimates
// computed once, before sampling); s3 = gibbs_free, s4 = gibbs_shared
// (variances resampled from their full conditionals every iteration).
enum class VarianceMode { fixed_free, fixed_shared, gibbs_free, gibbs_shared };

struct VarianceConfig {
  double alpha0 = 1.0;
  double beta0 = 1.0;
  VarianceMode mode = VarianceMode::fixed_free;

  // Checks the posterior-mean existence conditions for the fixed modes.
  void validate(int n_series, int n_reps) const;
};

// Posterior sum-of-squares functional of one replicate vector:
// [R nu0 mu0t^2 + (R+nu0) sum x^2 - (sum x)^2 - 2 nu0 mu0t sum x] / (2(R+nu0)),
// evaluated in the algebraically equal centered form, so it is non-negative
// by construction.
double beta_hat(const Eigen::VectorXd& x_nt, double mu0t, double nu0);

// Plug-in estimate for one series: sigma2[t] = (beta0 + beta_hat_t) /
// (alpha0 + R/2 - 1).
Eigen::VectorXd estimate_variance_series(const Eigen::MatrixXd& x,
                                         const PriorConfig& prior,
                                         const VarianceConfig& cfg);

// Plug-in estimates sigma2[n][t] = (beta0 + beta_hat_nt) / (alpha0 + R/2 - 1).
Eigen::MatrixXd estimate_variance_free(const Dataset& data,
                                       const PriorConfig& prior,
                                       const VarianceConfig& cfg);

// Shared across series: sigma2[t] = (beta0 + sum_n beta_hat_nt) /
// (alpha0 + N R / 2 - 1).
Eigen::VectorXd estimate_variance_shared(const Dataset& data,
                                         const PriorConfig& prior,
                                         const VarianceConfig& cfg);

// Inverse-gamma draw realized as the reciprocal of a gamma draw. The
// underlying gamma has the given shape and RATE (its mean is shape / rate);
// the resulting inverse-gamma has mean rate / (shape - 1) for shape > 1.
double sample_inverse_gamma(double shape, double rate, Rng& rng);

double gibbs_shape_free(int n_reps, double alpha0);
double gibbs_shape_shared(int n_series, int n_reps, double alpha0);
double gibbs_rate_free(const Eigen::VectorXd& x_t, double mu_t, double theta_t,
                       double mu0t, double nu0, double beta0);

// Full-conditional draw of sigma2_t for one series at every t, given the
// current piecewise mean and theta. Independent across t.
Eigen::VectorXd gibbs_update_variance_free(const Eigen::MatrixXd& x,
                                           const ChainState& state,
                                           const PriorConfig& prior,
                                           const VarianceConfig& cfg, Rng& rng);

// Full-conditional draw of the shared sigma2_t, pooling residuals of all
// series; requires the current state of every chain.
Eigen::VectorXd gibbs_update_variance_shared(const Dataset& data,
                                             const std::vector<ChainState>& states,
                                             const PriorConfig& prior,
                                             const VarianceConfig& cfg,
                                             Rng& rng);

}  // namespace cpslope
