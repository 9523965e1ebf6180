#include "cpslope/variance.hpp"

#include <cmath>

#include "cpslope/errors.hpp"
#include "cpslope/model.hpp"

namespace cpslope {

void VarianceConfig::validate(int n_series, int n_reps) const {
  if (!(alpha0 > 0.0) || !(beta0 > 0.0)) {
    throw ConfigError("variance: alpha0 and beta0 must be positive");
  }
  if (mode == VarianceMode::fixed_free && !(alpha0 + n_reps / 2.0 > 1.0)) {
    throw ConfigError("variance: posterior mean undefined, need alpha0 + R/2 > 1");
  }
  if (mode == VarianceMode::fixed_shared &&
      !(alpha0 + n_series * n_reps / 2.0 > 1.0)) {
    throw ConfigError("variance: posterior mean undefined, need alpha0 + NR/2 > 1");
  }
}

double beta_hat(const Eigen::VectorXd& x_nt, double mu0t, double nu0) {
  const double n_reps = static_cast<double>(x_nt.size());
  const double mean = x_nt.mean();
  const double centered_ssq = (x_nt.array() - mean).square().sum();
  const double d = mean - mu0t;
  return 0.5 * centered_ssq + n_reps * nu0 * d * d / (2.0 * (n_reps + nu0));
}

Eigen::VectorXd estimate_variance_series(const Eigen::MatrixXd& x,
                                         const PriorConfig& prior,
                                         const VarianceConfig& cfg) {
  const int n_reps = static_cast<int>(x.cols());
  if (!(cfg.alpha0 + n_reps / 2.0 > 1.0)) {
    throw ConfigError("variance: posterior mean undefined, need alpha0 + R/2 > 1");
  }
  const double denom = cfg.alpha0 + n_reps / 2.0 - 1.0;
  Eigen::VectorXd sigma2(x.rows());
  for (int t = 0; t < x.rows(); ++t) {
    sigma2(t) = (cfg.beta0 + beta_hat(x.row(t), prior.mu0(t), prior.nu0)) / denom;
  }
  return sigma2;
}

Eigen::MatrixXd estimate_variance_free(const Dataset& data,
                                       const PriorConfig& prior,
                                       const VarianceConfig& cfg) {
  Eigen::MatrixXd sigma2(data.n_series, data.n_times);
  for (int n = 0; n < data.n_series; ++n) {
    sigma2.row(n) = estimate_variance_series(data.values[n], prior, cfg);
  }
  return sigma2;
}

Eigen::VectorXd estimate_variance_shared(const Dataset& data,
                                         const PriorConfig& prior,
                                         const VarianceConfig& cfg) {
  if (!(cfg.alpha0 + data.n_series * data.n_reps / 2.0 > 1.0)) {
    throw ConfigError("variance: posterior mean undefined, need alpha0 + NR/2 > 1");
  }
  const double denom = cfg.alpha0 + data.n_series * data.n_reps / 2.0 - 1.0;
  Eigen::VectorXd sigma2(data.n_times);
  for (int t = 0; t < data.n_times; ++t) {
    double acc = cfg.beta0;
    for (int n = 0; n < data.n_series; ++n) {
      acc += beta_hat(data.values[n].row(t), prior.mu0(t), prior.nu0);
    }
    sigma2(t) = acc / denom;
  }
  return sigma2;
}

double sample_inverse_gamma(double shape, double rate, Rng& rng) {
  // reciprocal of Gamma(shape, rate); std::gamma_distribution is
  // parameterized by shape and scale = 1/rate
  return 1.0 / rng.gamma(shape, 1.0 / rate);
}

double gibbs_shape_free(int n_reps, double alpha0) {
  return (n_reps + 1) / 2.0 + alpha0;
}

double gibbs_shape_shared(int n_series, int n_reps, double alpha0) {
  return n_series * (n_reps + 1) / 2.0 + alpha0;
}

double gibbs_rate_free(const Eigen::VectorXd& x_t, double mu_t, double theta_t,
                       double mu0t, double nu0, double beta0) {
  const double resid_ssq = (x_t.array() - mu_t).square().sum();
  const double d = theta_t - mu0t;
  return 0.5 * resid_ssq + 0.5 * nu0 * d * d + beta0;
}

Eigen::VectorXd gibbs_update_variance_free(const Eigen::MatrixXd& x,
                                           const ChainState& state,
                                           const PriorConfig& prior,
                                           const VarianceConfig& cfg, Rng& rng) {
  const int t_max = static_cast<int>(x.rows());
  const double shape = gibbs_shape_free(static_cast<int>(x.cols()), cfg.alpha0);
  const Eigen::VectorXd mu = mean_curve(state);
  Eigen::VectorXd sigma2(t_max);
  for (int t = 0; t < t_max; ++t) {
    const double rate = gibbs_rate_free(x.row(t), mu(t), state.theta(t),
                                        prior.mu0(t), prior.nu0, cfg.beta0);
    sigma2(t) = sample_inverse_gamma(shape, rate, rng);
  }
  return sigma2;
}

Eigen::VectorXd gibbs_update_variance_shared(const Dataset& data,
                                             const std::vector<ChainState>& states,
                                             const PriorConfig& prior,
                                             const VarianceConfig& cfg,
                                             Rng& rng) {
  if (static_cast<int>(states.size()) != data.n_series) {
    throw std::invalid_argument("gibbs_update_variance_shared: need one state per series");
  }
  const double shape =
      gibbs_shape_shared(data.n_series, data.n_reps, cfg.alpha0);
  Eigen::VectorXd rate = Eigen::VectorXd::Constant(data.n_times, cfg.beta0);
  for (int n = 0; n < data.n_series; ++n) {
    const Eigen::VectorXd mu = mean_curve(states[n]);
    for (int t = 0; t < data.n_times; ++t) {
      const double resid_ssq = (data.values[n].row(t).array() - mu(t)).square().sum();
      const double d = states[n].theta(t) - prior.mu0(t);
      rate(t) += 0.5 * resid_ssq + 0.5 * prior.nu0 * d * d;
    }
  }
  Eigen::VectorXd sigma2(data.n_times);
  for (int t = 0; t < data.n_times; ++t) {
    sigma2(t) = sample_inverse_gamma(shape, rate(t), rng);
  }
  return sigma2;
}

}  // namespace cpslope
