#pragma once

// Test-only reference implementations. Everything here recomputes quantities
// from their definitions with plain loops and stays independent of the
// library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "cpslope/chain_state.hpp"
#include "cpslope/sampler.hpp"

namespace oracle {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454836;

inline double log_phi(double x, double mean, double var) {
  return -0.5 * kLogTwoPi - 0.5 * std::log(var) -
         (x - mean) * (x - mean) / (2.0 * var);
}

inline double mean_at(int t, const cpslope::ChainState& s) {
  const int t_max = s.n_times();
  int a = 1, b = t_max;
  for (std::size_t j = 0; j < s.tau.size(); ++j) {
    if (s.tau[j] >= t) {
      b = s.tau[j];
      break;
    }
    a = s.tau[j];
  }
  if (t == 1 || t == t_max || t == b) return s.theta(t - 1);
  const double ta = s.theta(a - 1), tb = s.theta(b - 1);
  return ta + (tb - ta) / (b - a) * (t - a);
}

// Mirrors the segment-product structure of the likelihood: the t = 1 block,
// then segments (tau_j, tau_{j+1}] with tau_0 = 1, tau_{ell+1} = T. The
// counter reports how many (t, r) terms contributed.
inline double log_likelihood(const Eigen::MatrixXd& x,
                             const cpslope::ChainState& s,
                             const Eigen::VectorXd& sigma2,
                             long* term_counter = nullptr) {
  const int t_max = static_cast<int>(x.rows());
  const int n_reps = static_cast<int>(x.cols());
  long count = 0;
  double ll = 0.0;
  for (int r = 0; r < n_reps; ++r) {
    ll += log_phi(x(0, r), s.theta(0), sigma2(0));
    ++count;
  }
  std::vector<int> bounds;
  bounds.push_back(1);
  for (int t : s.tau) bounds.push_back(t);
  bounds.push_back(t_max);
  for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
    for (int t = bounds[j] + 1; t <= bounds[j + 1]; ++t) {
      const double mu = mean_at(t, s);
      for (int r = 0; r < n_reps; ++r) {
        ll += log_phi(x(t - 1, r), mu, sigma2(t - 1));
        ++count;
      }
    }
  }
  if (term_counter) *term_counter = count;
  return ll;
}

inline double log_prior_tau(const std::vector<int>& tau, int t_max) {
  const int ell = static_cast<int>(tau.size());
  if (ell == 0) return 0.0;
  for (int j = 0; j < ell; ++j) {
    const int lo = (j == 0) ? 1 : tau[j - 1];
    if (tau[j] <= lo || tau[j] >= t_max) return kNegInf;
  }
  double lp = -std::log(static_cast<double>(t_max - ell - 1));
  for (int j = 2; j <= ell; ++j) {
    lp -= std::log(static_cast<double>(t_max - ell + j - tau[j - 2] - 1));
  }
  return lp;
}

inline double log_prior_ell(int ell, int t_max, const cpslope::PriorConfig& cfg) {
  if (cfg.ell_prior_kind == cpslope::EllPriorKind::truncated_poisson) {
    if (ell > cfg.poisson_support_max) return kNegInf;
    double log_fact = 0.0;
    for (int k = 2; k <= ell; ++k) log_fact += std::log(static_cast<double>(k));
    return -cfg.poisson_lambda + ell * std::log(cfg.poisson_lambda) - log_fact;
  }
  if (ell == 0) return 0.0;
  return -cfg.alpha * ell * std::log(cfg.b * (t_max - 2) / static_cast<double>(ell));
}

inline double log_prior_theta(const Eigen::VectorXd& theta,
                              const Eigen::VectorXd& sigma2,
                              const cpslope::PriorConfig& cfg) {
  double lp = 0.0;
  for (Eigen::Index t = 0; t < theta.size(); ++t) {
    lp += log_phi(theta(t), cfg.mu0(t), sigma2(t) / cfg.nu0);
  }
  return lp;
}

inline double log_posterior(const cpslope::ChainState& s, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& sigma2,
                            const cpslope::SamplerConfig& cfg) {
  const int t_max = s.n_times();
  const double lt = oracle::log_prior_tau(s.tau, t_max);
  if (lt == kNegInf) return kNegInf;
  double lp = cfg.likelihood_off ? 0.0 : oracle::log_likelihood(x, s, sigma2);
  lp += lt;
  lp += oracle::log_prior_ell(s.ell(), t_max, cfg.prior);
  lp += oracle::log_prior_theta(s.theta, sigma2, cfg.prior);
  return lp;
}

inline double p_add(int ell, int max_ell) {
  if (ell == max_ell) return 0.0;
  if (ell == 0) return 1.0;
  return 0.5;
}

// Acceptance ratio of inserting `pos` into `cur` (giving `cand`), assembled
// from the definition: posterior ratio times reverse/forward proposal ratio.
inline double birth_ratio(const cpslope::ChainState& cur,
                          const cpslope::ChainState& cand, int pos,
                          const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma2,
                          const cpslope::SamplerConfig& cfg) {
  int left = 1, right = cur.n_times();
  for (int t : cur.tau) {
    if (t < pos) left = t;
    if (t > pos) {
      right = t;
      break;
    }
  }
  const int gap = right - left;
  const int ell = cur.ell();
  const int max_ell = cfg.prior.max_ell;
  return oracle::log_posterior(cand, x, sigma2, cfg) -
         oracle::log_posterior(cur, x, sigma2, cfg) +
         std::log(1.0 - p_add(ell + 1, max_ell)) -
         std::log(p_add(ell, max_ell) / (gap - 1));
}

// Acceptance ratio of deleting `pos` from `cur` (giving `cand`).
inline double death_ratio(const cpslope::ChainState& cur,
                          const cpslope::ChainState& cand, int pos,
                          const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma2,
                          const cpslope::SamplerConfig& cfg) {
  int left = 1, right = cur.n_times();
  for (int t : cand.tau) {  // neighbours in the reduced configuration
    if (t < pos) left = t;
    if (t > pos) {
      right = t;
      break;
    }
  }
  const int gap = right - left;
  const int ell = cur.ell();
  const int max_ell = cfg.prior.max_ell;
  return oracle::log_posterior(cand, x, sigma2, cfg) -
         oracle::log_posterior(cur, x, sigma2, cfg) +
         std::log(p_add(ell - 1, max_ell) / (gap - 1)) -
         std::log(1.0 - p_add(ell, max_ell));
}

// Symmetric-proposal ratio (moves 2, 3.a, 3.b): plain posterior difference.
inline double symmetric_ratio(const cpslope::ChainState& cur,
                              const cpslope::ChainState& cand,
                              const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& sigma2,
                              const cpslope::SamplerConfig& cfg) {
  const double post_cand = oracle::log_posterior(cand, x, sigma2, cfg);
  if (post_cand == kNegInf) return kNegInf;
  return post_cand - oracle::log_posterior(cur, x, sigma2, cfg);
}

// ---- randomized small instances --------------------------------------------

struct Instance {
  Eigen::MatrixXd x;
  Eigen::VectorXd sigma2;
  cpslope::SamplerConfig cfg;
  cpslope::ChainState state;
};

inline Instance random_instance(std::mt19937_64& eng, int t_min = 5,
                                int t_cap = 20, int r_cap = 3, int ell_cap = 4) {
  std::uniform_int_distribution<int> t_dist(t_min, t_cap);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Instance inst;
  const int t_max = t_dist(eng);
  const int n_reps = std::uniform_int_distribution<int>(1, r_cap)(eng);
  const int ell = std::uniform_int_distribution<int>(
      0, std::min(ell_cap, t_max - 2))(eng);

  inst.cfg.prior.nu0 = 0.05 + 0.45 * unit(eng);
  inst.cfg.prior.mu0 = Eigen::VectorXd::NullaryExpr(t_max, [&](Eigen::Index) {
    return gauss(eng);
  });
  inst.cfg.prior.max_ell = t_max - 2;
  if (unit(eng) < 0.3) {
    inst.cfg.prior.ell_prior_kind = cpslope::EllPriorKind::truncated_poisson;
    inst.cfg.prior.poisson_support_max = t_max - 2;
  }

  // strictly increasing interior change-points
  std::vector<int> interior(t_max - 2);
  for (int i = 0; i < t_max - 2; ++i) interior[i] = i + 2;
  std::shuffle(interior.begin(), interior.end(), eng);
  interior.resize(ell);
  std::sort(interior.begin(), interior.end());
  inst.state.tau = interior;
  inst.state.theta = Eigen::VectorXd::NullaryExpr(t_max, [&](Eigen::Index) {
    return 2.0 * gauss(eng);
  });

  inst.sigma2 = Eigen::VectorXd::NullaryExpr(t_max, [&](Eigen::Index) {
    return 0.2 + 2.8 * unit(eng);
  });
  inst.x = Eigen::MatrixXd(t_max, n_reps);
  for (int t = 1; t <= t_max; ++t) {
    const double mu = mean_at(t, inst.state);
    for (int r = 0; r < n_reps; ++r) {
      inst.x(t - 1, r) = mu + std::sqrt(inst.sigma2(t - 1)) * gauss(eng);
    }
  }
  inst.cfg.n_iterations = 100;
  inst.cfg.burn_in = 0;
  inst.cfg.thin = 1;
  inst.cfg.validate(t_max, n_reps);
  return inst;
}

}  // namespace oracle
