#include "cpslope/priors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cpslope/errors.hpp"
#include "cpslope/model.hpp"

namespace cpslope {

namespace {
constexpr double neg_inf = -std::numeric_limits<double>::infinity();
}

void PriorConfig::validate(int n_times) {
  if (n_times < 3) throw ConfigError("prior: need T >= 3");
  if (!(nu0 > 0.0)) throw ConfigError("prior: nu0 must be positive");
  if (!(alpha > 0.0)) throw ConfigError("prior: alpha must be positive");
  if (!(b > 0.0)) throw ConfigError("prior: b must be positive");
  if (max_ell < 0) max_ell = n_times - 2;
  if (max_ell < 0 || max_ell > n_times - 2) {
    throw ConfigError("prior: max_ell must lie in [0, T-2]");
  }
  if (ell_prior_kind == EllPriorKind::truncated_poisson) {
    if (!(poisson_lambda > 0.0)) {
      throw ConfigError("prior: poisson lambda must be positive");
    }
    if (poisson_support_max < 0) {
      throw ConfigError("prior: poisson support max must be non-negative");
    }
  }
  if (mu0.size() != 0 && mu0.size() != n_times) {
    throw ConfigError("prior: mu0 length must equal T");
  }
}

double log_prior_theta(const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& sigma2, const PriorConfig& cfg) {
  const auto t_max = theta.size();
  if (cfg.mu0.size() != t_max || sigma2.size() != t_max) {
    throw std::invalid_argument("log_prior_theta: dimension mismatch");
  }
  double lp = 0.0;
  for (Eigen::Index t = 0; t < t_max; ++t) {
    const double var = sigma2(t) / cfg.nu0;
    if (!(var > 0.0)) throw std::domain_error("log_prior_theta: non-positive variance");
    lp += log_normal_density(theta(t), cfg.mu0(t), var);
  }
  return lp;
}

double log_prior_tau(const std::vector<int>& tau, int n_times) {
  const int ell = static_cast<int>(tau.size());
  if (ell == 0) return 0.0;
  int prev = 1;
  for (int t : tau) {
    if (t <= prev || t >= n_times) return neg_inf;
    prev = t;
  }
  // f(t_1..t_ell) = 1/(T-ell-1) * prod_{j>=2} 1/(T-ell+j-t_{j-1}-1)
  double lp = -std::log(static_cast<double>(n_times - ell - 1));
  for (int j = 2; j <= ell; ++j) {
    lp -= std::log(static_cast<double>(n_times - ell + j - tau[j - 2] - 1));
  }
  return lp;
}

double log_prior_ell(int ell, int n_times, const PriorConfig& cfg) {
  const int cap = cfg.max_ell >= 0 ? cfg.max_ell : n_times - 2;
  if (ell < 0 || ell > cap) {
    throw std::domain_error("log_prior_ell: ell " + std::to_string(ell) +
                            " outside [0, " + std::to_string(cap) + "]");
  }
  if (cfg.ell_prior_kind == EllPriorKind::truncated_poisson) {
    if (ell > cfg.poisson_support_max) return neg_inf;
    return -cfg.poisson_lambda + ell * std::log(cfg.poisson_lambda) -
           std::lgamma(static_cast<double>(ell) + 1.0);
  }
  if (ell == 0) return 0.0;  // the limit of the complexity expression
  const double t_star = static_cast<double>(n_times - 2);
  return -cfg.alpha * ell * std::log(cfg.b * t_star / static_cast<double>(ell));
}

std::vector<double> normalized_ell_prior(int n_times, const PriorConfig& cfg) {
  const int cap = cfg.max_ell >= 0 ? cfg.max_ell : n_times - 2;
  std::vector<double> lp(cap + 1);
  double lmax = neg_inf;
  for (int l = 0; l <= cap; ++l) {
    lp[l] = log_prior_ell(l, n_times, cfg);
    lmax = std::max(lmax, lp[l]);
  }
  double z = 0.0;
  for (double v : lp) z += std::exp(v - lmax);
  std::vector<double> p(cap + 1);
  for (int l = 0; l <= cap; ++l) p[l] = std::exp(lp[l] - lmax) / z;
  return p;
}

DecreaseCheck check_exponential_decrease(const PriorConfig& cfg, int n_times,
                                         int ell_star, double c) {
  if (cfg.ell_prior_kind != EllPriorKind::complexity) {
    throw ConfigError("check_exponential_decrease: complexity prior only");
  }
  const int cap = cfg.max_ell >= 0 ? cfg.max_ell : n_times - 2;
  DecreaseCheck out;
  const int first = static_cast<int>(std::floor(c * ell_star)) + 1;
  for (int l = std::max(1, first); l <= cap; ++l) {
    const double ratio = std::exp(log_prior_ell(l, n_times, cfg) -
                                  log_prior_ell(l - 1, n_times, cfg));
    ++out.n_scanned;
    if (ratio > out.max_ratio) {
      out.max_ratio = ratio;
      out.argmax_ell = l;
    }
  }
  out.holds = out.n_scanned == 0 || out.max_ratio < 1.0;
  return out;
}

}  // namespace cpslope
