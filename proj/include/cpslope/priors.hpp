#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cpslope {

enum class EllPriorKind { complexity, truncated_poisson };

// Hyper-parameters of the three prior blocks: the per-time-point normal prior
// on theta, the ordered-uniform prior on change-point locations (no tunables)
// and the prior on the number of change-points.
struct PriorConfig {
  double nu0 = 0.1;
  Eigen::VectorXd mu0;
  double alpha = 2.0;
  double b = 3.72;
  int max_ell = -1;  // L; negative means "derive T - 2 at validation time"
  EllPriorKind ell_prior_kind = EllPriorKind::complexity;
  double poisson_lambda = 1.0;
  int poisson_support_max = 30;

  // Resolves max_ell against T and checks ranges; throws ConfigError.
  void validate(int n_times);
};

// Sum over t of log N(theta_t; mu0_t, sigma2_t / nu0).
double log_prior_theta(const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& sigma2, const PriorConfig& cfg);

// Log prior mass of an ordered change-point configuration given its length.
// Returns -inf for any configuration violating 1 < tau_1 < ... < tau_ell < T
// (zero prior mass, used by the moves for rejection). Empty tau yields 0.
double log_prior_tau(const std::vector<int>& tau, int n_times);

// Unnormalized log prior mass of ell change-points. Complexity kind:
// -alpha * ell * log(b * (T-2) / ell), with the ell = 0 limit equal to 0.
// Truncated Poisson kind: the Poisson(lambda) log pmf on {0..support_max},
// -inf beyond. Normalization constants cancel in every MH ratio.
// Throws std::domain_error when ell is outside [0, max_ell].
double log_prior_ell(int ell, int n_times, const PriorConfig& cfg);

// Normalized prior over {0..max_ell}; diagnostics and calibration tests.
std::vector<double> normalized_ell_prior(int n_times, const PriorConfig& cfg);

struct DecreaseCheck {
  bool holds = true;      // every scanned ratio P(l)/P(l-1) below 1
  double max_ratio = 0.0; // witness: the largest scanned ratio
  int argmax_ell = 0;     // where it occurs (0 when the range is empty)
  int n_scanned = 0;
};

// Scans P(l) <= D * P(l-1) over l in (c * ell_star, max_ell] and reports the
// maximal realized ratio. Diagnostic only; never used while sampling.
DecreaseCheck check_exponential_decrease(const PriorConfig& cfg, int n_times,
                                         int ell_star, double c = 1.0);

}  // namespace cpslope
