#include "cpslope/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cpslope {

namespace {

inline double interpolate(double theta_l, double theta_r, int a, int b, int t) {
  return theta_l + (theta_r - theta_l) / static_cast<double>(b - a) *
                       static_cast<double>(t - a);
}

// Active points bracketing t: largest active <= t and smallest active >= t.
inline void bracket(int t, const ChainState& state, int& a, int& b) {
  const int t_max = state.n_times();
  auto it = std::lower_bound(state.tau.begin(), state.tau.end(), t);
  b = (it == state.tau.end()) ? t_max : *it;
  a = (it == state.tau.begin()) ? 1 : *(it - 1);
  if (t == t_max) a = b;  // right boundary is active
}

}  // namespace

double piecewise_mean(int t, const ChainState& state) {
  const int t_max = state.n_times();
  if (t < 1 || t > t_max) {
    throw std::domain_error("piecewise_mean: time index " + std::to_string(t) +
                            " outside [1, " + std::to_string(t_max) + "]");
  }
  if (t == 1 || t == t_max) return state.theta_at(t);
  int a, b;
  bracket(t, state, a, b);
  if (t == b) return state.theta_at(t);
  return interpolate(state.theta_at(a), state.theta_at(b), a, b, t);
}

Eigen::VectorXd mean_curve(const ChainState& state) {
  const int t_max = state.n_times();
  Eigen::VectorXd mu(t_max);
  mu(0) = state.theta(0);
  int a = 1;
  std::size_t next = 0;
  for (int t = 2; t <= t_max; ++t) {
    int b = (next < state.tau.size()) ? state.tau[next] : t_max;
    if (t == b) {
      mu(t - 1) = state.theta_at(t);
      a = b;
      ++next;
    } else {
      mu(t - 1) = interpolate(state.theta_at(a), state.theta_at(b), a, b, t);
    }
  }
  return mu;
}

double log_likelihood(const Eigen::MatrixXd& x, const ChainState& state,
                      const Eigen::VectorXd& sigma2) {
  const int t_max = static_cast<int>(x.rows());
  const int n_reps = static_cast<int>(x.cols());
  if (state.n_times() != t_max || sigma2.size() != t_max) {
    throw std::invalid_argument("log_likelihood: dimension mismatch");
  }
  if ((sigma2.array() <= 0.0).any()) {
    throw std::domain_error("log_likelihood: non-positive variance");
  }
  const Eigen::VectorXd mu = mean_curve(state);
  double ll = 0.0;
  for (int t = 0; t < t_max; ++t) {
    for (int r = 0; r < n_reps; ++r) {
      ll += log_normal_density(x(t, r), mu(t), sigma2(t));
    }
  }
  return ll;
}

namespace {

// Sum over [t_lo, t_hi] of squared residuals / (2 sigma2), the only part of
// the log likelihood that depends on the state.
double weighted_ssq(const Eigen::MatrixXd& x, const ChainState& state,
                    const Eigen::VectorXd& sigma2, int t_lo, int t_hi) {
  const int t_max = state.n_times();
  double total = 0.0;
  // segment walk starting at the active point at or before t_lo
  auto it = std::lower_bound(state.tau.begin(), state.tau.end(), t_lo);
  int a = (it == state.tau.begin()) ? 1 : *(it - 1);
  std::size_t next = static_cast<std::size_t>(it - state.tau.begin());
  for (int t = t_lo; t <= t_hi; ++t) {
    int b = (next < state.tau.size()) ? state.tau[next] : t_max;
    double mu;
    if (t == b || t == 1) {
      mu = state.theta_at(t);
      if (t == b) {
        a = b;
        ++next;
      }
    } else {
      mu = interpolate(state.theta_at(a), state.theta_at(b), a, b, t);
    }
    const double w = 1.0 / (2.0 * sigma2(t - 1));
    double ssq = 0.0;
    for (int r = 0; r < x.cols(); ++r) {
      const double d = x(t - 1, r) - mu;
      ssq += d * d;
    }
    total += w * ssq;
  }
  return total;
}

bool active_in_both(int t, const ChainState& s1, const ChainState& s2) {
  if (t == 1 || t == s1.n_times()) return true;
  return std::binary_search(s1.tau.begin(), s1.tau.end(), t) &&
         std::binary_search(s2.tau.begin(), s2.tau.end(), t);
}

// True when the piecewise means of before/after provably agree outside
// [t_lo, t_hi]: tau and theta identical outside the range and the range
// flanked by common active points.
bool range_consistent(const ChainState& before, const ChainState& after,
                      int t_lo, int t_hi) {
  const int t_max = before.n_times();
  if (t_lo < 1 || t_hi > t_max || t_lo > t_hi) return false;
  if (t_lo > 1 && !active_in_both(t_lo - 1, before, after)) return false;
  if (t_hi < t_max && !active_in_both(t_hi + 1, before, after)) return false;
  auto ib = before.tau.begin(), ia = after.tau.begin();
  while (true) {
    while (ib != before.tau.end() && *ib >= t_lo && *ib <= t_hi) ++ib;
    while (ia != after.tau.end() && *ia >= t_lo && *ia <= t_hi) ++ia;
    if (ib == before.tau.end() || ia == after.tau.end()) {
      if (ib != before.tau.end() || ia != after.tau.end()) return false;
      break;
    }
    if (*ib != *ia) return false;
    ++ib;
    ++ia;
  }
  for (int t = 1; t < t_lo; ++t) {
    if (before.theta_at(t) != after.theta_at(t)) return false;
  }
  for (int t = t_hi + 1; t <= t_max; ++t) {
    if (before.theta_at(t) != after.theta_at(t)) return false;
  }
  return true;
}

}  // namespace

double log_likelihood_delta(const Eigen::MatrixXd& x, const ChainState& before,
                            const ChainState& after,
                            const Eigen::VectorXd& sigma2, int t_lo, int t_hi) {
  if (!range_consistent(before, after, t_lo, t_hi)) {
    return log_likelihood(x, after, sigma2) - log_likelihood(x, before, sigma2);
  }
  // normalization constants cancel; only weighted residuals differ
  return weighted_ssq(x, before, sigma2, t_lo, t_hi) -
         weighted_ssq(x, after, sigma2, t_lo, t_hi);
}

}  // namespace cpslope
