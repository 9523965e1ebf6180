#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cpslope {

// Sampler state for one series. Change-point locations are 1-based time
// indices, strictly increasing and interior: 1 < tau[0] < ... < tau.back() < T.
// theta keeps one mean parameter per time-point regardless of how many
// change-points are active; only theta at {1} + tau + {T} enters the
// likelihood. Never compacted: the full-length vector is what keeps every
// move dimension-preserving.
struct ChainState {
  std::vector<int> tau;
  Eigen::VectorXd theta;

  int ell() const { return static_cast<int>(tau.size()); }
  int n_times() const { return static_cast<int>(theta.size()); }

  // theta at 1-based time index t.
  double theta_at(int t) const { return theta(t - 1); }

  bool is_valid(int max_ell) const {
    const int t_max = n_times();
    if (ell() > max_ell) return false;
    int prev = 1;
    for (int t : tau) {
      if (t <= prev || t >= t_max) return false;
      prev = t;
    }
    return theta.allFinite();
  }
};

}  // namespace cpslope
