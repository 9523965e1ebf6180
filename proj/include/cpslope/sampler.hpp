#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "cpslope/chain_state.hpp"
#include "cpslope/priors.hpp"
#include "cpslope/rng.hpp"
#include "cpslope/variance.hpp"

namespace cpslope {

struct MoveTunables {
  double c = 0.05;  // random-walk scale of the mean update (move 2)
  int d1 = 1;       // joint location-shift window (move 3.a)
  int d2 = 0;       // single location-shift window (move 3.b); 0 = max(1, T/20)
};

struct SamplerConfig {
  PriorConfig prior;
  VarianceConfig variance;
  MoveTunables moves;
  int n_iterations = 70000;
  int burn_in = 20000;
  int thin = 10;
  int warm_start_iterations = 30000;  // fixed-variance warm start before gibbs_free
  int init_max_retries = 100;
  // Test-only hook: replaces the log likelihood by zero everywhere, turning
  // the posterior into the prior (used by the calibration tests).
  bool likelihood_off = false;

  // Resolves derived defaults (d2, max_ell) and checks ranges.
  void validate(int n_times, int n_reps);
};

struct TraceRecord {
  int iteration = 0;
  std::vector<int> tau;
  std::vector<double> theta_active;  // theta at {1} + tau + {T}
  double log_posterior = 0.0;
  std::array<bool, 4> accepted{};  // moves 1..4 of this iteration

  int ell() const { return static_cast<int>(tau.size()); }
};

// Thinned post-burn-in record of one chain: iteration m is recorded exactly
// when m > burn_in and m % thin == 0.
struct Trace {
  int n_times = 0;
  int max_ell = 0;
  int thin = 1;
  int burn_in = 0;
  int n_iterations = 0;
  std::vector<TraceRecord> records;
};

// Probability of proposing an addition (vs. deletion) in move 1:
// 1 at ell = 0, 1/2 for 0 < ell < max_ell, 0 at ell = max_ell.
double p_add(int ell, int max_ell);

// ---- log acceptance ratios, candidate form -------------------------------
// Shared by the sampling wrappers and the tests; each returns log(alpha)
// before the min(1, alpha) clamp, -inf encoding certain rejection.

// Ratio of the addition move inserting `inserted` into `reduced`, yielding
// `full`. The deletion ratio is the exact negation with the roles swapped.
double birth_log_ratio(const ChainState& reduced, const ChainState& full,
                       int inserted, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& sigma2, const SamplerConfig& cfg);

// Mean random-walk ratio: likelihood ratio times theta-prior ratio (the
// proposal is symmetric).
double move2_log_ratio(const ChainState& cur, const ChainState& cand,
                       const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma2,
                       const SamplerConfig& cfg);

// Location-update ratio (moves 3.a, 3.b): likelihood ratio times
// location-prior ratio. [t_lo, t_hi] bounds the time range where the two
// mean curves may differ. Candidates violating the ordering constraint get
// -inf without touching the likelihood.
double move3_log_ratio(const ChainState& cur, const ChainState& cand,
                       const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma2,
                       const SamplerConfig& cfg, int t_lo, int t_hi);

// ---- sampling moves -------------------------------------------------------

struct Move1Outcome {
  bool is_birth = false;
  bool immediate_reject = false;  // unit gap: no admissible insertion slot
  int position = 0;               // inserted or deleted change-point
  ChainState proposed;
  double log_accept_ratio = 0.0;
  bool accepted = false;
};

struct MoveOutcome {
  ChainState proposed;
  double log_accept_ratio = 0.0;
  bool accepted = false;
  bool no_op = false;
};

Move1Outcome move1_birth_death(const ChainState& state, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& sigma2,
                               const SamplerConfig& cfg, Rng& rng);

MoveOutcome move2_theta_walk(const ChainState& state, const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& sigma2,
                             const SamplerConfig& cfg, Rng& rng);

MoveOutcome move3a_joint_shift(const ChainState& state, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& sigma2,
                               const SamplerConfig& cfg, Rng& rng);

MoveOutcome move3b_single_shift(const ChainState& state, const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& sigma2,
                                const SamplerConfig& cfg, Rng& rng);

// Gibbs refresh of the mean parameters not allocated to a change-point or
// boundary: their full conditional is the prior. Always accepted.
MoveOutcome move4_refresh_inactive(const ChainState& state,
                                   const Eigen::VectorXd& sigma2,
                                   const SamplerConfig& cfg, Rng& rng);

// One random change-point, theta at the per-time-point conjugate posterior
// mean (nu0 mu0 + R xbar) / (nu0 + R).
ChainState init_state(const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma2,
                      const SamplerConfig& cfg, Rng& rng);

// ---- one chain ------------------------------------------------------------

class SeriesChain {
 public:
  // Keeps a reference to x; the caller owns the data for the chain lifetime.
  SeriesChain(const Eigen::MatrixXd& x, Eigen::VectorXd sigma2,
              const SamplerConfig& cfg, Rng rng);

  void initialize();          // init_state with bounded retries
  void sweep(int iteration);  // moves 1, 2, 3.a|3.b, 4
  void gibbs_variance();      // gibbs_free per-iteration variance update
  void maybe_record(int iteration);

  void set_sigma2(const Eigen::VectorXd& sigma2);
  const Eigen::VectorXd& sigma2() const { return sigma2_; }
  const ChainState& state() const { return state_; }
  const SamplerConfig& config() const { return cfg_; }
  double log_posterior() const;
  std::array<bool, 4> last_accepts() const { return last_accepts_; }
  const std::array<std::int64_t, 4>& accept_counts() const { return accept_counts_; }
  Trace take_trace() { return std::move(trace_); }

 private:
  const Eigen::MatrixXd& x_;
  Eigen::VectorXd sigma2_;
  SamplerConfig cfg_;
  Rng rng_;
  ChainState state_;
  Trace trace_;
  std::array<bool, 4> last_accepts_{};
  std::array<std::int64_t, 4> accept_counts_{};
};

// Full fixed-variance run (samplers s1/s2; sigma2 comes from the plug-in
// estimators or a variance file).
Trace run_series_fixed(const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma2,
                       const SamplerConfig& cfg, std::uint64_t seed);

// Gibbs-variance run (sampler s3): warm start with the per-series plug-in
// estimate for warm_start_iterations sweeps, then the main loop with one
// variance update per iteration.
Trace run_series_gibbs_free(const Eigen::MatrixXd& x, const SamplerConfig& cfg,
                            std::uint64_t seed);

}  // namespace cpslope
