#include "cpslope/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cpslope/errors.hpp"
#include "cpslope/model.hpp"

namespace cpslope {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double lik_delta(const Eigen::MatrixXd& x, const ChainState& before,
                 const ChainState& after, const Eigen::VectorXd& sigma2,
                 const SamplerConfig& cfg, int t_lo, int t_hi) {
  if (cfg.likelihood_off) return 0.0;
  return log_likelihood_delta(x, before, after, sigma2, t_lo, t_hi);
}

// Active neighbours of time-point t within `state` (t itself need not be
// active): largest active < t and smallest active > t, boundaries included.
void active_neighbours(const ChainState& state, int t, int& left, int& right) {
  auto it = std::lower_bound(state.tau.begin(), state.tau.end(), t);
  left = (it == state.tau.begin()) ? 1 : *(it - 1);
  auto jt = std::upper_bound(state.tau.begin(), state.tau.end(), t);
  right = (jt == state.tau.end()) ? state.n_times() : *jt;
}

bool accept(double log_ratio, Rng& rng) {
  if (log_ratio == neg_inf) return false;
  if (log_ratio >= 0.0) {
    rng.uniform();  // keep the stream layout identical on every path
    return true;
  }
  return std::log(rng.uniform()) < log_ratio;
}

}  // namespace

void SamplerConfig::validate(int n_times, int n_reps) {
  prior.validate(n_times);
  if (!(variance.alpha0 > 0.0) || !(variance.beta0 > 0.0)) {
    throw ConfigError("sampler: alpha0 and beta0 must be positive");
  }
  if (!(moves.c > 0.0)) throw ConfigError("sampler: move scale c must be positive");
  if (moves.d1 < 1) throw ConfigError("sampler: d1 must be >= 1");
  if (moves.d2 == 0) moves.d2 = std::max(1, n_times / 20);
  if (moves.d2 < 1) throw ConfigError("sampler: d2 must be >= 1");
  if (n_iterations < 1) throw ConfigError("sampler: need at least one iteration");
  if (burn_in < 0 || burn_in >= n_iterations) {
    throw ConfigError("sampler: burn-in must lie in [0, iterations)");
  }
  if (thin < 1) throw ConfigError("sampler: thin must be >= 1");
  if (warm_start_iterations < 0) {
    throw ConfigError("sampler: warm start length must be >= 0");
  }
  if (init_max_retries < 1) {
    throw ConfigError("sampler: init retry count must be >= 1");
  }
  (void)n_reps;
}

double p_add(int ell, int max_ell) {
  if (ell >= max_ell) return 0.0;
  if (ell == 0) return 1.0;
  return 0.5;
}

double birth_log_ratio(const ChainState& reduced, const ChainState& full,
                       int inserted, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& sigma2, const SamplerConfig& cfg) {
  const int t_max = reduced.n_times();
  const int ell = reduced.ell();
  const int max_ell = cfg.prior.max_ell;
  int left, right;
  active_neighbours(reduced, inserted, left, right);
  const int gap = right - left;
  double lr = lik_delta(x, reduced, full, sigma2, cfg, left + 1, right - 1);
  lr += log_prior_tau(full.tau, t_max) - log_prior_tau(reduced.tau, t_max);
  lr += log_prior_ell(ell + 1, t_max, cfg.prior) -
        log_prior_ell(ell, t_max, cfg.prior);
  lr += std::log(1.0 - p_add(ell + 1, max_ell));
  lr += std::log(static_cast<double>(gap - 1));
  lr -= std::log(p_add(ell, max_ell));
  return lr;
}

double move2_log_ratio(const ChainState& cur, const ChainState& cand,
                       const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma2,
                       const SamplerConfig& cfg) {
  double lr = lik_delta(x, cur, cand, sigma2, cfg, 1, cur.n_times());
  lr += log_prior_theta(cand.theta, sigma2, cfg.prior) -
        log_prior_theta(cur.theta, sigma2, cfg.prior);
  return lr;
}

double move3_log_ratio(const ChainState& cur, const ChainState& cand,
                       const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma2,
                       const SamplerConfig& cfg, int t_lo, int t_hi) {
  const int t_max = cur.n_times();
  const double cand_prior = log_prior_tau(cand.tau, t_max);
  if (cand_prior == neg_inf) return neg_inf;  // never evaluate the likelihood
  return lik_delta(x, cur, cand, sigma2, cfg, t_lo, t_hi) + cand_prior -
         log_prior_tau(cur.tau, t_max);
}

Move1Outcome move1_birth_death(const ChainState& state, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& sigma2,
                               const SamplerConfig& cfg, Rng& rng) {
  Move1Outcome out;
  out.proposed = state;
  const int t_max = state.n_times();
  const int ell = state.ell();
  const int max_ell = cfg.prior.max_ell;
  if (max_ell == 0) {  // no room for change-points at all
    out.immediate_reject = true;
    out.log_accept_ratio = neg_inf;
    return out;
  }
  out.is_birth = rng.uniform() < p_add(ell, max_ell);
  if (out.is_birth) {
    const int j = rng.uniform_int(0, ell);  // segment between actives a and b
    const int a = (j > 0) ? state.tau[j - 1] : 1;
    const int b = (j < ell) ? state.tau[j] : t_max;
    if (b - a == 1) {
      out.immediate_reject = true;
      out.log_accept_ratio = neg_inf;
      return out;
    }
    out.position = rng.uniform_int(a + 1, b - 1);
    out.proposed.tau.insert(out.proposed.tau.begin() + j, out.position);
    out.log_accept_ratio =
        birth_log_ratio(state, out.proposed, out.position, x, sigma2, cfg);
  } else {
    const int k = rng.uniform_int(0, ell - 1);
    out.position = state.tau[k];
    out.proposed.tau.erase(out.proposed.tau.begin() + k);
    out.log_accept_ratio =
        -birth_log_ratio(out.proposed, state, out.position, x, sigma2, cfg);
  }
  out.accepted = accept(out.log_accept_ratio, rng);
  return out;
}

MoveOutcome move2_theta_walk(const ChainState& state, const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& sigma2,
                             const SamplerConfig& cfg, Rng& rng) {
  MoveOutcome out;
  out.proposed = state;
  const int t_max = state.n_times();
  for (int t = 0; t < t_max; ++t) {
    out.proposed.theta(t) =
        rng.normal(state.theta(t), std::sqrt(cfg.moves.c * sigma2(t)));
  }
  out.log_accept_ratio = move2_log_ratio(state, out.proposed, x, sigma2, cfg);
  out.accepted = accept(out.log_accept_ratio, rng);
  return out;
}

MoveOutcome move3a_joint_shift(const ChainState& state, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& sigma2,
                               const SamplerConfig& cfg, Rng& rng) {
  MoveOutcome out;
  out.proposed = state;
  if (state.ell() == 0) {  // nothing to move; counted as accepted
    out.no_op = true;
    out.accepted = true;
    return out;
  }
  for (std::size_t i = 0; i < state.tau.size(); ++i) {
    out.proposed.tau[i] = state.tau[i] + rng.uniform_int(-cfg.moves.d1, cfg.moves.d1);
  }
  out.log_accept_ratio = move3_log_ratio(state, out.proposed, x, sigma2, cfg, 2,
                                         state.n_times() - 1);
  out.accepted = accept(out.log_accept_ratio, rng);
  return out;
}

MoveOutcome move3b_single_shift(const ChainState& state, const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& sigma2,
                                const SamplerConfig& cfg, Rng& rng) {
  MoveOutcome out;
  out.proposed = state;
  const int ell = state.ell();
  if (ell == 0) {
    out.no_op = true;
    out.accepted = true;
    return out;
  }
  const int i = rng.uniform_int(0, ell - 1);
  const int shift = rng.uniform_int(-cfg.moves.d2, cfg.moves.d2);
  out.proposed.tau[i] = state.tau[i] + shift;
  const int left = (i > 0) ? state.tau[i - 1] : 1;
  const int right = (i + 1 < ell) ? state.tau[i + 1] : state.n_times();
  out.log_accept_ratio =
      move3_log_ratio(state, out.proposed, x, sigma2, cfg, left + 1, right - 1);
  out.accepted = accept(out.log_accept_ratio, rng);
  return out;
}

MoveOutcome move4_refresh_inactive(const ChainState& state,
                                   const Eigen::VectorXd& sigma2,
                                   const SamplerConfig& cfg, Rng& rng) {
  MoveOutcome out;
  out.proposed = state;
  out.accepted = true;  // exact Gibbs step
  const int t_max = state.n_times();
  std::size_t next = 0;
  bool touched = false;
  for (int t = 2; t <= t_max - 1; ++t) {
    if (next < state.tau.size() && state.tau[next] == t) {
      ++next;
      continue;
    }
    out.proposed.theta(t - 1) = rng.normal(
        cfg.prior.mu0(t - 1), std::sqrt(sigma2(t - 1) / cfg.prior.nu0));
    touched = true;
  }
  out.no_op = !touched;
  return out;
}

ChainState init_state(const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma2,
                      const SamplerConfig& cfg, Rng& rng) {
  (void)sigma2;
  const int t_max = static_cast<int>(x.rows());
  const double n_reps = static_cast<double>(x.cols());
  ChainState state;
  state.tau = {rng.uniform_int(2, t_max - 1)};
  const Eigen::VectorXd xbar = x.rowwise().mean();
  state.theta =
      (cfg.prior.nu0 * cfg.prior.mu0 + n_reps * xbar) / (cfg.prior.nu0 + n_reps);
  return state;
}

SeriesChain::SeriesChain(const Eigen::MatrixXd& x, Eigen::VectorXd sigma2,
                         const SamplerConfig& cfg, Rng rng)
    : x_(x), sigma2_(std::move(sigma2)), cfg_(cfg), rng_(rng) {
  trace_.n_times = static_cast<int>(x_.rows());
  trace_.max_ell = cfg_.prior.max_ell;
  trace_.thin = cfg_.thin;
  trace_.burn_in = cfg_.burn_in;
  trace_.n_iterations = cfg_.n_iterations;
}

double SeriesChain::log_posterior() const {
  const int t_max = state_.n_times();
  double lp = cfg_.likelihood_off ? 0.0 : log_likelihood(x_, state_, sigma2_);
  lp += log_prior_tau(state_.tau, t_max);
  lp += log_prior_ell(state_.ell(), t_max, cfg_.prior);
  lp += log_prior_theta(state_.theta, sigma2_, cfg_.prior);
  return lp;
}

void SeriesChain::initialize() {
  for (int attempt = 0; attempt < cfg_.init_max_retries; ++attempt) {
    state_ = init_state(x_, sigma2_, cfg_, rng_);
    if (std::isfinite(log_posterior())) return;
  }
  throw std::runtime_error(
      "sampler: failed to find an initial state with finite posterior after " +
      std::to_string(cfg_.init_max_retries) + " attempts");
}

void SeriesChain::sweep(int iteration) {
  (void)iteration;
  auto m1 = move1_birth_death(state_, x_, sigma2_, cfg_, rng_);
  if (m1.accepted) state_ = std::move(m1.proposed);
  last_accepts_[0] = m1.accepted;

  auto m2 = move2_theta_walk(state_, x_, sigma2_, cfg_, rng_);
  if (m2.accepted) state_ = std::move(m2.proposed);
  last_accepts_[1] = m2.accepted;

  auto m3 = (rng_.uniform() < 0.5)
                ? move3a_joint_shift(state_, x_, sigma2_, cfg_, rng_)
                : move3b_single_shift(state_, x_, sigma2_, cfg_, rng_);
  if (m3.accepted && !m3.no_op) state_ = std::move(m3.proposed);
  last_accepts_[2] = m3.accepted;

  auto m4 = move4_refresh_inactive(state_, sigma2_, cfg_, rng_);
  if (!m4.no_op) state_ = std::move(m4.proposed);
  last_accepts_[3] = m4.accepted;

  for (int i = 0; i < 4; ++i) accept_counts_[i] += last_accepts_[i];
  assert(state_.is_valid(cfg_.prior.max_ell));
}

void SeriesChain::gibbs_variance() {
  sigma2_ = gibbs_update_variance_free(x_, state_, cfg_.prior, cfg_.variance, rng_);
}

void SeriesChain::set_sigma2(const Eigen::VectorXd& sigma2) { sigma2_ = sigma2; }

void SeriesChain::maybe_record(int iteration) {
  if (iteration <= cfg_.burn_in || iteration % cfg_.thin != 0) return;
  TraceRecord rec;
  rec.iteration = iteration;
  rec.tau = state_.tau;
  rec.theta_active.reserve(state_.tau.size() + 2);
  rec.theta_active.push_back(state_.theta(0));
  for (int t : state_.tau) rec.theta_active.push_back(state_.theta_at(t));
  rec.theta_active.push_back(state_.theta(state_.n_times() - 1));
  rec.log_posterior = log_posterior();
  rec.accepted = last_accepts_;
  trace_.records.push_back(std::move(rec));
}

Trace run_series_fixed(const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma2,
                       const SamplerConfig& cfg, std::uint64_t seed) {
  SeriesChain chain(x, sigma2, cfg, Rng(seed));
  chain.initialize();
  for (int m = 1; m <= cfg.n_iterations; ++m) {
    chain.sweep(m);
    chain.maybe_record(m);
  }
  return chain.take_trace();
}

Trace run_series_gibbs_free(const Eigen::MatrixXd& x, const SamplerConfig& cfg,
                            std::uint64_t seed) {
  const Eigen::VectorXd plugin =
      estimate_variance_series(x, cfg.prior, cfg.variance);
  SeriesChain chain(x, plugin, cfg, Rng(seed));
  chain.initialize();
  for (int m = 1; m <= cfg.warm_start_iterations; ++m) {
    chain.sweep(m);
  }
  for (int m = 1; m <= cfg.n_iterations; ++m) {
    chain.sweep(m);
    chain.gibbs_variance();
    chain.maybe_record(m);
  }
  return chain.take_trace();
}

}  // namespace cpslope
