#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cpslope/model.hpp"
#include "oracle.hpp"

using namespace cpslope;

namespace {

ChainState make_state(int t_max, std::vector<int> tau,
                      std::vector<std::pair<int, double>> theta_entries,
                      double fill = 99.0) {
  ChainState s;
  s.tau = std::move(tau);
  s.theta = Eigen::VectorXd::Constant(t_max, fill);
  for (auto [t, v] : theta_entries) s.theta(t - 1) = v;
  return s;
}

}  // namespace

TEST_CASE("piecewise mean interpolates between active points") {
  // no change-points: straight line from theta_1 to theta_T
  auto s = make_state(11, {}, {{1, 0.0}, {11, 10.0}});
  CHECK(piecewise_mean(6, s) == doctest::Approx(5.0).epsilon(1e-14));

  // at a change-point the stored theta is returned exactly
  auto s2 = make_state(10, {5}, {{1, 0.0}, {5, 4.0}, {10, 14.0}});
  CHECK(piecewise_mean(5, s2) == 4.0);

  // slope right of the change-point: (14-4)/(10-5) = 2
  CHECK(piecewise_mean(7, s2) == doctest::Approx(8.0).epsilon(1e-14));
}

TEST_CASE("piecewise mean rejects out-of-range times") {
  auto s = make_state(5, {}, {{1, 0.0}, {5, 1.0}});
  CHECK_THROWS_AS(piecewise_mean(0, s), std::domain_error);
  CHECK_THROWS_AS(piecewise_mean(6, s), std::domain_error);
}

TEST_CASE("mean curve matches pointwise evaluation exactly") {
  std::mt19937_64 eng(7);
  for (int rep = 0; rep < 50; ++rep) {
    auto inst = oracle::random_instance(eng);
    const Eigen::VectorXd mu = mean_curve(inst.state);
    for (int t = 1; t <= inst.state.n_times(); ++t) {
      CHECK(mu(t - 1) == piecewise_mean(t, inst.state));
    }
    // continuity: every active point evaluates to its stored theta exactly
    for (int t : inst.state.tau) {
      CHECK(piecewise_mean(t, inst.state) == inst.state.theta(t - 1));
    }
  }
}

TEST_CASE("mean curve ignores theta at inactive points") {
  std::mt19937_64 eng(11);
  auto inst = oracle::random_instance(eng, 8, 12, 2, 2);
  Eigen::VectorXd x_probe = mean_curve(inst.state);
  ChainState tweaked = inst.state;
  for (int t = 2; t < tweaked.n_times(); ++t) {
    const bool active = std::find(tweaked.tau.begin(), tweaked.tau.end(), t) !=
                        tweaked.tau.end();
    if (!active) tweaked.theta(t - 1) += 123.0;
  }
  CHECK(log_likelihood(inst.x, inst.state, inst.sigma2) ==
        log_likelihood(inst.x, tweaked, inst.sigma2));
}

TEST_CASE("log likelihood of a single standard-normal point") {
  ChainState s;
  s.theta = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd x(1, 1);
  x(0, 0) = 0.0;
  Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(1);
  CHECK(log_likelihood(x, s, sigma2) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-12));
}

TEST_CASE("log likelihood with zero residuals is the normalization alone") {
  const int t_max = 9, n_reps = 2;
  auto s = make_state(t_max, {}, {{1, -1.0}, {t_max, 3.0}});
  Eigen::MatrixXd x(t_max, n_reps);
  const Eigen::VectorXd mu = mean_curve(s);
  for (int t = 0; t < t_max; ++t) x.row(t).setConstant(mu(t));
  const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(t_max);
  CHECK(log_likelihood(x, s, sigma2) ==
        doctest::Approx(-(t_max * n_reps / 2.0) * std::log(2 * M_PI))
            .epsilon(1e-12));
}

TEST_CASE("log likelihood matches the per-observation oracle and covers "
          "every term once") {
  std::mt19937_64 eng(3);
  for (int rep = 0; rep < 100; ++rep) {
    auto inst = oracle::random_instance(eng, 6, 12, 3, 3);
    long terms = 0;
    const double expected = oracle::log_likelihood(inst.x, inst.state,
                                                   inst.sigma2, &terms);
    CHECK(terms == inst.x.rows() * inst.x.cols());
    CHECK(log_likelihood(inst.x, inst.state, inst.sigma2) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("log likelihood rejects non-positive variances") {
  auto s = make_state(3, {}, {{1, 0.0}, {3, 0.0}});
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 1);
  Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(3);
  sigma2(1) = 0.0;
  CHECK_THROWS_AS(log_likelihood(x, s, sigma2), std::domain_error);
}

TEST_CASE("likelihood delta: identity is exactly zero") {
  std::mt19937_64 eng(5);
  auto inst = oracle::random_instance(eng);
  CHECK(log_likelihood_delta(inst.x, inst.state, inst.state, inst.sigma2, 2,
                             inst.state.n_times() - 1) == 0.0);
}

TEST_CASE("likelihood delta agrees with full recomputation") {
  std::mt19937_64 eng(13);
  int checked_shift = 0, checked_walk = 0;
  for (int rep = 0; rep < 200; ++rep) {
    auto inst = oracle::random_instance(eng, 6, 16, 3, 3);
    const int t_max = inst.state.n_times();
    const double base = log_likelihood(inst.x, inst.state, inst.sigma2);

    if (inst.state.ell() >= 1) {
      // shift one change-point inside its bracket (the move 3.b shape)
      std::uniform_int_distribution<int> pick(0, inst.state.ell() - 1);
      const int i = pick(eng);
      const int left = (i > 0) ? inst.state.tau[i - 1] : 1;
      const int right = (i + 1 < inst.state.ell()) ? inst.state.tau[i + 1] : t_max;
      if (right - left > 2) {
        ChainState cand = inst.state;
        std::uniform_int_distribution<int> pos(left + 1, right - 1);
        cand.tau[i] = pos(eng);
        const double delta = log_likelihood_delta(inst.x, inst.state, cand,
                                                  inst.sigma2, left + 1, right - 1);
        const double full = log_likelihood(inst.x, cand, inst.sigma2) - base;
        CHECK(std::abs(delta - full) < 1e-9);
        ++checked_shift;
      }
    }

    // perturb every theta (the move 2 shape; full-range delta)
    ChainState cand = inst.state;
    std::normal_distribution<double> noise(0.0, 0.5);
    for (int t = 0; t < t_max; ++t) cand.theta(t) += noise(eng);
    const double delta =
        log_likelihood_delta(inst.x, inst.state, cand, inst.sigma2, 1, t_max);
    const double full = log_likelihood(inst.x, cand, inst.sigma2) - base;
    CHECK(std::abs(delta - full) < 1e-9);
    ++checked_walk;
  }
  CHECK(checked_shift > 50);
  CHECK(checked_walk == 200);
}

TEST_CASE("likelihood delta falls back to full recomputation on an "
          "inconsistent range") {
  std::mt19937_64 eng(17);
  auto inst = oracle::random_instance(eng, 10, 14, 2, 0);
  ChainState cand = inst.state;
  cand.theta(1) += 1.0;  // t = 2 changes
  // claimed range excludes the changed point entirely
  const double delta = log_likelihood_delta(inst.x, inst.state, cand,
                                            inst.sigma2, 5, 7);
  const double full = log_likelihood(inst.x, cand, inst.sigma2) -
                      log_likelihood(inst.x, inst.state, inst.sigma2);
  CHECK(delta == doctest::Approx(full).epsilon(1e-12));
}
