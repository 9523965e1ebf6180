#include "cpslope/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "cpslope/errors.hpp"
#include "cpslope/rng.hpp"

namespace cpslope {

void SimScenario::validate() const {
  if (n_times < 3) throw ConfigError("scenario: need T >= 3");
  if (n_series < 1 || n_reps < 1) {
    throw ConfigError("scenario: need N >= 1 and R >= 1");
  }
  if (ell_min < 0 || ell_max < ell_min) {
    throw ConfigError("scenario: need 0 <= ell_min <= ell_max");
  }
  if (ell_max > n_times - 2) {
    throw ConfigError("scenario: ell_max cannot exceed T - 2");
  }
  if (jitter_trials < 0 || jitter_prob < 0.0 || jitter_prob > 1.0) {
    throw ConfigError("scenario: invalid jitter parameters");
  }
  if (replicate_jitter_mean < 0.0 || slope_sd <= 0.0) {
    throw ConfigError("scenario: invalid slope/jitter parameters");
  }
  if (sign_flip_prob < 0.0 || sign_flip_prob > 1.0) {
    throw ConfigError("scenario: sign flip probability outside [0,1]");
  }
  if (endpoint_sd2 < 0.0) throw ConfigError("scenario: endpoint variance < 0");
  if (max_retries < 1) throw ConfigError("scenario: max_retries must be >= 1");
}

double variance_gamma_rate(int t, int n_times) {
  return -0.9 * t / (n_times - 1.0) + (n_times - 0.1) / (n_times - 1.0);
}

namespace {

struct SeriesDraw {
  std::vector<int> tau;
  std::vector<double> slopes;
  Eigen::VectorXd shared_curve;                 // length T
  std::vector<Eigen::VectorXd> replicate_curves;  // R curves, length T
};

// Piecewise linear interpolation through integer-time knots.
Eigen::VectorXd interpolate_knots(const std::vector<int>& times,
                                  const std::vector<double>& values,
                                  int n_times) {
  Eigen::VectorXd curve(n_times);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const int a = times[k], b = times[k + 1];
    const double va = values[k], vb = values[k + 1];
    const double slope = (vb - va) / static_cast<double>(b - a);
    for (int t = a; t <= b; ++t) {
      curve(t - 1) = (t == b) ? vb : va + slope * (t - a);
    }
  }
  return curve;
}

bool strictly_increasing_interior(const std::vector<int>& v, int n_times) {
  int prev = 1;
  for (int t : v) {
    if (t <= prev || t >= n_times) return false;
    prev = t;
  }
  return true;
}

bool draw_series(const SimScenario& sc, Rng& rng, SeriesDraw& out) {
  const int t_max = sc.n_times;
  const int ell = rng.uniform_int(sc.ell_min, sc.ell_max);
  out.tau.assign(ell, 0);
  for (int j = 1; j <= ell; ++j) {
    const double global = static_cast<double>(t_max) * j / (ell + 1.0);
    out.tau[j - 1] = static_cast<int>(std::llround(global)) +
                     rng.binomial(sc.jitter_trials, sc.jitter_prob);
  }
  if (!strictly_increasing_interior(out.tau, t_max)) return false;

  // segment slopes: magnitudes from a half-normal, signs from a two-state
  // Markov chain flipping with probability sign_flip_prob
  out.slopes.assign(ell, 0.0);
  int sign = rng.uniform() < 0.5 ? 1 : -1;
  for (int j = 0; j < ell; ++j) {
    const double magnitude = std::abs(rng.normal(0.0, sc.slope_sd));
    if (j > 0 && rng.uniform() < sc.sign_flip_prob) sign = -sign;
    out.slopes[j] = sign * magnitude;
  }

  // shared mean: zero baseline, slope 0 until the first change-point
  std::vector<int> knot_times;
  knot_times.reserve(ell + 2);
  knot_times.push_back(1);
  knot_times.insert(knot_times.end(), out.tau.begin(), out.tau.end());
  knot_times.push_back(t_max);
  std::vector<double> knot_values(ell + 2, 0.0);
  for (int j = 1; j <= ell; ++j) {
    const int span = knot_times[j + 1] - knot_times[j];
    knot_values[j + 1] = knot_values[j] + out.slopes[j - 1] * span;
  }
  out.shared_curve = interpolate_knots(knot_times, knot_values, t_max);

  out.replicate_curves.assign(sc.n_reps, Eigen::VectorXd());
  if (sc.noise == NoiseKind::exact) {
    for (int r = 0; r < sc.n_reps; ++r) out.replicate_curves[r] = out.shared_curve;
    return true;
  }
  const double endpoint_sd = std::sqrt(sc.endpoint_sd2);
  for (int r = 0; r < sc.n_reps; ++r) {
    std::vector<int> times = knot_times;
    for (int j = 1; j <= ell; ++j) {
      const int direction = rng.uniform()< 0.5 ? -1 : 1;
      times[j] = knot_times[j] + direction * rng.poisson(sc.replicate_jitter_mean);
    }
    std::vector<double> values(knot_values);
    for (auto& v : values) v += rng.normal(0.0, endpoint_sd);
    // jitter may collapse the replicate's knot ordering: regenerate the series
    std::vector<int> interior(times.begin() + 1, times.end() - 1);
    if (!strictly_increasing_interior(interior, t_max)) return false;
    out.replicate_curves[r] = interpolate_knots(times, values, t_max);
  }
  return true;
}

std::string series_id(int index, int n_series) {
  int width = 1;
  for (int v = n_series - 1; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(index);
  return "s" + std::string(width - static_cast<int>(digits.size()), '0') + digits;
}

}  // namespace

SimResult simulate_dataset(const SimScenario& sc) {
  sc.validate();
  SimResult out;
  out.data.n_series = sc.n_series;
  out.data.n_times = sc.n_times;
  out.data.n_reps = sc.n_reps;
  out.data.values.resize(sc.n_series);
  out.data.variances = Eigen::MatrixXd(sc.n_series, sc.n_times);
  out.truth.resize(sc.n_series);
  out.slopes.resize(sc.n_series);
  out.mean_curves.resize(sc.n_series);

  // the shared-variance profile is drawn once, before the per-series fan-out
  Eigen::VectorXd shared_sigma2;
  if (sc.variance == VarianceKind::shared_across_series) {
    Rng rng(series_seed(sc.seed, static_cast<std::uint64_t>(sc.n_series)));
    shared_sigma2.resize(sc.n_times);
    for (int t = 1; t <= sc.n_times; ++t) {
      shared_sigma2(t - 1) = rng.gamma(1.0, 1.0 / variance_gamma_rate(t, sc.n_times));
    }
  }

  for (int n = 0; n < sc.n_series; ++n) {
    Rng rng(series_seed(sc.seed, static_cast<std::uint64_t>(n)));
    SeriesDraw draw;
    bool ok = false;
    for (int attempt = 0; attempt < sc.max_retries && !ok; ++attempt) {
      ok = draw_series(sc, rng, draw);
    }
    if (!ok) {
      throw ConfigError("scenario: could not generate admissible change-points "
                        "for series " + std::to_string(n) +
                        " (positions keep leaving (1, T); scale jitter_trials "
                        "down for small T)");
    }

    Eigen::VectorXd sigma2(sc.n_times);
    if (sc.variance == VarianceKind::shared_across_series) {
      sigma2 = shared_sigma2;
    } else {
      for (int t = 1; t <= sc.n_times; ++t) {
        sigma2(t - 1) = rng.gamma(1.0, 1.0 / variance_gamma_rate(t, sc.n_times));
      }
    }

    Eigen::MatrixXd x(sc.n_times, sc.n_reps);
    for (int t = 0; t < sc.n_times; ++t) {
      const double sd = std::sqrt(sigma2(t));
      for (int r = 0; r < sc.n_reps; ++r) {
        x(t, r) = rng.normal(draw.replicate_curves[r](t), sd);
      }
    }

    out.data.values[n] = std::move(x);
    out.data.variances->row(n) = sigma2;
    out.data.series_ids.push_back(series_id(n, sc.n_series));
    out.truth[n] = SeriesTruth{out.data.series_ids.back(), draw.tau};
    out.slopes[n] = draw.slopes;
    out.mean_curves[n] = std::move(draw.shared_curve);
  }
  out.data.validate();
  return out;
}

}  // namespace cpslope
