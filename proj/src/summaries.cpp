#include "cpslope/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "cpslope/model.hpp"

namespace cpslope {

namespace {

// Reconstruct the piecewise mean of a recorded state. Only theta at the
// active points is stored, which is all the mean depends on.
Eigen::VectorXd record_mean_curve(const TraceRecord& rec, int n_times) {
  ChainState state;
  state.tau = rec.tau;
  state.theta = Eigen::VectorXd::Zero(n_times);
  state.theta(0) = rec.theta_active.front();
  for (std::size_t j = 0; j < rec.tau.size(); ++j) {
    state.theta(rec.tau[j] - 1) = rec.theta_active[j + 1];
  }
  state.theta(n_times - 1) = rec.theta_active.back();
  return mean_curve(state);
}

// Type-7 quantile of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = (n - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

int map_ell(const Trace& trace) {
  if (trace.records.empty()) {
    throw std::invalid_argument("map_ell: empty trace");
  }
  std::vector<std::int64_t> counts(trace.max_ell + 1, 0);
  for (const auto& rec : trace.records) ++counts[rec.ell()];
  int best = 0;
  for (int l = 1; l <= trace.max_ell; ++l) {
    if (counts[l] > counts[best]) best = l;  // strict: ties keep the smaller
  }
  return best;
}

std::vector<LocationMarginal> conditional_location_marginals(const Trace& trace,
                                                             int ell_map) {
  std::vector<std::vector<double>> samples(ell_map);
  std::vector<LocationMarginal> out(ell_map);
  int n_conditioned = 0;
  for (const auto& rec : trace.records) {
    if (rec.ell() != ell_map) continue;
    ++n_conditioned;
    for (int j = 0; j < ell_map; ++j) {
      samples[j].push_back(rec.tau[j]);
      ++out[j].histogram[rec.tau[j]];
    }
  }
  if (n_conditioned == 0) {
    throw std::invalid_argument(
        "conditional_location_marginals: no recorded state has ell = " +
        std::to_string(ell_map));
  }
  for (int j = 0; j < ell_map; ++j) {
    auto& v = samples[j];
    std::sort(v.begin(), v.end());
    out[j].min = v.front();
    out[j].q25 = quantile_sorted(v, 0.25);
    out[j].median = quantile_sorted(v, 0.50);
    out[j].q75 = quantile_sorted(v, 0.75);
    out[j].max = v.back();
  }
  return out;
}

void z_probabilities(const Trace& trace, int ell_map,
                     std::vector<std::int64_t>& counts,
                     std::vector<double>& probs) {
  counts.assign(trace.n_times, 0);
  probs.assign(trace.n_times, 0.0);
  std::int64_t n_conditioned = 0;
  for (const auto& rec : trace.records) {
    if (rec.ell() != ell_map) continue;
    ++n_conditioned;
    for (int t : rec.tau) ++counts[t - 1];
  }
  if (n_conditioned == 0) {
    throw std::invalid_argument("z_probabilities: no recorded state has ell = " +
                                std::to_string(ell_map));
  }
  for (int t = 0; t < trace.n_times; ++t) {
    probs[t] = static_cast<double>(counts[t]) / static_cast<double>(n_conditioned);
  }
}

void fitted_mean_band(const Trace& trace, Eigen::VectorXd& mean,
                      Eigen::VectorXd& sd) {
  if (trace.records.empty()) {
    throw std::invalid_argument("fitted_mean_band: empty trace");
  }
  const int t_max = trace.n_times;
  mean = Eigen::VectorXd::Zero(t_max);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(t_max);
  for (const auto& rec : trace.records) {
    const Eigen::VectorXd mu = record_mean_curve(rec, t_max);
    mean += mu;
    sq += mu.cwiseProduct(mu);
  }
  const double n = static_cast<double>(trace.records.size());
  mean /= n;
  sd = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt();
}

SeriesSummary summarize_series(const Trace& trace, const std::string& series_id,
                               double band_multiplier) {
  SeriesSummary s;
  s.series_id = series_id;
  s.n_times = trace.n_times;
  s.n_records = static_cast<int>(trace.records.size());
  s.band_multiplier = band_multiplier;
  s.ell_map = map_ell(trace);

  s.ell_posterior.assign(trace.max_ell + 1, 0.0);
  for (const auto& rec : trace.records) s.ell_posterior[rec.ell()] += 1.0;
  for (auto& p : s.ell_posterior) p /= s.n_records;

  if (s.ell_map > 0) {
    s.location_marginals = conditional_location_marginals(trace, s.ell_map);
  }
  z_probabilities(trace, s.ell_map, s.z_counts, s.z_probs);
  for (const auto& rec : trace.records) s.n_conditioned += rec.ell() == s.ell_map;

  std::int64_t z_total = 0;
  for (auto c : s.z_counts) z_total += c;
  if (z_total != static_cast<std::int64_t>(s.ell_map) * s.n_conditioned) {
    throw std::logic_error("summarize_series: z-count identity violated");
  }

  fitted_mean_band(trace, s.fitted_mean, s.fitted_sd);
  return s;
}

BenchmarkScore score_benchmark(
    const std::vector<std::pair<std::string, int>>& estimates,
    const std::vector<SeriesTruth>& truth) {
  std::unordered_map<std::string, int> true_ell;
  for (const auto& tr : truth) true_ell[tr.id] = tr.ell();
  std::map<int, std::vector<double>> abs_errors;
  BenchmarkScore score;
  for (const auto& [id, ell_hat] : estimates) {
    auto it = true_ell.find(id);
    if (it == true_ell.end()) {
      throw std::invalid_argument("score_benchmark: series '" + id +
                                  "' missing from ground truth");
    }
    const int err = ell_hat - it->second;
    ++score.signed_error_histogram[err];
    abs_errors[it->second].push_back(std::abs(err));
  }
  for (const auto& [ell, errors] : abs_errors) {
    MaeRow row;
    row.true_ell = ell;
    row.count = static_cast<int>(errors.size());
    double sum = 0.0;
    for (double e : errors) sum += e;
    row.mae = sum / row.count;
    if (row.count > 1) {
      double ss = 0.0;
      for (double e : errors) ss += (e - row.mae) * (e - row.mae);
      row.se = std::sqrt(ss / (row.count - 1)) / std::sqrt(row.count);
    }
    score.rows.push_back(row);
  }
  return score;
}

}  // namespace cpslope
