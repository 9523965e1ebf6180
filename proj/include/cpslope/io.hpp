#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cpslope/dataset.hpp"
#include "cpslope/sampler.hpp"
#include "cpslope/summaries.hpp"
#include "cpslope/synthetic.hpp"

namespace cpslope {

// Shortest decimal representation that round-trips the exact double.
std::string format_double(double value);

// ---- dataset CSV (long format: series_id,time,replicate,value) ------------

Dataset load_dataset(const std::string& path);
void write_dataset_csv(const Dataset& data, const std::string& path);

// ---- ground-truth sidecar (series_id,ell,tau with tau semicolon-joined) ---

void write_truth_csv(const std::vector<SeriesTruth>& truth,
                     const std::string& path,
                     const std::vector<std::string>& scenario_echo = {});
std::vector<SeriesTruth> load_truth_csv(const std::string& path);

// ---- variance CSV (series_id,time,sigma2; '*' = shared across series) -----

void write_variances_csv(const std::vector<std::string>& ids,
                         const Eigen::MatrixXd& sigma2, bool shared,
                         const std::string& path);
Eigen::MatrixXd load_variances_csv(const std::string& path,
                                   const std::vector<std::string>& ids,
                                   int n_times);

// ---- per-series trace files ------------------------------------------------

// Main file columns: iter,ell,tau,log_posterior. The theta sidecar keeps the
// active means: iter,theta with values at {1} + tau + {T} semicolon-joined.
void write_trace_csv(const Trace& trace, const std::string& trace_path,
                     const std::string& theta_path);
Trace load_trace_csv(const std::string& trace_path, const std::string& theta_path,
                     int n_times, int max_ell, int thin, int burn_in,
                     int n_iterations);

// ---- run manifest ------------------------------------------------------------

struct ManifestSeries {
  std::string id;
  std::uint64_t seed = 0;
  std::string trace_file;
  std::string theta_file;
  std::array<double, 4> accept_rates{};
};

struct RunManifest {
  std::string input;
  std::string sampler;
  std::string variances;  // path, "estimated:free", "estimated:shared" or "gibbs"
  std::uint64_t master_seed = 0;
  int n_series = 0, n_times = 0, n_reps = 0;
  SamplerConfig config;
  std::vector<ManifestSeries> series;
};

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest load_manifest(const std::string& path);

// ---- summaries JSON -----------------------------------------------------------

void write_summaries_json(const std::vector<SeriesSummary>& summaries,
                          const std::string& path);
// id -> MAP number of change-points; all `evaluate` needs.
std::vector<std::pair<std::string, int>> load_summary_map_ells(
    const std::string& path);

// ---- evaluation outputs ---------------------------------------------------------

void write_mae_table_csv(const BenchmarkScore& score, const std::string& path);
void write_error_histogram_csv(const BenchmarkScore& score,
                               const std::string& path);

// ---- plot data --------------------------------------------------------------------

void write_plot_data(const std::vector<SeriesSummary>& summaries,
                     const std::vector<std::pair<std::string, const Trace*>>& traces,
                     const std::string& dir);

// ---- plain-text key=value config files ---------------------------------------------

std::map<std::string, std::string> load_key_value_file(const std::string& path);
SimScenario parse_scenario(const std::map<std::string, std::string>& kv,
                           const std::string& context);

// Filesystem-safe series file stem, deterministic and collision-free within
// one run.
std::vector<std::string> series_file_stems(const std::vector<std::string>& ids);

}  // namespace cpslope
