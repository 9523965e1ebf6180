#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "cpslope/errors.hpp"
#include "cpslope/io.hpp"
#include "cpslope/orchestrator.hpp"
#include "cpslope/priors.hpp"
#include "cpslope/summaries.hpp"
#include "cpslope/synthetic.hpp"

namespace fs = std::filesystem;
using namespace cpslope;

namespace {

int worker_count() {
  if (const char* env = std::getenv("CPSLOPE_WORKERS")) {
    const int workers = std::atoi(env);
    if (workers < 1) {
      throw ConfigError("CPSLOPE_WORKERS must be a positive integer");
    }
    return workers;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct RunOptions {
  std::string data_path;
  std::string sampler = "s1";
  std::string out_dir = "traces";
  std::string variances_path;
  bool estimate_variances = false;
  std::uint64_t seed = 1;
  SamplerConfig cfg;
  std::string ell_prior = "complexity";
};

void add_sampler_flags(CLI::App* cmd, RunOptions& opt) {
  cmd->add_option("--nu0", opt.cfg.prior.nu0, "prior precision scale nu0");
  cmd->add_option("--alpha", opt.cfg.prior.alpha, "complexity prior exponent");
  cmd->add_option("--b", opt.cfg.prior.b, "complexity prior scale");
  cmd->add_option("--max-ell", opt.cfg.prior.max_ell,
                  "maximum change-points (-1 = T-2)");
  cmd->add_option("--ell-prior", opt.ell_prior,
                  "prior on the number of change-points: complexity|poisson")
      ->check(CLI::IsMember({"complexity", "poisson"}));
  cmd->add_option("--poisson-lambda", opt.cfg.prior.poisson_lambda,
                  "Poisson prior mean");
  cmd->add_option("--poisson-max", opt.cfg.prior.poisson_support_max,
                  "Poisson prior truncation point");
  cmd->add_option("--alpha0", opt.cfg.variance.alpha0, "variance prior shape");
  cmd->add_option("--beta0", opt.cfg.variance.beta0, "variance prior rate");
  cmd->add_option("--c", opt.cfg.moves.c, "mean random-walk scale (move 2)");
  cmd->add_option("--d1", opt.cfg.moves.d1, "joint shift window (move 3.a)");
  cmd->add_option("--d2", opt.cfg.moves.d2,
                  "single shift window (move 3.b); 0 = max(1, T/20)");
  cmd->add_option("--iterations", opt.cfg.n_iterations, "MCMC iterations");
  cmd->add_option("--burn-in", opt.cfg.burn_in, "burn-in iterations");
  cmd->add_option("--thin", opt.cfg.thin, "record every thin-th iteration");
  cmd->add_option("--warm-start", opt.cfg.warm_start_iterations,
                  "fixed-variance warm-start iterations before s3/s4");
  cmd->add_option("--seed", opt.seed, "master seed");
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_data,
                 const std::string& out_truth) {
  const auto kv = load_key_value_file(scenario_path);
  const SimScenario scenario = parse_scenario(kv, scenario_path);
  const SimResult result = simulate_dataset(scenario);
  write_dataset_csv(result.data, out_data);

  std::vector<std::string> echo;
  echo.push_back("scenario: T=" + std::to_string(scenario.n_times) +
                 " N=" + std::to_string(scenario.n_series) +
                 " R=" + std::to_string(scenario.n_reps) +
                 " ell_min=" + std::to_string(scenario.ell_min) +
                 " ell_max=" + std::to_string(scenario.ell_max) +
                 " noise=" + (scenario.noise == NoiseKind::exact ? "exact" : "noisy") +
                 " variance=" +
                 (scenario.variance == VarianceKind::shared_across_series
                      ? "shared" : "free") +
                 " jitter_trials=" + std::to_string(scenario.jitter_trials) +
                 " seed=" + std::to_string(scenario.seed));
  write_truth_csv(result.truth, out_truth, echo);
  std::cout << "simulated " << scenario.n_series << " series (T="
            << scenario.n_times << ", R=" << scenario.n_reps << ") -> "
            << out_data << ", " << out_truth << "\n";
  return 0;
}

int cmd_estimate_variance(const std::string& data_path, const std::string& mode,
                          const std::string& out_path, double nu0, double alpha0,
                          double beta0) {
  Dataset data = load_dataset(data_path);
  PriorConfig prior;
  prior.nu0 = nu0;
  prior.mu0 = grand_mean(data);
  prior.validate(data.n_times);
  VarianceConfig var;
  var.alpha0 = alpha0;
  var.beta0 = beta0;
  var.mode = mode == "free" ? VarianceMode::fixed_free : VarianceMode::fixed_shared;
  var.validate(data.n_series, data.n_reps);
  if (mode == "free") {
    write_variances_csv(data.series_ids,
                        estimate_variance_free(data, prior, var), false, out_path);
  } else {
    const Eigen::VectorXd shared = estimate_variance_shared(data, prior, var);
    write_variances_csv(data.series_ids, shared.transpose(), true, out_path);
  }
  std::cout << "estimated " << mode << " variances -> " << out_path << "\n";
  return 0;
}

int cmd_run(RunOptions& opt) {
  const SamplerKind kind = parse_sampler_kind(opt.sampler);
  if (kind == SamplerKind::s4) {
    std::cerr << "warning: sampler s4 is experimental (shared-variance Gibbs); "
                 "every iteration synchronizes all series behind a barrier\n";
  }
  Dataset data = load_dataset(opt.data_path);
  opt.cfg.prior.mu0 = grand_mean(data);
  opt.cfg.prior.ell_prior_kind = opt.ell_prior == "complexity"
                                     ? EllPriorKind::complexity
                                     : EllPriorKind::truncated_poisson;
  switch (kind) {
    case SamplerKind::s1: opt.cfg.variance.mode = VarianceMode::fixed_free; break;
    case SamplerKind::s2: opt.cfg.variance.mode = VarianceMode::fixed_shared; break;
    case SamplerKind::s3: opt.cfg.variance.mode = VarianceMode::gibbs_free; break;
    case SamplerKind::s4: opt.cfg.variance.mode = VarianceMode::gibbs_shared; break;
  }
  opt.cfg.validate(data.n_times, data.n_reps);

  Eigen::MatrixXd fixed_sigma2;
  std::string variance_source;
  const bool fixed = kind == SamplerKind::s1 || kind == SamplerKind::s2;
  if (fixed) {
    if (!opt.variances_path.empty() && opt.estimate_variances) {
      throw ConfigError("pass either --variances or --estimate-variances, not both");
    }
    if (!opt.variances_path.empty()) {
      fixed_sigma2 =
          load_variances_csv(opt.variances_path, data.series_ids, data.n_times);
      variance_source = opt.variances_path;
    } else if (opt.estimate_variances) {
      opt.cfg.variance.validate(data.n_series, data.n_reps);
      if (kind == SamplerKind::s1) {
        fixed_sigma2 = estimate_variance_free(data, opt.cfg.prior, opt.cfg.variance);
        variance_source = "estimated:free";
      } else {
        const Eigen::VectorXd shared =
            estimate_variance_shared(data, opt.cfg.prior, opt.cfg.variance);
        fixed_sigma2 = shared.transpose().replicate(data.n_series, 1);
        variance_source = "estimated:shared";
      }
    } else {
      throw ConfigError("samplers s1/s2 need --variances FILE or --estimate-variances");
    }
  } else {
    if (!opt.variances_path.empty()) {
      throw ConfigError("samplers s3/s4 update variances internally; drop --variances");
    }
    variance_source = kind == SamplerKind::s3 ? "gibbs:free" : "gibbs:shared";
  }

  const int workers = worker_count();
  RunResult result = run_all_series(data, opt.cfg, kind,
                                    fixed ? &fixed_sigma2 : nullptr, opt.seed,
                                    workers);

  fs::create_directories(opt.out_dir);
  const auto stems = series_file_stems(data.series_ids);
  RunManifest manifest;
  manifest.input = opt.data_path;
  manifest.sampler = opt.sampler;
  manifest.variances = variance_source;
  manifest.master_seed = opt.seed;
  manifest.n_series = data.n_series;
  manifest.n_times = data.n_times;
  manifest.n_reps = data.n_reps;
  manifest.config = opt.cfg;
  for (int n = 0; n < data.n_series; ++n) {
    ManifestSeries entry;
    entry.id = data.series_ids[n];
    entry.seed = result.seeds[n];
    entry.trace_file = "trace_" + stems[n] + ".csv";
    entry.theta_file = "trace_" + stems[n] + "_theta.csv";
    for (int mv = 0; mv < 4; ++mv) {
      entry.accept_rates[mv] = static_cast<double>(result.accept_counts[n][mv]) /
                               opt.cfg.n_iterations;
    }
    write_trace_csv(result.traces[n], (fs::path(opt.out_dir) / entry.trace_file).string(),
                    (fs::path(opt.out_dir) / entry.theta_file).string());
    manifest.series.push_back(std::move(entry));
  }
  write_manifest(manifest, (fs::path(opt.out_dir) / "run-manifest.json").string());
  std::cout << "ran sampler " << opt.sampler << " on " << data.n_series
            << " series (" << workers << " workers) -> " << opt.out_dir << "\n";
  return 0;
}

int cmd_summarize(const std::string& traces_dir, const std::string& out_path,
                  const std::string& plot_dir, double band) {
  const RunManifest manifest =
      load_manifest((fs::path(traces_dir) / "run-manifest.json").string());
  std::vector<Trace> traces;
  std::vector<SeriesSummary> summaries;
  traces.reserve(manifest.series.size());
  for (const auto& entry : manifest.series) {
    traces.push_back(load_trace_csv(
        (fs::path(traces_dir) / entry.trace_file).string(),
        (fs::path(traces_dir) / entry.theta_file).string(), manifest.n_times,
        manifest.config.prior.max_ell, manifest.config.thin,
        manifest.config.burn_in, manifest.config.n_iterations));
    summaries.push_back(summarize_series(traces.back(), entry.id, band));
  }
  write_summaries_json(summaries, out_path);
  std::vector<std::pair<std::string, const Trace*>> trace_refs;
  for (std::size_t n = 0; n < traces.size(); ++n) {
    trace_refs.emplace_back(manifest.series[n].id, &traces[n]);
  }
  write_plot_data(summaries, trace_refs, plot_dir);
  std::cout << "summarized " << summaries.size() << " series -> " << out_path
            << ", plot data -> " << plot_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& summaries_path, const std::string& truth_path,
                 const std::string& out_path, const std::string& hist_path) {
  const auto estimates = load_summary_map_ells(summaries_path);
  const auto truth = load_truth_csv(truth_path);
  BenchmarkScore score;
  try {
    score = score_benchmark(estimates, truth);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  write_mae_table_csv(score, out_path);
  write_error_histogram_csv(score, hist_path);
  std::cout << "true_ell  count  mae      se\n";
  for (const auto& row : score.rows) {
    std::cout << row.true_ell << "         " << row.count << "      "
              << row.mae << "    " << (row.se ? format_double(*row.se) : "-")
              << "\n";
  }
  std::cout << "-> " << out_path << ", " << hist_path << "\n";
  return 0;
}

int cmd_check_priors(int n_times, double alpha, double b, int max_ell,
                     int ell_star, double c_const, const std::string& kind,
                     double lambda, int support_max) {
  PriorConfig prior;
  prior.alpha = alpha;
  prior.b = b;
  prior.max_ell = max_ell;
  prior.poisson_lambda = lambda;
  prior.poisson_support_max = support_max;
  prior.ell_prior_kind = kind == "poisson" ? EllPriorKind::truncated_poisson
                                           : EllPriorKind::complexity;
  prior.validate(n_times);
  const auto pmf = normalized_ell_prior(n_times, prior);
  std::cout << "ell  log_prior        normalized\n";
  const int show = std::min(prior.max_ell, 20);
  for (int l = 0; l <= show; ++l) {
    std::cout << l << "    " << format_double(log_prior_ell(l, n_times, prior))
              << "    " << format_double(pmf[l]) << "\n";
  }
  if (prior.max_ell > show) std::cout << "... (" << prior.max_ell - show
                                      << " more)\n";
  if (prior.ell_prior_kind == EllPriorKind::complexity) {
    const DecreaseCheck check =
        check_exponential_decrease(prior, n_times, ell_star, c_const);
    std::cout << "exponential decrease over ell in (" << c_const << " * "
              << ell_star << ", " << prior.max_ell << "]: "
              << (check.holds ? "holds" : "VIOLATED") << " (max ratio "
              << format_double(check.max_ratio) << " at ell = "
              << check.argmax_ell << ", " << check.n_scanned << " ratios scanned)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian change-in-slope detection for replicated time series"};
  app.require_subcommand(1);

  // simulate
  std::string scenario_path, out_data = "data.csv", out_truth = "truth.csv";
  auto* simulate = app.add_subcommand(
      "simulate", "generate a benchmark dataset with known change-points");
  simulate->add_option("scenario", scenario_path, "key=value scenario file")
      ->required();
  simulate->add_option("--out-data", out_data, "output dataset CSV");
  simulate->add_option("--out-truth", out_truth, "output ground-truth CSV");

  // estimate-variance
  std::string ev_data, ev_mode, ev_out = "variances.csv";
  double ev_nu0 = 0.1, ev_alpha0 = 1.0, ev_beta0 = 1.0;
  auto* estimate = app.add_subcommand(
      "estimate-variance", "plug-in variance estimates (pre-processing stage)");
  estimate->add_option("data", ev_data, "input dataset CSV")->required();
  estimate->add_option("--mode", ev_mode, "free|shared")
      ->required()
      ->check(CLI::IsMember({"free", "shared"}));
  estimate->add_option("--out", ev_out, "output variance CSV");
  estimate->add_option("--nu0", ev_nu0, "prior precision scale");
  estimate->add_option("--alpha0", ev_alpha0, "variance prior shape");
  estimate->add_option("--beta0", ev_beta0, "variance prior rate");

  // run
  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "run the MCMC sampler over all series");
  run->add_option("data", run_opt.data_path, "input dataset CSV")->required();
  run->add_option("--sampler", run_opt.sampler, "s1|s2|s3|s4")
      ->required()
      ->check(CLI::IsMember({"s1", "s2", "s3", "s4"}));
  run->add_option("--out", run_opt.out_dir, "output trace directory");
  run->add_option("--variances", run_opt.variances_path,
                  "variance CSV from estimate-variance (s1/s2)");
  run->add_flag("--estimate-variances", run_opt.estimate_variances,
                "estimate plug-in variances in-process instead of a file");
  add_sampler_flags(run, run_opt);
  run->set_config("--config", "", "key=value file with the options above");

  // summarize
  std::string sum_dir, sum_out = "summaries.json", sum_plots = "plot-data";
  double band = 2.0;
  auto* summarize = app.add_subcommand(
      "summarize", "posterior summaries and plot data from stored traces");
  summarize->add_option("traces", sum_dir, "trace directory from run")->required();
  summarize->add_option("--out", sum_out, "output summaries JSON");
  summarize->add_option("--plot-dir", sum_plots, "output directory for plot CSVs");
  summarize->add_option("--band", band, "fitted-band standard-deviation multiplier");

  // evaluate
  std::string eval_summaries, eval_truth, eval_out = "mae-table.csv",
              eval_hist = "error-histogram.csv";
  auto* evaluate = app.add_subcommand(
      "evaluate", "score MAP estimates against simulation ground truth");
  evaluate->add_option("summaries", eval_summaries, "summaries JSON")->required();
  evaluate->add_option("truth", eval_truth, "ground-truth CSV")->required();
  evaluate->add_option("--out", eval_out, "output MAE table CSV");
  evaluate->add_option("--histogram-out", eval_hist, "signed-error histogram CSV");

  // check-priors
  int cp_T = 0, cp_L = -1, cp_ell_star = 1, cp_support = 30;
  double cp_alpha = 2.0, cp_b = 3.72, cp_c = 1.0, cp_lambda = 1.0;
  std::string cp_kind = "complexity";
  auto* check = app.add_subcommand(
      "check-priors", "inspect the change-point-count prior and its decrease");
  check->add_option("--T", cp_T, "number of time-points")->required();
  check->add_option("--alpha", cp_alpha, "complexity prior exponent");
  check->add_option("--b", cp_b, "complexity prior scale");
  check->add_option("--L", cp_L, "maximum change-points (-1 = T-2)");
  check->add_option("--ell-star", cp_ell_star, "assumed true count");
  check->add_option("--C", cp_c, "decrease-range constant");
  check->add_option("--kind", cp_kind, "complexity|poisson")
      ->check(CLI::IsMember({"complexity", "poisson"}));
  check->add_option("--lambda", cp_lambda, "Poisson prior mean");
  check->add_option("--support-max", cp_support, "Poisson truncation point");

  try {
    app.parse(argc, argv);
    if (*simulate) return cmd_simulate(scenario_path, out_data, out_truth);
    if (*estimate) {
      return cmd_estimate_variance(ev_data, ev_mode, ev_out, ev_nu0, ev_alpha0,
                                   ev_beta0);
    }
    if (*run) return cmd_run(run_opt);
    if (*summarize) return cmd_summarize(sum_dir, sum_out, sum_plots, band);
    if (*evaluate) return cmd_evaluate(eval_summaries, eval_truth, eval_out, eval_hist);
    if (*check) {
      return cmd_check_priors(cp_T, cp_alpha, cp_b, cp_L, cp_ell_star, cp_c,
                              cp_kind, cp_lambda, cp_support);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: parse: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 5;
  }
  return 0;
}
