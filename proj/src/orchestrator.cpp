#include "cpslope/orchestrator.hpp"

#include <atomic>
#include <barrier>
#include <memory>
#include <stdexcept>
#include <thread>

#include "cpslope/errors.hpp"

namespace cpslope {

SamplerKind parse_sampler_kind(const std::string& name) {
  if (name == "s1") return SamplerKind::s1;
  if (name == "s2") return SamplerKind::s2;
  if (name == "s3") return SamplerKind::s3;
  if (name == "s4") return SamplerKind::s4;
  throw ConfigError("unknown sampler '" + name + "' (expected s1, s2, s3 or s4)");
}

std::string sampler_kind_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::s1: return "s1";
    case SamplerKind::s2: return "s2";
    case SamplerKind::s3: return "s3";
    case SamplerKind::s4: return "s4";
  }
  return "?";
}

namespace {

// Independent chains: a worker pool draining one job per series.
void run_independent(const Dataset& data, const SamplerConfig& cfg,
                     SamplerKind kind, const Eigen::MatrixXd* fixed_sigma2,
                     int workers, RunResult& out) {
  const int n = data.n_series;
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  auto work = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      const bool gibbs = kind == SamplerKind::s3;
      const Eigen::VectorXd sigma2 =
          gibbs ? estimate_variance_series(data.values[i], cfg.prior, cfg.variance)
                : Eigen::VectorXd(fixed_sigma2->row(i));
      SeriesChain chain(data.values[i], sigma2, cfg, Rng(out.seeds[i]));
      chain.initialize();
      if (gibbs) {
        for (int m = 1; m <= cfg.warm_start_iterations; ++m) chain.sweep(m);
      }
      for (int m = 1; m <= cfg.n_iterations; ++m) {
        chain.sweep(m);
        if (gibbs) chain.gibbs_variance();
        chain.maybe_record(m);
      }
      out.accept_counts[i] = chain.accept_counts();
      out.traces[i] = chain.take_trace();
    }
  };
  const int n_threads = std::max(1, std::min(workers, n));
  pool.reserve(n_threads);
  for (int w = 0; w < n_threads; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
}

// Shared-variance Gibbs (s4): every chain advances in lockstep; the shared
// variance is redrawn once per sweep from its own stream after all chains
// finish the sweep, then published before anyone proceeds.
void run_lockstep_shared(const Dataset& data, const SamplerConfig& cfg,
                         const Eigen::MatrixXd& init_sigma2, int workers,
                         std::uint64_t master_seed, RunResult& out) {
  const int n = data.n_series;
  std::vector<std::unique_ptr<SeriesChain>> chains(n);
  for (int i = 0; i < n; ++i) {
    chains[i] = std::make_unique<SeriesChain>(data.values[i], init_sigma2.row(i),
                                              cfg, Rng(out.seeds[i]));
  }
  // warm start with fixed variances: chains are still independent here
  {
    std::atomic<int> next{0};
    auto warm = [&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        chains[i]->initialize();
        for (int m = 1; m <= cfg.warm_start_iterations; ++m) chains[i]->sweep(m);
      }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::max(1, std::min(workers, n));
    for (int w = 0; w < n_threads; ++w) pool.emplace_back(warm);
    for (auto& th : pool) th.join();
  }

  Rng shared_rng(series_seed(master_seed, static_cast<std::uint64_t>(n)));
  const int n_threads = std::max(1, std::min(workers, n));
  std::vector<ChainState> states(n);
  Eigen::VectorXd shared_sigma2;
  std::barrier sync(n_threads, [&]() noexcept {
    for (int i = 0; i < n; ++i) states[i] = chains[i]->state();
    shared_sigma2 = gibbs_update_variance_shared(data, states, cfg.prior,
                                                 cfg.variance, shared_rng);
    for (int i = 0; i < n; ++i) chains[i]->set_sigma2(shared_sigma2);
  });
  auto work = [&](int w) {
    for (int m = 1; m <= cfg.n_iterations; ++m) {
      for (int i = w; i < n; i += n_threads) chains[i]->sweep(m);
      sync.arrive_and_wait();  // completion step publishes the shared draw
      for (int i = w; i < n; i += n_threads) chains[i]->maybe_record(m);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < n_threads; ++w) pool.emplace_back(work, w);
  for (auto& th : pool) th.join();
  for (int i = 0; i < n; ++i) {
    out.accept_counts[i] = chains[i]->accept_counts();
    out.traces[i] = chains[i]->take_trace();
  }
}

}  // namespace

RunResult run_all_series(const Dataset& data, const SamplerConfig& cfg,
                         SamplerKind kind, const Eigen::MatrixXd* fixed_sigma2,
                         std::uint64_t master_seed, int workers) {
  data.validate();
  RunResult out;
  out.traces.resize(data.n_series);
  out.accept_counts.resize(data.n_series);
  out.seeds.resize(data.n_series);
  for (int i = 0; i < data.n_series; ++i) {
    out.seeds[i] = series_seed(master_seed, static_cast<std::uint64_t>(i));
  }

  switch (kind) {
    case SamplerKind::s1:
    case SamplerKind::s2: {
      if (fixed_sigma2 == nullptr) {
        throw ConfigError("samplers s1/s2 need pre-estimated variances");
      }
      if (fixed_sigma2->rows() != data.n_series ||
          fixed_sigma2->cols() != data.n_times) {
        throw ConfigError("variance matrix must be N x T");
      }
      out.initial_sigma2 = *fixed_sigma2;
      run_independent(data, cfg, kind, fixed_sigma2, workers, out);
      break;
    }
    case SamplerKind::s3: {
      out.initial_sigma2 = estimate_variance_free(data, cfg.prior, cfg.variance);
      run_independent(data, cfg, kind, nullptr, workers, out);
      break;
    }
    case SamplerKind::s4: {
      const Eigen::VectorXd shared =
          estimate_variance_shared(data, cfg.prior, cfg.variance);
      out.initial_sigma2 = shared.transpose().replicate(data.n_series, 1);
      run_lockstep_shared(data, cfg, out.initial_sigma2, workers, master_seed, out);
      break;
    }
  }
  return out;
}

}  // namespace cpslope
