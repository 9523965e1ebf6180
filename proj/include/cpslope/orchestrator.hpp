#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpslope/dataset.hpp"
#include "cpslope/sampler.hpp"

namespace cpslope {

enum class SamplerKind { s1, s2, s3, s4 };

SamplerKind parse_sampler_kind(const std::string& name);
std::string sampler_kind_name(SamplerKind kind);

struct RunResult {
  std::vector<Trace> traces;           // aligned with data.series_ids
  std::vector<std::uint64_t> seeds;    // per-series stream seeds
  Eigen::MatrixXd initial_sigma2;      // N x T variances the chains started from
  std::vector<std::array<std::int64_t, 4>> accept_counts;
};

// Runs one chain per series. Samplers s1/s2 take the fixed variances in
// `fixed_sigma2` (N x T). Sampler s3 ignores it (per-series plug-in warm
// start, then per-iteration Gibbs). Sampler s4 starts from the shared plug-in
// estimate and resamples the shared variance once per sweep behind a barrier:
// no series begins sweep m+1 until the shared variance for sweep m is
// published. Chains for distinct series consume independent streams derived
// from master_seed, so results do not depend on the worker count.
RunResult run_all_series(const Dataset& data, const SamplerConfig& cfg,
                         SamplerKind kind, const Eigen::MatrixXd* fixed_sigma2,
                         std::uint64_t master_seed, int workers);

}  // namespace cpslope
