// Poisson bootstrap over count tables.
//
// Every replica resamples each count n_k as Poisson(n_k) using an RNG seeded
// from (seed, replica index), evaluates a statistic, and the results are
// reduced in replica order.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ghzsim/parallel.hpp"

namespace ghz {

struct Estimate {
    double value = 0.0;
    double sigma = 0.0;
};

/// One vector of outcome counts per record.
using CountTable = std::vector<std::vector<std::uint64_t>>;

/// Returns std::nullopt (or throws) when the statistic is undefined for a
/// replica; such replicas are dropped. Must be safe to call concurrently.
using VectorStatistic =
    std::function<std::optional<std::vector<double>>(const CountTable&)>;

struct BootstrapSummary {
    std::vector<Estimate> stats;  ///< per component: replica mean and stddev
    int used = 0;
    int dropped = 0;
};

/// Runs `replicas` Poisson resamples. Statistics are reduced with a
/// population standard deviation (divisor n). Components are empty when every
/// replica was dropped.
BootstrapSummary poisson_bootstrap(const CountTable& counts, const VectorStatistic& statistic,
                                   int replicas, std::uint64_t seed,
                                   ExecPolicy policy = ExecPolicy::parallel);

/// Draws one Poisson resample of `counts` from `rng`-compatible seed.
CountTable poisson_resample(const CountTable& counts, std::uint64_t replica_seed);

}  // namespace ghz
