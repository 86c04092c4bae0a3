#include "ghzsim/bootstrap.hpp"

#include <cmath>
#include <exception>
#include <random>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ghzsim/random.hpp"

namespace ghz {

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

CountTable poisson_resample(const CountTable& counts, std::uint64_t replica_seed) {
    Rng rng(replica_seed);
    CountTable out(counts.size());
    for (std::size_t r = 0; r < counts.size(); ++r) {
        out[r].resize(counts[r].size());
        for (std::size_t k = 0; k < counts[r].size(); ++k) {
            const auto n = counts[r][k];
            if (n == 0) {
                out[r][k] = 0;
                continue;
            }
            std::poisson_distribution<std::uint64_t> draw(static_cast<double>(n));
            out[r][k] = draw(rng);
        }
    }
    return out;
}

namespace {

std::optional<std::vector<double>> run_replica(const CountTable& counts,
                                               const VectorStatistic& statistic,
                                               std::uint64_t seed, int replica) {
    try {
        auto value = statistic(poisson_resample(counts, derive_seed(seed, replica)));
        if (value) {
            for (double v : *value) {
                if (!std::isfinite(v)) return std::nullopt;
            }
        }
        return value;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

BootstrapSummary poisson_bootstrap(const CountTable& counts, const VectorStatistic& statistic,
                                   int replicas, std::uint64_t seed, ExecPolicy policy) {
    if (replicas <= 0) throw std::invalid_argument("bootstrap needs at least one replica");

    std::vector<std::optional<std::vector<double>>> results(replicas);
    if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (int r = 0; r < replicas; ++r) {
            results[r] = run_replica(counts, statistic, seed, r);
        }
    } else {
        for (int r = 0; r < replicas; ++r) {
            results[r] = run_replica(counts, statistic, seed, r);
        }
    }

    BootstrapSummary summary;
    std::size_t width = 0;
    for (const auto& r : results) {
        if (r) {
            width = r->size();
            break;
        }
    }
    std::vector<double> sum(width, 0.0);
    for (const auto& r : results) {
        if (!r || r->size() != width) {
            ++summary.dropped;
            continue;
        }
        ++summary.used;
        for (std::size_t i = 0; i < width; ++i) sum[i] += (*r)[i];
    }
    if (summary.used == 0) return summary;

    summary.stats.resize(width);
    for (std::size_t i = 0; i < width; ++i) {
        const double mean = sum[i] / summary.used;
        double ss = 0.0;
        for (const auto& r : results) {
            if (r && r->size() == width) {
                const double d = (*r)[i] - mean;
                ss += d * d;
            }
        }
        summary.stats[i] = {mean, std::sqrt(ss / summary.used)};
    }
    return summary;
}

}  // namespace ghz
