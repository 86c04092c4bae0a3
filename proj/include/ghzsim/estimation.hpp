// State reconstruction, GHZ witness evaluation, phase-scan fitting and
// count-level bootstrap error bars.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ghzsim/bootstrap.hpp"
#include "ghzsim/measurement.hpp"
#include "ghzsim/qcore.hpp"

namespace ghz {

// ------------------------------------------------------------ tomography

/// Pauli-sum reconstruction: rho = sum_P E_P P / 2^n with E_P pooled over all
/// records whose setting marginalizes onto P. Hermitian with unit trace, but
/// not necessarily positive. Throws std::invalid_argument when any of the
/// 3^n full settings is missing or empty.
CMatrix linear_inversion(std::span<const CountRecord> records);

struct MleOptions {
    int max_iterations = 5000;
    double tolerance = 1e-9;  ///< absolute log-likelihood improvement
    bool linear_warm_start = false;
    bool record_history = false;
    /// Bootstrap replicas for metric sigmas; 0 skips the bootstrap.
    int bootstrap_replicas = 0;
    std::uint64_t seed = kDefaultSeed;
    ExecPolicy policy = ExecPolicy::parallel;
    /// Target for the fidelity metric; omitted when unset.
    std::optional<PureState> target;
};

struct TomographyResult {
    DensityMatrix rho;
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    std::optional<Estimate> fidelity;
    Estimate purity;
    std::optional<Estimate> tangle;  ///< two-qubit states only
    std::vector<double> likelihood_history;  ///< accepted iterates, if recorded
};

/// Maximum-likelihood reconstruction over rho = T^dag T / Tr(T^dag T), T lower
/// triangular with real diagonal (4^n real parameters). Ascends the
/// per-setting multinomial log-likelihood with a monotone quasi-Newton
/// scheme; converged is false when the iteration cap stops the ascent.
TomographyResult mle_reconstruct(std::span<const CountRecord> records,
                                 const std::optional<CMatrix>& initial = std::nullopt,
                                 const MleOptions& options = {});

/// sum_k n_k log Tr(rho Pi_k) over all records.
double log_likelihood(const DensityMatrix& rho, std::span<const CountRecord> records);

/// Lower-triangular T with T^dag T proportional to a positive definite
/// version of `rho` (mixed with 1e-6 of the identity).
CMatrix cholesky_factor(const CMatrix& rho);

// ---------------------------------------------------------------- witness

struct WitnessResult {
    Estimate e_xxx;
    Estimate e_1zz;
    Estimate e_z1z;
    Estimate e_zz1;
    Estimate w_value;
    Estimate fidelity_lower_bound;
    double w_sigma_quadrature = 0.0;
    bool bootstrapped = false;  ///< w/F sigmas from count-level resampling
};

/// 3/2 - E_xxx - (E_1zz + E_z1z + E_zz1)/2 and F >= (1 - W)/2, sigmas by
/// quadrature. Inputs must lie in [-1, 1] up to a 1e-10 rounding slack.
WitnessResult ghz_witness(Estimate e_xxx, Estimate e_1zz, Estimate e_z1z, Estimate e_zz1);

struct WitnessOptions {
    int replicas = 10000;
    std::uint64_t seed = kDefaultSeed;
    ExecPolicy policy = ExecPolicy::parallel;
};

/// Witness from an XXX record and a ZZZ record; the three Z-parity terms are
/// marginals of the ZZZ record. Sigmas of every term, W and the bound come
/// from a joint Poisson bootstrap of both records. Returns std::nullopt when
/// either record is empty.
std::optional<WitnessResult> ghz_witness_from_records(const CountRecord& xxx,
                                                      const CountRecord& zzz,
                                                      const WitnessOptions& options = {});

/// The witness operator 3/2 1 - XXX - (1ZZ + Z1Z + ZZ1)/2.
Observable ghz_witness_operator();

// --------------------------------------------------------------- sinusoid

struct PhasePoint {
    double phase = 0.0;
    double value = 0.0;
    double sigma = 1.0;
};

struct SinusoidFit {
    double amplitude = 0.0;
    double phase_offset = 0.0;
    double residual_rms = 0.0;
    double amplitude_sigma = 0.0;
    double phase_offset_sigma = 0.0;
};

/// Weighted least squares of A cos(phase + offset), no vertical offset, via
/// a cos + b sin. Throws std::invalid_argument for fewer than 3 points,
/// non-positive sigmas, or phases that are all equal mod pi.
SinusoidFit fit_sinusoid(std::span<const PhasePoint> points);

// -------------------------------------------------------------- bootstrap

using RecordStatistic = std::function<double(std::span<const CountRecord>)>;

/// Resamples every outcome count as Poisson(n_k), evaluates the statistic
/// per replica, returns replica mean and standard deviation. A replica whose
/// statistic throws or is non-finite is dropped; more than 10% drops throws
/// std::runtime_error. Requires replicas >= 100.
Estimate bootstrap_metrics(std::span<const CountRecord> records, const RecordStatistic& statistic,
                           int replicas, std::uint64_t seed,
                           ExecPolicy policy = ExecPolicy::parallel);

/// Records with counts replaced by a resampled table.
std::vector<CountRecord> with_counts(std::span<const CountRecord> records, const CountTable& table);

CountTable count_table(std::span<const CountRecord> records);

}  // namespace ghz
