// Monte Carlo detection data: per-setting count sampling, event-level
// timestamp streams, and the k-fold coincidence finder.
//
// Channel convention: photon g is analyzed by two detectors, channel 2g for
// the '+' outcome (H, D or R) and channel 2g+1 for '-'. Channels of one photon
// form a coincidence group.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghzsim/measurement.hpp"
#include "ghzsim/parallel.hpp"
#include "ghzsim/sources.hpp"

namespace ghz {

inline constexpr double kPicosecondsPerSecond = 1e12;

/// Seconds to integer picoseconds (rounded to nearest).
std::uint64_t to_picoseconds(double seconds);

/// Poisson(true_rate * duration) emissions distributed multinomially over the
/// Born distribution, plus Poisson(accidental_rate * duration) accidentals
/// spread uniformly over outcomes. Deterministic given the seed.
CountRecord sample_counts(const DensityMatrix& rho, const MeasurementSetting& setting,
                          double true_rate, double duration, double accidental_rate,
                          std::uint64_t seed);

/// Multinomial draw of `n` trials over `probabilities`.
std::vector<std::uint64_t> sample_multinomial(std::uint64_t n, std::span<const double> probabilities,
                                              Rng& rng);

enum class ClickOrigin : std::uint8_t { signal = 0, dark = 1 };
enum class StreamOrigin { signal, dark, mixed };

struct TimestampStream {
    int channel = 0;
    std::vector<std::uint64_t> times;        ///< strictly increasing picoseconds
    std::vector<ClickOrigin> click_origins;  ///< parallel to times

    StreamOrigin origin() const noexcept;
    bool strictly_increasing() const noexcept;
};

struct StreamOptions {
    /// Emission epochs per second before channel losses. Defaults to the
    /// configured detected rate divided by the product of mode efficiencies
    /// (zero when any efficiency is zero).
    std::optional<double> emission_rate;
    /// Optional relative rate profile r(t) in [0, 1], t in seconds, applied
    /// by thinning the emission process.
    std::function<double(double)> rate_profile;
    ExecPolicy policy = ExecPolicy::parallel;
};

/// Detected-rate field of the config that drives a run with n photons:
/// triplet_rate for three, the active pair source rate for two.
double detected_rate(const SourceConfig& config, int n_photons);

/// Event-level simulation: Poisson emissions, Born-rule outcomes, channel
/// thinning, optional Gaussian jitter, per-channel dark counts. Returns one
/// stream per channel (2 per photon) ordered by channel id.
std::vector<TimestampStream> generate_streams(const SourceConfig& config, const DensityMatrix& rho,
                                              const MeasurementSetting& setting, double duration,
                                              std::uint64_t seed,
                                              const StreamOptions& options = {});

/// Homogeneous Poisson click train on [0, duration) with distinct integer
/// picosecond stamps.
TimestampStream poisson_stream(int channel, double rate, double duration, std::uint64_t seed,
                               ClickOrigin origin = ClickOrigin::dark);

struct CoincidenceEvent {
    std::vector<int> channels;          ///< member channels, earliest first
    std::vector<std::uint64_t> times;   ///< member timestamps
    int fold = 0;
    std::uint64_t span = 0;             ///< picoseconds

    friend bool operator==(const CoincidenceEvent&, const CoincidenceEvent&) = default;
};

struct CoincidenceResult {
    std::vector<CoincidenceEvent> events;
    /// Keyed by one symbol per group: '+' / '-' for the channel parity of the
    /// member, '.' for a group absent from the event.
    std::map<std::string, std::uint64_t> counts;
};

/// Maps channel id to coincidence group; default is channel / 2.
using ChannelGroups = std::function<int(int channel)>;

/// Greedy earliest-first k-fold matching over the merged time-ordered clicks.
/// The earliest unconsumed click anchors a candidate; later unconsumed clicks
/// within half a window of the anchor (2 * (t - t_anchor) <= window, so a
/// pair of channels coincides when |dt| <= window / 2) are taken in time
/// order, at most one per group, until `fold` groups are present. Matched
/// clicks are consumed. Fold above the number of groups yields no events.
/// Throws std::invalid_argument on unsorted streams, window <= 0 or fold < 2.
CoincidenceResult find_coincidences(std::span<const TimestampStream> streams, double window,
                                    int fold, const ChannelGroups& groups = {});

/// Picosecond-window variant used by the seconds overload.
CoincidenceResult find_coincidences_ps(std::span<const TimestampStream> streams,
                                       std::uint64_t window_ps, int fold,
                                       const ChannelGroups& groups = {});

/// Serial quadratic reference for find_coincidences_ps: sorts a flat copy of
/// all clicks and, for every unconsumed anchor, scans every later click with
/// no early exit. Same matching rule and output; O(N^2), for cross-checking.
CoincidenceResult find_coincidences_reference(std::span<const TimestampStream> streams,
                                              std::uint64_t window_ps, int fold,
                                              const ChannelGroups& groups = {});

/// Fold-wise accidental rate: product of the singles rates times
/// window^(fold - 1), with fold = singles.size().
double accidental_rate(std::span<const double> singles, double window);

/// Converts coincidence counts over all n groups into a CountRecord for a
/// setting that measures every photon.
CountRecord counts_to_record(const CoincidenceResult& result, const MeasurementSetting& setting,
                             double duration);

}  // namespace ghz
