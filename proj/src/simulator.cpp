#include "ghzsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>

#include "ghzsim/random.hpp"

namespace ghz {

std::uint64_t to_picoseconds(double seconds) {
    if (!(seconds >= 0.0) || !std::isfinite(seconds)) {
        throw std::invalid_argument("time must be a finite value >= 0");
    }
    return static_cast<std::uint64_t>(std::llround(seconds * kPicosecondsPerSecond));
}

namespace {

std::uint64_t draw_poisson(double mean, Rng& rng) {
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<std::uint64_t> d(mean);
    return d(rng);
}

}  // namespace

std::vector<std::uint64_t> sample_multinomial(std::uint64_t n, std::span<const double> probabilities,
                                              Rng& rng) {
    std::vector<std::uint64_t> out(probabilities.size(), 0);
    double remaining_mass = 0.0;
    for (double p : probabilities) remaining_mass += std::max(0.0, p);
    std::uint64_t remaining = n;
    for (std::size_t k = 0; k < probabilities.size() && remaining > 0; ++k) {
        const double p = std::max(0.0, probabilities[k]);
        if (k + 1 == probabilities.size() || remaining_mass <= 0.0) {
            out[k] = remaining;
            remaining = 0;
            break;
        }
        const double q = std::clamp(p / remaining_mass, 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> d(remaining, q);
        out[k] = d(rng);
        remaining -= out[k];
        remaining_mass -= p;
    }
    return out;
}

CountRecord sample_counts(const DensityMatrix& rho, const MeasurementSetting& setting,
                          double true_rate, double duration, double accidental_rate,
                          std::uint64_t seed) {
    if (!(true_rate >= 0.0) || !(accidental_rate >= 0.0)) {
        throw std::invalid_argument("rates must be >= 0");
    }
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
    Rng rng = make_rng(seed, 0);
    const auto probs = born_probabilities(rho, setting);
    const std::uint64_t n_true = draw_poisson(true_rate * duration, rng);
    auto counts = sample_multinomial(n_true, probs, rng);
    const std::uint64_t n_acc = draw_poisson(accidental_rate * duration, rng);
    if (n_acc > 0) {
        const std::vector<double> uniform(counts.size(), 1.0 / double(counts.size()));
        const auto acc = sample_multinomial(n_acc, uniform, rng);
        for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += acc[k];
    }
    CountRecord record(setting, std::move(counts), duration);
    record.metadata["true_counts"] = std::to_string(n_true);
    record.metadata["accidental_counts"] = std::to_string(n_acc);
    return record;
}

// ----------------------------------------------------------------- streams

StreamOrigin TimestampStream::origin() const noexcept {
    bool any_signal = false;
    bool any_dark = false;
    for (ClickOrigin o : click_origins) {
        (o == ClickOrigin::signal ? any_signal : any_dark) = true;
    }
    if (any_signal && any_dark) return StreamOrigin::mixed;
    return any_signal ? StreamOrigin::signal : StreamOrigin::dark;
}

bool TimestampStream::strictly_increasing() const noexcept {
    return std::adjacent_find(times.begin(), times.end(),
                              [](std::uint64_t a, std::uint64_t b) { return b <= a; }) ==
           times.end();
}

double detected_rate(const SourceConfig& config, int n_photons) {
    if (n_photons == 3) return config.triplet_rate;
    if (n_photons == 2) {
        return config.pair_source == PairSource::ppktp ? config.pair_rate_1 : config.pair_rate_2;
    }
    throw std::invalid_argument("no configured rate for " + std::to_string(n_photons) + " photons");
}

TimestampStream poisson_stream(int channel, double rate, double duration, std::uint64_t seed,
                               ClickOrigin origin) {
    TimestampStream s;
    s.channel = channel;
    if (!(rate > 0.0) || !(duration > 0.0)) return s;
    Rng rng(seed);
    std::exponential_distribution<double> gap(rate);
    s.times.reserve(static_cast<std::size_t>(rate * duration * 1.05) + 16);
    double t = gap(rng);
    while (t < duration) {
        const std::uint64_t ps = to_picoseconds(t);
        if (s.times.empty() || ps > s.times.back()) s.times.push_back(ps);
        t += gap(rng);
    }
    s.click_origins.assign(s.times.size(), origin);
    return s;
}

namespace {

struct Click {
    std::uint64_t time;
    ClickOrigin origin;
};

TimestampStream merge_channel(int channel, std::vector<Click> signal, const TimestampStream& dark) {
    for (std::size_t i = 0; i < dark.times.size(); ++i) {
        signal.push_back({dark.times[i], ClickOrigin::dark});
    }
    std::sort(signal.begin(), signal.end(), [](const Click& a, const Click& b) {
        return a.time != b.time ? a.time < b.time : a.origin < b.origin;
    });
    TimestampStream s;
    s.channel = channel;
    s.times.reserve(signal.size());
    s.click_origins.reserve(signal.size());
    for (const Click& c : signal) {
        // A detector resolves one click per picosecond bin.
        if (!s.times.empty() && c.time == s.times.back()) continue;
        s.times.push_back(c.time);
        s.click_origins.push_back(c.origin);
    }
    return s;
}

}  // namespace

std::vector<TimestampStream> generate_streams(const SourceConfig& config, const DensityMatrix& rho,
                                              const MeasurementSetting& setting, double duration,
                                              std::uint64_t seed, const StreamOptions& options) {
    config.validate();
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
    const int n = setting.n_photons();
    if (setting.n_measured() != n) {
        throw std::invalid_argument("stream generation needs every photon measured");
    }
    if (rho.n_qubits() != n) throw std::invalid_argument("setting does not match the state");
    const int n_channels = 2 * n;

    double emission = 0.0;
    if (options.emission_rate) {
        emission = *options.emission_rate;
    } else {
        double eta = 1.0;
        for (int g = 0; g < n; ++g) eta *= config.efficiency(g);
        emission = eta > 0.0 ? detected_rate(config, n) / eta : 0.0;
    }
    if (!(emission >= 0.0)) throw std::invalid_argument("emission rate must be >= 0");

    const auto probs = born_probabilities(rho, setting);
    std::discrete_distribution<std::size_t> pick_outcome(probs.begin(), probs.end());
    std::vector<std::bernoulli_distribution> survive;
    for (int g = 0; g < n; ++g) survive.emplace_back(config.efficiency(g));
    const double jitter_ps = config.timing_jitter * kPicosecondsPerSecond;
    std::normal_distribution<double> jitter(0.0, jitter_ps > 0.0 ? jitter_ps : 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::vector<Click>> signal(n_channels);
    if (emission > 0.0) {
        Rng rng = make_rng(seed, 0);
        std::exponential_distribution<double> gap(emission);
        for (double t = gap(rng); t < duration; t += gap(rng)) {
            if (options.rate_profile && unit(rng) >= options.rate_profile(t)) continue;
            const std::size_t k = pick_outcome(rng);
            const double t_ps = t * kPicosecondsPerSecond;
            for (int g = 0; g < n; ++g) {
                if (!survive[g](rng)) continue;
                const int bit = static_cast<int>((k >> (n - 1 - g)) & 1u);
                double stamp = t_ps;
                if (jitter_ps > 0.0) stamp += jitter(rng);
                stamp = std::max(0.0, std::round(stamp));
                signal[2 * g + bit].push_back({static_cast<std::uint64_t>(stamp), ClickOrigin::signal});
            }
        }
    }

    std::vector<TimestampStream> out(n_channels);
    auto build = [&](int c) {
        const TimestampStream dark =
            poisson_stream(c, config.dark_rate, duration, derive_seed(seed, 1 + c));
        out[c] = merge_channel(c, std::move(signal[c]), dark);
    };
    if (options.policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(static)
        for (int c = 0; c < n_channels; ++c) build(c);
    } else {
        for (int c = 0; c < n_channels; ++c) build(c);
    }
    return out;
}

// ------------------------------------------------------------- coincidences

namespace {

struct MergedClick {
    std::uint64_t time;
    int channel;
    int group;
};

std::vector<MergedClick> merge_streams(std::span<const TimestampStream> streams,
                                       const ChannelGroups& groups) {
    std::size_t total = 0;
    for (const auto& s : streams) total += s.times.size();
    std::vector<MergedClick> merged;
    merged.reserve(total);

    using Head = std::pair<std::pair<std::uint64_t, int>, std::size_t>;  // ((time, channel), stream)
    std::priority_queue<Head, std::vector<Head>, std::greater<>> heap;
    std::vector<std::size_t> cursor(streams.size(), 0);
    std::vector<int> group_of(streams.size());
    for (std::size_t i = 0; i < streams.size(); ++i) {
        group_of[i] = groups ? groups(streams[i].channel) : streams[i].channel / 2;
        if (!streams[i].times.empty()) heap.push({{streams[i].times[0], streams[i].channel}, i});
    }
    while (!heap.empty()) {
        const auto [key, i] = heap.top();
        heap.pop();
        merged.push_back({key.first, key.second, group_of[i]});
        if (++cursor[i] < streams[i].times.size()) {
            heap.push({{streams[i].times[cursor[i]], streams[i].channel}, i});
        }
    }
    return merged;
}

}  // namespace

CoincidenceResult find_coincidences_ps(std::span<const TimestampStream> streams,
                                       std::uint64_t window_ps, int fold,
                                       const ChannelGroups& groups) {
    if (window_ps == 0) throw std::invalid_argument("coincidence window must be > 0");
    if (fold < 2) throw std::invalid_argument("coincidence fold must be >= 2");
    for (const auto& s : streams) {
        if (!s.strictly_increasing()) {
            throw std::invalid_argument("stream on channel " + std::to_string(s.channel) +
                                        " is not strictly increasing");
        }
    }

    std::vector<int> group_ids;
    for (const auto& s : streams) group_ids.push_back(groups ? groups(s.channel) : s.channel / 2);
    std::sort(group_ids.begin(), group_ids.end());
    group_ids.erase(std::unique(group_ids.begin(), group_ids.end()), group_ids.end());

    CoincidenceResult result;
    if (fold > static_cast<int>(group_ids.size())) return result;

    const auto clicks = merge_streams(streams, groups);
    std::vector<char> consumed(clicks.size(), 0);
    std::vector<std::size_t> members;
    members.reserve(fold);
    for (std::size_t i = 0; i < clicks.size(); ++i) {
        if (consumed[i]) continue;
        members.clear();
        members.push_back(i);
        const std::uint64_t t0 = clicks[i].time;
        for (std::size_t j = i + 1;
             j < clicks.size() && 2 * (clicks[j].time - t0) <= window_ps; ++j) {
            if (consumed[j]) continue;
            const int g = clicks[j].group;
            const bool seen = std::any_of(members.begin(), members.end(),
                                          [&](std::size_t m) { return clicks[m].group == g; });
            if (seen) continue;
            members.push_back(j);
            if (static_cast<int>(members.size()) == fold) break;
        }
        if (static_cast<int>(members.size()) != fold) continue;

        CoincidenceEvent ev;
        ev.fold = fold;
        std::string key(group_ids.size(), '.');
        for (std::size_t m : members) {
            consumed[m] = 1;
            ev.channels.push_back(clicks[m].channel);
            ev.times.push_back(clicks[m].time);
            const auto pos = std::lower_bound(group_ids.begin(), group_ids.end(), clicks[m].group) -
                             group_ids.begin();
            key[pos] = (clicks[m].channel % 2 == 0) ? '+' : '-';
        }
        ev.span = ev.times.back() - ev.times.front();
        ++result.counts[key];
        result.events.push_back(std::move(ev));
    }
    return result;
}

CoincidenceResult find_coincidences(std::span<const TimestampStream> streams, double window,
                                    int fold, const ChannelGroups& groups) {
    if (!(window > 0.0)) throw std::invalid_argument("coincidence window must be > 0");
    return find_coincidences_ps(streams, to_picoseconds(window), fold, groups);
}

CoincidenceResult find_coincidences_reference(std::span<const TimestampStream> streams,
                                              std::uint64_t window_ps, int fold,
                                              const ChannelGroups& groups) {
    if (window_ps == 0) throw std::invalid_argument("coincidence window must be > 0");
    if (fold < 2) throw std::invalid_argument("coincidence fold must be >= 2");
    struct Flat {
        std::uint64_t time;
        int channel;
        int group;
    };
    std::vector<Flat> clicks;
    std::vector<int> group_ids;
    for (const auto& s : streams) {
        if (!s.strictly_increasing()) throw std::invalid_argument("unsorted stream");
        const int g = groups ? groups(s.channel) : s.channel / 2;
        group_ids.push_back(g);
        for (auto t : s.times) clicks.push_back({t, s.channel, g});
    }
    std::sort(group_ids.begin(), group_ids.end());
    group_ids.erase(std::unique(group_ids.begin(), group_ids.end()), group_ids.end());
    CoincidenceResult result;
    if (fold > static_cast<int>(group_ids.size())) return result;
    std::sort(clicks.begin(), clicks.end(), [](const Flat& a, const Flat& b) {
        return a.time != b.time ? a.time < b.time : a.channel < b.channel;
    });

    std::vector<char> consumed(clicks.size(), 0);
    for (std::size_t i = 0; i < clicks.size(); ++i) {
        if (consumed[i]) continue;
        std::vector<std::size_t> members{i};
        std::vector<int> seen{clicks[i].group};
        for (std::size_t j = i + 1; j < clicks.size(); ++j) {
            if (static_cast<int>(members.size()) == fold) break;
            if (consumed[j] || 2 * (clicks[j].time - clicks[i].time) > window_ps) continue;
            if (std::find(seen.begin(), seen.end(), clicks[j].group) != seen.end()) continue;
            members.push_back(j);
            seen.push_back(clicks[j].group);
        }
        if (static_cast<int>(members.size()) != fold) continue;
        CoincidenceEvent ev;
        ev.fold = fold;
        std::string key(group_ids.size(), '.');
        for (std::size_t m : members) {
            consumed[m] = 1;
            ev.channels.push_back(clicks[m].channel);
            ev.times.push_back(clicks[m].time);
            const auto pos = std::find(group_ids.begin(), group_ids.end(), clicks[m].group) -
                             group_ids.begin();
            key[static_cast<std::size_t>(pos)] = clicks[m].channel % 2 == 0 ? '+' : '-';
        }
        ev.span = ev.times.back() - ev.times.front();
        ++result.counts[key];
        result.events.push_back(std::move(ev));
    }
    return result;
}

double accidental_rate(std::span<const double> singles, double window) {
    if (!(window >= 0.0)) throw std::invalid_argument("window must be >= 0");
    double rate = 1.0;
    for (double r : singles) {
        if (!(r >= 0.0)) throw std::invalid_argument("singles rates must be >= 0");
        rate *= r;
    }
    if (singles.size() > 1) rate *= std::pow(window, static_cast<double>(singles.size() - 1));
    return rate;
}

CountRecord counts_to_record(const CoincidenceResult& result, const MeasurementSetting& setting,
                             double duration) {
    std::vector<std::uint64_t> counts(setting.outcome_count(), 0);
    for (const auto& [key, n] : result.counts) {
        if (key.find('.') != std::string::npos) continue;
        if (key.size() != static_cast<std::size_t>(setting.n_measured())) {
            throw std::invalid_argument("coincidence groups do not match setting " +
                                        setting.label());
        }
        counts[setting.outcome_index(key)] += n;
    }
    return CountRecord(setting, std::move(counts), duration);
}

}  // namespace ghz
