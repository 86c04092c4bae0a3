// Experiment plans, presets and the runners behind each CLI subcommand.
//
// A run is configured by a flat key set (see README): a named preset supplies
// defaults, a JSON config file overrides them, and command-line flags
// override both. Unknown keys are rejected.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghzsim/estimation.hpp"
#include "ghzsim/serialization.hpp"
#include "ghzsim/simulator.hpp"
#include "ghzsim/sources.hpp"

namespace ghz {

enum class ExperimentKind {
    pair_tomography,
    triplet_witness,
    phase_scan,
    stability,
    coincidence_bench,
    stream_simulation,
};

std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& name);

struct DriftModel {
    double phase_walk_sigma = 0.0;    ///< radians per sqrt(hour)
    double visibility_drift = 0.0;    ///< change of v per hour
    double resample_interval = 3600;  ///< seconds between drift updates

    void validate() const;
};

enum class Statistics { sampled, exact };

struct ScheduleEntry {
    MeasurementSetting setting;
    double duration = 0.0;         ///< seconds
    std::optional<double> phase;   ///< cascade phase override (phase scans)
};

struct ExperimentPlan {
    ExperimentKind kind = ExperimentKind::triplet_witness;
    std::string preset;
    SourceConfig source;
    std::vector<ScheduleEntry> schedule;
    std::uint64_t seed = kDefaultSeed;
    std::optional<DriftModel> drift;

    int replicas = 10000;          ///< parity / witness bootstrap
    int tomography_replicas = 200; ///< MLE bootstrap
    Statistics statistics = Statistics::sampled;
    double downtime = 8 * 3600.0;  ///< stability: idle time after each cycle
    double span_days = 7.0;        ///< stability: total span

    // Coincidence bench and stream simulation.
    std::vector<double> bench_rates{5e5, 5e5};
    double bench_duration = 10.0;
    int bench_fold = 2;
    std::size_t reference_clicks = 10000;
    std::string stream_setting = "ZZZ";
    double stream_duration = 3600.0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    /// Sum of scheduled durations plus downtime.
    double cycle_period() const;
    /// Whole cycles that fit in the span (stability runs).
    int cycles() const;
};

/// Flat keys accepted in config files, in documentation order.
const std::vector<std::string>& config_keys();

/// Names of the shipped presets.
std::vector<std::string> preset_names();
/// Flat key set of a preset; throws std::invalid_argument for unknown names.
nlohmann::json preset_config(const std::string& name);
/// Preset used when a subcommand is given none.
std::string default_preset(ExperimentKind kind);

struct PlanOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> replicas;
};

/// preset -> config object -> overrides. The config may name a "preset" and
/// a "kind"; a kind that differs from `kind` is an error.
ExperimentPlan build_plan(ExperimentKind kind, const std::optional<std::string>& preset,
                          const nlohmann::json& config, const PlanOverrides& overrides = {});

/// Fully resolved configuration, echoed into every output file.
Json plan_to_json(const ExperimentPlan& plan);

// ------------------------------------------------------------------ runs

struct PhaseScanRow {
    double phase = 0.0;
    std::uint64_t counts = 0;
    std::optional<Estimate> value;  ///< nullopt when no counts were recorded
};

struct PhaseScanResult {
    std::vector<PhaseScanRow> rows;
    std::optional<SinusoidFit> fit;
    std::string fit_error;
};

/// Per scheduled phase: sampled ⟨XXX⟩ with a bootstrap sigma, or the exact
/// expectation (sigma 1) in exact mode. The fringe fit is iteratively
/// reweighted with binomial sigmas sqrt((1 - m^2) / N) from the fitted model.
PhaseScanResult run_phase_scan(const ExperimentPlan& plan);

struct WitnessRun {
    std::vector<CountRecord> records;     ///< XXX then ZZZ
    std::optional<WitnessResult> witness;
    std::string diagnostic;
    std::optional<double> exact_w;         ///< Tr(W rho) of the simulated state
};

WitnessRun run_witness(const ExperimentPlan& plan);

struct StabilityPoint {
    int cycle = 0;
    double t_hours = 0.0;       ///< cycle start
    double mean_phase = 0.0;    ///< phase averaged over the measurement blocks
    double mean_visibility = 0.0;
    std::vector<CountRecord> records;
    std::optional<WitnessResult> witness;
};

struct StabilityResult {
    std::vector<StabilityPoint> points;
    double mean_f = 0.0;
    double min_f = 0.0;
    double slope_per_day = 0.0;        ///< ordinary least squares of F on t
    double slope_sigma_per_day = 0.0;
    int valid_points = 0;
};

StabilityResult run_stability(const ExperimentPlan& plan);

struct PairTomographyRun {
    std::vector<CountRecord> records;
    TomographyResult result;
    DensityMatrix truth;
    PureState target;
    double truth_fidelity = 0.0;
    double truth_purity = 0.0;
    double truth_tangle = 0.0;
};

PairTomographyRun run_pair_tomography(const ExperimentPlan& plan);

struct CoincidenceBenchResult {
    std::size_t clicks = 0;
    std::size_t events = 0;
    double elapsed_seconds = 0.0;      ///< wall clock of the finder; not payload
    std::optional<double> predicted_events;
    std::optional<double> predicted_sigma;
    std::optional<double> z_score;
    std::size_t reference_clicks = 0;
    std::size_t reference_events = 0;
    bool reference_match = true;
};

CoincidenceBenchResult run_coincidence_bench(const ExperimentPlan& plan);

/// Bench streams: independent Poisson trains, channel 2i at bench_rates[i].
std::vector<TimestampStream> bench_streams(const ExperimentPlan& plan);

struct StreamRun {
    std::vector<TimestampStream> streams;
    CoincidenceResult coincidences;
    CountRecord record;
};

StreamRun run_stream_simulation(const ExperimentPlan& plan);

}  // namespace ghz
