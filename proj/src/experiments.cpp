#include "ghzsim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ghzsim/random.hpp"

namespace ghz {

namespace {

// Seed streams, one per purpose, derived from the master seed.
constexpr std::uint64_t kRecordStream = 1;
constexpr std::uint64_t kParityBootstrapStream = 0x1000;
constexpr std::uint64_t kWitnessBootstrapStream = 0x2000;
constexpr std::uint64_t kDriftWalkStream = 0x3000;
constexpr std::uint64_t kCycleBootstrapStream = 0x4000;
constexpr std::uint64_t kTomographyBootstrapStream = 0x5000;
constexpr std::uint64_t kDriftBlockStream = 0x10000;

constexpr double kHour = 3600.0;

struct ScheduleKeys {
    double setting_duration = 1.0;
    double xxx_duration = 8 * kHour;
    double zzz_duration = 8 * kHour;
    std::optional<std::vector<double>> scan_phases;
    int scan_points = 12;
    double scan_duration = 2 * kHour;
};

const std::vector<std::string> kSourceKeys{
    "theta",           "phi",          "theta_prime",     "phi_prime",
    "triplet_phase_mode", "triplet_phase", "white_noise", "dephasing_visibility",
    "background_fraction", "background_state", "pair_source", "pair_rate_1",
    "pair_rate_2",     "triplet_rate", "dark_rate",       "channel_efficiency",
    "cascade_coupling", "coincidence_window", "timing_jitter"};

const std::vector<std::string> kPlanKeys{
    "preset",          "kind",           "seed",             "replicas",
    "tomography_replicas", "setting_duration", "xxx_duration", "zzz_duration",
    "scan_phases",     "scan_points",    "scan_duration",    "statistics",
    "downtime",        "span_days",      "phase_walk_sigma", "visibility_drift",
    "resample_interval", "bench_rates",  "bench_duration",   "bench_fold",
    "reference_clicks", "stream_setting", "stream_duration"};

double number(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw std::invalid_argument("config key '" + key + "' must be a number");
    return v.get<double>();
}

std::int64_t integer(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer()) {
        throw std::invalid_argument("config key '" + key + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

std::string text(const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) throw std::invalid_argument("config key '" + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const nlohmann::json& v, const std::string& key) {
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw std::invalid_argument("config key '" + key + "' must be a list");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(number(x, key));
    return out;
}

std::uint64_t parse_seed(const nlohmann::json& v) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        std::size_t pos = 0;
        const auto seed = std::stoull(s, &pos, 0);
        if (pos != s.size()) throw std::invalid_argument("config key 'seed' is not an integer");
        return seed;
    }
    throw std::invalid_argument("config key 'seed' must be a nonnegative integer");
}

void apply_key(ExperimentPlan& plan, ScheduleKeys& sched, DriftModel& drift,
               const std::string& key, const nlohmann::json& v) {
    auto& s = plan.source;
    if (key == "theta") s.theta = number(v, key);
    else if (key == "phi") s.phi = number(v, key);
    else if (key == "theta_prime") s.theta_prime = number(v, key);
    else if (key == "phi_prime") s.phi_prime = number(v, key);
    else if (key == "triplet_phase_mode") {
        const auto m = text(v, key);
        if (m == "combined") s.triplet_phase_mode = PhaseMode::combined;
        else if (m == "explicit") s.triplet_phase_mode = PhaseMode::explicit_value;
        else throw std::invalid_argument("triplet_phase_mode must be 'combined' or 'explicit'");
    } else if (key == "triplet_phase") s.triplet_phase = number(v, key);
    else if (key == "white_noise") s.white_noise = number(v, key);
    else if (key == "dephasing_visibility") s.dephasing_visibility = number(v, key);
    else if (key == "background_fraction") s.background_fraction = number(v, key);
    else if (key == "background_state") s.background_state = text(v, key);
    else if (key == "pair_source") {
        const auto p = text(v, key);
        if (p == "ppktp") s.pair_source = PairSource::ppktp;
        else if (p == "ppln") s.pair_source = PairSource::ppln;
        else throw std::invalid_argument("pair_source must be 'ppktp' or 'ppln'");
    } else if (key == "pair_rate_1") s.pair_rate_1 = number(v, key);
    else if (key == "pair_rate_2") s.pair_rate_2 = number(v, key);
    else if (key == "triplet_rate") s.triplet_rate = number(v, key);
    else if (key == "dark_rate") s.dark_rate = number(v, key);
    else if (key == "channel_efficiency") s.channel_efficiency = numbers(v, key);
    else if (key == "cascade_coupling") s.cascade_coupling = number(v, key);
    else if (key == "coincidence_window") s.coincidence_window = number(v, key);
    else if (key == "timing_jitter") s.timing_jitter = number(v, key);
    else if (key == "preset" || key == "kind") {
        // handled by build_plan
    } else if (key == "seed") plan.seed = parse_seed(v);
    else if (key == "replicas") plan.replicas = static_cast<int>(integer(v, key));
    else if (key == "tomography_replicas") plan.tomography_replicas = static_cast<int>(integer(v, key));
    else if (key == "setting_duration") sched.setting_duration = number(v, key);
    else if (key == "xxx_duration") sched.xxx_duration = number(v, key);
    else if (key == "zzz_duration") sched.zzz_duration = number(v, key);
    else if (key == "scan_phases") sched.scan_phases = numbers(v, key);
    else if (key == "scan_points") sched.scan_points = static_cast<int>(integer(v, key));
    else if (key == "scan_duration") sched.scan_duration = number(v, key);
    else if (key == "statistics") {
        const auto m = text(v, key);
        if (m == "sampled") plan.statistics = Statistics::sampled;
        else if (m == "exact") plan.statistics = Statistics::exact;
        else throw std::invalid_argument("statistics must be 'sampled' or 'exact'");
    } else if (key == "downtime") plan.downtime = number(v, key);
    else if (key == "span_days") plan.span_days = number(v, key);
    else if (key == "phase_walk_sigma") drift.phase_walk_sigma = number(v, key);
    else if (key == "visibility_drift") drift.visibility_drift = number(v, key);
    else if (key == "resample_interval") drift.resample_interval = number(v, key);
    else if (key == "bench_rates") plan.bench_rates = numbers(v, key);
    else if (key == "bench_duration") plan.bench_duration = number(v, key);
    else if (key == "bench_fold") plan.bench_fold = static_cast<int>(integer(v, key));
    else if (key == "reference_clicks") {
        const auto n = integer(v, key);
        if (n < 0) throw std::invalid_argument("reference_clicks must be >= 0");
        plan.reference_clicks = static_cast<std::size_t>(n);
    } else if (key == "stream_setting") plan.stream_setting = text(v, key);
    else if (key == "stream_duration") plan.stream_duration = number(v, key);
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

void apply_object(ExperimentPlan& plan, ScheduleKeys& sched, DriftModel& drift,
                  const nlohmann::json& obj) {
    if (obj.is_null()) return;
    if (!obj.is_object()) throw std::invalid_argument("config must be a JSON object");
    for (const auto& [key, value] : obj.items()) apply_key(plan, sched, drift, key, value);
}

std::vector<ScheduleEntry> make_schedule(const ExperimentPlan& plan, const ScheduleKeys& k) {
    std::vector<ScheduleEntry> out;
    switch (plan.kind) {
    case ExperimentKind::pair_tomography:
        for (const auto& s : MeasurementSetting::tomography_set(2)) {
            out.push_back({s, k.setting_duration, std::nullopt});
        }
        break;
    case ExperimentKind::triplet_witness:
    case ExperimentKind::stability:
        out.push_back({MeasurementSetting::parse("XXX"), k.xxx_duration, std::nullopt});
        out.push_back({MeasurementSetting::parse("ZZZ"), k.zzz_duration, std::nullopt});
        break;
    case ExperimentKind::phase_scan: {
        std::vector<double> phases;
        if (k.scan_phases) {
            phases = *k.scan_phases;
        } else {
            if (k.scan_points < 1) throw std::invalid_argument("scan_points must be >= 1");
            for (int i = 0; i < k.scan_points; ++i) phases.push_back(2 * M_PI * i / k.scan_points);
        }
        for (double p : phases) out.push_back({MeasurementSetting::parse("XXX"), k.scan_duration, p});
        break;
    }
    case ExperimentKind::stream_simulation:
        out.push_back({MeasurementSetting::parse(plan.stream_setting), plan.stream_duration,
                       std::nullopt});
        break;
    case ExperimentKind::coincidence_bench:
        break;
    }
    return out;
}

/// Accidental n-fold rate from detector dark counts, two detectors per photon.
double dark_accidentals(const SourceConfig& s, int n_photons) {
    const std::vector<double> singles(static_cast<std::size_t>(n_photons), 2 * s.dark_rate);
    return accidental_rate(singles, s.coincidence_window);
}

DensityMatrix triplet_at(const SourceConfig& base, std::optional<double> phase,
                         std::optional<double> visibility = std::nullopt) {
    SourceConfig c = base;
    if (phase) {
        c.triplet_phase_mode = PhaseMode::explicit_value;
        c.triplet_phase = *phase;
    }
    if (visibility) c.dephasing_visibility = *visibility;
    return triplet_source_state(c);
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::pair_tomography: return "pair_tomography";
    case ExperimentKind::triplet_witness: return "triplet_witness";
    case ExperimentKind::phase_scan: return "phase_scan";
    case ExperimentKind::stability: return "stability";
    case ExperimentKind::coincidence_bench: return "coincidence_bench";
    case ExperimentKind::stream_simulation: return "stream_simulation";
    }
    return "unknown";
}

ExperimentKind parse_kind(const std::string& name) {
    for (auto k : {ExperimentKind::pair_tomography, ExperimentKind::triplet_witness,
                   ExperimentKind::phase_scan, ExperimentKind::stability,
                   ExperimentKind::coincidence_bench, ExperimentKind::stream_simulation}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

void DriftModel::validate() const {
    if (!(phase_walk_sigma >= 0.0) || !std::isfinite(phase_walk_sigma)) {
        throw std::invalid_argument("phase_walk_sigma must be >= 0");
    }
    if (!std::isfinite(visibility_drift)) throw std::invalid_argument("visibility_drift must be finite");
    if (!(resample_interval > 0.0) || !std::isfinite(resample_interval)) {
        throw std::invalid_argument("resample_interval must be > 0");
    }
}

void ExperimentPlan::validate() const {
    source.validate();
    if (kind != ExperimentKind::coincidence_bench && schedule.empty()) {
        throw std::invalid_argument("schedule must not be empty");
    }
    for (const auto& e : schedule) {
        if (!(e.duration > 0.0) || !std::isfinite(e.duration)) {
            throw std::invalid_argument("duration of setting " + e.setting.label() + " must be > 0");
        }
    }
    if (replicas < 100) throw std::invalid_argument("replicas must be >= 100");
    if (tomography_replicas != 0 && tomography_replicas < 100) {
        throw std::invalid_argument("tomography_replicas must be 0 or >= 100");
    }
    if (statistics == Statistics::exact && kind != ExperimentKind::phase_scan) {
        throw std::invalid_argument("statistics 'exact' is only available for phase scans");
    }
    if (kind == ExperimentKind::stability) {
        if (!drift) throw std::invalid_argument("stability runs need a drift model");
        drift->validate();
        if (!(downtime >= 0.0)) throw std::invalid_argument("downtime must be >= 0");
        if (!(span_days > 0.0)) throw std::invalid_argument("span_days must be > 0");
        if (cycles() < 1) throw std::invalid_argument("span_days is shorter than one cycle");
    }
    if (kind == ExperimentKind::coincidence_bench) {
        if (bench_rates.empty()) throw std::invalid_argument("bench_rates must not be empty");
        for (double r : bench_rates) {
            if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("bench_rates must be >= 0");
        }
        if (!(bench_duration >= 0.0)) throw std::invalid_argument("bench_duration must be >= 0");
        if (bench_fold < 2) throw std::invalid_argument("bench_fold must be >= 2");
    }
    if (kind == ExperimentKind::stream_simulation) {
        const auto s = MeasurementSetting::parse(stream_setting);
        if (s.n_photons() < 2 || s.n_measured() != s.n_photons()) {
            throw std::invalid_argument("stream_setting must measure 2 or 3 photons");
        }
    }
}

double ExperimentPlan::cycle_period() const {
    double t = downtime;
    for (const auto& e : schedule) t += e.duration;
    return t;
}

int ExperimentPlan::cycles() const {
    const double period = cycle_period();
    if (!(period > 0.0)) return 0;
    // Tolerate rounding when the span is an exact multiple of the period.
    return static_cast<int>(std::floor(span_days * 86400.0 / period + 1e-9));
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k = kPlanKeys;
        k.insert(k.end(), kSourceKeys.begin(), kSourceKeys.end());
        return k;
    }();
    return keys;
}

std::vector<std::string> preset_names() {
    return {"cascade-paper", "ideal-ghz",        "phase-scan", "phase-scan-exact",
            "stability",     "stability-nodrift", "ppktp",     "ppln",
            "coinc-bench",   "streams"};
}

nlohmann::json preset_config(const std::string& name) {
    using nlohmann::json;
    // Witness-run calibration: with p = 0.02 and v = 0.95 / 0.98 the exact
    // expectations are XXX = 0.95 and all Z parities 0.98, so W = -0.92.
    const json cascade = {{"theta", M_PI / 4},
                          {"phi", 0.0},
                          {"phi_prime", 0.0},
                          {"triplet_phase_mode", "combined"},
                          {"white_noise", 0.02},
                          {"dephasing_visibility", 0.95 / 0.98},
                          {"triplet_rate", 6.4 / 3600.0},
                          {"xxx_duration", 8 * kHour},
                          {"zzz_duration", 8 * kHour},
                          {"dark_rate", 5.0},
                          {"coincidence_window", 0.5e-9}};
    if (name == "cascade-paper") return cascade;
    if (name == "ideal-ghz") {
        return {{"theta", M_PI / 4}, {"phi", 0.0}, {"phi_prime", 0.0},
                {"white_noise", 0.0}, {"dephasing_visibility", 1.0},
                {"triplet_rate", 1000.0}, {"xxx_duration", 100.0},
                {"zzz_duration", 100.0}, {"dark_rate", 0.0}};
    }
    if (name == "phase-scan") {
        return {{"theta", M_PI / 4},        {"white_noise", 0.0},
                {"dephasing_visibility", 0.92}, {"triplet_rate", 10.0 / 3600.0},
                {"scan_points", 12},        {"scan_duration", 2 * kHour},
                {"dark_rate", 5.0},         {"coincidence_window", 0.5e-9}};
    }
    if (name == "phase-scan-exact") {
        return {{"theta", M_PI / 4}, {"white_noise", 0.0}, {"dephasing_visibility", 1.0},
                {"scan_points", 24}, {"scan_duration", 2 * kHour}, {"statistics", "exact"}};
    }
    if (name == "stability" || name == "stability-nodrift") {
        json j = cascade;
        j["downtime"] = 8 * kHour;
        j["span_days"] = 7.0;
        j["resample_interval"] = 3600.0;
        const bool drifting = name == "stability";
        j["phase_walk_sigma"] = drifting ? 0.02 : 0.0;
        j["visibility_drift"] = drifting ? -0.0024 : 0.0;
        return j;
    }
    if (name == "ppktp") {
        return {{"pair_source", "ppktp"},
                {"theta", M_PI / 4},
                {"phi", 2.9079412154103133},
                {"white_noise", 0.0223099806754651},
                {"dephasing_visibility", 1.0},
                {"background_fraction", 0.005654064348609308},
                {"background_state", "HH"},
                {"pair_rate_1", 3.0e6},
                {"setting_duration", 0.05},
                {"dark_rate", 5.0}};
    }
    if (name == "ppln") {
        return {{"pair_source", "ppln"},
                {"theta_prime", 0.8366679136626549},
                {"phi_prime", -0.2491248793942627},
                {"white_noise", 0.04292111087956713},
                {"dephasing_visibility", 1.0},
                {"pair_rate_2", 1.5e4},
                {"setting_duration", 10.0},
                {"dark_rate", 5.0}};
    }
    if (name == "coinc-bench") {
        return {{"bench_rates", {5e5, 5e5}}, {"bench_duration", 10.0}, {"bench_fold", 2},
                {"coincidence_window", 0.5e-9}, {"reference_clicks", 10000}};
    }
    if (name == "streams") {
        json j = cascade;
        j["triplet_rate"] = 10.0 / 3600.0;
        j["stream_setting"] = "ZZZ";
        j["stream_duration"] = 3600.0;
        return j;
    }
    throw std::invalid_argument("unknown preset '" + name + "'");
}

std::string default_preset(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::pair_tomography: return "ppktp";
    case ExperimentKind::triplet_witness: return "cascade-paper";
    case ExperimentKind::phase_scan: return "phase-scan";
    case ExperimentKind::stability: return "stability";
    case ExperimentKind::coincidence_bench: return "coinc-bench";
    case ExperimentKind::stream_simulation: return "streams";
    }
    return "cascade-paper";
}

ExperimentPlan build_plan(ExperimentKind kind, const std::optional<std::string>& preset,
                          const nlohmann::json& config, const PlanOverrides& overrides) {
    if (!config.is_null() && !config.is_object()) {
        throw std::invalid_argument("config must be a JSON object");
    }
    if (!config.is_null()) {
        for (const auto& [key, _] : config.items()) {
            if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
                throw std::invalid_argument("unknown config key '" + key + "'");
            }
        }
        if (config.contains("kind") && parse_kind(text(config.at("kind"), "kind")) != kind) {
            throw std::invalid_argument("config kind '" + config.at("kind").get<std::string>() +
                                        "' does not match the subcommand");
        }
    }
    std::string preset_name = default_preset(kind);
    if (!config.is_null() && config.contains("preset")) preset_name = text(config.at("preset"), "preset");
    if (preset) preset_name = *preset;

    ExperimentPlan plan;
    plan.kind = kind;
    plan.preset = preset_name;
    ScheduleKeys sched;
    DriftModel drift;
    apply_object(plan, sched, drift, preset_config(preset_name));
    apply_object(plan, sched, drift, config);
    if (overrides.seed) plan.seed = *overrides.seed;
    if (overrides.replicas) plan.replicas = *overrides.replicas;
    if (kind == ExperimentKind::stability) plan.drift = drift;
    plan.schedule = make_schedule(plan, sched);
    plan.validate();
    return plan;
}

Json plan_to_json(const ExperimentPlan& plan) {
    char hex[32];
    std::snprintf(hex, sizeof hex, "0x%llX", static_cast<unsigned long long>(plan.seed));
    Json j{{"kind", to_string(plan.kind)},
           {"preset", plan.preset},
           {"seed", plan.seed},
           {"seed_hex", hex},
           {"replicas", plan.replicas}};
    Json sched = Json::array();
    for (const auto& e : plan.schedule) {
        Json item{{"setting", e.setting.label()}, {"duration", e.duration}};
        if (e.phase) item["phase"] = *e.phase;
        sched.push_back(item);
    }
    j["schedule"] = sched;
    switch (plan.kind) {
    case ExperimentKind::pair_tomography:
        j["tomography_replicas"] = plan.tomography_replicas;
        break;
    case ExperimentKind::phase_scan:
        j["statistics"] = plan.statistics == Statistics::exact ? "exact" : "sampled";
        break;
    case ExperimentKind::stability:
        j["downtime"] = plan.downtime;
        j["span_days"] = plan.span_days;
        j["cycles"] = plan.cycles();
        j["drift"] = Json{{"phase_walk_sigma", plan.drift->phase_walk_sigma},
                          {"visibility_drift", plan.drift->visibility_drift},
                          {"resample_interval", plan.drift->resample_interval}};
        break;
    case ExperimentKind::coincidence_bench:
        j["bench_rates"] = plan.bench_rates;
        j["bench_duration"] = plan.bench_duration;
        j["bench_fold"] = plan.bench_fold;
        j["reference_clicks"] = plan.reference_clicks;
        break;
    case ExperimentKind::stream_simulation:
        j["stream_setting"] = plan.stream_setting;
        j["stream_duration"] = plan.stream_duration;
        break;
    case ExperimentKind::triplet_witness:
        break;
    }
    j["source"] = to_json(plan.source);
    return j;
}

// ------------------------------------------------------------------ runs

PhaseScanResult run_phase_scan(const ExperimentPlan& plan) {
    if (plan.kind != ExperimentKind::phase_scan) throw std::invalid_argument("plan is not a phase scan");
    plan.validate();
    PhaseScanResult out;
    const bool exact = plan.statistics == Statistics::exact;
    const double acc = dark_accidentals(plan.source, 3);
    for (std::size_t i = 0; i < plan.schedule.size(); ++i) {
        const auto& e = plan.schedule[i];
        const double phase = e.phase.value_or(plan.source.cascade_phase());
        const DensityMatrix rho = triplet_at(plan.source, phase);
        PhaseScanRow row;
        row.phase = phase;
        if (exact) {
            row.value = Estimate{expectation(rho, setting_observable(e.setting)), 1.0};
        } else {
            const CountRecord rec = sample_counts(rho, e.setting, plan.source.triplet_rate, e.duration,
                                                  acc, derive_seed(plan.seed, kRecordStream + i));
            row.counts = rec.total();
            ParityOptions po;
            po.replicas = plan.replicas;
            po.seed = derive_seed(plan.seed, kParityBootstrapStream + i);
            row.value = parity_expectation(rec, po);
        }
        out.rows.push_back(row);
    }

    std::vector<PhasePoint> points;
    std::vector<double> n;
    for (const auto& r : out.rows) {
        if (!r.value) continue;
        points.push_back({r.phase, r.value->value, 1.0});
        n.push_back(static_cast<double>(r.counts));
    }
    try {
        if (exact) {
            out.fit = fit_sinusoid(points);
        } else {
            for (std::size_t k = 0; k < points.size(); ++k) points[k].sigma = 1.0 / std::sqrt(n[k]);
            SinusoidFit fit = fit_sinusoid(points);
            for (int iter = 0; iter < 3; ++iter) {
                for (std::size_t k = 0; k < points.size(); ++k) {
                    const double m = std::clamp(
                        fit.amplitude * std::cos(points[k].phase + fit.phase_offset), -1.0, 1.0);
                    points[k].sigma = std::sqrt(std::max(1.0 - m * m, 1.0 / n[k]) / n[k]);
                }
                fit = fit_sinusoid(points);
            }
            out.fit = fit;
        }
    } catch (const std::invalid_argument& ex) {
        out.fit_error = ex.what();
    }
    return out;
}

WitnessRun run_witness(const ExperimentPlan& plan) {
    if (plan.kind != ExperimentKind::triplet_witness) throw std::invalid_argument("plan is not a witness run");
    plan.validate();
    WitnessRun out;
    const DensityMatrix rho = triplet_source_state(plan.source);
    out.exact_w = expectation(rho, ghz_witness_operator());
    const double acc = dark_accidentals(plan.source, 3);
    std::optional<std::size_t> ix, iz;
    for (std::size_t i = 0; i < plan.schedule.size(); ++i) {
        const auto& e = plan.schedule[i];
        out.records.push_back(sample_counts(rho, e.setting, plan.source.triplet_rate, e.duration,
                                            acc, derive_seed(plan.seed, kRecordStream + i)));
        if (e.setting.label() == "XXX") ix = i;
        if (e.setting.label() == "ZZZ") iz = i;
    }
    if (!ix || !iz) throw std::invalid_argument("witness schedule needs XXX and ZZZ settings");
    for (auto i : {*ix, *iz}) {
        if (out.records[i].total() == 0) {
            out.diagnostic = "no counts in the " + out.records[i].setting.label() +
                             " basis; witness not computed";
            return out;
        }
    }
    WitnessOptions wo;
    wo.replicas = plan.replicas;
    wo.seed = derive_seed(plan.seed, kWitnessBootstrapStream);
    out.witness = ghz_witness_from_records(out.records[*ix], out.records[*iz], wo);
    return out;
}

StabilityResult run_stability(const ExperimentPlan& plan) {
    if (plan.kind != ExperimentKind::stability) throw std::invalid_argument("plan is not a stability run");
    plan.validate();
    const DriftModel& drift = *plan.drift;
    const double period = plan.cycle_period();
    const int cycles = plan.cycles();
    const double dt = drift.resample_interval;
    const double acc = dark_accidentals(plan.source, 3);
    const double phi0 = plan.source.cascade_phase();
    const double v0 = plan.source.dephasing_visibility;

    // Random walk of the cascade phase on the resample grid.
    const auto grid = static_cast<std::size_t>(std::ceil(cycles * period / dt)) + 1;
    std::vector<double> walk(grid, phi0);
    Rng rng = make_rng(plan.seed, kDriftWalkStream);
    std::normal_distribution<double> step(0.0, drift.phase_walk_sigma * std::sqrt(dt / kHour));
    for (std::size_t g = 1; g < grid; ++g) walk[g] = walk[g - 1] + step(rng);

    StabilityResult out;
    std::uint64_t block = 0;
    for (int c = 0; c < cycles; ++c) {
        StabilityPoint pt;
        pt.cycle = c;
        pt.t_hours = c * period / kHour;
        double offset = c * period;
        double weighted_phase = 0.0;
        double weighted_vis = 0.0;
        double measured = 0.0;
        for (const auto& e : plan.schedule) {
            CountRecord total(e.setting, std::vector<std::uint64_t>(e.setting.outcome_count(), 0), 0.0);
            const double end = offset + e.duration;
            double t = offset;
            while (t < end) {
                const auto g = static_cast<std::size_t>(std::floor(t / dt + 1e-12));
                const double next = std::min(end, (static_cast<double>(g) + 1) * dt);
                const double len = next - t;
                const double v = std::clamp(v0 + drift.visibility_drift * t / kHour, 0.0, 1.0);
                const double phase = walk[std::min(g, grid - 1)];
                const DensityMatrix rho = triplet_at(plan.source, phase, v);
                const CountRecord rec = sample_counts(rho, e.setting, plan.source.triplet_rate, len, acc,
                                                      derive_seed(plan.seed, kDriftBlockStream + block++));
                for (std::size_t k = 0; k < rec.counts.size(); ++k) total.counts[k] += rec.counts[k];
                total.duration += len;
                weighted_phase += phase * len;
                weighted_vis += v * len;
                measured += len;
                t = next;
            }
            pt.records.push_back(std::move(total));
            offset = end;
        }
        pt.mean_phase = weighted_phase / measured;
        pt.mean_visibility = weighted_vis / measured;
        if (pt.records[0].total() > 0 && pt.records[1].total() > 0) {
            WitnessOptions wo;
            wo.replicas = plan.replicas;
            wo.seed = derive_seed(plan.seed, kCycleBootstrapStream + static_cast<std::uint64_t>(c));
            pt.witness = ghz_witness_from_records(pt.records[0], pt.records[1], wo);
        }
        out.points.push_back(std::move(pt));
    }

    std::vector<double> ts, fs;
    for (const auto& p : out.points) {
        if (!p.witness) continue;
        ts.push_back(p.t_hours / 24.0);
        fs.push_back(p.witness->fidelity_lower_bound.value);
    }
    out.valid_points = static_cast<int>(fs.size());
    if (!fs.empty()) {
        double sum = 0.0;
        for (double f : fs) sum += f;
        out.mean_f = sum / fs.size();
        out.min_f = *std::min_element(fs.begin(), fs.end());
    }
    if (fs.size() >= 3) {
        const double n = static_cast<double>(fs.size());
        double tm = 0.0, fm = 0.0;
        for (std::size_t i = 0; i < fs.size(); ++i) {
            tm += ts[i] / n;
            fm += fs[i] / n;
        }
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < fs.size(); ++i) {
            sxx += (ts[i] - tm) * (ts[i] - tm);
            sxy += (ts[i] - tm) * (fs[i] - fm);
        }
        out.slope_per_day = sxy / sxx;
        double rss = 0.0;
        for (std::size_t i = 0; i < fs.size(); ++i) {
            const double r = fs[i] - fm - out.slope_per_day * (ts[i] - tm);
            rss += r * r;
        }
        out.slope_sigma_per_day = std::sqrt(rss / (n - 2) / sxx);
    }
    return out;
}

PairTomographyRun run_pair_tomography(const ExperimentPlan& plan) {
    if (plan.kind != ExperimentKind::pair_tomography) throw std::invalid_argument("plan is not a pair tomography");
    plan.validate();
    const DensityMatrix truth = pair_source_state(plan.source);
    const PureState target = pair_target(plan.source.pair_source);
    const double rate = detected_rate(plan.source, 2);
    const double acc = dark_accidentals(plan.source, 2);
    std::vector<CountRecord> records;
    for (std::size_t i = 0; i < plan.schedule.size(); ++i) {
        const auto& e = plan.schedule[i];
        records.push_back(sample_counts(truth, e.setting, rate, e.duration, acc,
                                        derive_seed(plan.seed, kRecordStream + i)));
    }
    MleOptions mo;
    mo.linear_warm_start = true;
    mo.bootstrap_replicas = plan.tomography_replicas;
    mo.seed = derive_seed(plan.seed, kTomographyBootstrapStream);
    mo.target = target;
    TomographyResult result = mle_reconstruct(records, std::nullopt, mo);
    return PairTomographyRun{std::move(records), std::move(result), truth, target,
                             fidelity(truth, target), purity(truth), tangle(truth)};
}

std::vector<TimestampStream> bench_streams(const ExperimentPlan& plan) {
    std::vector<TimestampStream> streams;
    for (std::size_t i = 0; i < plan.bench_rates.size(); ++i) {
        streams.push_back(poisson_stream(static_cast<int>(2 * i), plan.bench_rates[i],
                                         plan.bench_duration,
                                         derive_seed(plan.seed, kRecordStream + i)));
    }
    return streams;
}

CoincidenceBenchResult run_coincidence_bench(const ExperimentPlan& plan) {
    if (plan.kind != ExperimentKind::coincidence_bench) throw std::invalid_argument("plan is not a coincidence bench");
    plan.validate();
    const auto streams = bench_streams(plan);
    const std::uint64_t window_ps = to_picoseconds(plan.source.coincidence_window);
    CoincidenceBenchResult out;
    for (const auto& s : streams) out.clicks += s.times.size();

    if (out.clicks > 0) {
        const auto start = std::chrono::steady_clock::now();
        const auto found = find_coincidences_ps(streams, window_ps, plan.bench_fold);
        out.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.events = found.events.size();
    }
    if (plan.bench_fold == static_cast<int>(plan.bench_rates.size()) && plan.bench_duration > 0) {
        const double predicted =
            accidental_rate(plan.bench_rates, plan.source.coincidence_window) * plan.bench_duration;
        out.predicted_events = predicted;
        out.predicted_sigma = std::sqrt(predicted);
        if (predicted > 0) out.z_score = (static_cast<double>(out.events) - predicted) / std::sqrt(predicted);
    }

    // Sub-slice holding the earliest reference_clicks clicks.
    std::vector<std::uint64_t> all;
    for (const auto& s : streams) all.insert(all.end(), s.times.begin(), s.times.end());
    std::uint64_t cutoff = std::numeric_limits<std::uint64_t>::max();
    if (all.size() > plan.reference_clicks) {
        std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(plan.reference_clicks),
                         all.end());
        cutoff = all[plan.reference_clicks];
    }
    std::vector<TimestampStream> slice;
    for (const auto& s : streams) {
        TimestampStream t;
        t.channel = s.channel;
        for (std::size_t k = 0; k < s.times.size() && s.times[k] < cutoff; ++k) {
            t.times.push_back(s.times[k]);
            t.click_origins.push_back(s.click_origins[k]);
        }
        out.reference_clicks += t.times.size();
        slice.push_back(std::move(t));
    }
    const auto fast = find_coincidences_ps(slice, window_ps, plan.bench_fold);
    const auto ref = find_coincidences_reference(slice, window_ps, plan.bench_fold);
    out.reference_events = ref.events.size();
    out.reference_match = fast.events == ref.events && fast.counts == ref.counts;
    return out;
}

StreamRun run_stream_simulation(const ExperimentPlan& plan) {
    if (plan.kind != ExperimentKind::stream_simulation) throw std::invalid_argument("plan is not a stream simulation");
    plan.validate();
    const auto& e = plan.schedule.front();
    const int n = e.setting.n_photons();
    const DensityMatrix rho = n == 3 ? triplet_source_state(plan.source) : pair_source_state(plan.source);
    auto streams = generate_streams(plan.source, rho, e.setting, e.duration, plan.seed);
    auto coinc = find_coincidences(streams, plan.source.coincidence_window, n);
    CountRecord record = counts_to_record(coinc, e.setting, e.duration);
    return StreamRun{std::move(streams), std::move(coinc), std::move(record)};
}

}  // namespace ghz
