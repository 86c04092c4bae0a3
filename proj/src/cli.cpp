#include "ghzsim/cli.hpp"

#include <cctype>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "ghzsim/experiments.hpp"
#include "ghzsim/parallel.hpp"
#include "ghzsim/serialization.hpp"
#include "ghzsim/timestamp_file.hpp"

namespace ghz {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
    std::string config;
    std::string out = ".";
    std::string format = "both";
    std::string preset;
    std::string seed;
    int replicas = 0;
    std::string records;  ///< witness / pair-tomo: analyze these counts instead
    std::string input;    ///< coinc-bench: timestamp file instead of generated streams
};

bool want_json(const CommonOptions& o) { return o.format != "csv"; }
bool want_csv(const CommonOptions& o) { return o.format != "json"; }

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fmt(double v) { return format_double(v); }

std::string fmt_opt(const std::optional<Estimate>& e, bool sigma) {
    if (!e) return "";
    return fmt(sigma ? e->sigma : e->value);
}

class Output {
public:
    Output(const CommonOptions& opts, std::string command, Json config)
        : opts_(opts), command_(std::move(command)), config_(std::move(config)),
          started_(std::chrono::steady_clock::now()) {
        fs::create_directories(opts_.out);
    }

    void json(const std::string& name, Json results, Json extra_run_info = Json::object()) const {
        if (!want_json(opts_)) return;
        Json run_info{{"generated_at", utc_now()},
                      {"elapsed_seconds",
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count()},
                      {"threads", max_threads()}};
        for (auto it = extra_run_info.begin(); it != extra_run_info.end(); ++it) {
            run_info[it.key()] = it.value();
        }
        Json doc{{"command", command_}, {"config", config_}, {"results", std::move(results)},
                 {"run_info", std::move(run_info)}};
        write_text_file(fs::path(opts_.out) / name, dump_json(doc));
    }

    void csv(const std::string& name, const CsvTable& table) const {
        if (!want_csv(opts_)) return;
        write_text_file(fs::path(opts_.out) / name,
                        "# command=" + command_ + " config=" + dump_json(config_, 0) + table.str());
    }

    const CommonOptions& options() const { return opts_; }

private:
    const CommonOptions& opts_;
    std::string command_;
    Json config_;
    std::chrono::steady_clock::time_point started_;
};

ExperimentPlan load_plan(ExperimentKind kind, const CommonOptions& o) {
    nlohmann::json config;
    if (!o.config.empty()) {
        try {
            config = nlohmann::json::parse(read_text_file(o.config));
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument("cannot parse config " + o.config + ": " + e.what());
        }
    }
    PlanOverrides ov;
    if (!o.seed.empty()) {
        std::size_t pos = 0;
        if (!std::isdigit(static_cast<unsigned char>(o.seed.front()))) pos = std::string::npos;
        else ov.seed = std::stoull(o.seed, &pos, 0);
        if (pos != o.seed.size()) throw std::invalid_argument("--seed must be a nonnegative integer");
    }
    if (o.replicas > 0) ov.replicas = o.replicas;
    return build_plan(kind, o.preset.empty() ? std::nullopt : std::optional<std::string>(o.preset),
                      config, ov);
}

Json records_json(const std::vector<CountRecord>& records) {
    Json a = Json::array();
    for (const auto& r : records) a.push_back(to_json(r));
    return a;
}

Json optional_estimate(const std::optional<Estimate>& e) {
    return e ? to_json(*e) : Json(nullptr);
}

// ---------------------------------------------------------------- commands

int cmd_phase_scan(const CommonOptions& o) {
    const auto plan = load_plan(ExperimentKind::phase_scan, o);
    const Output out(o, "phase-scan", plan_to_json(plan));
    const auto res = run_phase_scan(plan);

    Json rows = Json::array();
    CsvTable table({"phase", "counts", "e_xxx", "sigma"});
    for (const auto& r : res.rows) {
        rows.push_back(Json{{"phase", r.phase},
                            {"counts", r.counts},
                            {"e_xxx", r.value ? Json(r.value->value) : Json(nullptr)},
                            {"sigma", r.value ? Json(r.value->sigma) : Json(nullptr)}});
        table.add_row({fmt(r.phase), std::to_string(r.counts), fmt_opt(r.value, false),
                       fmt_opt(r.value, true)});
    }
    Json results{{"points", rows}, {"fit", res.fit ? to_json(*res.fit) : Json(nullptr)}};
    if (!res.fit_error.empty()) results["fit_error"] = res.fit_error;
    out.json("phase_scan.json", results);
    out.csv("phase_scan.csv", table);
    if (!res.fit) {
        std::cerr << "phase-scan: fit failed: " << res.fit_error << '\n';
        return kExitAnalysisFailed;
    }
    std::cout << "amplitude " << fmt(res.fit->amplitude) << " +- " << fmt(res.fit->amplitude_sigma)
              << ", offset " << fmt(res.fit->phase_offset) << '\n';
    return kExitOk;
}

Json witness_json(const std::optional<WitnessResult>& w) { return w ? to_json(*w) : Json(nullptr); }

void witness_csv_rows(CsvTable& t, const WitnessResult& w) {
    const std::pair<const char*, const Estimate*> terms[] = {
        {"e_xxx", &w.e_xxx}, {"e_1zz", &w.e_1zz}, {"e_z1z", &w.e_z1z},
        {"e_zz1", &w.e_zz1}, {"w_value", &w.w_value}, {"fidelity_lower_bound", &w.fidelity_lower_bound}};
    for (const auto& [name, e] : terms) t.add_row({name, fmt(e->value), fmt(e->sigma)});
}

int cmd_witness(const CommonOptions& o) {
    const auto plan = load_plan(ExperimentKind::triplet_witness, o);
    const Output out(o, "witness", plan_to_json(plan));
    WitnessRun run;
    if (!o.records.empty()) {
        run.records = count_records_from_json(nlohmann::json::parse(read_text_file(o.records)));
        const CountRecord* x = nullptr;
        const CountRecord* z = nullptr;
        for (const auto& r : run.records) {
            if (r.setting.label() == "XXX") x = &r;
            if (r.setting.label() == "ZZZ") z = &r;
        }
        if (!x || !z) throw std::invalid_argument("records must include XXX and ZZZ settings");
        WitnessOptions wo;
        wo.replicas = plan.replicas;
        wo.seed = derive_seed(plan.seed, 0x2000);
        run.witness = ghz_witness_from_records(*x, *z, wo);
        if (!run.witness) run.diagnostic = "a witness basis has no counts; witness not computed";
    } else {
        run = run_witness(plan);
    }

    Json results{{"witness", witness_json(run.witness)}, {"records", records_json(run.records)}};
    if (run.exact_w) results["exact_w"] = *run.exact_w;
    if (!run.diagnostic.empty()) results["diagnostic"] = run.diagnostic;
    out.json("witness.json", results);
    CsvTable table({"term", "value", "sigma"});
    if (run.witness) witness_csv_rows(table, *run.witness);
    out.csv("witness.csv", table);
    if (!run.witness) {
        std::cerr << "witness: " << run.diagnostic << '\n';
        return kExitAnalysisFailed;
    }
    std::cout << "W = " << fmt(run.witness->w_value.value) << " +- " << fmt(run.witness->w_value.sigma)
              << ", F >= " << fmt(run.witness->fidelity_lower_bound.value) << '\n';
    return kExitOk;
}

int cmd_stability(const CommonOptions& o) {
    const auto plan = load_plan(ExperimentKind::stability, o);
    const Output out(o, "stability", plan_to_json(plan));
    const auto res = run_stability(plan);

    Json points = Json::array();
    CsvTable table({"cycle", "t_hours", "mean_phase", "mean_visibility", "xxx_counts", "zzz_counts",
                    "w_value", "w_sigma", "fidelity_lower_bound", "fidelity_sigma"});
    for (const auto& p : res.points) {
        points.push_back(Json{{"cycle", p.cycle},
                              {"t_hours", p.t_hours},
                              {"mean_phase", p.mean_phase},
                              {"mean_visibility", p.mean_visibility},
                              {"witness", witness_json(p.witness)},
                              {"records", records_json(p.records)}});
        const auto w = p.witness;
        table.add_row({std::to_string(p.cycle), fmt(p.t_hours), fmt(p.mean_phase),
                       fmt(p.mean_visibility), std::to_string(p.records[0].total()),
                       std::to_string(p.records[1].total()), w ? fmt(w->w_value.value) : "",
                       w ? fmt(w->w_value.sigma) : "", w ? fmt(w->fidelity_lower_bound.value) : "",
                       w ? fmt(w->fidelity_lower_bound.sigma) : ""});
    }
    Json summary{{"valid_points", res.valid_points},
                 {"mean_fidelity_lower_bound", res.mean_f},
                 {"min_fidelity_lower_bound", res.min_f},
                 {"slope_per_day", res.slope_per_day},
                 {"slope_sigma_per_day", res.slope_sigma_per_day}};
    out.json("stability.json", Json{{"summary", summary}, {"points", points}});
    out.csv("stability.csv", table);
    std::cout << "mean F >= " << fmt(res.mean_f) << ", min " << fmt(res.min_f) << " over "
              << res.valid_points << " cycles\n";
    return kExitOk;
}

Json metrics_json(const TomographyResult& r) {
    return Json{{"fidelity", optional_estimate(r.fidelity)},
                {"purity", to_json(r.purity)},
                {"tangle", optional_estimate(r.tangle)},
                {"log_likelihood", r.log_likelihood},
                {"iterations", r.iterations},
                {"converged", r.converged}};
}

int cmd_pair_tomo(const CommonOptions& o) {
    const auto plan = load_plan(ExperimentKind::pair_tomography, o);
    const Output out(o, "pair-tomo", plan_to_json(plan));
    Json results;
    std::optional<TomographyResult> result;
    if (!o.records.empty()) {
        const auto records = count_records_from_json(nlohmann::json::parse(read_text_file(o.records)));
        MleOptions mo;
        mo.linear_warm_start = true;
        mo.bootstrap_replicas = plan.tomography_replicas;
        mo.seed = derive_seed(plan.seed, 0x5000);
        mo.target = pair_target(plan.source.pair_source);
        result = mle_reconstruct(records, std::nullopt, mo);
        results = Json{{"metrics", metrics_json(*result)},
                       {"rho", matrix_to_json(result->rho.matrix())},
                       {"records", records_json(records)}};
    } else {
        auto run = run_pair_tomography(plan);
        result = run.result;
        results = Json{{"metrics", metrics_json(run.result)},
                       {"truth", Json{{"fidelity", run.truth_fidelity},
                                      {"purity", run.truth_purity},
                                      {"tangle", run.truth_tangle},
                                      {"rho", matrix_to_json(run.truth.matrix())}}},
                       {"rho", matrix_to_json(run.result.rho.matrix())},
                       {"records", records_json(run.records)}};
    }
    out.json("pair_tomography.json", results);

    static const char* labels[] = {"HH", "HV", "VH", "VV"};
    CsvTable table({"part", "row", "HH", "HV", "VH", "VV"});
    const CMatrix& m = result->rho.matrix();
    for (int part = 0; part < 2; ++part) {
        for (int r = 0; r < 4; ++r) {
            std::vector<std::string> row{part == 0 ? "real" : "imag", labels[r]};
            for (int c = 0; c < 4; ++c) row.push_back(fmt(part == 0 ? m(r, c).real() : m(r, c).imag()));
            table.add_row(std::move(row));
        }
    }
    out.csv("pair_tomography_matrix.csv", table);
    std::cout << "fidelity " << fmt_opt(result->fidelity, false) << ", purity "
              << fmt(result->purity.value) << ", tangle " << fmt_opt(result->tangle, false) << '\n';
    return kExitOk;
}

int cmd_coinc_bench(const CommonOptions& o) {
    const auto plan = load_plan(ExperimentKind::coincidence_bench, o);
    const Output out(o, "coinc-bench", plan_to_json(plan));
    CoincidenceBenchResult res;
    Json results;
    if (!o.input.empty()) {
        const auto streams = read_timestamp_file(o.input);
        const auto start = std::chrono::steady_clock::now();
        const auto found = find_coincidences(streams, plan.source.coincidence_window, plan.bench_fold);
        res.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        for (const auto& s : streams) res.clicks += s.times.size();
        res.events = found.events.size();
        Json counts = Json::object();
        for (const auto& [k, n] : found.counts) counts[k] = n;
        results = Json{{"input", o.input}, {"clicks", res.clicks}, {"events", res.events},
                       {"counts", counts}};
    } else {
        res = run_coincidence_bench(plan);
        results = Json{{"clicks", res.clicks},
                       {"events", res.events},
                       {"predicted_events", res.predicted_events ? Json(*res.predicted_events) : Json(nullptr)},
                       {"predicted_sigma", res.predicted_sigma ? Json(*res.predicted_sigma) : Json(nullptr)},
                       {"z_score", res.z_score ? Json(*res.z_score) : Json(nullptr)},
                       {"reference_clicks", res.reference_clicks},
                       {"reference_events", res.reference_events},
                       {"reference_match", res.reference_match}};
    }
    const double rate = res.elapsed_seconds > 0 ? res.clicks / res.elapsed_seconds : 0.0;
    out.json("coinc_bench.json", results,
             Json{{"finder_seconds", res.elapsed_seconds}, {"clicks_per_second", rate}});
    CsvTable table({"clicks", "events", "predicted_events", "reference_match"});
    table.add_row({std::to_string(res.clicks), std::to_string(res.events),
                   res.predicted_events ? fmt(*res.predicted_events) : "",
                   res.reference_match ? "true" : "false"});
    out.csv("coinc_bench.csv", table);
    std::cout << res.clicks << " clicks, " << res.events << " events in " << res.elapsed_seconds
              << " s\n";
    return res.reference_match ? kExitOk : kExitAnalysisFailed;
}

int cmd_simulate_streams(const CommonOptions& o) {
    const auto plan = load_plan(ExperimentKind::stream_simulation, o);
    const Output out(o, "simulate-streams", plan_to_json(plan));
    const auto run = run_stream_simulation(plan);
    write_timestamp_file(fs::path(o.out) / "streams.cgts", run.streams);

    Json channels = Json::array();
    CsvTable table({"channel", "clicks", "signal_clicks", "dark_clicks"});
    for (const auto& s : run.streams) {
        std::size_t dark = 0;
        for (auto c : s.click_origins) dark += c == ClickOrigin::dark;
        channels.push_back(Json{{"channel", s.channel},
                                {"clicks", s.times.size()},
                                {"signal_clicks", s.times.size() - dark},
                                {"dark_clicks", dark}});
        table.add_row({std::to_string(s.channel), std::to_string(s.times.size()),
                       std::to_string(s.times.size() - dark), std::to_string(dark)});
    }
    Json counts = Json::object();
    for (const auto& [k, n] : run.coincidences.counts) counts[k] = n;
    out.json("streams.json", Json{{"timestamp_file", "streams.cgts"},
                                  {"channels", channels},
                                  {"coincidence_counts", counts},
                                  {"record", to_json(run.record)}});
    out.csv("streams.csv", table);
    std::cout << run.coincidences.events.size() << " coincidences in " << run.streams.size()
              << " channels\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Simulation and analysis of cascaded-downconversion GHZ experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ghzsim 1.0");

    std::vector<std::string> names;
    for (const auto& p : preset_names()) names.push_back(p);

    CommonOptions opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "JSON config file (flat key set)")
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", opts.seed, "master seed (decimal or 0x hex; default 0xC5CADE)");
        sub->add_option("--out", opts.out, "output directory")->capture_default_str();
        sub->add_option("--format", opts.format, "output format")
            ->check(CLI::IsMember({"json", "csv", "both"}))
            ->capture_default_str();
        sub->add_option("--replicas", opts.replicas, "bootstrap replicas")->check(CLI::Range(100, 100000000));
        sub->add_option("--preset", opts.preset, "named preset")->check(CLI::IsMember(names));
    };

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const CommonOptions&);
    };
    const Command commands[] = {
        {"phase-scan", "XXX expectation versus cascade phase with a fringe fit", cmd_phase_scan},
        {"witness", "GHZ witness from an XXX and a ZZZ run", cmd_witness},
        {"stability", "repeated witness cycles under a drift model", cmd_stability},
        {"pair-tomo", "two-photon tomography of a pair source", cmd_pair_tomo},
        {"coinc-bench", "coincidence finder throughput and accidentals check", cmd_coinc_bench},
        {"simulate-streams", "event-level timestamp streams and coincidences", cmd_simulate_streams},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_common(sub);
        const std::string name = c.name;
        if (name == "witness" || name == "pair-tomo") {
            sub->add_option("--records", opts.records, "analyze count records from this JSON file")
                ->check(CLI::ExistingFile);
        }
        if (name == "coinc-bench") {
            sub->add_option("--input", opts.input, "read streams from a timestamp file")
                ->check(CLI::ExistingFile);
        }
        subs.emplace_back(sub, &c);
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        for (const auto& [sub, cmd] : subs) {
            if (sub->parsed()) return cmd->run(opts);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    }
    return kExitConfigError;
}

}  // namespace ghz
