#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "ghzsim/cli.hpp"
#include "ghzsim/experiments.hpp"
#include "ghzsim/serialization.hpp"

using namespace ghz;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("ghzsim_test_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
    const auto p = dir / "config.json";
    write_text_file(p, j.dump());
    return p;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ghzsim");
    return run_cli(args);
}

/// File contents with the run_info key removed from JSON documents.
std::string payload(const fs::path& p) {
    const auto text = read_text_file(p);
    if (p.extension() != ".json") return text;
    auto j = Json::parse(text);
    j.erase("run_info");
    return dump_json(j);
}

}  // namespace

TEST_CASE("doubles are written with 17 significant digits") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(M_PI)) == M_PI);
    Json j{{"x", 1.0 / 3.0}, {"n", 3}, {"s", "a"}};
    CHECK(dump_json(j, 0) == "{\"x\":0.33333333333333331,\"n\":3,\"s\":\"a\"}\n");
}

TEST_CASE("count records round-trip through JSON") {
    CountRecord r(MeasurementSetting::parse("XZ"), {1, 2, 3, 4}, 5.5);
    r.metadata["note"] = "x";
    const auto j = nlohmann::json::parse(dump_json(to_json(r)));
    const auto back = count_record_from_json(j);
    CHECK(back.setting == r.setting);
    CHECK(back.counts == r.counts);
    CHECK(back.duration == 5.5);
    CHECK(back.metadata.at("note") == "x");
    auto bad = j;
    bad["extra"] = 1;
    CHECK_THROWS_AS(count_record_from_json(bad), std::invalid_argument);
    auto wrong = j;
    wrong["counts"]["+++"] = 1;
    CHECK_THROWS_AS(count_record_from_json(wrong), std::invalid_argument);
}

TEST_CASE("CSV table") {
    CsvTable t({"a", "b"});
    t.add_row({"1", "2"});
    CHECK(t.str() == "a,b\n1,2\n");
    CHECK_THROWS_AS(t.add_row({"1"}), std::invalid_argument);
}

TEST_CASE("plan building: presets, overrides and fail-closed keys") {
    const auto p = build_plan(ExperimentKind::triplet_witness, std::nullopt, nullptr);
    CHECK(p.preset == "cascade-paper");
    CHECK(p.seed == kDefaultSeed);
    REQUIRE(p.schedule.size() == 2);
    CHECK(p.schedule[0].setting.label() == "XXX");
    CHECK(p.schedule[0].duration == 28800.0);
    CHECK(p.source.triplet_rate == doctest::Approx(6.4 / 3600));

    PlanOverrides ov;
    ov.seed = 7;
    const auto q = build_plan(ExperimentKind::triplet_witness, std::nullopt,
                              nlohmann::json{{"seed", "0x10"}, {"xxx_duration", 10.0}}, ov);
    CHECK(q.seed == 7);
    CHECK(q.schedule[0].duration == 10.0);

    CHECK_THROWS_AS(build_plan(ExperimentKind::triplet_witness, std::nullopt, nlohmann::json{{"thetta", 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_plan(ExperimentKind::triplet_witness, std::nullopt, nlohmann::json{{"kind", "phase_scan"}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_plan(ExperimentKind::triplet_witness, std::string("nope"), nullptr),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_plan(ExperimentKind::triplet_witness, std::nullopt, nlohmann::json{{"theta", "x"}}),
                    std::invalid_argument);
}

TEST_CASE("zero durations and negative spans are rejected") {
    CHECK_THROWS_AS(build_plan(ExperimentKind::phase_scan, std::nullopt, nlohmann::json{{"scan_duration", 0.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_plan(ExperimentKind::stability, std::nullopt, nlohmann::json{{"span_days", -1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_plan(ExperimentKind::stability, std::nullopt,
                               nlohmann::json{{"phase_walk_sigma", -0.1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_plan(ExperimentKind::stability, std::nullopt,
                               nlohmann::json{{"resample_interval", 0.0}}),
                    std::invalid_argument);
}

TEST_CASE("stability preset spans seven 24-hour cycles") {
    const auto p = build_plan(ExperimentKind::stability, std::nullopt, nullptr);
    CHECK(p.cycle_period() == 86400.0);
    CHECK(p.cycles() == 7);
    REQUIRE(p.drift);
}

TEST_CASE("noise-free phase scan recovers amplitude 1") {
    const auto p = build_plan(ExperimentKind::phase_scan, std::string("phase-scan-exact"), nullptr);
    const auto r = run_phase_scan(p);
    REQUIRE(r.fit);
    CHECK(std::abs(r.fit->amplitude - 1.0) < 1e-9);
    CHECK(std::abs(r.fit->phase_offset) < 1e-9);
}

TEST_CASE("ideal high-rate witness run gives W near -1") {
    const auto p = build_plan(ExperimentKind::triplet_witness, std::string("ideal-ghz"),
                              nlohmann::json{{"replicas", 500}});
    const auto r = run_witness(p);
    REQUIRE(r.witness);
    CHECK(r.witness->w_value.value == doctest::Approx(-1.0));
    CHECK(*r.exact_w == doctest::Approx(-1.0));
}

TEST_CASE("dark-dominated witness run has parities consistent with zero") {
    const auto p = build_plan(ExperimentKind::triplet_witness, std::nullopt,
                              nlohmann::json{{"triplet_rate", 0.0},
                                             {"dark_rate", 2e4},
                                             {"coincidence_window", 1e-6},
                                             {"replicas", 1000}});
    const auto r = run_witness(p);
    REQUIRE(r.witness);
    for (const auto* e : {&r.witness->e_xxx, &r.witness->e_1zz, &r.witness->e_z1z, &r.witness->e_zz1}) {
        CHECK(std::abs(e->value) < 3 * e->sigma);
    }
}

TEST_CASE("a witness basis without counts yields a diagnostic, not a witness") {
    const auto p = build_plan(ExperimentKind::triplet_witness, std::nullopt,
                              nlohmann::json{{"triplet_rate", 0.0}, {"dark_rate", 0.0}});
    const auto r = run_witness(p);
    CHECK_FALSE(r.witness.has_value());
    CHECK_FALSE(r.diagnostic.empty());
}

TEST_CASE("zero-drift stability run is consistent with the initial fidelity") {
    const auto p = build_plan(ExperimentKind::stability, std::string("stability-nodrift"),
                              nlohmann::json{{"replicas", 500}, {"triplet_rate", 0.1}});
    const auto r = run_stability(p);
    REQUIRE(r.valid_points == 7);
    for (const auto& pt : r.points) {
        const auto& f = pt.witness->fidelity_lower_bound;
        CHECK(std::abs(f.value - 0.96) < 4 * f.sigma);
    }
    CHECK(std::abs(r.slope_per_day) <= 3 * r.slope_sigma_per_day);
}

TEST_CASE("coincidence bench edge cases") {
    auto p = build_plan(ExperimentKind::coincidence_bench, std::nullopt,
                        nlohmann::json{{"bench_rates", {0.0, 0.0}}});
    auto r = run_coincidence_bench(p);
    CHECK(r.clicks == 0);
    CHECK(r.events == 0);
    CHECK(r.elapsed_seconds == 0.0);
    p = build_plan(ExperimentKind::coincidence_bench, std::nullopt,
                   nlohmann::json{{"bench_rates", {1e5}}, {"bench_duration", 1.0}});
    r = run_coincidence_bench(p);
    CHECK(r.clicks > 0);
    CHECK(r.events == 0);
    CHECK(r.reference_match);
}

TEST_CASE("CLI outputs embed the configuration and seed, and reruns are byte-identical") {
    const auto dir = scratch("determinism");
    const auto cfg = write_config(dir, {{"tomography_replicas", 100}, {"replicas", 200}});
    const std::vector<std::vector<std::string>> runs{
        {"witness"},
        {"phase-scan", "--replicas", "200"},
        {"stability", "--replicas", "200"},
        {"pair-tomo", "--config", cfg.string()},
        {"coinc-bench", "--config", (dir / "bench.json").string()},
        {"simulate-streams"},
    };
    write_text_file(dir / "bench.json", R"({"bench_rates": [1e5, 1e5], "bench_duration": 1.0})");
    for (const auto& args : runs) {
        for (const char* tag : {"a", "b"}) {
            auto full = args;
            full.insert(full.end(), {"--out", (dir / tag).string(), "--seed", "12345"});
            CHECK(cli(full) == kExitOk);
        }
    }
    int files = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        const auto other = dir / "b" / entry.path().filename();
        REQUIRE(fs::exists(other));
        CHECK_MESSAGE(payload(entry.path()) == payload(other), entry.path().filename().string());
        if (entry.path().extension() == ".json") {
            const auto j = nlohmann::json::parse(read_text_file(entry.path()));
            CHECK(j.at("config").at("seed").get<std::uint64_t>() == 12345);
            CHECK(j.contains("run_info"));
        }
        if (entry.path().extension() == ".csv") {
            CHECK(read_text_file(entry.path()).rfind("# command=", 0) == 0);
        }
        ++files;
    }
    CHECK(files == 13);
    fs::remove_all(dir);
}

TEST_CASE("CLI reports configuration errors with exit code 2") {
    const auto dir = scratch("errors");
    const auto cfg = write_config(dir, {{"no_such_key", 1}});
    CHECK(cli({"witness", "--config", cfg.string(), "--out", dir.string()}) == kExitConfigError);
    CHECK(cli({"witness", "--seed", "abc", "--out", dir.string()}) == kExitConfigError);
    CHECK(cli({"nope"}) == kExitConfigError);
    CHECK(cli({"witness", "--format", "xml"}) == kExitConfigError);
    fs::remove_all(dir);
}

TEST_CASE("witness and pair-tomo analyze supplied count records") {
    const auto dir = scratch("records");
    write_text_file(dir / "w.json", R"([
      {"setting": "XXX", "counts": {"+++": 11, "+--": 11, "-+-": 11, "--+": 10, "++-": 1}},
      {"setting": "ZZZ", "counts": {"+++": 29, "---": 28, "+-+": 1}}])");
    CHECK(cli({"witness", "--records", (dir / "w.json").string(), "--out", dir.string(),
               "--replicas", "200"}) == kExitOk);
    const auto j = nlohmann::json::parse(read_text_file(dir / "witness.json"));
    CHECK(j["results"]["witness"]["w_value"]["value"].get<double>() ==
          doctest::Approx(1.5 - 42.0 / 44 - (56.0 / 58 + 1.0 + 56.0 / 58) / 2));
    fs::remove_all(dir);
}

TEST_CASE("simulate-streams output feeds coinc-bench") {
    const auto dir = scratch("streams");
    CHECK(cli({"simulate-streams", "--out", dir.string()}) == kExitOk);
    CHECK(cli({"coinc-bench", "--input", (dir / "streams.cgts").string(), "--out", (dir / "b").string(),
               "--format", "json"}) == kExitOk);
    const auto j = nlohmann::json::parse(read_text_file(dir / "b" / "coinc_bench.json"));
    CHECK(j["results"]["clicks"].get<std::size_t>() > 0);
    CHECK_FALSE(fs::exists(dir / "b" / "coinc_bench.csv"));
    fs::remove_all(dir);
}
