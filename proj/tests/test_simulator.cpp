#include <doctest.h>

#include <random>

#include "ghzsim/random.hpp"
#include "ghzsim/simulator.hpp"
#include "ghzsim/timestamp_file.hpp"
#include "helpers.hpp"

using namespace ghz;

namespace {

std::vector<oracle::Event> oracle_events(const std::vector<TimestampStream>& streams,
                                         std::uint64_t window, int fold) {
    std::vector<oracle::Click> clicks;
    for (const auto& s : streams)
        for (auto t : s.times) clicks.push_back({t, s.channel});
    return oracle::coincidences(clicks, window, fold);
}

std::vector<oracle::Event> as_oracle(const CoincidenceResult& r) {
    std::vector<oracle::Event> out;
    for (const auto& e : r.events) out.push_back({e.channels, e.times});
    return out;
}

TimestampStream stream_of(int channel, std::vector<std::uint64_t> t) {
    TimestampStream s;
    s.channel = channel;
    s.click_origins.assign(t.size(), ClickOrigin::dark);
    s.times = std::move(t);
    return s;
}

}  // namespace

TEST_CASE("seed derivation is deterministic and decorrelated") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
    CHECK(kDefaultSeed == 0xC5CADE);
}

TEST_CASE("sample_counts is reproducible and follows the Born distribution") {
    const auto rho = ghz_state().density();
    const auto s = MeasurementSetting::parse("XXX");
    const auto a = sample_counts(rho, s, 100.0, 1000.0, 0.0, 42);
    const auto b = sample_counts(rho, s, 100.0, 1000.0, 0.0, 42);
    CHECK(a.counts == b.counts);
    const double n = static_cast<double>(a.total());
    CHECK(std::abs(n - 1e5) < 5 * std::sqrt(1e5));
    // ideal GHZ: only even-parity XXX outcomes, each with probability 1/4
    for (std::size_t k = 0; k < 8; ++k) {
        if (s.parity(k) < 0) {
            CHECK(a.counts[k] == 0);
        } else {
            const double expect = n / 4;
            CHECK(std::abs(a.counts[k] - expect) < 5 * std::sqrt(expect));
        }
    }
    CHECK(a.duration == 1000.0);
}

TEST_CASE("zero rate gives an empty record; dark-only parity is consistent with 0") {
    const auto rho = ghz_state().density();
    const auto s = MeasurementSetting::parse("XXX");
    CHECK(sample_counts(rho, s, 0.0, 100.0, 0.0, 1).total() == 0);
    const auto dark = sample_counts(rho, s, 0.0, 1000.0, 5.0, 1);
    ParityOptions po;
    po.model = SigmaModel::multinomial;
    const auto e = parity_expectation(dark, po);
    REQUIRE(e);
    CHECK(std::abs(e->value) < 3 * e->sigma);
    CHECK_THROWS_AS(sample_counts(rho, s, -1.0, 1.0, 0.0, 1), std::invalid_argument);
}

TEST_CASE("poisson_stream: sorted, distinct, correct mean count") {
    const auto s = poisson_stream(3, 2e4, 5.0, 99);
    CHECK(s.channel == 3);
    CHECK(s.strictly_increasing());
    CHECK(std::abs(static_cast<double>(s.times.size()) - 1e5) < 5 * std::sqrt(1e5));
    CHECK(s.times.back() < 5'000'000'000'000ULL);
    CHECK(s.origin() == StreamOrigin::dark);
    CHECK(poisson_stream(0, 0.0, 10.0, 1).times.empty());
}

TEST_CASE("coincidence finder agrees with the brute-force oracle") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        std::vector<TimestampStream> streams;
        // 6 channels, ~200 clicks each in 1 us: dense enough for contention.
        for (int c = 0; c < 6; ++c) streams.push_back(poisson_stream(c, 2e8, 1e-6, derive_seed(seed, c)));
        for (int fold : {2, 3}) {
            for (std::uint64_t w : {500ULL, 5000ULL}) {
                const auto fast = find_coincidences_ps(streams, w, fold);
                CHECK(as_oracle(fast) == oracle_events(streams, w, fold));
                const auto ref = find_coincidences_reference(streams, w, fold);
                CHECK(fast.events == ref.events);
                CHECK(fast.counts == ref.counts);
            }
        }
    }
}

TEST_CASE("coincidence edge cases") {
    std::vector<TimestampStream> none;
    CHECK(find_coincidences(none, 1e-9, 2).events.empty());
    std::vector<TimestampStream> one{stream_of(0, {1, 5, 9})};
    CHECK(find_coincidences(one, 1e-9, 2).events.empty());
    // two channels of the same photon never coincide with each other
    std::vector<TimestampStream> same{stream_of(0, {100}), stream_of(1, {100})};
    CHECK(find_coincidences_ps(same, 1000, 2).events.empty());
    std::vector<TimestampStream> bad{stream_of(0, {5, 3})};
    CHECK_THROWS_AS(find_coincidences_ps(bad, 10, 2), std::invalid_argument);
    CHECK_THROWS_AS(find_coincidences_ps(same, 0, 2), std::invalid_argument);
    CHECK_THROWS_AS(find_coincidences_ps(same, 10, 1), std::invalid_argument);
    // fold larger than the number of photons
    CHECK(find_coincidences_ps(same, 1000, 3).events.empty());
}

TEST_CASE("half-window rule and count keys") {
    std::vector<TimestampStream> s{stream_of(0, {1000}), stream_of(3, {1250}), stream_of(4, {5000})};
    auto r = find_coincidences_ps(s, 500, 2);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].span == 250);
    CHECK(r.counts.at("+-.") == 1);
    r = find_coincidences_ps(s, 499, 2);
    CHECK(r.events.empty());
    // a consumed click cannot anchor a second event
    std::vector<TimestampStream> t{stream_of(0, {0}), stream_of(2, {100}), stream_of(4, {200})};
    CHECK(find_coincidences_ps(t, 1000, 2).events.size() == 1);
}

TEST_CASE("accidental two-fold rate on independent streams matches R1 R2 tau") {
    const double r1 = 2e5, r2 = 3e5, tau = 1e-9, T = 20.0;
    std::vector<TimestampStream> s{poisson_stream(0, r1, T, 5), poisson_stream(2, r2, T, 6)};
    const auto found = find_coincidences(s, tau, 2);
    const double rates[] = {r1, r2};
    const double expected = accidental_rate(rates, tau) * T;
    CHECK(std::abs(found.events.size() - expected) < 3 * std::sqrt(expected));
}

TEST_CASE("event-level GHZ streams give only correlated ZZZ coincidences") {
    SourceConfig c;
    c.triplet_rate = 50.0;
    c.dark_rate = 0.0;
    const auto s = MeasurementSetting::parse("ZZZ");
    const auto streams = generate_streams(c, ghz_state().density(), s, 100.0, 17);
    REQUIRE(streams.size() == 6);
    for (const auto& st : streams) CHECK(st.strictly_increasing());
    const auto found = find_coincidences(streams, c.coincidence_window, 3);
    const auto rec = counts_to_record(found, s, 100.0);
    const double n = static_cast<double>(rec.total());
    CHECK(std::abs(n - 5000.0) < 5 * std::sqrt(5000.0));
    CHECK(rec.counts[0] + rec.counts[7] == rec.total());
}

TEST_CASE("stream generation is identical under serial and parallel execution") {
    SourceConfig c;
    c.triplet_rate = 5.0;
    c.dark_rate = 200.0;
    c.timing_jitter = 50e-12;
    const auto s = MeasurementSetting::parse("XXX");
    StreamOptions a;
    a.policy = ExecPolicy::serial;
    StreamOptions b;
    b.policy = ExecPolicy::parallel;
    const auto x = generate_streams(c, ghz_state().density(), s, 50.0, 3, a);
    const auto y = generate_streams(c, ghz_state().density(), s, 50.0, 3, b);
    REQUIRE(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(x[i].times == y[i].times);
        CHECK(x[i].click_origins == y[i].click_origins);
    }
}

TEST_CASE("timestamp file round trip and corruption checks") {
    std::vector<TimestampStream> s{stream_of(0, {10, 20}), stream_of(1, {15}), stream_of(5, {1})};
    s[1].click_origins[0] = ClickOrigin::signal;
    const auto bytes = encode_timestamps(s);
    CHECK(bytes.size() == kTimestampHeaderBytes + 4 * kTimestampRecordBytes);
    const auto back = decode_timestamps(bytes);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].channel == s[i].channel);
        CHECK(back[i].times == s[i].times);
        CHECK(back[i].click_origins == s[i].click_origins);
    }
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_timestamps(bad), std::runtime_error);
    CHECK_THROWS_AS(decode_timestamps(bytes.substr(0, bytes.size() - 3)), std::runtime_error);
}

TEST_CASE("accidental rate formula") {
    const double r[] = {10.0, 20.0, 30.0};
    CHECK(accidental_rate(r, 1e-9) == doctest::Approx(6000.0 * 1e-18));
    const double neg[] = {-1.0};
    CHECK_THROWS_AS(accidental_rate(neg, 1e-9), std::invalid_argument);
}
