#include <doctest.h>

#include <random>

#include "ghzsim/estimation.hpp"
#include "ghzsim/random.hpp"
#include "ghzsim/simulator.hpp"
#include "ghzsim/sources.hpp"
#include "helpers.hpp"

using namespace ghz;

namespace {

// Counts proportional to exact probabilities (no sampling noise).
std::vector<CountRecord> expected_records(const DensityMatrix& rho, double n) {
    std::vector<CountRecord> out;
    for (const auto& s : MeasurementSetting::tomography_set(rho.n_qubits())) {
        std::vector<std::uint64_t> c;
        for (double p : born_probabilities(rho, s)) c.push_back(static_cast<std::uint64_t>(std::llround(p * n)));
        out.emplace_back(s, c, 1.0);
    }
    return out;
}

std::vector<CountRecord> sampled_records(const DensityMatrix& rho, double n, std::uint64_t seed) {
    std::vector<CountRecord> out;
    std::uint64_t i = 0;
    for (const auto& s : MeasurementSetting::tomography_set(rho.n_qubits())) {
        out.push_back(sample_counts(rho, s, n, 1.0, 0.0, derive_seed(seed, i++)));
    }
    return out;
}

}  // namespace

TEST_CASE("linear inversion of exact statistics returns the state") {
    std::mt19937_64 rng(8);
    for (int dim : {4, 8}) {
        const auto o = oracle::random_mixed(dim, rng);
        const auto rho = density_from_oracle(o);
        const auto est = linear_inversion(expected_records(rho, 1e12));
        CHECK(oracle::trace_distance(to_oracle(est), o) < 1e-9);
    }
}

TEST_CASE("linear inversion needs every setting") {
    auto recs = expected_records(ghz_state().density(), 1e4);
    recs.pop_back();
    CHECK_THROWS_AS(linear_inversion(recs), std::invalid_argument);
}

TEST_CASE("MLE output is a density matrix and the ascent is monotone") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 5; ++i) {
        const auto rho = density_from_oracle(oracle::random_mixed(4, rng));
        const auto recs = sampled_records(rho, 2000, 100 + i);
        MleOptions o;
        o.record_history = true;
        const auto r = mle_reconstruct(recs, std::nullopt, o);
        CHECK(r.rho.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.rho.eigenvalues().minCoeff() >= 0.0);
        for (std::size_t k = 1; k < r.likelihood_history.size(); ++k) {
            CHECK(r.likelihood_history[k] >= r.likelihood_history[k - 1]);
        }
        CHECK(r.log_likelihood >= log_likelihood(rho, recs) - 1e-6);
    }
}

TEST_CASE("MLE recovers random states from large samples") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 5; ++i) {
        const auto o = oracle::random_mixed(4, rng);
        const auto r = mle_reconstruct(sampled_records(density_from_oracle(o), 1e6, 7 + i));
        CHECK(oracle::trace_distance(to_oracle(r.rho.matrix()), o) < 0.01);
        CHECK(r.converged);
    }
}

TEST_CASE("MLE on pure-state data stays on the boundary and reports metrics") {
    const auto target = psi_pair_state(M_PI / 4, M_PI);
    MleOptions o;
    o.target = target;
    o.linear_warm_start = true;
    const auto r = mle_reconstruct(expected_records(target.density(), 1e6), std::nullopt, o);
    REQUIRE(r.fidelity);
    REQUIRE(r.tangle);
    CHECK(r.fidelity->value > 0.999);
    CHECK(r.tangle->value > 0.99);
    CHECK(r.purity.value > 0.999);
}

TEST_CASE("MLE bootstrap is identical serially and in parallel") {
    const auto rho = noisy_state(psi_pair_state(M_PI / 4, M_PI), 0.05, 0.9);
    const auto recs = sampled_records(rho, 5000, 3);
    MleOptions a;
    a.bootstrap_replicas = 100;
    a.policy = ExecPolicy::serial;
    a.target = psi_pair_state(M_PI / 4, M_PI);
    MleOptions b = a;
    b.policy = ExecPolicy::parallel;
    const auto x = mle_reconstruct(recs, std::nullopt, a);
    const auto y = mle_reconstruct(recs, std::nullopt, b);
    CHECK(x.purity.sigma == y.purity.sigma);
    CHECK(x.fidelity->sigma == y.fidelity->sigma);
    CHECK(x.purity.sigma > 0.0);
}

TEST_CASE("Cholesky factor is lower triangular and reproduces the state") {
    std::mt19937_64 rng(14);
    const auto o = oracle::random_mixed(4, rng);
    const CMatrix t = cholesky_factor(from_oracle(o));
    for (int r = 0; r < 4; ++r)
        for (int c = r + 1; c < 4; ++c) CHECK(std::abs(t(r, c)) == 0.0);
    CMatrix back = t.adjoint() * t;
    back /= back.trace();
    CHECK(oracle::trace_distance(to_oracle(back), o) < 1e-5);
}

TEST_CASE("witness arithmetic: (0.95, 0.97, 1.00, 0.97) gives W = -0.92, F = 0.96") {
    const auto w = ghz_witness({0.95, 0.0}, {0.97, 0.0}, {1.00, 0.0}, {0.97, 0.0});
    CHECK(std::abs(w.w_value.value - (-0.92)) < 1e-12);
    CHECK(std::abs(w.fidelity_lower_bound.value - 0.96) < 1e-12);
    CHECK_THROWS_AS(ghz_witness({1.2, 0}, {1, 0}, {1, 0}, {1, 0}), std::invalid_argument);
}

TEST_CASE("witness sigma by quadrature") {
    const auto w = ghz_witness({0.9, 0.03}, {0.9, 0.04}, {0.9, 0.04}, {0.9, 0.04});
    const double expect = std::sqrt(0.03 * 0.03 + 3 * 0.02 * 0.02);
    CHECK(w.w_sigma_quadrature == doctest::Approx(expect));
    CHECK(w.fidelity_lower_bound.sigma == doctest::Approx(expect / 2));
}

TEST_CASE("property: Tr(W rho) matches the expectation-value formula and bounds the fidelity") {
    std::mt19937_64 rng(15);
    const auto wop = ghz_witness_operator();
    std::vector<oracle::cd> ghz(8, 0.0);
    ghz[0] = ghz[7] = M_SQRT1_2;
    for (int i = 0; i < 200; ++i) {
        const auto o = oracle::random_mixed(8, rng);
        const auto rho = density_from_oracle(o);
        const double w = expectation(rho, wop);
        const double formula = 1.5 - oracle::expectation(o, "XXX") -
                               (oracle::expectation(o, "1ZZ") + oracle::expectation(o, "Z1Z") +
                                oracle::expectation(o, "ZZ1")) / 2;
        CHECK(w == doctest::Approx(formula).epsilon(1e-12));
        CHECK(oracle::fidelity(o, ghz) >= (1 - w) / 2 - 1e-9);
    }
}

TEST_CASE("witness from records") {
    CountRecord x(MeasurementSetting::parse("XXX"), {10, 0, 0, 10, 0, 10, 10, 0});
    CountRecord z(MeasurementSetting::parse("ZZZ"), {20, 0, 0, 0, 0, 0, 0, 20});
    WitnessOptions o;
    o.replicas = 500;
    const auto w = ghz_witness_from_records(x, z, o);
    REQUIRE(w);
    CHECK(w->w_value.value == doctest::Approx(-1.0));
    CHECK(w->bootstrapped);
    CountRecord empty(MeasurementSetting::parse("XXX"), std::vector<std::uint64_t>(8, 0));
    CHECK_FALSE(ghz_witness_from_records(empty, z, o).has_value());
}

TEST_CASE("sinusoid fit recovers exact fringes") {
    std::vector<PhasePoint> pts;
    for (int i = 0; i < 12; ++i) {
        const double p = 2 * M_PI * i / 12;
        pts.push_back({p, 0.8 * std::cos(p + 0.4), 0.1});
    }
    const auto f = fit_sinusoid(pts);
    CHECK(f.amplitude == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(f.phase_offset == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(f.residual_rms < 1e-12);
    // uniform sigma scaling scales the parameter sigmas
    auto scaled = pts;
    for (auto& p : scaled) p.sigma = 0.2;
    CHECK(fit_sinusoid(scaled).amplitude_sigma == doctest::Approx(2 * f.amplitude_sigma));
}

TEST_CASE("sinusoid fit errors") {
    std::vector<PhasePoint> two{{0.0, 1.0, 1.0}, {1.0, 0.5, 1.0}};
    CHECK_THROWS_AS(fit_sinusoid(two), std::invalid_argument);
    std::vector<PhasePoint> same{{0.0, 1.0, 1.0}, {M_PI, -1.0, 1.0}, {2 * M_PI, 1.0, 1.0}};
    CHECK_THROWS_AS(fit_sinusoid(same), std::invalid_argument);
    std::vector<PhasePoint> zero{{0.0, 1.0, 0.0}, {1.0, 0.5, 1.0}, {2.0, 0.1, 1.0}};
    CHECK_THROWS_AS(fit_sinusoid(zero), std::invalid_argument);
}

TEST_CASE("bootstrap_metrics") {
    const auto recs = sampled_records(ghz_state().density(), 50, 1);
    const RecordStatistic total = [](std::span<const CountRecord> r) {
        double n = 0;
        for (const auto& x : r) n += static_cast<double>(x.total());
        return n;
    };
    CHECK_THROWS_AS(bootstrap_metrics(recs, total, 10, 1), std::invalid_argument);
    const auto a = bootstrap_metrics(recs, total, 400, 1, ExecPolicy::serial);
    const auto b = bootstrap_metrics(recs, total, 400, 1, ExecPolicy::parallel);
    CHECK(a.value == b.value);
    CHECK(a.sigma == b.sigma);
    double n = 0;
    for (const auto& x : recs) n += static_cast<double>(x.total());
    CHECK(a.sigma == doctest::Approx(std::sqrt(n)).epsilon(0.15));
}
