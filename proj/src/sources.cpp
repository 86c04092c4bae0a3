#include "ghzsim/sources.hpp"

#include <cmath>
#include <stdexcept>

namespace ghz {

namespace {

void require_unit_interval(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
    }
}

void require_nonnegative(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) + " must be a finite value >= 0");
    }
}

const cplx kI(0.0, 1.0);

}  // namespace

void SourceConfig::validate() const {
    for (double angle : {theta, phi, theta_prime, phi_prime, triplet_phase}) {
        if (!std::isfinite(angle)) throw std::invalid_argument("state angles must be finite");
    }
    require_unit_interval(white_noise, "white_noise");
    require_unit_interval(dephasing_visibility, "dephasing_visibility");
    require_unit_interval(background_fraction, "background_fraction");
    require_unit_interval(cascade_coupling, "cascade_coupling");
    require_nonnegative(pair_rate_1, "pair_rate_1");
    require_nonnegative(pair_rate_2, "pair_rate_2");
    require_nonnegative(triplet_rate, "triplet_rate");
    require_nonnegative(dark_rate, "dark_rate");
    require_nonnegative(timing_jitter, "timing_jitter");
    if (channel_efficiency.empty()) {
        throw std::invalid_argument("channel_efficiency needs at least one value");
    }
    for (double e : channel_efficiency) require_unit_interval(e, "channel_efficiency");
    if (!(coincidence_window > 0.0) || !std::isfinite(coincidence_window)) {
        throw std::invalid_argument("coincidence_window must be > 0");
    }
    if (background_fraction > 0.0 && background_state.empty()) {
        throw std::invalid_argument("background_fraction set without background_state");
    }
}

double SourceConfig::cascade_phase() const noexcept {
    return triplet_phase_mode == PhaseMode::combined ? phi + phi_prime : triplet_phase;
}

double SourceConfig::efficiency(int photon) const {
    if (channel_efficiency.empty()) throw std::invalid_argument("no channel efficiencies");
    const auto i = static_cast<std::size_t>(photon);
    return i < channel_efficiency.size() ? channel_efficiency[i] : channel_efficiency.back();
}

PureState psi_pair_state(double theta, double phi) {
    CVector v = CVector::Zero(4);
    v[1] = std::cos(theta);
    v[2] = std::exp(kI * phi) * std::sin(theta);
    return PureState(std::move(v));
}

PureState phi_pair_state(double theta_prime, double phi_prime) {
    CVector v = CVector::Zero(4);
    v[0] = std::cos(theta_prime);
    v[3] = std::exp(kI * phi_prime) * std::sin(theta_prime);
    return PureState(std::move(v));
}

PureState cascade_map(Polarization parent) {
    return PureState::basis(parent == Polarization::H ? "VV" : "HH");
}

PureState cascade(const PureState& parent, double phase) {
    if (parent.n_qubits() != 1) throw std::invalid_argument("cascade expects one photon");
    CVector out = parent[0] * cascade_map(Polarization::H).amplitudes() +
                  parent[1] * std::exp(kI * phase) * cascade_map(Polarization::V).amplitudes();
    return PureState(std::move(out));
}

PureState cascade_pair(const PureState& pair, double phi_prime) {
    if (pair.n_qubits() != 2) throw std::invalid_argument("cascade_pair expects a pair state");
    // Photon 2 is the PPLN pump: H -> |VV> e^{i phi'}, V -> |HH>.
    CVector out = CVector::Zero(8);
    for (Eigen::Index idx = 0; idx < 4; ++idx) {
        const cplx a = pair[idx];
        if (a == cplx(0.0)) continue;
        const Eigen::Index first = idx >> 1;
        const bool second_is_v = idx & 1;
        const PureState children = cascade_map(second_is_v ? Polarization::V : Polarization::H);
        const cplx phase = second_is_v ? cplx(1.0) : std::exp(kI * phi_prime);
        out.segment(first * 4, 4) += a * phase * children.amplitudes();
    }
    // Remove the global phase so the |HHH> amplitude is real and nonnegative.
    if (std::abs(out[0]) > 0.0) out *= std::conj(out[0]) / std::abs(out[0]);
    return PureState(std::move(out));
}

PureState ghz_exp_state(double theta, double cascade_phase) {
    CVector v = CVector::Zero(8);
    v[0] = std::cos(theta);
    v[7] = std::exp(kI * cascade_phase) * std::sin(theta);
    return PureState(std::move(v));
}

DensityMatrix noisy_state(const PureState& ideal, double white_noise, double visibility) {
    require_unit_interval(white_noise, "white_noise");
    require_unit_interval(visibility, "dephasing_visibility");
    const CMatrix pure = ideal.amplitudes() * ideal.amplitudes().adjoint();
    const Eigen::Index d = ideal.dim();
    CMatrix dephased = visibility * pure;
    dephased.diagonal() = pure.diagonal();
    CMatrix out = (1.0 - white_noise) * dephased +
                  white_noise * CMatrix::Identity(d, d) / static_cast<double>(d);
    return DensityMatrix(std::move(out));
}

DensityMatrix mix_background(const DensityMatrix& rho, const std::string& basis_label,
                             double fraction) {
    require_unit_interval(fraction, "background_fraction");
    if (fraction == 0.0) return rho;
    const PureState b = PureState::basis(basis_label);
    if (b.dim() != rho.dim()) {
        throw std::invalid_argument("background_state '" + basis_label +
                                    "' does not match the state's photon count");
    }
    return DensityMatrix((1.0 - fraction) * rho.matrix() +
                         fraction * b.amplitudes() * b.amplitudes().adjoint());
}

DensityMatrix pair_source_state(const SourceConfig& config) {
    const PureState ideal = config.pair_source == PairSource::ppktp
                                ? psi_pair_state(config.theta, config.phi)
                                : phi_pair_state(config.theta_prime, config.phi_prime);
    const DensityMatrix rho =
        noisy_state(ideal, config.white_noise, config.dephasing_visibility);
    return mix_background(rho, config.background_state, config.background_fraction);
}

PureState pair_target(PairSource source) {
    return source == PairSource::ppktp ? psi_pair_state(M_PI / 4, M_PI)
                                       : phi_pair_state(M_PI / 4, 0.0);
}

DensityMatrix triplet_source_state(const SourceConfig& config) {
    const DensityMatrix rho = noisy_state(ghz_exp_state(config.theta, config.cascade_phase()),
                                          config.white_noise, config.dephasing_visibility);
    return mix_background(rho, config.background_state, config.background_fraction);
}

double predicted_triplet_rate(const SourceConfig& config, double conversion_efficiency) {
    require_nonnegative(conversion_efficiency, "conversion_efficiency");
    const double eta_845 = config.efficiency(0);
    if (!(eta_845 > 0.0)) throw std::invalid_argument("846 nm efficiency must be > 0");
    return config.pair_rate_1 / eta_845 * config.cascade_coupling * conversion_efficiency *
           config.efficiency(1) * config.efficiency(2);
}

double implied_conversion_efficiency(const SourceConfig& config, double target_rate) {
    const double per_unit = predicted_triplet_rate(config, 1.0);
    if (!(per_unit > 0.0)) throw std::invalid_argument("rate chain is zero");
    return target_rate / per_unit;
}

double balancing_theta(double efficiency_ratio) {
    require_nonnegative(efficiency_ratio, "efficiency ratio");
    return std::atan(std::sqrt(efficiency_ratio));
}

}  // namespace ghz
