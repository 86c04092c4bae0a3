// Ideal and noisy states for the two Sagnac pair sources and the cascaded
// triplet source, together with the physical parameter set they share.
#pragma once

#include <string>
#include <vector>

#include "ghzsim/qcore.hpp"

namespace ghz {

enum class PhaseMode { combined, explicit_value };

/// Which pair source a two-photon run models.
enum class PairSource { ppktp, ppln };

struct SourceConfig {
    // State parameters (radians).
    double theta = M_PI / 4;        ///< PPKTP amplitude balance
    double phi = 0.0;               ///< PPKTP pump phase
    double theta_prime = M_PI / 4;  ///< PPLN amplitude balance
    double phi_prime = 0.0;         ///< PPLN phase
    PhaseMode triplet_phase_mode = PhaseMode::combined;
    double triplet_phase = 0.0;  ///< used only in explicit mode

    // Noise.
    double white_noise = 0.0;
    double dephasing_visibility = 1.0;
    double background_fraction = 0.0;   ///< weight of a classical basis-state admixture
    std::string background_state;       ///< e.g. "HH"; empty when unused

    PairSource pair_source = PairSource::ppktp;

    // Rates, detected per second.
    double pair_rate_1 = 3.0e6;
    double pair_rate_2 = 1.5e4;
    double triplet_rate = 10.0 / 3600.0;

    // Detection.
    double dark_rate = 5.0;
    std::vector<double> channel_efficiency{0.30, 0.16, 0.13};  ///< per photon mode
    double cascade_coupling = 0.30;
    double coincidence_window = 0.5e-9;  ///< seconds
    double timing_jitter = 0.0;          ///< Gaussian sigma, seconds

    /// Throws std::invalid_argument naming the first offending field.
    void validate() const;

    /// Relative phase between |HHH> and |VVV>: phi + phi_prime in combined
    /// mode, triplet_phase in explicit mode.
    double cascade_phase() const noexcept;

    /// Efficiency of photon mode `photon`, falling back to the last listed
    /// value when the list is shorter.
    double efficiency(int photon) const;
};

/// cos(theta)|HV> + e^{i phi} sin(theta)|VH>.
PureState psi_pair_state(double theta, double phi);

/// cos(theta')|HH> + e^{i phi'} sin(theta')|VV>.
PureState phi_pair_state(double theta_prime, double phi_prime);

enum class Polarization { H, V };

/// Second-stage downconversion: H -> |VV>, V -> |HH>.
PureState cascade_map(Polarization parent);

/// Coherent cascade of a single parent photon: H -> |VV>, V -> e^{i phase}|HH>.
PureState cascade(const PureState& parent, double phase);

/// Cascades photon 2 (777 nm) of a PPKTP pair state into the PPLN pair.
/// |HV> feeds |H,HH> and |VH> feeds |V,VV>, and the PPLN phase phi' is
/// picked up by the |VVV> branch, so
/// cascade_pair(psi_pair_state(t, p), p') equals ghz_exp_state(t, p + p').
PureState cascade_pair(const PureState& pair, double phi_prime);

/// cos(theta)|HHH> + e^{i Phi} sin(theta)|VVV>.
PureState ghz_exp_state(double theta, double cascade_phase);

/// (1 - p) * rho_deph + p * 1/2^n, where rho_deph keeps the populations of
/// |psi><psi| and scales every coherence by v.
DensityMatrix noisy_state(const PureState& ideal, double white_noise, double visibility);

/// (1 - q) * rho + q * |b><b| for a computational basis label b.
DensityMatrix mix_background(const DensityMatrix& rho, const std::string& basis_label,
                             double fraction);

/// Noisy pair state of the configured pair source.
DensityMatrix pair_source_state(const SourceConfig& config);

/// Ideal target of a pair source: |Psi-> for PPKTP, |Phi+> for PPLN.
PureState pair_target(PairSource source);

/// Noisy cascaded triplet state.
DensityMatrix triplet_source_state(const SourceConfig& config);

/// Order-of-magnitude triplet rate:
/// pair_rate_1 / eta_845 * cascade_coupling * conversion * eta_1530 * eta_1570.
double predicted_triplet_rate(const SourceConfig& config, double conversion_efficiency);

/// Conversion efficiency that makes predicted_triplet_rate hit `target_rate`.
double implied_conversion_efficiency(const SourceConfig& config, double target_rate);

/// HWP setting that balances the two Sagnac directions for a
/// clockwise/counter-clockwise efficiency ratio r: arctan(sqrt(r)).
double balancing_theta(double efficiency_ratio);

}  // namespace ghz
