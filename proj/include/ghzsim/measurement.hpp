// Pauli measurement settings, outcome projectors, Born-rule distributions and
// parity estimation from counts.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ghzsim/bootstrap.hpp"
#include "ghzsim/qcore.hpp"
#include "ghzsim/random.hpp"

namespace ghz {

enum class Basis : std::uint8_t { X, Y, Z, Ignore };

/// Per-photon basis choice. Outcome strings list only the measured photons,
/// each '+' (H, D or R) or '-' (V, A or L); outcome index k has the first
/// measured photon as its most significant bit, with '+' as 0.
class MeasurementSetting {
public:
    explicit MeasurementSetting(std::vector<Basis> bases);

    /// Parses labels like "XXX", "1ZZ" or "ZIZ".
    static MeasurementSetting parse(std::string_view label);

    /// All 3^n settings over {X, Y, Z}, in lexicographic X < Y < Z order.
    static std::vector<MeasurementSetting> tomography_set(int n_photons);

    const std::vector<Basis>& bases() const noexcept { return bases_; }
    const std::string& label() const noexcept { return label_; }
    int n_photons() const noexcept { return static_cast<int>(bases_.size()); }
    int n_measured() const noexcept { return n_measured_; }
    std::size_t outcome_count() const noexcept { return std::size_t{1} << n_measured_; }

    /// "+-+" style label of outcome index k.
    std::string outcome_label(std::size_t k) const;
    std::size_t outcome_index(std::string_view outcome) const;

    /// Parity (+1/-1) of outcome k over the measured photons.
    int parity(std::size_t k) const noexcept;

    friend bool operator==(const MeasurementSetting& a, const MeasurementSetting& b) {
        return a.bases_ == b.bases_;
    }

private:
    std::vector<Basis> bases_;
    std::string label_;
    int n_measured_ = 0;
};

struct CountRecord {
    MeasurementSetting setting;
    std::vector<std::uint64_t> counts;  ///< indexed by outcome index
    double duration = 0.0;              ///< seconds
    std::map<std::string, std::string> metadata;

    CountRecord(MeasurementSetting s, std::vector<std::uint64_t> c, double d = 0.0);

    std::uint64_t total() const noexcept;
};

/// Single-photon eigenvector for outcome sign (+1 or -1) in the given basis.
CVector basis_eigenvector(Basis basis, int sign);

/// Tensor of rank-1 eigenprojectors, identity on Ignore slots. `outcome`
/// holds one +1/-1 per measured photon.
Observable outcome_projector(const MeasurementSetting& setting, std::span<const int> outcome);
Observable outcome_projector(const MeasurementSetting& setting, std::size_t outcome_index);

/// p_k = Tr(rho Pi_k), residues down to -1e-10 clipped to zero.
std::vector<double> born_probabilities(const DensityMatrix& rho, const MeasurementSetting& setting);

/// Pauli word matching the setting ("1ZZ" for setting 1ZZ).
Observable setting_observable(const MeasurementSetting& setting);

enum class SigmaModel { poisson_bootstrap, multinomial };

struct ParityOptions {
    SigmaModel model = SigmaModel::poisson_bootstrap;
    int replicas = 10000;
    std::uint64_t seed = kDefaultSeed;
    ExecPolicy policy = ExecPolicy::parallel;
};

/// E = sum_k s_k n_k / N. Returns std::nullopt when the record holds no
/// counts. Ignore slots contribute parity +1.
std::optional<Estimate> parity_expectation(const CountRecord& record,
                                           const ParityOptions& options = {});

/// Point value only; nullopt for an empty record.
std::optional<double> parity_value(std::span<const std::uint64_t> counts,
                                   const MeasurementSetting& setting);

/// sqrt((1 - E^2) / N).
double multinomial_parity_sigma(double e, double n);

/// Sums counts over photons that are measured in `record` but Ignore in
/// `target`. Every photon measured in `target` must be measured in the same
/// basis in `record`.
CountRecord marginalize(const CountRecord& record, const MeasurementSetting& target);

/// True if `record_setting` can produce `target` by marginalization.
bool compatible(const MeasurementSetting& record_setting, const MeasurementSetting& target);

}  // namespace ghz
