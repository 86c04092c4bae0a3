#include "ghzsim/measurement.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ghz {

namespace {

char basis_char(Basis b) {
    switch (b) {
    case Basis::X: return 'X';
    case Basis::Y: return 'Y';
    case Basis::Z: return 'Z';
    case Basis::Ignore: return '1';
    }
    return '?';
}

}  // namespace

MeasurementSetting::MeasurementSetting(std::vector<Basis> bases) : bases_(std::move(bases)) {
    if (bases_.empty() || bases_.size() > static_cast<std::size_t>(kMaxQubits)) {
        throw std::invalid_argument("measurement setting must cover 1 to 3 photons");
    }
    for (Basis b : bases_) {
        label_.push_back(basis_char(b));
        if (b != Basis::Ignore) ++n_measured_;
    }
    if (n_measured_ == 0) {
        throw std::invalid_argument("measurement setting measures no photon");
    }
}

MeasurementSetting MeasurementSetting::parse(std::string_view label) {
    std::vector<Basis> bases;
    for (char c : label) {
        switch (c) {
        case 'X': case 'x': bases.push_back(Basis::X); break;
        case 'Y': case 'y': bases.push_back(Basis::Y); break;
        case 'Z': case 'z': bases.push_back(Basis::Z); break;
        case '1': case 'I': case 'i': case '_': bases.push_back(Basis::Ignore); break;
        default:
            throw std::invalid_argument("bad setting label '" + std::string(label) + "'");
        }
    }
    return MeasurementSetting(std::move(bases));
}

std::vector<MeasurementSetting> MeasurementSetting::tomography_set(int n_photons) {
    if (n_photons < 1 || n_photons > kMaxQubits) {
        throw std::invalid_argument("photon count out of range");
    }
    constexpr Basis kBases[] = {Basis::X, Basis::Y, Basis::Z};
    std::vector<MeasurementSetting> out;
    int total = 1;
    for (int i = 0; i < n_photons; ++i) total *= 3;
    for (int code = 0; code < total; ++code) {
        std::vector<Basis> bases(n_photons);
        int c = code;
        for (int i = n_photons - 1; i >= 0; --i) {
            bases[i] = kBases[c % 3];
            c /= 3;
        }
        out.emplace_back(std::move(bases));
    }
    return out;
}

std::string MeasurementSetting::outcome_label(std::size_t k) const {
    std::string s(n_measured_, '+');
    for (int i = 0; i < n_measured_; ++i) {
        if ((k >> (n_measured_ - 1 - i)) & 1u) s[i] = '-';
    }
    return s;
}

std::size_t MeasurementSetting::outcome_index(std::string_view outcome) const {
    if (outcome.size() != static_cast<std::size_t>(n_measured_)) {
        throw std::invalid_argument("outcome '" + std::string(outcome) +
                                    "' does not match setting " + label_);
    }
    std::size_t k = 0;
    for (char c : outcome) {
        k <<= 1;
        if (c == '-') {
            k |= 1;
        } else if (c != '+') {
            throw std::invalid_argument("outcome symbols must be '+' or '-'");
        }
    }
    return k;
}

int MeasurementSetting::parity(std::size_t k) const noexcept {
    return (std::popcount(k) % 2 == 0) ? 1 : -1;
}

CountRecord::CountRecord(MeasurementSetting s, std::vector<std::uint64_t> c, double d)
    : setting(std::move(s)), counts(std::move(c)), duration(d) {
    if (counts.size() != setting.outcome_count()) {
        throw std::invalid_argument("count vector size does not match setting " +
                                    setting.label());
    }
}

std::uint64_t CountRecord::total() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

CVector basis_eigenvector(Basis basis, int sign) {
    CVector v(2);
    const double s = sign > 0 ? 1.0 : -1.0;
    switch (basis) {
    case Basis::Z:
        v << (sign > 0 ? 1.0 : 0.0), (sign > 0 ? 0.0 : 1.0);
        break;
    case Basis::X:
        v << M_SQRT1_2, s * M_SQRT1_2;
        break;
    case Basis::Y:
        v << M_SQRT1_2, cplx(0.0, s * M_SQRT1_2);
        break;
    case Basis::Ignore:
        throw std::invalid_argument("Ignore slot has no eigenvector");
    }
    return v;
}

Observable outcome_projector(const MeasurementSetting& setting, std::span<const int> outcome) {
    if (outcome.size() != static_cast<std::size_t>(setting.n_measured())) {
        throw std::invalid_argument("outcome length does not match measured photons");
    }
    CMatrix m = CMatrix::Identity(1, 1);
    std::string label = setting.label() + ":";
    std::size_t j = 0;
    for (Basis b : setting.bases()) {
        if (b == Basis::Ignore) {
            m = kron(m, pauli::identity());
            continue;
        }
        const int sign = outcome[j++];
        if (sign != 1 && sign != -1) throw std::invalid_argument("outcome entries must be +1 or -1");
        const CVector v = basis_eigenvector(b, sign);
        m = kron(m, CMatrix(v * v.adjoint()));
        label.push_back(sign > 0 ? '+' : '-');
    }
    return Observable(std::move(m), std::move(label));
}

Observable outcome_projector(const MeasurementSetting& setting, std::size_t outcome_index) {
    if (outcome_index >= setting.outcome_count()) {
        throw std::invalid_argument("outcome index out of range");
    }
    std::vector<int> signs(setting.n_measured());
    for (int i = 0; i < setting.n_measured(); ++i) {
        signs[i] = ((outcome_index >> (setting.n_measured() - 1 - i)) & 1u) ? -1 : 1;
    }
    return outcome_projector(setting, signs);
}

std::vector<double> born_probabilities(const DensityMatrix& rho,
                                       const MeasurementSetting& setting) {
    if (rho.n_qubits() != setting.n_photons()) {
        throw std::invalid_argument("setting " + setting.label() + " does not match a " +
                                    std::to_string(rho.n_qubits()) + "-qubit state");
    }
    std::vector<double> p(setting.outcome_count());
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double v = expectation(rho, outcome_projector(setting, k));
        p[k] = (v < 0.0 && v >= -1e-10) ? 0.0 : v;
    }
    return p;
}

Observable setting_observable(const MeasurementSetting& setting) {
    return Observable::pauli_word(setting.label());
}

std::optional<double> parity_value(std::span<const std::uint64_t> counts,
                                   const MeasurementSetting& setting) {
    std::int64_t signed_sum = 0;
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        total += counts[k];
        signed_sum += setting.parity(k) * static_cast<std::int64_t>(counts[k]);
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(signed_sum) / static_cast<double>(total);
}

double multinomial_parity_sigma(double e, double n) {
    if (!(n > 0.0)) return 0.0;
    return std::sqrt(std::max(0.0, 1.0 - e * e) / n);
}

std::optional<Estimate> parity_expectation(const CountRecord& record,
                                           const ParityOptions& options) {
    const auto value = parity_value(record.counts, record.setting);
    if (!value) return std::nullopt;
    if (options.model == SigmaModel::multinomial) {
        return Estimate{*value, multinomial_parity_sigma(*value, double(record.total()))};
    }
    const MeasurementSetting& setting = record.setting;
    const VectorStatistic stat = [&setting](const CountTable& t) -> std::optional<std::vector<double>> {
        auto v = parity_value(t[0], setting);
        if (!v) return std::nullopt;
        return std::vector<double>{*v};
    };
    const auto summary =
        poisson_bootstrap({record.counts}, stat, options.replicas, options.seed, options.policy);
    // Replicas resampled to zero counts carry no parity; the spread is taken
    // over the remaining replicas.
    const double sigma = summary.stats.empty() ? 0.0 : summary.stats[0].sigma;
    return Estimate{*value, sigma};
}

bool compatible(const MeasurementSetting& record_setting, const MeasurementSetting& target) {
    if (record_setting.n_photons() != target.n_photons()) return false;
    for (int i = 0; i < target.n_photons(); ++i) {
        const Basis t = target.bases()[i];
        if (t != Basis::Ignore && t != record_setting.bases()[i]) return false;
    }
    return true;
}

CountRecord marginalize(const CountRecord& record, const MeasurementSetting& target) {
    if (!compatible(record.setting, target)) {
        throw std::invalid_argument("cannot marginalize " + record.setting.label() + " onto " +
                                    target.label());
    }
    // Bit positions (within the record's outcome index) of photons kept.
    const int m = record.setting.n_measured();
    std::vector<int> kept_bits;
    int pos = 0;
    for (int i = 0; i < target.n_photons(); ++i) {
        if (record.setting.bases()[i] == Basis::Ignore) continue;
        if (target.bases()[i] != Basis::Ignore) kept_bits.push_back(m - 1 - pos);
        ++pos;
    }
    std::vector<std::uint64_t> counts(target.outcome_count(), 0);
    for (std::size_t k = 0; k < record.counts.size(); ++k) {
        std::size_t j = 0;
        for (int bit : kept_bits) j = (j << 1) | ((k >> bit) & 1u);
        counts[j] += record.counts[k];
    }
    CountRecord out(target, std::move(counts), record.duration);
    out.metadata = record.metadata;
    out.metadata["marginal_of"] = record.setting.label();
    return out;
}

}  // namespace ghz
