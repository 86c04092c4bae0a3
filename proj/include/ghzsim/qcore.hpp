// Dense complex linear algebra for 1-3 qubit polarization states.
//
// Basis convention (fixed project-wide): H -> 0, V -> 1, Kronecker products
// with the first photon as the most significant index, so |HHH> is index 0
// and |VVV> is index 7. Photon 1 is the 846 nm photon, photon 2 the 1530 nm
// photon, photon 3 the 1570 nm photon.
#pragma once

#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ghz {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr int kMaxQubits = 3;

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kPsdTolerance = 1e-9;

class DensityMatrix;

/// Normalized state vector on 2^n amplitudes, n in {1,2,3}.
class PureState {
public:
    /// Normalizes the input. Throws std::invalid_argument on a zero vector
    /// or a length that is not 2, 4 or 8.
    explicit PureState(CVector amplitudes);

    /// Computational basis ket from a label such as "HVH".
    static PureState basis(std::string_view label);

    int n_qubits() const noexcept { return n_qubits_; }
    Eigen::Index dim() const noexcept { return amplitudes_.size(); }
    const CVector& amplitudes() const noexcept { return amplitudes_; }
    cplx operator[](Eigen::Index i) const { return amplitudes_[i]; }

    DensityMatrix density() const;

private:
    CVector amplitudes_;
    int n_qubits_;
};

/// Hermitian, unit-trace, positive semidefinite operator. Construction
/// validates every invariant and stores the exactly Hermitian part.
class DensityMatrix {
public:
    explicit DensityMatrix(CMatrix matrix);

    static DensityMatrix maximally_mixed(int n_qubits);

    int n_qubits() const noexcept { return n_qubits_; }
    Eigen::Index dim() const noexcept { return matrix_.rows(); }
    const CMatrix& matrix() const noexcept { return matrix_; }
    cplx operator()(Eigen::Index r, Eigen::Index c) const { return matrix_(r, c); }

    /// Eigenvalues in ascending order, residues in [-1e-9, 0) clipped to 0.
    Eigen::VectorXd eigenvalues() const;

private:
    CMatrix matrix_;
    int n_qubits_;
};

/// Hermitian operator with a human-readable label ("XXX", "1ZZ", ...).
class Observable {
public:
    Observable(CMatrix matrix, std::string label);

    /// Tensor product of single-qubit Paulis. Accepts X, Y, Z and I or 1 for
    /// the identity, e.g. "XXX" or "1ZZ".
    static Observable pauli_word(std::string_view word);

    int n_qubits() const noexcept { return n_qubits_; }
    Eigen::Index dim() const noexcept { return matrix_.rows(); }
    const CMatrix& matrix() const noexcept { return matrix_; }
    const std::string& label() const noexcept { return label_; }

    /// Smallest and largest eigenvalue.
    std::pair<double, double> spectral_range() const;

private:
    CMatrix matrix_;
    std::string label_;
    int n_qubits_;
};

namespace pauli {
CMatrix identity();
CMatrix x();
CMatrix y();
CMatrix z();
}  // namespace pauli

/// Kronecker product, left operand most significant. Throws
/// std::invalid_argument if the result would exceed three qubits.
CMatrix kron(const CMatrix& a, const CMatrix& b);
CVector kron(const CVector& a, const CVector& b);

PureState tensor(const PureState& a, const PureState& b);
Observable tensor(const Observable& a, const Observable& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

/// (|HHH> + |VVV>)/sqrt(2).
PureState ghz_state();

/// Tr(rho O). Imaginary residue below 1e-9 is discarded; larger residue
/// means the observable was not Hermitian and throws std::logic_error.
double expectation(const DensityMatrix& rho, const Observable& obs);

/// <psi|rho|psi>.
double fidelity(const DensityMatrix& rho, const PureState& target);

/// Tr(rho^2).
double purity(const DensityMatrix& rho);

/// Squared Wootters concurrence of a two-qubit state.
double concurrence(const DensityMatrix& rho);
double tangle(const DensityMatrix& rho);

/// Reduced state on the kept qubits (0-based indices, any order; result keeps
/// ascending qubit order). `keep` must be a nonempty strict subset.
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep);

/// Half the trace norm of a - b.
double trace_distance(const CMatrix& a, const CMatrix& b);

/// Number of qubits for a dimension of 2, 4 or 8; throws otherwise.
int qubits_for_dim(Eigen::Index dim);

}  // namespace ghz
