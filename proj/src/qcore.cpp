#include "ghzsim/qcore.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <cmath>
#include <stdexcept>

namespace ghz {

int qubits_for_dim(Eigen::Index dim) {
    switch (dim) {
    case 2: return 1;
    case 4: return 2;
    case 8: return 3;
    default:
        throw std::invalid_argument("dimension " + std::to_string(dim) +
                                    " is not 2^n for n in {1,2,3}");
    }
}

// ---------------------------------------------------------------- PureState

PureState::PureState(CVector amplitudes)
    : amplitudes_(std::move(amplitudes)), n_qubits_(qubits_for_dim(amplitudes_.size())) {
    const double norm = amplitudes_.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw std::invalid_argument("state vector has zero or non-finite norm");
    }
    amplitudes_ /= norm;
}

PureState PureState::basis(std::string_view label) {
    if (label.empty() || label.size() > kMaxQubits) {
        throw std::invalid_argument("basis label must name 1 to 3 photons");
    }
    Eigen::Index index = 0;
    for (char c : label) {
        index <<= 1;
        if (c == 'V' || c == 'v' || c == '1') {
            index |= 1;
        } else if (c != 'H' && c != 'h' && c != '0') {
            throw std::invalid_argument(std::string("bad basis symbol '") + c + "'");
        }
    }
    CVector v = CVector::Zero(Eigen::Index{1} << label.size());
    v[index] = 1.0;
    return PureState(std::move(v));
}

DensityMatrix PureState::density() const {
    return DensityMatrix(amplitudes_ * amplitudes_.adjoint());
}

// ------------------------------------------------------------ DensityMatrix

DensityMatrix::DensityMatrix(CMatrix matrix) : n_qubits_(0) {
    if (matrix.rows() != matrix.cols()) {
        throw std::invalid_argument("density matrix must be square");
    }
    n_qubits_ = qubits_for_dim(matrix.rows());
    const double asym = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= kHermitianTolerance)) {
        throw std::invalid_argument("density matrix is not Hermitian");
    }
    matrix_ = 0.5 * (matrix + matrix.adjoint());
    const double tr = matrix_.trace().real();
    if (!(std::abs(tr - 1.0) <= kTraceTolerance)) {
        throw std::invalid_argument("density matrix trace " + std::to_string(tr) + " != 1");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(matrix_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kPsdTolerance) {
        throw std::invalid_argument("density matrix is not positive semidefinite");
    }
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw std::invalid_argument("qubit count out of range");
    }
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    return DensityMatrix(CMatrix::Identity(d, d) / static_cast<double>(d));
}

Eigen::VectorXd DensityMatrix::eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(matrix_, Eigen::EigenvaluesOnly);
    Eigen::VectorXd ev = es.eigenvalues();
    for (auto& e : ev) {
        if (e < 0.0 && e >= -kPsdTolerance) e = 0.0;
    }
    return ev;
}

// --------------------------------------------------------------- Observable

Observable::Observable(CMatrix matrix, std::string label)
    : matrix_(std::move(matrix)), label_(std::move(label)), n_qubits_(0) {
    if (matrix_.rows() != matrix_.cols()) {
        throw std::invalid_argument("observable must be square");
    }
    n_qubits_ = qubits_for_dim(matrix_.rows());
    if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTolerance) {
        throw std::invalid_argument("observable '" + label_ + "' is not Hermitian");
    }
}

Observable Observable::pauli_word(std::string_view word) {
    if (word.empty() || word.size() > kMaxQubits) {
        throw std::invalid_argument("Pauli word must have 1 to 3 letters");
    }
    CMatrix m = CMatrix::Identity(1, 1);
    for (char c : word) {
        switch (c) {
        case 'X': case 'x': m = kron(m, pauli::x()); break;
        case 'Y': case 'y': m = kron(m, pauli::y()); break;
        case 'Z': case 'z': m = kron(m, pauli::z()); break;
        case 'I': case 'i': case '1': m = kron(m, pauli::identity()); break;
        default:
            throw std::invalid_argument(std::string("bad Pauli symbol '") + c + "'");
        }
    }
    return Observable(std::move(m), std::string(word));
}

std::pair<double, double> Observable::spectral_range() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(matrix_, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

namespace pauli {
CMatrix identity() { return CMatrix::Identity(2, 2); }
CMatrix x() {
    CMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}
CMatrix y() {
    CMatrix m(2, 2);
    m << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
    return m;
}
CMatrix z() {
    CMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}
}  // namespace pauli

// ------------------------------------------------------------------ tensor

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    const Eigen::Index rows = a.rows() * b.rows();
    const Eigen::Index cols = a.cols() * b.cols();
    if (rows > (Eigen::Index{1} << kMaxQubits) || cols > (Eigen::Index{1} << kMaxQubits)) {
        throw std::invalid_argument("tensor product exceeds three qubits");
    }
    CMatrix out(rows, cols);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

CVector kron(const CVector& a, const CVector& b) {
    const Eigen::Index n = a.size() * b.size();
    if (n > (Eigen::Index{1} << kMaxQubits)) {
        throw std::invalid_argument("tensor product exceeds three qubits");
    }
    CVector out(n);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        out.segment(i * b.size(), b.size()) = a[i] * b;
    }
    return out;
}

PureState tensor(const PureState& a, const PureState& b) {
    return PureState(kron(a.amplitudes(), b.amplitudes()));
}

Observable tensor(const Observable& a, const Observable& b) {
    return Observable(kron(a.matrix(), b.matrix()), a.label() + b.label());
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
    return DensityMatrix(kron(a.matrix(), b.matrix()));
}

PureState ghz_state() {
    CVector v = CVector::Zero(8);
    v[0] = M_SQRT1_2;
    v[7] = M_SQRT1_2;
    return PureState(std::move(v));
}

// ----------------------------------------------------------------- metrics

namespace {
void require_same_dim(Eigen::Index a, Eigen::Index b) {
    if (a != b) {
        throw std::invalid_argument("dimension mismatch: " + std::to_string(a) + " vs " +
                                    std::to_string(b));
    }
}
}  // namespace

double expectation(const DensityMatrix& rho, const Observable& obs) {
    require_same_dim(rho.dim(), obs.dim());
    const cplx value = (rho.matrix() * obs.matrix()).trace();
    if (std::abs(value.imag()) > 1e-9) {
        throw std::logic_error("expectation value has imaginary part");
    }
    return value.real();
}

double fidelity(const DensityMatrix& rho, const PureState& target) {
    require_same_dim(rho.dim(), target.dim());
    const cplx value = target.amplitudes().dot(rho.matrix() * target.amplitudes());
    return value.real();
}

double purity(const DensityMatrix& rho) {
    return (rho.matrix() * rho.matrix()).trace().real();
}

double concurrence(const DensityMatrix& rho) {
    if (rho.n_qubits() != 2) {
        throw std::invalid_argument("concurrence requires a two-qubit state");
    }
    const CMatrix yy = kron(pauli::y(), pauli::y());
    const CMatrix flipped = yy * rho.matrix().conjugate() * yy;
    const CMatrix r = rho.matrix() * flipped;
    Eigen::ComplexEigenSolver<CMatrix> es(r, false);
    std::vector<double> lambda;
    lambda.reserve(4);
    for (const cplx& e : es.eigenvalues()) {
        // R is similar to a PSD matrix; clip tiny negative residues.
        lambda.push_back(std::sqrt(std::max(0.0, e.real())));
    }
    std::sort(lambda.begin(), lambda.end(), std::greater<>());
    return std::max(0.0, lambda[0] - lambda[1] - lambda[2] - lambda[3]);
}

double tangle(const DensityMatrix& rho) {
    const double c = concurrence(rho);
    return c * c;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep) {
    const int n = rho.n_qubits();
    unsigned keep_mask = 0;
    for (int q : keep) {
        if (q < 0 || q >= n) throw std::invalid_argument("qubit index out of range");
        keep_mask |= 1u << q;
    }
    const int n_keep = std::popcount(keep_mask);
    if (n_keep == 0 || n_keep == n) {
        throw std::invalid_argument("keep set must be a nonempty strict subset");
    }
    // Qubit q sits at bit (n - 1 - q) of the basis index.
    auto split = [&](Eigen::Index index, Eigen::Index& kept, Eigen::Index& traced) {
        kept = 0;
        traced = 0;
        for (int q = 0; q < n; ++q) {
            const Eigen::Index bit = (index >> (n - 1 - q)) & 1;
            if (keep_mask & (1u << q)) {
                kept = (kept << 1) | bit;
            } else {
                traced = (traced << 1) | bit;
            }
        }
    };
    const Eigen::Index dk = Eigen::Index{1} << n_keep;
    CMatrix out = CMatrix::Zero(dk, dk);
    for (Eigen::Index r = 0; r < rho.dim(); ++r) {
        Eigen::Index kr, tr;
        split(r, kr, tr);
        for (Eigen::Index c = 0; c < rho.dim(); ++c) {
            Eigen::Index kc, tc;
            split(c, kc, tc);
            if (tr == tc) out(kr, kc) += rho(r, c);
        }
    }
    return DensityMatrix(std::move(out));
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
    require_same_dim(a.rows(), b.rows());
    const CMatrix diff = a - b;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (diff + diff.adjoint()),
                                              Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace ghz
