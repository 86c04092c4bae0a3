// Test-only reference computations. Nothing here calls the library's linear
// algebra or matching code: matrices are plain row-major std::vectors and the
// eigen-decompositions use a cyclic Jacobi sweep on the real embedding.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

struct Mat {
    int n = 0;
    std::vector<cd> a;
    explicit Mat(int dim = 0) : n(dim), a(static_cast<std::size_t>(dim * dim)) {}
    cd& operator()(int r, int c) { return a[static_cast<std::size_t>(r * n + c)]; }
    cd operator()(int r, int c) const { return a[static_cast<std::size_t>(r * n + c)]; }
};

inline Mat mul(const Mat& x, const Mat& y) {
    Mat z(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int k = 0; k < x.n; ++k)
            for (int j = 0; j < x.n; ++j) z(i, j) += x(i, k) * y(k, j);
    return z;
}

inline Mat dagger(const Mat& x) {
    Mat z(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) z(i, j) = std::conj(x(j, i));
    return z;
}

inline Mat outer(const std::vector<cd>& v) {
    Mat z(static_cast<int>(v.size()));
    for (int i = 0; i < z.n; ++i)
        for (int j = 0; j < z.n; ++j) z(i, j) = v[i] * std::conj(v[j]);
    return z;
}

inline cd trace(const Mat& x) {
    cd t = 0;
    for (int i = 0; i < x.n; ++i) t += x(i, i);
    return t;
}

/// Symmetric real eigenproblem by cyclic Jacobi rotations. Returns
/// eigenvalues and column eigenvectors (row-major n x n).
inline std::pair<std::vector<double>, std::vector<double>> jacobi(std::vector<double> s, int n) {
    std::vector<double> q(static_cast<std::size_t>(n * n), 0.0);
    for (int i = 0; i < n; ++i) q[i * n + i] = 1.0;
    auto at = [&](int r, int c) -> double& { return s[static_cast<std::size_t>(r * n + c)]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int r = p + 1; r < n; ++r) {
                if (std::abs(at(p, r)) < 1e-300) continue;
                const double theta = (at(r, r) - at(p, p)) / (2 * at(p, r));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1 / std::sqrt(t * t + 1);
                const double sn = t * c;
                for (int k = 0; k < n; ++k) {
                    const double kp = at(k, p), kr = at(k, r);
                    at(k, p) = c * kp - sn * kr;
                    at(k, r) = sn * kp + c * kr;
                }
                for (int k = 0; k < n; ++k) {
                    const double pk = at(p, k), rk = at(r, k);
                    at(p, k) = c * pk - sn * rk;
                    at(r, k) = sn * pk + c * rk;
                }
                for (int k = 0; k < n; ++k) {
                    const double kp = q[k * n + p], kr = q[k * n + r];
                    q[k * n + p] = c * kp - sn * kr;
                    q[k * n + r] = sn * kp + c * kr;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = at(i, i);
    return {ev, q};
}

/// f(H) for Hermitian H through the real embedding [[A, -B], [B, A]].
template <class F>
Mat hermitian_function(const Mat& h, F f) {
    const int n = h.n, m = 2 * n;
    std::vector<double> e(static_cast<std::size_t>(m * m));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const cd z = (h(i, j) + std::conj(h(j, i))) / 2.0;
            e[i * m + j] = z.real();
            e[(i + n) * m + j + n] = z.real();
            e[(i + n) * m + j] = z.imag();
            e[i * m + j + n] = -z.imag();
        }
    auto [ev, q] = jacobi(e, m);
    Mat out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double re = 0, im = 0;
            for (int k = 0; k < m; ++k) {
                const double fk = f(ev[k]);
                re += q[i * m + k] * fk * q[j * m + k];
                im += q[(i + n) * m + k] * fk * q[j * m + k];
            }
            out(i, j) = cd(re, im);
        }
    return out;
}

/// Eigenvalues of a Hermitian matrix, descending.
inline std::vector<double> hermitian_eigenvalues(const Mat& h) {
    const int n = h.n, m = 2 * n;
    std::vector<double> e(static_cast<std::size_t>(m * m));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const cd z = (h(i, j) + std::conj(h(j, i))) / 2.0;
            e[i * m + j] = e[(i + n) * m + j + n] = z.real();
            e[(i + n) * m + j] = z.imag();
            e[i * m + j + n] = -z.imag();
        }
    auto ev = jacobi(e, m).first;
    std::sort(ev.begin(), ev.end(), std::greater<>());
    std::vector<double> out;
    for (int k = 0; k < m; k += 2) out.push_back(ev[k]);  // each value appears twice
    return out;
}

/// Wootters tangle via the eigenvalues of sqrt(sqrt(rho) rho~ sqrt(rho)).
inline double tangle(const Mat& rho) {
    Mat yy(4);  // sigma_y (x) sigma_y
    yy(0, 3) = -1;
    yy(1, 2) = 1;
    yy(2, 1) = 1;
    yy(3, 0) = -1;
    Mat conj(4);
    for (int i = 0; i < 16; ++i) conj.a[i] = std::conj(rho.a[i]);
    const Mat tilde = mul(mul(yy, conj), yy);
    const Mat s = hermitian_function(rho, [](double x) { return std::sqrt(std::max(x, 0.0)); });
    const auto mu = hermitian_eigenvalues(mul(mul(s, tilde), s));
    std::vector<double> l;
    for (double m : mu) l.push_back(std::sqrt(std::max(m, 0.0)));
    const double c = std::max(0.0, l[0] - l[1] - l[2] - l[3]);
    return c * c;
}

inline double fidelity(const Mat& rho, const std::vector<cd>& psi) {
    cd f = 0;
    for (int i = 0; i < rho.n; ++i)
        for (int j = 0; j < rho.n; ++j) f += std::conj(psi[i]) * rho(i, j) * psi[j];
    return f.real();
}

inline double purity(const Mat& rho) { return trace(mul(rho, rho)).real(); }

inline double trace_distance(const Mat& a, const Mat& b) {
    Mat d(a.n);
    for (std::size_t i = 0; i < a.a.size(); ++i) d.a[i] = a.a[i] - b.a[i];
    double s = 0;
    for (double e : hermitian_eigenvalues(d)) s += std::abs(e);
    return s / 2;
}

inline std::vector<cd> random_pure(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::vector<cd> v(static_cast<std::size_t>(dim));
    double norm = 0;
    for (auto& x : v) {
        x = cd(g(rng), g(rng));
        norm += std::norm(x);
    }
    for (auto& x : v) x /= std::sqrt(norm);
    return v;
}

/// Random mixture of 1..dim random pure states with uniform-simplex weights.
inline Mat random_mixed(int dim, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> kdist(1, dim);
    std::exponential_distribution<double> ex(1.0);
    const int k = kdist(rng);
    std::vector<double> w(static_cast<std::size_t>(k));
    double total = 0;
    for (auto& x : w) total += (x = ex(rng));
    Mat rho(dim);
    for (int i = 0; i < k; ++i) {
        const Mat p = outer(random_pure(dim, rng));
        for (std::size_t e = 0; e < rho.a.size(); ++e) rho.a[e] += w[i] / total * p.a[e];
    }
    return rho;
}

/// Pauli word matrix by explicit Kronecker loops, '1' for identity.
inline Mat pauli_word(const std::string& word) {
    auto single = [](char c) {
        Mat m(2);
        switch (c) {
        case 'X': m(0, 1) = m(1, 0) = 1; break;
        case 'Y': m(0, 1) = cd(0, -1); m(1, 0) = cd(0, 1); break;
        case 'Z': m(0, 0) = 1; m(1, 1) = -1; break;
        default: m(0, 0) = m(1, 1) = 1;
        }
        return m;
    };
    Mat out(1);
    out(0, 0) = 1;
    for (char c : word) {
        const Mat s = single(c);
        Mat k(out.n * 2);
        for (int i = 0; i < out.n; ++i)
            for (int j = 0; j < out.n; ++j)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) k(2 * i + a, 2 * j + b) = out(i, j) * s(a, b);
        out = k;
    }
    return out;
}

inline double expectation(const Mat& rho, const std::string& word) {
    return trace(mul(rho, pauli_word(word))).real();
}

// ------------------------------------------------------- coincidence oracle

struct Click {
    std::uint64_t t;
    int channel;
};

struct Event {
    std::vector<int> channels;
    std::vector<std::uint64_t> times;
    bool operator==(const Event&) const = default;
};

/// Literal statement of the matching rule: take clicks in (time, channel)
/// order; the first unused click anchors; every later unused click with
/// 2 * (t - t_anchor) <= window whose photon (channel / 2) is not yet present
/// joins, in order, until `fold` photons are present; then all members are
/// used. Quadratic, no early exits.
inline std::vector<Event> coincidences(std::vector<Click> clicks, std::uint64_t window, int fold) {
    std::sort(clicks.begin(), clicks.end(), [](const Click& a, const Click& b) {
        return a.t < b.t || (a.t == b.t && a.channel < b.channel);
    });
    std::vector<bool> used(clicks.size(), false);
    std::vector<Event> out;
    for (std::size_t i = 0; i < clicks.size(); ++i) {
        if (used[i]) continue;
        std::vector<std::size_t> members{i};
        for (std::size_t j = i + 1; j < clicks.size(); ++j) {
            if (static_cast<int>(members.size()) >= fold) continue;
            if (used[j] || 2 * (clicks[j].t - clicks[i].t) > window) continue;
            bool dup = false;
            for (auto m : members) dup = dup || clicks[m].channel / 2 == clicks[j].channel / 2;
            if (!dup) members.push_back(j);
        }
        if (static_cast<int>(members.size()) < fold) continue;
        Event e;
        for (auto m : members) {
            used[m] = true;
            e.channels.push_back(clicks[m].channel);
            e.times.push_back(clicks[m].t);
        }
        out.push_back(e);
    }
    return out;
}

}  // namespace oracle
