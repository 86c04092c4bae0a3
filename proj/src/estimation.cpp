#include "ghzsim/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ghz {

// --------------------------------------------------------------- helpers

CountTable count_table(std::span<const CountRecord> records) {
    CountTable t;
    t.reserve(records.size());
    for (const auto& r : records) t.push_back(r.counts);
    return t;
}

std::vector<CountRecord> with_counts(std::span<const CountRecord> records, const CountTable& table) {
    if (table.size() != records.size()) throw std::invalid_argument("count table size mismatch");
    std::vector<CountRecord> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        out.emplace_back(records[i].setting, table[i], records[i].duration);
    }
    return out;
}

namespace {

int record_qubits(std::span<const CountRecord> records) {
    if (records.empty()) throw std::invalid_argument("no count records supplied");
    const int n = records.front().setting.n_photons();
    for (const auto& r : records) {
        if (r.setting.n_photons() != n) {
            throw std::invalid_argument("records mix different photon counts");
        }
    }
    return n;
}

void require_complete(std::span<const CountRecord> records, int n) {
    for (const auto& s : MeasurementSetting::tomography_set(n)) {
        const bool present = std::any_of(records.begin(), records.end(), [&](const CountRecord& r) {
            return r.setting == s && r.total() > 0;
        });
        if (!present) {
            throw std::invalid_argument("tomography record set is missing setting " + s.label());
        }
    }
}

std::string word_label(int code, int n) {
    static constexpr char kLetters[] = {'1', 'X', 'Y', 'Z'};
    std::string w(n, '1');
    for (int i = n - 1; i >= 0; --i) {
        w[i] = kLetters[code % 4];
        code /= 4;
    }
    return w;
}

}  // namespace

// ------------------------------------------------------ linear inversion

CMatrix linear_inversion(std::span<const CountRecord> records) {
    const int n = record_qubits(records);
    require_complete(records, n);
    const Eigen::Index d = Eigen::Index{1} << n;
    CMatrix rho = CMatrix::Identity(d, d) / static_cast<double>(d);
    const int words = 1 << (2 * n);
    for (int code = 1; code < words; ++code) {
        const std::string label = word_label(code, n);
        const MeasurementSetting target = MeasurementSetting::parse(label);
        std::vector<std::uint64_t> pooled(target.outcome_count(), 0);
        for (const auto& r : records) {
            if (!compatible(r.setting, target)) continue;
            const CountRecord m = marginalize(r, target);
            for (std::size_t k = 0; k < pooled.size(); ++k) pooled[k] += m.counts[k];
        }
        const auto e = parity_value(pooled, target);
        if (!e) throw std::invalid_argument("no counts for Pauli word " + label);
        rho += *e * Observable::pauli_word(label).matrix() / static_cast<double>(d);
    }
    return 0.5 * (rho + rho.adjoint());
}

// ------------------------------------------------------------------ MLE

namespace {

struct ProjectorTerm {
    CMatrix projector;
    double count;
};

/// Likelihood in the T parametrization. Parameters: d diagonal reals, then
/// (re, im) of each strictly-lower entry in row-major order.
class TriangularLikelihood {
public:
    TriangularLikelihood(std::span<const CountRecord> records, int n) : d_(Eigen::Index{1} << n) {
        for (const auto& r : records) {
            for (std::size_t k = 0; k < r.counts.size(); ++k) {
                if (r.counts[k] == 0) continue;
                terms_.push_back({outcome_projector(r.setting, k).matrix(), double(r.counts[k])});
                total_ += double(r.counts[k]);
            }
        }
    }

    Eigen::Index dim() const { return d_; }
    Eigen::Index n_params() const { return d_ * d_; }

    CMatrix to_matrix(const Eigen::VectorXd& x) const {
        CMatrix t = CMatrix::Zero(d_, d_);
        Eigen::Index p = 0;
        for (Eigen::Index i = 0; i < d_; ++i) t(i, i) = x[p++];
        for (Eigen::Index i = 1; i < d_; ++i) {
            for (Eigen::Index j = 0; j < i; ++j) {
                t(i, j) = cplx(x[p], x[p + 1]);
                p += 2;
            }
        }
        return t;
    }

    Eigen::VectorXd to_params(const CMatrix& t) const {
        Eigen::VectorXd x(n_params());
        Eigen::Index p = 0;
        for (Eigen::Index i = 0; i < d_; ++i) x[p++] = t(i, i).real();
        for (Eigen::Index i = 1; i < d_; ++i) {
            for (Eigen::Index j = 0; j < i; ++j) {
                x[p++] = t(i, j).real();
                x[p++] = t(i, j).imag();
            }
        }
        return x;
    }

    static CMatrix density(const CMatrix& t) {
        CMatrix a = t.adjoint() * t;
        a = 0.5 * (a + a.adjoint());
        return a / a.trace().real();
    }

    /// Log-likelihood, and its gradient when `grad` is non-null.
    double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
        const CMatrix t = to_matrix(x);
        const CMatrix a = t.adjoint() * t;
        const double tr = a.trace().real();
        if (!(tr > 0.0)) return -std::numeric_limits<double>::infinity();
        double f = -total_ * std::log(tr);
        CMatrix m;
        if (grad) m = CMatrix::Identity(d_, d_) * (-total_ / tr);
        for (const auto& term : terms_) {
            // Tr(A Pi) with both Hermitian.
            const double q = a.cwiseProduct(term.projector.transpose()).sum().real();
            if (!(q > 0.0)) return -std::numeric_limits<double>::infinity();
            f += term.count * std::log(q);
            if (grad) m += (term.count / q) * term.projector;
        }
        if (grad) {
            const CMatrix g = t * m;
            grad->resize(n_params());
            Eigen::Index p = 0;
            for (Eigen::Index i = 0; i < d_; ++i) (*grad)[p++] = 2.0 * g(i, i).real();
            for (Eigen::Index i = 1; i < d_; ++i) {
                for (Eigen::Index j = 0; j < i; ++j) {
                    (*grad)[p++] = 2.0 * g(i, j).real();
                    (*grad)[p++] = 2.0 * g(i, j).imag();
                }
            }
        }
        return f;
    }

private:
    Eigen::Index d_;
    std::vector<ProjectorTerm> terms_;
    double total_ = 0.0;
};

struct AscentResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
};

/// Limited-memory BFGS ascent with an Armijo backtracking line search; only
/// strictly improving steps are accepted.
AscentResult lbfgs_ascent(const TriangularLikelihood& model, Eigen::VectorXd x, int max_iterations,
                          double tolerance, bool record_history) {
    constexpr int kMemory = 10;
    constexpr double kArmijo = 1e-4;
    constexpr int kMaxBacktracks = 60;

    AscentResult out;
    Eigen::VectorXd grad;
    double f = model.evaluate(x, &grad);
    if (!std::isfinite(f)) throw std::runtime_error("MLE start point has zero likelihood");
    if (record_history) out.history.push_back(f);

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int iter = 0; iter < max_iterations; ++iter) {
        // Two-loop recursion on the ascent gradient.
        Eigen::VectorXd q = grad;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        double gamma = 1.0;
        if (!s_hist.empty()) {
            gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        } else {
            gamma = 1.0 / std::max(grad.norm(), 1.0);
        }
        Eigen::VectorXd dir = gamma * q;
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(dir);
            dir += s_hist[i] * (alpha[i] - beta);
        }
        double slope = grad.dot(dir);
        if (!(slope > 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = grad / std::max(grad.norm(), 1.0);
            slope = grad.dot(dir);
        }
        if (!(slope > 0.0)) {
            out.converged = true;  // stationary point
            break;
        }

        double step = 1.0;
        Eigen::VectorXd x_new, grad_new;
        double f_new = f;
        bool accepted = false;
        for (int b = 0; b < kMaxBacktracks; ++b) {
            x_new = x + step * dir;
            f_new = model.evaluate(x_new, nullptr);
            if (std::isfinite(f_new) && f_new >= f + kArmijo * step * slope && f_new > f) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            out.converged = true;  // no strictly improving step exists at this precision
            break;
        }
        model.evaluate(x_new, &grad_new);
        const double improvement = f_new - f;
        // Ascent on f == descent on -f: y is the change of the descent gradient.
        Eigen::VectorXd s = x_new - x;
        Eigen::VectorXd y = grad - grad_new;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > kMemory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        x = std::move(x_new);
        grad = std::move(grad_new);
        f = f_new;
        ++out.iterations;
        if (record_history) out.history.push_back(f);
        if (improvement < tolerance) {
            out.converged = true;
            break;
        }
        // Keep the scale of T near 1; the likelihood is invariant to it.
        const double norm = x.norm();
        if (norm > 1e3 || norm < 1e-3) {
            x /= norm;
            grad *= norm;
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }
    }
    out.x = std::move(x);
    out.f = f;
    return out;
}

CMatrix psd_projection(const CMatrix& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    if (ev.sum() <= 0.0) ev.setOnes();
    CMatrix out = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    return out / out.trace().real();
}

std::vector<double> tomography_metrics(const DensityMatrix& rho, const MleOptions& options) {
    std::vector<double> v;
    v.push_back(options.target ? fidelity(rho, *options.target) : 0.0);
    v.push_back(purity(rho));
    v.push_back(rho.n_qubits() == 2 ? tangle(rho) : 0.0);
    return v;
}

}  // namespace

CMatrix cholesky_factor(const CMatrix& rho) {
    const Eigen::Index d = rho.rows();
    CMatrix pd = psd_projection(rho) + 1e-6 * CMatrix::Identity(d, d);
    pd /= pd.trace().real();
    // J pd J = L L^dag with J the exchange matrix; T = J L^dag J is lower
    // triangular and T^dag T = pd.
    CMatrix j = CMatrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) j(i, d - 1 - i) = 1.0;
    Eigen::LLT<CMatrix> llt(j * pd * j);
    if (llt.info() != Eigen::Success) throw std::runtime_error("Cholesky factorization failed");
    CMatrix l = llt.matrixL();
    return j * l.adjoint() * j;
}

double log_likelihood(const DensityMatrix& rho, std::span<const CountRecord> records) {
    double f = 0.0;
    for (const auto& r : records) {
        for (std::size_t k = 0; k < r.counts.size(); ++k) {
            if (r.counts[k] == 0) continue;
            const double p = expectation(rho, outcome_projector(r.setting, k));
            f += double(r.counts[k]) * std::log(p);
        }
    }
    return f;
}

TomographyResult mle_reconstruct(std::span<const CountRecord> records,
                                 const std::optional<CMatrix>& initial, const MleOptions& options) {
    const int n = record_qubits(records);
    require_complete(records, n);
    if (options.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    const TriangularLikelihood model(records, n);
    const Eigen::Index d = model.dim();

    CMatrix t0;
    if (initial) {
        if (initial->rows() != d || initial->cols() != d) {
            throw std::invalid_argument("initial matrix has the wrong dimension");
        }
        t0 = cholesky_factor(*initial);
    } else if (options.linear_warm_start) {
        t0 = cholesky_factor(linear_inversion(records));
    } else {
        t0 = CMatrix::Identity(d, d) / std::sqrt(static_cast<double>(d));
    }

    AscentResult ascent = lbfgs_ascent(model, model.to_params(t0), options.max_iterations,
                                       options.tolerance, options.record_history);
    TomographyResult result{DensityMatrix(TriangularLikelihood::density(model.to_matrix(ascent.x))),
                            ascent.f,
                            ascent.iterations,
                            ascent.converged,
                            std::nullopt,
                            {},
                            std::nullopt,
                            std::move(ascent.history)};

    const auto point = tomography_metrics(result.rho, options);
    std::vector<double> sigma(point.size(), 0.0);
    if (options.bootstrap_replicas > 0) {
        MleOptions inner = options;
        inner.bootstrap_replicas = 0;
        inner.record_history = false;
        const CMatrix warm = result.rho.matrix();
        const std::vector<CountRecord> base(records.begin(), records.end());
        const VectorStatistic stat = [&](const CountTable& table) -> std::optional<std::vector<double>> {
            const auto resampled = with_counts(base, table);
            const auto r = mle_reconstruct(resampled, warm, inner);
            return tomography_metrics(r.rho, inner);
        };
        const auto summary = poisson_bootstrap(count_table(records), stat, options.bootstrap_replicas,
                                               options.seed, options.policy);
        if (summary.dropped * 10 > options.bootstrap_replicas) {
            throw std::runtime_error("tomography bootstrap dropped more than 10% of replicas");
        }
        for (std::size_t i = 0; i < sigma.size(); ++i) sigma[i] = summary.stats[i].sigma;
    }
    if (options.target) result.fidelity = Estimate{point[0], sigma[0]};
    result.purity = Estimate{point[1], sigma[1]};
    if (n == 2) result.tangle = Estimate{point[2], sigma[2]};
    return result;
}

// -------------------------------------------------------------- witness

WitnessResult ghz_witness(Estimate e_xxx, Estimate e_1zz, Estimate e_z1z, Estimate e_zz1) {
    for (const Estimate& e : {e_xxx, e_1zz, e_z1z, e_zz1}) {
        // Exact expectations can overshoot +-1 by rounding.
        if (!(std::abs(e.value) <= 1.0 + kTraceTolerance)) {
            throw std::invalid_argument("witness inputs must lie in [-1, 1]");
        }
    }
    WitnessResult r;
    r.e_xxx = e_xxx;
    r.e_1zz = e_1zz;
    r.e_z1z = e_z1z;
    r.e_zz1 = e_zz1;
    r.w_value.value = 1.5 - e_xxx.value - (e_1zz.value + e_z1z.value + e_zz1.value) / 2.0;
    r.w_sigma_quadrature =
        std::sqrt(e_xxx.sigma * e_xxx.sigma +
                  (e_1zz.sigma * e_1zz.sigma + e_z1z.sigma * e_z1z.sigma + e_zz1.sigma * e_zz1.sigma) /
                      4.0);
    r.w_value.sigma = r.w_sigma_quadrature;
    r.fidelity_lower_bound.value = (1.0 - r.w_value.value) / 2.0;
    r.fidelity_lower_bound.sigma = r.w_value.sigma / 2.0;
    return r;
}

namespace {

const MeasurementSetting& z_word(int which) {
    static const MeasurementSetting words[] = {MeasurementSetting::parse("1ZZ"),
                                               MeasurementSetting::parse("Z1Z"),
                                               MeasurementSetting::parse("ZZ1")};
    return words[which];
}

std::optional<std::vector<double>> witness_terms(std::span<const std::uint64_t> xxx_counts,
                                                 std::span<const std::uint64_t> zzz_counts,
                                                 const MeasurementSetting& xxx_setting,
                                                 const MeasurementSetting& zzz_setting) {
    const auto ex = parity_value(xxx_counts, xxx_setting);
    if (!ex) return std::nullopt;
    const CountRecord zzz(zzz_setting, {zzz_counts.begin(), zzz_counts.end()});
    std::vector<double> v{*ex};
    for (int w = 0; w < 3; ++w) {
        const CountRecord m = marginalize(zzz, z_word(w));
        const auto e = parity_value(m.counts, m.setting);
        if (!e) return std::nullopt;
        v.push_back(*e);
    }
    const double wv = 1.5 - v[0] - (v[1] + v[2] + v[3]) / 2.0;
    v.push_back(wv);
    v.push_back((1.0 - wv) / 2.0);
    return v;
}

}  // namespace

std::optional<WitnessResult> ghz_witness_from_records(const CountRecord& xxx, const CountRecord& zzz,
                                                      const WitnessOptions& options) {
    if (xxx.setting.label() != "XXX" || zzz.setting.label() != "ZZZ") {
        throw std::invalid_argument("witness needs XXX and ZZZ records");
    }
    const auto point = witness_terms(xxx.counts, zzz.counts, xxx.setting, zzz.setting);
    if (!point) return std::nullopt;

    const VectorStatistic stat = [&](const CountTable& t) {
        return witness_terms(t[0], t[1], xxx.setting, zzz.setting);
    };
    const auto summary =
        poisson_bootstrap({xxx.counts, zzz.counts}, stat, options.replicas, options.seed, options.policy);
    std::vector<double> sigma(6, 0.0);
    if (!summary.stats.empty()) {
        for (int i = 0; i < 6; ++i) sigma[i] = summary.stats[i].sigma;
    }
    WitnessResult r = ghz_witness({(*point)[0], sigma[0]}, {(*point)[1], sigma[1]},
                                  {(*point)[2], sigma[2]}, {(*point)[3], sigma[3]});
    r.w_value.sigma = sigma[4];
    r.fidelity_lower_bound.sigma = sigma[5];
    r.bootstrapped = true;
    return r;
}

Observable ghz_witness_operator() {
    const CMatrix w = 1.5 * CMatrix::Identity(8, 8) - Observable::pauli_word("XXX").matrix() -
                      0.5 * (Observable::pauli_word("1ZZ").matrix() +
                             Observable::pauli_word("Z1Z").matrix() +
                             Observable::pauli_word("ZZ1").matrix());
    return Observable(w, "W_GHZ");
}

// ------------------------------------------------------------- sinusoid

SinusoidFit fit_sinusoid(std::span<const PhasePoint> points) {
    if (points.size() < 3) throw std::invalid_argument("sinusoid fit needs at least 3 points");
    Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    for (const auto& p : points) {
        if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) {
            throw std::invalid_argument("sinusoid fit sigmas must be > 0");
        }
        const double w = 1.0 / (p.sigma * p.sigma);
        const Eigen::Vector2d row(std::cos(p.phase), std::sin(p.phase));
        normal += w * row * row.transpose();
        rhs += w * p.value * row;
    }
    // Phases equal mod pi give proportional columns and a singular system.
    if (normal.determinant() <= 1e-12 * normal.trace() * normal.trace()) {
        throw std::invalid_argument("degenerate phase set: all phases equal mod pi");
    }
    const Eigen::Matrix2d cov = normal.inverse();
    const Eigen::Vector2d ab = cov * rhs;
    const double a = ab[0];
    const double b = ab[1];

    SinusoidFit fit;
    fit.amplitude = std::hypot(a, b);
    if (fit.amplitude > 0.0) {
        const double a2 = fit.amplitude * fit.amplitude;
        fit.phase_offset = std::atan2(-b, a);
        fit.amplitude_sigma =
            std::sqrt(std::max(0.0, a * a * cov(0, 0) + b * b * cov(1, 1) + 2 * a * b * cov(0, 1)) / a2);
        fit.phase_offset_sigma = std::sqrt(
            std::max(0.0, b * b * cov(0, 0) + a * a * cov(1, 1) - 2 * a * b * cov(0, 1)) / (a2 * a2));
    } else {
        fit.phase_offset = 0.0;
        fit.amplitude_sigma = std::sqrt(std::max(cov(0, 0), cov(1, 1)));
        fit.phase_offset_sigma = M_PI;
    }
    double ss = 0.0;
    for (const auto& p : points) {
        const double r = p.value - (a * std::cos(p.phase) + b * std::sin(p.phase));
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(points.size()));
    return fit;
}

// ------------------------------------------------------------- bootstrap

Estimate bootstrap_metrics(std::span<const CountRecord> records, const RecordStatistic& statistic,
                           int replicas, std::uint64_t seed, ExecPolicy policy) {
    if (replicas < 100) throw std::invalid_argument("bootstrap needs at least 100 replicas");
    const std::vector<CountRecord> base(records.begin(), records.end());
    const VectorStatistic stat = [&](const CountTable& t) -> std::optional<std::vector<double>> {
        return std::vector<double>{statistic(with_counts(base, t))};
    };
    const auto summary = poisson_bootstrap(count_table(records), stat, replicas, seed, policy);
    if (summary.dropped * 10 > replicas) {
        throw std::runtime_error("bootstrap dropped " + std::to_string(summary.dropped) + " of " +
                                 std::to_string(replicas) + " replicas");
    }
    return summary.stats.at(0);
}

}  // namespace ghz
