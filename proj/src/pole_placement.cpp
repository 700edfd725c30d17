#include "geoalloc/spectrum.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <random>

namespace geoalloc {

bool SpectrumSpec::conjugate_closed(double tol) const {
    std::vector<std::complex<double>> pending(values.begin(), values.end());
    while (!pending.empty()) {
        const auto v = pending.back();
        pending.pop_back();
        if (std::abs(v.imag()) <= tol) continue;
        auto it = std::min_element(pending.begin(), pending.end(),
                                   [&](const auto& a, const auto& b) {
                                       return std::abs(a - std::conj(v)) < std::abs(b - std::conj(v));
                                   });
        if (it == pending.end() || std::abs(*it - std::conj(v)) > tol) return false;
        pending.erase(it);
    }
    return true;
}

SpectrumSpec SpectrumSpec::stable_default(int count, TimeDomain domain) {
    SpectrumSpec spec;
    const double lo = domain == TimeDomain::discrete ? 0.1 : -5.0;
    const double hi = domain == TimeDomain::discrete ? 0.6 : -1.0;
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.5 : static_cast<double>(i + 1) / (count + 1);
        spec.values.emplace_back(lo + t * (hi - lo), 0.0);
    }
    return spec;
}

bool SpectrumSpec::all_stable(TimeDomain domain) const {
    for (const auto& v : values) {
        if (domain == TimeDomain::discrete ? std::abs(v) >= 1.0 : v.real() >= 0.0)
            return false;
    }
    return true;
}

double eig_multiset_distance(std::vector<std::complex<double>> a,
                             std::vector<std::complex<double>> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    while (!a.empty()) {
        size_t bi = 0, bj = 0;
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < a.size(); ++i)
            for (size_t j = 0; j < b.size(); ++j)
                if (std::abs(a[i] - b[j]) < best) {
                    best = std::abs(a[i] - b[j]);
                    bi = i;
                    bj = j;
                }
        worst = std::max(worst, best);
        a.erase(a.begin() + static_cast<long>(bi));
        b.erase(b.begin() + static_cast<long>(bj));
    }
    return worst;
}

std::vector<std::complex<double>> eigenvalues_of(const Matrix& A) {
    if (A.rows() == 0) return {};
    Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> out(static_cast<size_t>(A.rows()));
    for (Eigen::Index i = 0; i < A.rows(); ++i) out[static_cast<size_t>(i)] = es.eigenvalues()(i);
    return out;
}

bool is_observable(const Matrix& A, const Matrix& C, const TolerancePolicy& pol) {
    const Eigen::Index n = A.rows();
    for (const auto& lam : eigenvalues_of(A)) {
        ComplexMatrix pbh(n + C.rows(), n);
        pbh.topRows(n) = lam * ComplexMatrix::Identity(n, n) - A.cast<std::complex<double>>();
        pbh.bottomRows(C.rows()) = C.cast<std::complex<double>>();
        if (rank_tol_complex(pbh, pol) < n) return false;
    }
    return true;
}

bool is_controllable(const Matrix& A, const Matrix& B, const TolerancePolicy& pol) {
    return is_observable(A.transpose(), B.transpose(), pol);
}

namespace {

// Real normal-form realization of a conjugate-closed multiset. Complex
// pairs become [re im; -im re] blocks; repeated values become real Jordan
// chains so the Sylvester solve below stays well-conditioned. Values
// colliding with eigenvalues of `avoid` are detuned by steps of 1e-8,
// which stays well inside the 1e-6 placement contract.
Matrix real_block_form(const SpectrumSpec& spec, const Matrix& avoid) {
    const auto existing = eigenvalues_of(avoid);
    std::vector<std::complex<double>> reals, pairs;  // pairs keep im > 0
    std::vector<std::complex<double>> pending(spec.values.begin(), spec.values.end());
    const double ctol = 1e-9;
    while (!pending.empty()) {
        auto v = pending.back();
        pending.pop_back();
        if (std::abs(v.imag()) <= ctol) {
            reals.emplace_back(v.real(), 0.0);
            continue;
        }
        auto it = std::min_element(pending.begin(), pending.end(),
                                   [&](const auto& a, const auto& b) {
                                       return std::abs(a - std::conj(v)) < std::abs(b - std::conj(v));
                                   });
        pending.erase(it);
        if (v.imag() < 0) v = std::conj(v);
        pairs.push_back(v);
    }
    auto group = [&](std::vector<std::complex<double>> vals) {
        std::vector<std::pair<std::complex<double>, int>> groups;
        std::sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) {
            return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
        });
        for (const auto& v : vals) {
            if (!groups.empty() && std::abs(groups.back().first - v) <= ctol)
                ++groups.back().second;
            else
                groups.emplace_back(v, 1);
        }
        return groups;
    };
    auto detune = [&](std::complex<double> v) {
        int bumps = 0;
        auto clashes = [&](const std::complex<double>& w) {
            for (const auto& e : existing)
                if (std::abs(w - e) < 1e-9) return true;
            return false;
        };
        while (clashes(v) && bumps < 50) {
            v += std::complex<double>(1e-8, 0.0);
            ++bumps;
        }
        return v;
    };
    const Eigen::Index n = static_cast<Eigen::Index>(reals.size() + 2 * pairs.size());
    Matrix J = Matrix::Zero(n, n);
    Eigen::Index at = 0;
    for (const auto& [val, mult] : group(reals)) {
        const double lam = detune(val).real();
        for (int k = 0; k < mult; ++k) {
            J(at, at) = lam;
            if (k + 1 < mult) J(at, at + 1) = 1.0;
            ++at;
        }
    }
    for (const auto& [val, mult] : group(pairs)) {
        const auto lam = detune(val);
        for (int k = 0; k < mult; ++k) {
            J(at, at) = lam.real();
            J(at, at + 1) = lam.imag();
            J(at + 1, at) = -lam.imag();
            J(at + 1, at + 1) = lam.real();
            if (k + 1 < mult) {
                J(at, at + 2) = 1.0;
                J(at + 1, at + 3) = 1.0;
            }
            at += 2;
        }
    }
    return J;
}

// Product-form evaluation of the requested characteristic polynomial,
// conjugate pairs combined into real quadratics.
Matrix spec_polynomial_at(const Matrix& A, const SpectrumSpec& spec) {
    const Eigen::Index n = A.rows();
    Matrix R = Matrix::Identity(n, n);
    std::vector<std::complex<double>> pending(spec.values.begin(), spec.values.end());
    while (!pending.empty()) {
        const auto v = pending.back();
        pending.pop_back();
        if (std::abs(v.imag()) <= 1e-9) {
            R = (A - v.real() * Matrix::Identity(n, n)) * R;
        } else {
            auto it = std::min_element(pending.begin(), pending.end(),
                                       [&](const auto& a, const auto& b) {
                                           return std::abs(a - std::conj(v)) <
                                                  std::abs(b - std::conj(v));
                                       });
            pending.erase(it);
            R = (A * A - 2.0 * v.real() * A + std::norm(v) * Matrix::Identity(n, n)) * R;
        }
    }
    return R;
}

// Characteristic-polynomial annihilation residual: for the exact closed
// loop, the product of (Acl - lam I) over the requested multiset vanishes
// (Cayley-Hamilton). This is the only numerically meaningful acceptance
// test when the multiset has repeated (hence defective) values.
double annihilation_residual(const Matrix& Acl, const SpectrumSpec& spec) {
    const Eigen::Index n = Acl.rows();
    Matrix R = Matrix::Identity(n, n);
    double scale = 1.0;
    std::vector<std::complex<double>> pending(spec.values.begin(), spec.values.end());
    while (!pending.empty()) {
        const auto v = pending.back();
        pending.pop_back();
        if (std::abs(v.imag()) <= 1e-9) {
            const Matrix F = Acl - v.real() * Matrix::Identity(n, n);
            R = F * R;
            scale *= std::max(1.0, F.norm());
        } else {
            auto it = std::min_element(pending.begin(), pending.end(),
                                       [&](const auto& a, const auto& b) {
                                           return std::abs(a - std::conj(v)) <
                                                  std::abs(b - std::conj(v));
                                       });
            pending.erase(it);
            // (A - v)(A - conj v) expanded in real arithmetic.
            const Matrix F = Acl * Acl - 2.0 * v.real() * Acl +
                             std::norm(v) * Matrix::Identity(n, n);
            R = F * R;
            scale *= std::max(1.0, F.norm());
        }
    }
    return R.norm() / scale;
}

}  // namespace

namespace {

// Sylvester route on the dual pair: M X - X Lam = -Bm G for a random G,
// K = G X^{-1}, returned already transposed into the injection gain.
// Reliable for well-separated multi-output problems.
Matrix sylvester_gain(const Eigen::FullPivLU<Matrix>& kron_lu, const Matrix& Bm,
                      std::mt19937_64& rng, const TolerancePolicy& pol) {
    const Eigen::Index n = Bm.rows();
    const Eigen::Index p = Bm.cols();
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix G(p, n);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < n; ++j) G(i, j) = gauss(rng);
    const Matrix rhs = -Bm * G;
    Eigen::Map<const Vector> rhs_vec(rhs.data(), rhs.size());
    const Vector xv = kron_lu.solve(rhs_vec);
    const Matrix X = Eigen::Map<const Matrix>(xv.data(), n, n);
    if (rank_tol(X, pol) < n) return Matrix();
    return X.transpose().fullPivLu().solve(G.transpose());
}

// Output-injection Ackermann in product form with a random output combiner
// (plus a cyclicity preconditioner after the first try). Handles clustered
// and repeated spectra where the Sylvester eigenvector matrix degenerates.
Matrix ackermann_gain(const Matrix& A, const Matrix& C, const SpectrumSpec& spec,
                      std::mt19937_64& rng, bool precondition) {
    const Eigen::Index n = A.rows();
    const Eigen::Index p = C.rows();
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix L_pre = Matrix::Zero(n, p);
    if (precondition) {
        const double scale = 0.05 * std::max(1.0, A.norm()) / std::max(1.0, C.norm());
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < p; ++j) L_pre(i, j) = scale * gauss(rng);
    }
    Vector w = Vector::Ones(p);
    if (p > 1)
        for (Eigen::Index j = 0; j < p; ++j) w(j) = gauss(rng);
    const Matrix Ap = A + L_pre * C;
    const Matrix c = w.transpose() * C;  // 1 x n

    Matrix O(n, n);
    Matrix row = c;
    for (Eigen::Index i = 0; i < n; ++i) {
        O.row(i) = row;
        row = row * Ap;
    }
    const Eigen::FullPivLU<Matrix> lu(O);
    if (!lu.isInvertible()) return Matrix();
    Vector en = Vector::Zero(n);
    en(n - 1) = 1.0;
    Vector q = lu.solve(en);
    for (int it = 0; it < 3; ++it) q += lu.solve(en - O * q);
    const Matrix l = -spec_polynomial_at(Ap, spec) * q;
    return L_pre + l * w.transpose();
}

// First-order correction of the gain from the eigenvalue residuals:
// d lambda_i = (V^-1 dL C V)_ii for simple eigenvalues, solved least-norm
// for dL. Sharpens any candidate with clustered (but simple) targets.
Matrix newton_refine_gain(const Matrix& A, const Matrix& C, Matrix L,
                          const SpectrumSpec& spec) {
    const Eigen::Index n = A.rows();
    const Eigen::Index p = C.rows();
    double best = eig_multiset_distance(eigenvalues_of(A + L * C), spec.values);
    for (int iter = 0; iter < 4 && best > 1e-12; ++iter) {
        const Matrix Acl = A + L * C;
        Eigen::EigenSolver<Matrix> es(Acl);
        if (es.info() != Eigen::Success) break;
        const ComplexMatrix V = es.eigenvectors();
        const Eigen::FullPivLU<ComplexMatrix> vlu(V);
        if (!vlu.isInvertible()) break;
        const ComplexMatrix Vinv = vlu.inverse();
        const ComplexMatrix CV = C.cast<std::complex<double>>() * V;

        // Greedy pairing of current eigenvalues with the requested ones.
        std::vector<std::complex<double>> want(spec.values.begin(), spec.values.end());
        Eigen::VectorXcd target(n);
        std::vector<bool> used(want.size(), false);
        for (Eigen::Index i = 0; i < n; ++i) {
            size_t bj = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < want.size(); ++j) {
                if (used[j]) continue;
                const double d = std::abs(es.eigenvalues()(i) - want[j]);
                if (d < bd) {
                    bd = d;
                    bj = j;
                }
            }
            used[bj] = true;
            target(i) = want[bj];
        }

        ComplexMatrix sens(n, n * p);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index a = 0; a < n; ++a)
                for (Eigen::Index b = 0; b < p; ++b)
                    sens(i, b * n + a) = Vinv(i, a) * CV(b, i);
        const Eigen::VectorXcd resid = target - es.eigenvalues();
        const Eigen::VectorXcd dl = sens.completeOrthogonalDecomposition().solve(resid);
        Matrix dL(n, p);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < p; ++b) dL(a, b) = dl(b * n + a).real();
        const Matrix L_next = L + dL;
        const double next = eig_multiset_distance(eigenvalues_of(A + L_next * C), spec.values);
        if (!L_next.allFinite() || next >= best) break;
        L = L_next;
        best = next;
    }
    return L;
}

}  // namespace

Matrix refine_injection(const Matrix& A, const Matrix& C, const SpectrumSpec& spec) {
    for (size_t i = 0; i < spec.values.size(); ++i)
        for (size_t j = i + 1; j < spec.values.size(); ++j)
            if (std::abs(spec.values[i] - spec.values[j]) <= 1e-7)
                return Matrix::Zero(A.rows(), C.rows());
    return newton_refine_gain(A, C, Matrix::Zero(A.rows(), C.rows()), spec);
}

Matrix place_poles(const Matrix& A, const Matrix& C, const SpectrumSpec& spec,
                   const TolerancePolicy& pol) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n) throw DimensionError("A must be square");
    if (C.cols() != n) throw DimensionError("C/A shape mismatch");
    if (static_cast<Eigen::Index>(spec.values.size()) != n)
        throw SpecError("spectrum size must equal the state dimension");
    if (!spec.conjugate_closed()) throw SpecError("spectrum is not conjugate-closed");
    if (n == 0) return Matrix(0, C.rows());
    if (!is_observable(A, C, pol)) throw SynthesisError("pair (C, A) is not observable");

    // Dual problem: K with sigma(A' + C' K) = spec, then L = K'.
    const Matrix M = A.transpose();
    const Matrix Bm = C.transpose();
    const Matrix Lam = real_block_form(spec, A);

    // M X - X Lam = -Bm G  =>  (I (x) M - Lam' (x) I) vec(X) = vec(-Bm G).
    Matrix kron = Matrix::Zero(n * n, n * n);
    for (Eigen::Index j = 0; j < n; ++j)
        kron.block(j * n, j * n, n, n) = M;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            kron.block(j * n, i * n, n, n).diagonal().array() -= Lam(i, j);
    const Eigen::FullPivLU<Matrix> kron_lu(kron);

    // Eigensolver matching is meaningless for repeated (defective) values;
    // only then does the annihilation test take over.
    bool has_repeats = false;
    for (size_t i = 0; i < spec.values.size() && !has_repeats; ++i)
        for (size_t j = i + 1; j < spec.values.size(); ++j)
            if (std::abs(spec.values[i] - spec.values[j]) <= 1e-7) {
                has_repeats = true;
                break;
            }

    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    Matrix best_L;
    double best_score = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 32; ++attempt) {
        Matrix L = attempt % 2 ? ackermann_gain(A, C, spec, rng, attempt > 2)
                               : sylvester_gain(kron_lu, Bm, rng, pol);
        if (L.size() == 0 || !L.allFinite()) continue;
        if (!has_repeats) L = newton_refine_gain(A, C, L, spec);
        const Matrix Acl = A + L * C;
        double score = eig_multiset_distance(eigenvalues_of(Acl), spec.values);
        if (has_repeats)
            score = std::min(score, annihilation_residual(Acl, spec) * 100.0);
        if (score < best_score) {
            best_score = score;
            best_L = L;
        }
        if (best_score <= 1e-9) break;
    }
    if (best_L.size() && best_score <= 2e-7) return best_L;
    throw SynthesisError("pole placement failed to converge");
}

}  // namespace geoalloc
