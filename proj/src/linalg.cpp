#include "geoalloc/linalg.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdlib>
#include <string>

namespace geoalloc {

TolerancePolicy TolerancePolicy::from_env() {
    TolerancePolicy pol;
    if (const char* s = std::getenv("GEOALLOC_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(s, &end);
        if (end != s && v > 0.0) pol.rel = v;
    }
    return pol;
}

bool all_finite(const Matrix& M) { return M.allFinite(); }

Subspace::Subspace(int ambient_dim)
    : ambient_(ambient_dim), basis_(ambient_dim, 0), tol_(TolerancePolicy{}.floor) {
    if (ambient_dim < 1) throw DimensionError("ambient dimension must be positive");
}

Subspace Subspace::from_span(const Matrix& span, const TolerancePolicy& pol) {
    if (span.rows() < 1) throw DimensionError("ambient dimension must be positive");
    Subspace s(static_cast<int>(span.rows()));
    if (span.cols() == 0 || span.norm() == 0.0) {
        s.tol_ = pol.floor;
        return s;
    }
    Eigen::JacobiSVD<Matrix> svd(span, Eigen::ComputeThinU);
    const double thr = pol.threshold(svd.singularValues()(0));
    int r = 0;
    while (r < svd.singularValues().size() && svd.singularValues()(r) > thr) ++r;
    s.basis_ = svd.matrixU().leftCols(r);
    s.tol_ = thr;
    return s;
}

Subspace Subspace::from_orthonormal(Matrix basis, double tol) {
    Subspace s(static_cast<int>(basis.rows()));
    s.basis_ = std::move(basis);
    s.tol_ = tol;
    return s;
}

Subspace Subspace::full(int ambient_dim) {
    return from_orthonormal(Matrix::Identity(ambient_dim, ambient_dim),
                            TolerancePolicy{}.floor);
}

bool Subspace::contains(const Vector& v) const {
    if (v.size() != ambient_) throw DimensionError("vector/ambient mismatch");
    const double scale = std::max(1.0, v.norm());
    const Vector res = v - basis_ * (basis_.transpose() * v);
    return res.norm() <= 10.0 * std::max(tol_, TolerancePolicy{}.rel * scale);
}

bool Subspace::contains(const Subspace& other) const {
    if (other.ambient() != ambient_) throw DimensionError("ambient mismatch");
    if (other.is_zero()) return true;
    const Matrix res = other.basis() - basis_ * (basis_.transpose() * other.basis());
    return res.cwiseAbs().maxCoeff() <= 100.0 * std::max(tol_, other.tol());
}

Matrix Subspace::projector() const { return basis_ * basis_.transpose(); }

namespace {

template <typename Mat>
int rank_from_svd(const Mat& M, const TolerancePolicy& pol) {
    if (M.rows() == 0 || M.cols() == 0) return 0;
    if (M.norm() == 0.0) return 0;
    Eigen::JacobiSVD<Mat> svd(M);
    const auto& sv = svd.singularValues();
    const double thr = pol.threshold(sv(0));
    int r = 0;
    while (r < sv.size() && sv(r) > thr) ++r;
    return r;
}

}  // namespace

int rank_tol(const Matrix& M, const TolerancePolicy& pol) { return rank_from_svd(M, pol); }
int rank_tol_complex(const ComplexMatrix& M, const TolerancePolicy& pol) { return rank_from_svd(M, pol); }

Subspace kernel(const Matrix& M, const TolerancePolicy& pol) {
    const int n = static_cast<int>(M.cols());
    if (n == 0) throw DimensionError("kernel of a zero-column matrix has no ambient");
    if (M.rows() == 0 || M.norm() == 0.0) return Subspace::full(n);
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double thr = pol.threshold(sv(0));
    int r = 0;
    while (r < sv.size() && sv(r) > thr) ++r;
    return Subspace::from_orthonormal(svd.matrixV().rightCols(n - r), thr);
}

Subspace image(const Matrix& M, const TolerancePolicy& pol) {
    if (M.rows() < 1) throw DimensionError("image needs at least one row");
    return Subspace::from_span(M, pol);
}

Subspace intersect(const Subspace& a, const Subspace& b) {
    if (a.ambient() != b.ambient()) throw DimensionError("ambient mismatch in intersect");
    if (a.is_zero() || b.is_zero()) return Subspace(a.ambient());
    // Null vectors [x; y] of [Ba | -Bb] give Ba x = Bb y, a point of the
    // intersection.
    Matrix stacked(a.ambient(), a.dim() + b.dim());
    stacked << a.basis(), -b.basis();
    const Subspace nul = kernel(stacked);
    if (nul.is_zero()) return Subspace(a.ambient());
    const Matrix pts = a.basis() * nul.basis().topRows(a.dim());
    return Subspace::from_span(pts);
}

Subspace subspace_sum(const Subspace& a, const Subspace& b) {
    if (a.ambient() != b.ambient()) throw DimensionError("ambient mismatch in sum");
    Matrix joined(a.ambient(), a.dim() + b.dim());
    joined << a.basis(), b.basis();
    return Subspace::from_span(joined);
}

Subspace preimage(const Matrix& A, const Subspace& S, const TolerancePolicy& pol) {
    if (A.rows() != S.ambient()) throw DimensionError("map/ambient mismatch in preimage");
    // {x : Ax in S} = ker(P A) with P the canonical projection modulo S.
    if (S.dim() == S.ambient()) return Subspace::full(static_cast<int>(A.cols()));
    const Matrix P = quotient_projection(S);
    return kernel(P * A, pol);
}

Subspace complement_within(const Subspace& K, const Subspace& W) {
    if (K.ambient() != W.ambient()) throw DimensionError("ambient mismatch");
    if (!W.contains(K)) throw ContainmentError("K is not contained in W");
    if (K.is_zero()) return W;
    // W-coordinates orthogonal to K: kernel of K' W.
    const Subspace coords = kernel(K.basis().transpose() * W.basis());
    if (coords.is_zero()) return Subspace(W.ambient());
    return Subspace::from_span(W.basis() * coords.basis());
}

Matrix quotient_projection(const Subspace& S) {
    const int n = S.ambient();
    const int s = S.dim();
    if (s == 0) return Matrix::Identity(n, n);
    const Subspace orth = kernel(S.basis().transpose());
    Matrix P = orth.basis().transpose();
    if (P.rows() != n - s) throw DimensionError("degenerate basis in quotient_projection");
    return P;
}

double subspace_gap(const Subspace& a, const Subspace& b) {
    if (a.ambient() != b.ambient()) throw DimensionError("ambient mismatch in gap");
    const Matrix diff = a.projector() - b.projector();
    if (diff.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(diff);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

Matrix oblique_projector(const Subspace& onto, const Subspace& along,
                         const TolerancePolicy& pol) {
    const int n = onto.ambient();
    if (along.ambient() != n) throw DimensionError("ambient mismatch in projector");
    if (onto.dim() + along.dim() != n || intersect(onto, along).dim() != 0)
        throw ContainmentError("subspaces are not complementary");
    Matrix T(n, n);
    T << onto.basis(), along.basis();
    Matrix lhs(n, n);
    lhs << onto.basis(), Matrix::Zero(n, along.dim());
    // Q maps onto-coordinates to themselves and along-coordinates to zero.
    return T.transpose().fullPivLu().solve(lhs.transpose()).transpose();
}

}  // namespace geoalloc
