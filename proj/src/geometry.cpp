#include "geoalloc/geometry.hpp"

#include <Eigen/QR>

namespace geoalloc {

std::string to_string(RedundancyClass k) {
    switch (k) {
        case RedundancyClass::NOT_OR: return "NOT_OR";
        case RedundancyClass::SOR: return "SOR";
        case RedundancyClass::WOR: return "WOR";
        case RedundancyClass::GOR: return "GOR";
    }
    return "?";
}

namespace {

constexpr double kFixedPointGap = 1e-9;

bool fixed_point(const Subspace& prev, const Subspace& next) {
    return prev.dim() == next.dim() && subspace_gap(prev, next) <= kFixedPointGap;
}

}  // namespace

Subspace vstar(const Matrix& A, const Subspace& b_image, const Subspace& K,
               const TolerancePolicy& pol) {
    const int n = static_cast<int>(A.rows());
    if (b_image.ambient() != n || K.ambient() != n)
        throw DimensionError("ambient mismatch in vstar");
    Subspace V = K;
    for (int it = 0; it < n + 1; ++it) {
        const Subspace next = intersect(K, preimage(A, subspace_sum(V, b_image), pol));
        if (fixed_point(V, next)) return next;
        V = next;
    }
    return V;
}

Subspace wstar_inf(const Matrix& C, const Matrix& A, const Subspace& b_image,
                   const TolerancePolicy& pol) {
    const int n = static_cast<int>(A.rows());
    if (b_image.ambient() != n) throw DimensionError("ambient mismatch in wstar_inf");
    const Subspace kerC = kernel(C, pol);
    Subspace W = b_image;
    for (int it = 0; it < n + 1; ++it) {
        const Subspace inner = intersect(W, kerC);
        const Subspace next = subspace_sum(b_image, Subspace::from_span(A * inner.basis(), pol));
        if (fixed_point(W, next)) return next;
        W = next;
    }
    return W;
}

Subspace sstar_inf(const LtiSystem& sys, const TolerancePolicy& pol) {
    sys.validate();
    const int n = sys.n();
    const Subspace b_image = image(sys.B, pol);
    const Subspace kerC = kernel(sys.C, pol);
    const Subspace W = wstar_inf(sys.C, sys.A, b_image, pol);
    Subspace S = Subspace::full(n);
    for (int it = 0; it < n + 1; ++it) {
        const Subspace next = subspace_sum(W, intersect(preimage(sys.A, S, pol), kerC));
        if (fixed_point(S, next)) return next;
        S = next;
    }
    return S;
}

bool is_left_invertible(const LtiSystem& sys, const TolerancePolicy& pol) {
    sys.validate();
    if (rank_tol(sys.B, pol) < sys.m()) return false;
    const Subspace b_image = image(sys.B, pol);
    const Subspace V = vstar(sys.A, b_image, kernel(sys.C, pol), pol);
    return intersect(b_image, V).dim() == 0;
}

RedundancyReport classify_redundancy(const LtiSystem& sys, const TolerancePolicy& pol) {
    sys.validate();
    RedundancyReport rep;
    rep.n = sys.n();
    rep.m = sys.m();
    rep.p = sys.p();
    rep.rank_C = rank_tol(sys.C, pol);
    rep.controllable = is_controllable(sys.A, sys.B, pol);
    rep.observable = is_observable(sys.A, sys.C, pol);
    rep.left_invertible = is_left_invertible(sys, pol);
    if (rep.p <= rep.m)
        rep.klass = RedundancyClass::NOT_OR;
    else if (rep.rank_C == rep.m)
        rep.klass = RedundancyClass::SOR;
    else if (rep.rank_C == rep.p)
        rep.klass = RedundancyClass::WOR;
    else
        rep.klass = RedundancyClass::GOR;
    return rep;
}

namespace {

// Least-norm solve of P (A + L0 C) S = 0 for L0, vectorized as
// (S'C' (x) P) vec(L0) = vec(-P A S).
Matrix least_norm_friend(const Matrix& A, const Matrix& C, const Matrix& S, const Matrix& P) {
    const Eigen::Index n = A.rows();
    const Eigen::Index p = C.rows();
    const Eigen::Index s = S.cols();
    const Eigen::Index q = P.rows();
    const Matrix CS = C * S;  // p x s
    Matrix coeff = Matrix::Zero(q * s, n * p);
    for (Eigen::Index col = 0; col < p; ++col)
        for (Eigen::Index j = 0; j < s; ++j)
            coeff.block(j * q, col * n, q, n) = CS(col, j) * P;
    const Matrix rhs_mat = -P * A * S;
    Eigen::Map<const Vector> rhs(rhs_mat.data(), rhs_mat.size());
    const Vector l0 = coeff.completeOrthogonalDecomposition().solve(rhs);
    return Eigen::Map<const Matrix>(l0.data(), n, p);
}

double rel_residual(const Matrix& lhs, const Matrix& rhs) {
    const double scale = std::max({1.0, lhs.norm(), rhs.norm()});
    return (lhs - rhs).norm() / scale;
}

}  // namespace

Matrix friend_of_sstar(const LtiSystem& sys, const Subspace& Sstar,
                       const SpectrumSpec& spec_bar, const SpectrumSpec& spec_flat,
                       const TolerancePolicy& pol) {
    sys.validate();
    const int n = sys.n();
    const int s = Sstar.dim();
    if (Sstar.ambient() != n) throw DimensionError("Sstar ambient mismatch");
    if (static_cast<int>(spec_bar.values.size()) != n - s)
        throw SpecError("spec_bar must have n - dim(Sstar) values");
    if (static_cast<int>(spec_flat.values.size()) != s)
        throw SpecError("spec_flat must have dim(Sstar) values");
    if (!is_observable(sys.A, sys.C, pol))
        throw SynthesisError("friend synthesis requires an observable pair");

    const Matrix& S = Sstar.basis();
    const Matrix P = quotient_projection(Sstar);
    const Matrix L0 = least_norm_friend(sys.A, sys.C, S, P);

    const Subspace CS_span = Subspace::from_span(sys.C * S, pol);
    const Matrix& S_Y = CS_span.basis();
    const Matrix P_Y = quotient_projection(CS_span);

    // Quotient placement: sigma(A0 + L0a C0) = spec_bar with pseudo-inverses
    // collapsing to transposes for orthonormal P rows.
    const Matrix A0 = P * (sys.A + L0 * sys.C) * P.transpose();
    const Matrix C0 = P_Y * sys.C * P.transpose();
    const Matrix L0a = place_poles(A0, C0, spec_bar, pol);
    const Matrix L1 = L0 + P.transpose() * L0a * P_Y;

    // Restriction placement on Sstar.
    const Matrix A1 = S.transpose() * (sys.A + L1 * sys.C) * S;
    const Matrix C1 = sys.C * S;
    const Matrix L1a = place_poles(A1, C1, spec_flat, pol);
    Matrix L = L1 + S * L1a;

    // Corrections of the form P' D0 P_Y leave the invariance relation and
    // the restricted spectrum untouched (P_Y C S = 0, P S = 0), and S D1
    // leaves the quotient spectrum untouched; polish each factor of the
    // assembled gain against its own target. Clustered targets are
    // sensitive enough for the reassembly round-off to show otherwise.
    for (int pass = 0; pass < 2; ++pass) {
        const Matrix AL = sys.A + L * sys.C;
        const Matrix Abar = P * AL * P.transpose();
        const Matrix d0 = refine_injection(Abar, C0, spec_bar);
        L += P.transpose() * d0 * P_Y;
        const Matrix ALb = sys.A + L * sys.C;
        const Matrix Aflat = S.transpose() * ALb * S;
        const Matrix d1 = refine_injection(Aflat, C1, spec_flat);
        L += S * d1;
        if (d0.norm() + d1.norm() < 1e-12) break;
    }
    return L;
}

WorDecomposition decompose_wor(const LtiSystem& sys, const Matrix& L, const Subspace& Sstar,
                               const TolerancePolicy& pol) {
    sys.validate();
    if (L.rows() != sys.n() || L.cols() != sys.p()) throw DimensionError("L shape mismatch");
    WorDecomposition dec;
    dec.L = L;
    dec.S = Sstar.basis();
    dec.P = quotient_projection(Sstar);
    const Matrix AL = sys.A + L * sys.C;

    const double inv_res = rel_residual(dec.P * AL * dec.S, Matrix::Zero(dec.P.rows(), dec.S.cols()));
    if (inv_res > 1e-8)
        throw InvarianceError("L is not a friend of Sstar (residual " + std::to_string(inv_res) + ")");

    const Subspace CS_span = Subspace::from_span(sys.C * dec.S, pol);
    dec.S_Y = CS_span.basis();
    dec.P_Y = quotient_projection(CS_span);

    dec.A_L_flat = dec.S.transpose() * AL * dec.S;
    dec.B_flat = dec.S.transpose() * sys.B;
    dec.C_flat = dec.S_Y.transpose() * sys.C * dec.S;
    dec.A_L_bar = dec.P * AL * dec.P.transpose();
    dec.C_bar = dec.P_Y * sys.C * dec.P.transpose();
    dec.L_bar_flat = dec.P * L * dec.S_Y;

    double worst = inv_res;
    worst = std::max(worst, rel_residual(AL * dec.S, dec.S * dec.A_L_flat));
    worst = std::max(worst, rel_residual(sys.B, dec.S * dec.B_flat));
    worst = std::max(worst, rel_residual(sys.C * dec.S, dec.S_Y * dec.C_flat));
    worst = std::max(worst, rel_residual(dec.P * AL, dec.A_L_bar * dec.P));
    worst = std::max(worst, rel_residual(dec.P_Y * sys.C, dec.C_bar * dec.P));
    dec.max_residual = worst;
    return dec;
}

bool lbar_flat_nonzero(const WorDecomposition& dec, const TolerancePolicy& pol) {
    if (dec.L_bar_flat.size() == 0) return false;
    const double scale = std::max(1.0, dec.L.norm());
    return dec.L_bar_flat.cwiseAbs().maxCoeff() > pol.threshold(scale);
}

}  // namespace geoalloc
