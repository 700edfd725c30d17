#include "geoalloc/allocation.hpp"

#include <random>

namespace geoalloc {

namespace {

double max_abs(const Matrix& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

void structural_checks_sor(const Matrix& C, const AllocationDesign& d,
                           const TolerancePolicy& pol, Certificate& cert) {
    const Subspace imC = image(C, pol);
    const Subspace imD = image(d.D, pol);
    cert.add("D_monic", 0.0, rank_tol(d.D, pol) == d.q() && d.q() >= 1);
    const int inter = intersect(imD, imC).dim();
    cert.add("D_cap_imC_zero", static_cast<double>(inter), inter == 0);
    cert.add("QC_eq_C", max_abs(d.Q * C - C), max_abs(d.Q * C - C) <= 1e-8);
    cert.add("QD_eq_zero", max_abs(d.Q * d.D), max_abs(d.Q * d.D) <= 1e-8);
    cert.add("Q_idempotent", max_abs(d.Q * d.Q - d.Q), max_abs(d.Q * d.Q - d.Q) <= 1e-8);
}

void structural_checks_wor(const LtiSystem& sys, const AllocationDesign& d,
                           const TolerancePolicy& pol, Certificate& cert) {
    const Subspace Sstar = sstar_inf(sys, pol);
    WorDecomposition dec;
    try {
        dec = decompose_wor(sys, d.L, Sstar, pol);
    } catch (const InvarianceError&) {
        cert.add("L_friend_of_Sstar", 1.0, false);
        return;
    }
    cert.add("L_friend_of_Sstar", dec.max_residual, dec.max_residual <= 1e-8);
    cert.add("D_monic", 0.0, rank_tol(d.D, pol) == d.q() && d.q() >= 1);

    const Matrix PYD = dec.P_Y * d.D;
    cert.add("PY_D_zero", max_abs(PYD), max_abs(PYD) <= 1e-8);

    const Matrix D_L_bar = dec.P * d.L * d.D;
    const int rk = rank_tol(D_L_bar, pol);
    cert.add("C1_DLbar_monic", static_cast<double>(rk), rk == d.q());

    const Subspace imDL = image(D_L_bar, pol);
    const Subspace Vbar = vstar(dec.A_L_bar, imDL, kernel(dec.C_bar, pol), pol);
    const int inter = intersect(imDL, Vbar).dim();
    cert.add("C2_imDLbar_cap_Vbar_zero", static_cast<double>(inter), inter == 0);
}

}  // namespace

AllocationDesign design_D_sor(const Matrix& C, const TolerancePolicy& pol) {
    const int p = static_cast<int>(C.rows());
    if (rank_tol(C, pol) >= p)
        throw ClassError("C is epic: no complement of im C exists (system is not SOR)");
    const Subspace comp = kernel(C.transpose(), pol);
    return sor_design_with_D(C, comp.basis(), pol);
}

AllocationDesign sor_design_with_D(const Matrix& C, const Matrix& D, const TolerancePolicy& pol) {
    const int p = static_cast<int>(C.rows());
    if (D.rows() != p) throw DimensionError("D/C row mismatch");
    const Subspace imC = image(C, pol);
    const Subspace imD = image(D, pol);
    if (imD.dim() != D.cols() || D.cols() < 1)
        throw ClassError("D must be monic and non-trivial");
    if (imC.dim() + imD.dim() != p || intersect(imC, imD).dim() != 0)
        throw ClassError("im D must be complementary to im C");
    AllocationDesign design;
    design.kind = DesignKind::SOR;
    design.D = imD.basis();
    design.L = Matrix::Zero(0, 0);
    design.Q = oblique_projector(imC, imD, pol);
    return design;
}

Matrix attacker_projector(const Matrix& C, const TolerancePolicy& pol) {
    const int p = static_cast<int>(C.rows());
    if (rank_tol(C, pol) >= p)
        throw ClassError("C is epic: ker C' is trivial, no attacker projector exists");
    const Subspace Da = kernel(C.transpose(), pol);
    return oblique_projector(image(C, pol), Da, pol);
}

namespace {

// Appendix-style column selection: keep the directions of im(L_bar_flat')
// whose image under L_bar_flat is not absorbed by Vbar*.
struct WorCandidate {
    Matrix D_flat;     // z x q, coordinates in C*Sstar
    Subspace vbar{1};
};

WorCandidate wor_candidate_columns(const WorDecomposition& dec, const TolerancePolicy& pol) {
    const Matrix& Lbf = dec.L_bar_flat;  // (n-s) x z
    const Subspace rowspace = image(Lbf.transpose(), pol);  // complement of ker Lbf
    const Matrix D_flat_a = rowspace.basis();               // z x tau
    const Matrix D_L_a = Lbf * D_flat_a;                    // (n-s) x tau

    const Subspace vbar = vstar(dec.A_L_bar, image(D_L_a, pol), kernel(dec.C_bar, pol), pol);

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < D_L_a.cols(); ++i) {
        if (vbar.is_zero()) {
            keep.push_back(i);
            continue;
        }
        // Column i is discarded when V theta = column is solvable.
        const Vector theta = vbar.basis().completeOrthogonalDecomposition().solve(D_L_a.col(i));
        const double res = (vbar.basis() * theta - D_L_a.col(i)).norm();
        if (res > pol.threshold(std::max(1.0, D_L_a.col(i).norm()))) keep.push_back(i);
    }
    WorCandidate cand;
    cand.vbar = vbar;
    cand.D_flat = Matrix(D_flat_a.rows(), static_cast<Eigen::Index>(keep.size()));
    for (size_t k = 0; k < keep.size(); ++k) cand.D_flat.col(static_cast<Eigen::Index>(k)) = D_flat_a.col(keep[k]);
    return cand;
}

// Constructive fallback from the proof of the quotient left-invertibility
// result: split im D_L_bar = (Vbar* cap im D_L_bar) (+) N and pull N back
// through D_L_bar.
Matrix wor_refine_columns(const WorDecomposition& dec, const Matrix& D_flat,
                          const TolerancePolicy& pol) {
    const Matrix D_L_bar = dec.L_bar_flat * D_flat;
    const Subspace imDL = image(D_L_bar, pol);
    const Subspace vbar = vstar(dec.A_L_bar, imDL, kernel(dec.C_bar, pol), pol);
    const Subspace overlap = intersect(vbar, imDL);
    if (overlap.dim() == 0) return D_flat;
    const Subspace N = complement_within(overlap, imDL);
    if (N.is_zero()) return Matrix(D_flat.rows(), 0);
    // Coordinates theta with D_L_bar * theta inside N.
    const Subspace coords = kernel(quotient_projection(N) * D_L_bar, pol);
    return D_flat * coords.basis();
}

}  // namespace

AllocationDesign design_D_wor(const LtiSystem& sys, const WorDecomposition& dec,
                              const TolerancePolicy& pol) {
    AllocationDesign design;
    design.kind = DesignKind::WOR;
    design.L = dec.L;

    WorCandidate cand = wor_candidate_columns(dec, pol);
    if (cand.D_flat.cols() == 0)
        cand.D_flat = wor_refine_columns(dec, image(dec.L_bar_flat.transpose(), pol).basis(), pol);

    auto finalize = [&](const Matrix& D_flat) {
        design.D = Subspace::from_span(dec.S_Y * D_flat, pol).basis();
        const Matrix D_L_bar = dec.P * dec.L * design.D;
        const Subspace imDL = image(D_L_bar, pol);
        design.vbar_star = vstar(dec.A_L_bar, imDL, kernel(dec.C_bar, pol), pol);
        const bool monic = rank_tol(D_L_bar, pol) == design.q() && design.q() >= 1;
        const bool clear = intersect(imDL, design.vbar_star).dim() == 0;
        return monic && clear;
    };

    if (!finalize(cand.D_flat)) {
        const Matrix refined = wor_refine_columns(dec, cand.D_flat, pol);
        if (refined.cols() == 0 || !finalize(refined))
            throw std::runtime_error(
                "WOR disturbance design collapsed to the trivial subspace; "
                "inconsistent with the quotient left-invertibility guarantee");
    }
    return design;
}

bool pencil_left_invertible(const Matrix& A, const Matrix& B, const Matrix& C,
                            const Matrix& D, TimeDomain domain, const TolerancePolicy& pol,
                            std::uint64_t seed, int count) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    const Eigen::Index p = C.rows();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < count; ++k) {
        std::complex<double> z;
        if (domain == TimeDomain::discrete) {
            const double th = 2.0 * M_PI * unif(rng);
            z = std::complex<double>(2.0 * std::cos(th), 2.0 * std::sin(th));
        } else {
            z = std::complex<double>(1.0 + 2.0 * unif(rng), -3.0 + 6.0 * unif(rng));
        }
        ComplexMatrix pencil(n + p, n + m);
        pencil.setZero();
        pencil.topLeftCorner(n, n) = z * ComplexMatrix::Identity(n, n) - A.cast<std::complex<double>>();
        pencil.topRightCorner(n, m) = -B.cast<std::complex<double>>();
        pencil.bottomLeftCorner(p, n) = C.cast<std::complex<double>>();
        if (D.size() > 0) pencil.bottomRightCorner(p, m) = D.cast<std::complex<double>>();
        if (rank_tol_complex(pencil, pol) < n + m) return false;
    }
    return true;
}

Certificate verify_allocation(const LtiSystem& sys, const AllocationDesign& design,
                              const TolerancePolicy& pol, std::uint64_t seed) {
    sys.validate();
    Certificate cert;
    cert.seed = seed;
    const int q = design.q();
    cert.add("q_positive", static_cast<double>(q), q >= 1);
    cert.add("q_le_p_minus_m", static_cast<double>(q), q <= sys.p() - sys.m());
    if (q < 1) return cert;

    if (design.kind == DesignKind::SOR)
        structural_checks_sor(sys.C, design, pol, cert);
    else
        structural_checks_wor(sys, design, pol, cert);

    // Aggregate quadruple (A, [B 0], C, [0 D]) sampled on the pencil.
    Matrix B_a(sys.n(), sys.m() + q);
    B_a << sys.B, Matrix::Zero(sys.n(), q);
    Matrix D_a(sys.p(), sys.m() + q);
    D_a << Matrix::Zero(sys.p(), sys.m()), design.D;
    const bool ok = pencil_left_invertible(sys.A, B_a, sys.C, D_a, sys.time_domain, pol, seed);
    cert.add("aggregate_pencil_full_rank", ok ? 0.0 : 1.0, ok);
    return cert;
}

}  // namespace geoalloc
