#include "geoalloc/inversion.hpp"

#include "geoalloc/matrix_io.hpp"

#include <Eigen/QR>

#include <fstream>

namespace geoalloc {

MarkovStack markov_stack(const Matrix& A, const Matrix& B, const Matrix& C, int r) {
    if (r < 1) throw std::invalid_argument("window length r must be >= 1");
    MarkovStack st;
    st.r = r;
    st.n = static_cast<int>(A.rows());
    st.m = static_cast<int>(B.cols());
    st.p = static_cast<int>(C.rows());
    st.Phi = Matrix::Zero((r + 1) * st.p, (r + 1) * st.m);
    st.Obs = Matrix::Zero((r + 1) * st.p, st.n);

    // Powers of A appear along sub-diagonals; walk them once.
    Matrix Apow = Matrix::Identity(st.n, st.n);
    st.Obs.topRows(st.p) = C;
    std::vector<Matrix> markov(static_cast<size_t>(r));  // C A^k B, k = 0..r-1
    for (int k = 0; k < r; ++k) {
        markov[static_cast<size_t>(k)] = C * Apow * B;
        Apow = Apow * A;
        st.Obs.middleRows((k + 1) * st.p, st.p) = C * Apow;
    }
    for (int i = 1; i <= r; ++i)
        for (int j = 0; j < i; ++j)
            st.Phi.block(i * st.p, j * st.m, st.p, st.m) = markov[static_cast<size_t>(i - j - 1)];
    return st;
}

MarkovStack markov_stack(const LtiSystem& sys, int r) {
    sys.validate();
    if (sys.time_domain != TimeDomain::discrete)
        throw std::domain_error("Markov stacks are defined for discrete-time systems");
    return markov_stack(sys.A, sys.B, sys.C, r);
}

Vector ls_invert_window(const MarkovStack& stack, const Vector& ywin) {
    if (ywin.size() != stack.Phi.rows())
        throw DimensionError("output window length must be (r+1)*p");
    return stack.Phi.completeOrthogonalDecomposition().solve(ywin);
}

EstimatorReport reconstruct_series(const Matrix& A, const Matrix& B, const Matrix& C,
                                   const Matrix& y_series, int r, const Vector& x0,
                                   WindowAnchor anchor) {
    const int T = static_cast<int>(y_series.rows());
    const int n = static_cast<int>(A.rows());
    const int p = static_cast<int>(C.rows());
    const int m = static_cast<int>(B.cols());
    if (y_series.cols() != p) throw DimensionError("series width must equal p");
    if (T < r + 1) throw DimensionError("series shorter than one window");

    if (anchor == WindowAnchor::auto_select) {
        const Subspace weak = vstar(A, image(B), kernel(C));
        anchor = weak.is_zero() ? WindowAnchor::joint : WindowAnchor::propagate;
    }

    const MarkovStack st = markov_stack(A, B, C, r);
    EstimatorReport rep;
    rep.delay = r;
    const int T_est = T - r;
    rep.uhat = Matrix::Zero(T_est, m);
    rep.residuals = Vector::Zero(T_est);
    Vector ywin((r + 1) * p);

    if (anchor == WindowAnchor::joint) {
        Matrix joint(st.Phi.rows(), n + st.Phi.cols());
        joint << st.Obs, st.Phi;
        const auto solver = joint.completeOrthogonalDecomposition();
        for (int k = 0; k < T_est; ++k) {
            for (int i = 0; i <= r; ++i) ywin.segment(i * p, p) = y_series.row(k + i).transpose();
            const Vector sol = solver.solve(ywin);
            rep.uhat.row(k) = sol.segment(n, m).transpose();
            rep.residuals(k) = (joint * sol - ywin).norm();
        }
        return rep;
    }

    const auto solver = st.Phi.completeOrthogonalDecomposition();
    Vector xrec = x0.size() ? x0 : Vector::Zero(n);
    for (int k = 0; k < T_est; ++k) {
        for (int i = 0; i <= r; ++i) ywin.segment(i * p, p) = y_series.row(k + i).transpose();
        ywin -= st.Obs * xrec;
        const Vector uwin = solver.solve(ywin);
        rep.uhat.row(k) = uwin.head(m).transpose();
        rep.residuals(k) = (st.Phi * uwin - ywin).norm();
        xrec = A * xrec + B * uwin.head(m);
    }
    return rep;
}

EstimatorReport sor_reconstruct(const AllocationDesign& design, const LtiSystem& sys,
                                const Matrix& yd_series, int r) {
    if (design.kind != DesignKind::SOR)
        throw ModeError("sor_reconstruct requires a SOR design");
    const Matrix y_clean = yd_series * design.Q.transpose();
    return reconstruct_series(sys.A, sys.B, sys.C, y_clean, r);
}

WorReconstruction wor_reconstruct(const LtiSystem& sys, const AllocationDesign& design,
                                  const WorDecomposition& dec, const Matrix& yd_series,
                                  int r, WorDefenderPath path, const Vector& affine) {
    if (design.kind != DesignKind::WOR)
        throw ModeError("wor_reconstruct requires a WOR design");
    sys.validate();
    const int T = static_cast<int>(yd_series.rows());
    const int n = sys.n();
    const Matrix AL = sys.A + dec.L * sys.C;
    if (!SpectrumSpec{eigenvalues_of(AL)}.all_stable(sys.time_domain))
        throw std::invalid_argument("observer dynamics A+LC must be stable");
    const Vector g = affine.size() ? affine : Vector::Zero(n);

    WorReconstruction out;
    out.xhat = Matrix::Zero(T, n);
    Matrix ytilde(T, sys.p());
    Vector xhat = Vector::Zero(n);
    for (int k = 0; k < T; ++k) {
        out.xhat.row(k) = xhat.transpose();
        ytilde.row(k) = yd_series.row(k) - (sys.C * xhat).transpose();
        xhat = AL * xhat - dec.L * yd_series.row(k).transpose() + g;
    }

    // Quotient output sees only the disturbance path.
    const Matrix ybar = ytilde * dec.P_Y.transpose();
    const Matrix D_L_bar = dec.P * dec.L * design.D;
    out.d = reconstruct_series(dec.A_L_bar, D_L_bar, dec.C_bar, ybar, r);

    const int Td = static_cast<int>(out.d.uhat.rows());
    if (path == WorDefenderPath::full_system) {
        // Clean output, remove the reference response, then invert the
        // plant itself.
        Matrix y_clean(Td, sys.p());
        Vector xg = Vector::Zero(n);
        for (int k = 0; k < Td; ++k) {
            y_clean.row(k) = yd_series.row(k) -
                             (design.D * out.d.uhat.row(k).transpose()).transpose() -
                             (sys.C * xg).transpose();
            xg = sys.A * xg + g;
        }
        out.u = reconstruct_series(sys.A, sys.B, sys.C, y_clean, r);
    } else {
        // Restricted square system: remove the disturbance response of the
        // error system, then read off the C*Sstar coordinates.
        Matrix yflat(Td, dec.z());
        const Matrix LD = dec.L * design.D;
        Vector xd = Vector::Zero(n);  // error-system response to the disturbance only
        for (int k = 0; k < Td; ++k) {
            const Vector dk = out.d.uhat.row(k).transpose();
            const Vector resid = ytilde.row(k).transpose() - design.D * dk - sys.C * xd;
            yflat.row(k) = (dec.S_Y.transpose() * resid).transpose();
            xd = AL * xd + LD * dk;
        }
        out.u = reconstruct_series(dec.A_L_flat, dec.B_flat, dec.C_flat, yflat, r);
    }
    out.u.delay = r;
    return out;
}

EstimatorReport attacker_estimate(const LtiSystem& sys, const Matrix& yd_series,
                                  AttackerMode mode, int r, const TolerancePolicy& pol) {
    sys.validate();
    if (mode == AttackerMode::direct_ls)
        return reconstruct_series(sys.A, sys.B, sys.C, yd_series, r);
    if (rank_tol(sys.C, pol) >= sys.p())
        throw ModeError("projection attack needs rank C < p; only the trivial guess exists");
    const Matrix Qa = attacker_projector(sys.C, pol);
    return reconstruct_series(sys.A, sys.B, sys.C, yd_series * Qa.transpose(), r);
}

void write_estimator_csv(const std::string& path, const Vector& t, const Matrix& u,
                         const EstimatorReport& report) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    const int m = static_cast<int>(u.cols());
    os << "t";
    for (int j = 1; j <= m; ++j) os << ",u" << j;
    for (int j = 1; j <= m; ++j) os << ",uhat" << j;
    os << ",residual_norm\n";
    const int T = static_cast<int>(report.uhat.rows());
    for (int k = 0; k < T; ++k) {
        os << format_double(t(k));
        for (int j = 0; j < m; ++j) os << ',' << format_double(u(k, j));
        for (int j = 0; j < m; ++j) os << ',' << format_double(report.uhat(k, j));
        os << ',' << format_double(report.residuals(k)) << '\n';
    }
}

}  // namespace geoalloc
