#pragma once

#include "geoalloc/allocation.hpp"

#include <optional>

namespace geoalloc {

struct ModeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Block-Toeplitz operator mapping a stacked input window to the stacked
/// zero-state output window. Block (i, j) is C A^{i-j-1} B for i > j and
/// zero otherwise (no direct feedthrough), with r+1 block rows and columns.
struct MarkovStack {
    int r = 0;
    int n = 0, m = 0, p = 0;
    Matrix Phi;  // (r+1)p x (r+1)m
    Matrix Obs;  // (r+1)p x n, [C; CA; ...; CA^r] for free-response correction
};

MarkovStack markov_stack(const Matrix& A, const Matrix& B, const Matrix& C, int r);
MarkovStack markov_stack(const LtiSystem& sys, int r);

/// Minimum-norm least-squares input window estimate. The window must be a
/// zero-initial-state window or one the caller has residual-corrected.
Vector ls_invert_window(const MarkovStack& stack, const Vector& ywin);

/// One reconstruction pass: series are row-per-step matrices.
struct EstimatorReport {
    Matrix uhat;       // T_est x m, estimate of u(k) for k < T_est
    Vector residuals;  // per-window least-squares residual norms
    int delay = 0;     // samples of data beyond k consumed to form uhat(k)
};

/// How a sliding window accounts for the unknown state at its left edge.
/// `joint` solves for the window-start state and the input stack together
/// (deadbeat-style); it is exact per window whenever the triple is
/// strongly observable, with no feedback path that could amplify rounding.
/// `propagate` subtracts the free response of a state advanced with past
/// estimates (an inverse-system realization; exact from a known initial
/// state but only as stable as the system's inversion dynamics).
/// `auto_select` picks `joint` when the weakly unobservable subspace
/// V*(A, im B; ker C) is trivial, `propagate` otherwise.
enum class WindowAnchor { auto_select, propagate, joint };

/// Sliding-window left inversion of y = C x, x+ = A x + B u. x0 is the
/// assumed initial state of the data (zero for an eavesdropper); it is
/// only consulted in `propagate` mode.
EstimatorReport reconstruct_series(const Matrix& A, const Matrix& B, const Matrix& C,
                                   const Matrix& y_series, int r,
                                   const Vector& x0 = Vector(),
                                   WindowAnchor anchor = WindowAnchor::auto_select);

/// SOR defender: project each sample on im C along the designed
/// complement, then invert the nominal system. Exact for any disturbance
/// series once the window fills.
EstimatorReport sor_reconstruct(const AllocationDesign& design, const LtiSystem& sys,
                                const Matrix& yd_series, int r);

enum class WorDefenderPath { full_system, flat_system };

struct WorReconstruction {
    EstimatorReport u;
    EstimatorReport d;
    Matrix xhat;  // observer states, T x n
};

/// WOR defender: observer -> output error -> quotient projection ->
/// disturbance inversion -> output cleanup -> input inversion (on the full
/// system or on the restricted square system). `affine` is a known
/// constant state drive (reference injection); the observer tracks it and
/// the input inversion removes its output response.
WorReconstruction wor_reconstruct(const LtiSystem& sys, const AllocationDesign& design,
                                  const WorDecomposition& dec, const Matrix& yd_series,
                                  int r, WorDefenderPath path = WorDefenderPath::full_system,
                                  const Vector& affine = Vector());

enum class AttackerMode { project_then_ls, direct_ls };

/// Eavesdropper estimate from the corrupted output alone, assuming zero
/// initial plant state. project_then_ls requires rank C < p.
EstimatorReport attacker_estimate(const LtiSystem& sys, const Matrix& yd_series,
                                  AttackerMode mode, int r, const TolerancePolicy& pol = {});

/// CSV export: t, u[1..m], uhat[1..m], residual_norm (header mandatory).
void write_estimator_csv(const std::string& path, const Vector& t, const Matrix& u,
                         const EstimatorReport& report);

}  // namespace geoalloc
