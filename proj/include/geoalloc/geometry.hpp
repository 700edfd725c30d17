#pragma once

#include "geoalloc/lti.hpp"

namespace geoalloc {

struct InvarianceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Supremal (A, im B)-invariant subspace contained in K: the descending
/// recursion V0 = K, V_{k+1} = K  cap  A^{-1}(V_k + im B).
Subspace vstar(const Matrix& A, const Subspace& b_image, const Subspace& K,
               const TolerancePolicy& pol = {});

/// Infimal (C, A)-invariant subspace containing im B: the ascending
/// recursion W0 = B, W_{k+1} = B + A(W_k  cap  ker C).
Subspace wstar_inf(const Matrix& C, const Matrix& A, const Subspace& b_image,
                   const TolerancePolicy& pol = {});

/// Infimal unobservability subspace containing im B: S0 = X,
/// S_{k+1} = W* + (A^{-1} S_k  cap  ker C) with W* = wstar_inf(C, A, im B).
Subspace sstar_inf(const LtiSystem& sys, const TolerancePolicy& pol = {});

/// B monic and im B  cap  V*(A, im B; ker C) = 0.
bool is_left_invertible(const LtiSystem& sys, const TolerancePolicy& pol = {});

RedundancyReport classify_redundancy(const LtiSystem& sys, const TolerancePolicy& pol = {});

/// Output-injection gain L rendering Sstar invariant for A + LC while
/// assigning the spectra of the induced quotient map (spec_bar) and the
/// restriction to Sstar (spec_flat). Sizes: |spec_bar| = n - dim Sstar,
/// |spec_flat| = dim Sstar.
Matrix friend_of_sstar(const LtiSystem& sys, const Subspace& Sstar,
                       const SpectrumSpec& spec_bar, const SpectrumSpec& spec_flat,
                       const TolerancePolicy& pol = {});

/// Insertion/projection maps and the induced maps of the two factor
/// systems obtained from a friend L of Sstar. S and S_Y hold orthonormal
/// bases of Sstar and C*Sstar; P and P_Y are the canonical projections.
struct WorDecomposition {
    Matrix L;          // n x p friend
    Matrix S;          // n x s
    Matrix P;          // (n-s) x n
    Matrix S_Y;        // p x z
    Matrix P_Y;        // (p-z) x p
    Matrix A_L_flat;   // s x s  restriction of A+LC to Sstar
    Matrix B_flat;     // s x m  codomain restriction of B
    Matrix C_flat;     // z x s  restriction of C between the subspaces
    Matrix A_L_bar;    // (n-s) x (n-s)  induced map on the state quotient
    Matrix C_bar;      // (p-z) x (n-s)  induced output map
    Matrix L_bar_flat; // (n-s) x z  P L S_Y
    double max_residual = 0.0;

    int s() const { return static_cast<int>(S.cols()); }
    int z() const { return static_cast<int>(S_Y.cols()); }
};

/// Requires L to be a friend of Sstar (relative invariance residual
/// <= 1e-8); computes every induced map and records the worst relative
/// residual of the commuting relations.
WorDecomposition decompose_wor(const LtiSystem& sys, const Matrix& L, const Subspace& Sstar,
                               const TolerancePolicy& pol = {});

bool lbar_flat_nonzero(const WorDecomposition& dec, const TolerancePolicy& pol = {});

}  // namespace geoalloc
