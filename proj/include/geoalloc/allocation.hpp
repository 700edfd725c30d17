#pragma once

#include "geoalloc/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace geoalloc {

struct ClassError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckResult {
    std::string name;
    double residual = 0.0;
    bool pass = false;
};

struct Certificate {
    std::vector<CheckResult> checks;
    std::uint64_t seed = 0;

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    void add(const std::string& name, double residual, bool ok) {
        checks.push_back({name, residual, ok});
    }
};

enum class DesignKind { SOR, WOR };

/// Synthesized output-allocation pair. D holds an orthonormal basis of the
/// disturbance subspace as its insertion map. Q (SOR only) is the
/// projection on im C along the chosen complement; L (WOR only) is the
/// friend gain the design was built around.
struct AllocationDesign {
    DesignKind kind = DesignKind::SOR;
    Matrix D;               // p x q
    Matrix L;               // n x p (zero for SOR)
    Matrix Q;               // p x p (SOR only)
    Subspace vbar_star{1};  // WOR only: V*(A_L_bar, im D_L_bar; ker C_bar)
    Certificate certificates;

    int q() const { return static_cast<int>(D.cols()); }
};

/// Maximum-coverage SOR design: D spans the orthogonal complement of im C,
/// Q is the (here orthogonal) projection on im C along it.
AllocationDesign design_D_sor(const Matrix& C, const TolerancePolicy& pol = {});

/// SOR design with an imposed complement basis (any D with
/// im D (+) im C = Y); Q becomes the oblique projection along im D.
AllocationDesign sor_design_with_D(const Matrix& C, const Matrix& D,
                                   const TolerancePolicy& pol = {});

/// WOR design following the friend decomposition: picks the disturbance
/// subspace inside C*Sstar whose image under P L stays clear of the
/// quotient's supremal controlled-invariant subspace.
AllocationDesign design_D_wor(const LtiSystem& sys, const WorDecomposition& dec,
                              const TolerancePolicy& pol = {});

/// Projector on im C along ker C' (the least-squares eavesdropper's
/// implicit choice). Requires rank C < p.
Matrix attacker_projector(const Matrix& C, const TolerancePolicy& pol = {});

/// Certifies left-invertibility with respect to the aggregate input
/// (u, d) by sampling the augmented system pencil at seeded random points,
/// plus the class-specific structural conditions. Failures are reported in
/// the certificate, never thrown.
Certificate verify_allocation(const LtiSystem& sys, const AllocationDesign& design,
                              const TolerancePolicy& pol = {}, std::uint64_t seed = 20);

/// rank [zI - A, -B; C, D] == n + columns(B) at `count` seeded random z
/// (|z| = 2 for discrete, Re z in [1,3] for continuous). D may have zero
/// rows. This is the oracle side of the left-invertibility checks.
bool pencil_left_invertible(const Matrix& A, const Matrix& B, const Matrix& C,
                            const Matrix& D, TimeDomain domain,
                            const TolerancePolicy& pol = {}, std::uint64_t seed = 20,
                            int count = 20);

}  // namespace geoalloc
