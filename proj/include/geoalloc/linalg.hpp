#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace geoalloc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ContainmentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Rank decisions repo-wide: a singular value counts when it exceeds
/// max(rel * sigma_max, floor).
struct TolerancePolicy {
    double rel = 1e-9;
    double floor = 1e-12;

    double threshold(double sigma_max) const {
        return std::max(rel * sigma_max, floor);
    }

    /// Reads GEOALLOC_TOL (relative part) if set, defaults otherwise.
    static TolerancePolicy from_env();
};

/// A subspace of R^n stored as an orthonormal basis matrix. The zero
/// subspace has a basis with zero columns. The basis matrix doubles as the
/// matrix representation of the subspace's insertion map.
class Subspace {
  public:
    /// Zero subspace of the given ambient dimension.
    explicit Subspace(int ambient_dim);

    /// Orthonormalizes the columns of `span` (via SVD) and keeps the
    /// directions above the rank threshold.
    static Subspace from_span(const Matrix& span, const TolerancePolicy& pol = {});

    /// Adopts `basis` as-is; caller guarantees orthonormal columns.
    static Subspace from_orthonormal(Matrix basis, double tol);

    static Subspace full(int ambient_dim);

    int ambient() const { return ambient_; }
    int dim() const { return static_cast<int>(basis_.cols()); }
    bool is_zero() const { return basis_.cols() == 0; }
    const Matrix& basis() const { return basis_; }
    double tol() const { return tol_; }

    /// Containment of a vector / another subspace, judged by projection
    /// residual against the construction tolerance.
    bool contains(const Vector& v) const;
    bool contains(const Subspace& other) const;

    /// Orthogonal projector onto the subspace (n x n).
    Matrix projector() const;

  private:
    int ambient_;
    Matrix basis_;
    double tol_;
};

int rank_tol(const Matrix& M, const TolerancePolicy& pol = {});
int rank_tol_complex(const ComplexMatrix& M, const TolerancePolicy& pol = {});

/// Orthonormal basis of {v : Mv = 0}; ambient = cols of M.
Subspace kernel(const Matrix& M, const TolerancePolicy& pol = {});

/// Orthonormal basis of the column space; ambient = rows of M.
Subspace image(const Matrix& M, const TolerancePolicy& pol = {});

Subspace intersect(const Subspace& a, const Subspace& b);
Subspace subspace_sum(const Subspace& a, const Subspace& b);

/// {x : Ax in S}; ambient = cols of A.
Subspace preimage(const Matrix& A, const Subspace& S, const TolerancePolicy& pol = {});

/// Orthogonal complement of K within W (requires K inside W):
/// W = K (+) result with the two summands orthogonal.
Subspace complement_within(const Subspace& K, const Subspace& W);

/// Canonical projection modulo S as an (n-s) x n matrix with orthonormal
/// rows and P * basis(S) = 0.
Matrix quotient_projection(const Subspace& S);

/// Largest-principal-angle distance (operator norm of the projector
/// difference); 0 iff the spans coincide.
double subspace_gap(const Subspace& a, const Subspace& b);

/// Projector with image `onto` and kernel `along`; the two must be
/// complementary in the ambient space.
Matrix oblique_projector(const Subspace& onto, const Subspace& along,
                         const TolerancePolicy& pol = {});

bool all_finite(const Matrix& M);

}  // namespace geoalloc
