#pragma once

#include "geoalloc/linalg.hpp"

#include <complex>
#include <vector>

namespace geoalloc {

struct SpecError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct SynthesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TimeDomain { discrete, continuous };

/// A conjugate-closed multiset of desired eigenvalues.
struct SpectrumSpec {
    std::vector<std::complex<double>> values;

    bool conjugate_closed(double tol = 1e-9) const;

    /// Uniformly spaced real values in (0.1, 0.6) for discrete time,
    /// (-5, -1) for continuous.
    static SpectrumSpec stable_default(int count, TimeDomain domain);

    bool all_stable(TimeDomain domain) const;
};

/// Unordered matching distance between two eigenvalue multisets (max over
/// the greedy closest pairing).
double eig_multiset_distance(std::vector<std::complex<double>> a,
                             std::vector<std::complex<double>> b);

std::vector<std::complex<double>> eigenvalues_of(const Matrix& A);

/// Output-injection gain L with the eigenvalue multiset of A + LC equal to
/// `spec` within 1e-6. Requires (C, A) observable.
Matrix place_poles(const Matrix& A, const Matrix& C, const SpectrumSpec& spec,
                   const TolerancePolicy& pol = {});

/// Small correction gain D (starting from zero) nudging the spectrum of
/// A + DC onto `spec`; useful when A is already close. Returns zero for
/// multisets with repeated values.
Matrix refine_injection(const Matrix& A, const Matrix& C, const SpectrumSpec& spec);

/// PBH tests.
bool is_observable(const Matrix& A, const Matrix& C, const TolerancePolicy& pol = {});
bool is_controllable(const Matrix& A, const Matrix& B, const TolerancePolicy& pol = {});

}  // namespace geoalloc
