#pragma once

#include "geoalloc/geometry.hpp"

#include <random>

namespace geoalloc::testing {

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = gauss(rng);
    return M;
}

inline Matrix random_orthogonal(std::mt19937_64& rng, int n) {
    const Matrix M = random_matrix(rng, n, n);
    return Eigen::HouseholderQR<Matrix>(M).householderQ();
}

inline Subspace random_subspace(std::mt19937_64& rng, int ambient, int dim) {
    return Subspace::from_span(random_matrix(rng, ambient, dim));
}

/// Keeps drawing (A, B, C) until the requested structure holds.
inline LtiSystem random_system(std::mt19937_64& rng, int n, int m, int p,
                               bool want_left_invertible = true,
                               TimeDomain domain = TimeDomain::discrete) {
    for (int tries = 0; tries < 100; ++tries) {
        LtiSystem sys;
        sys.A = random_matrix(rng, n, n);
        sys.B = random_matrix(rng, n, m);
        sys.C = random_matrix(rng, p, n);
        sys.time_domain = domain;
        if (!is_controllable(sys.A, sys.B) || !is_observable(sys.A, sys.C)) continue;
        if (want_left_invertible && !is_left_invertible(sys)) continue;
        return sys;
    }
    throw std::runtime_error("random_system failed to draw a valid instance");
}

/// Observable+controllable+left-invertible WOR instance (p > m, C epic).
inline LtiSystem random_wor_system(std::mt19937_64& rng, int n, int m, int p) {
    for (int tries = 0; tries < 100; ++tries) {
        LtiSystem sys = random_system(rng, n, m, p);
        const auto rep = classify_redundancy(sys);
        if (rep.klass == RedundancyClass::WOR && rep.left_invertible && rep.controllable &&
            rep.observable)
            return sys;
    }
    throw std::runtime_error("failed to draw a WOR instance");
}

/// SOR instance: rank C = m < p, built by lifting an m-output system.
inline LtiSystem random_sor_system(std::mt19937_64& rng, int n, int m, int p) {
    for (int tries = 0; tries < 100; ++tries) {
        LtiSystem sys;
        sys.A = random_matrix(rng, n, n);
        sys.B = random_matrix(rng, n, m);
        sys.C = random_matrix(rng, p, m) * random_matrix(rng, m, n);
        if (rank_tol(sys.C) != m) continue;
        const auto rep = classify_redundancy(sys);
        if (rep.klass == RedundancyClass::SOR && rep.left_invertible && rep.controllable &&
            rep.observable)
            return sys;
    }
    throw std::runtime_error("failed to draw an SOR instance");
}

/// Random real spectrum on a jittered grid: separation at least
/// 0.4 (hi - lo) / count, keeping eigenvalue sensitivities sane. Clusters
/// tighter than that put 1e-6 placement beyond double precision for any
/// algorithm.
inline SpectrumSpec jittered_spectrum(std::mt19937_64& rng, int count, double lo, double hi) {
    std::uniform_real_distribution<double> unif(0.2, 0.8);
    SpectrumSpec spec;
    for (int i = 0; i < count; ++i)
        spec.values.emplace_back(lo + (hi - lo) * (i + unif(rng)) / std::max(1, count), 0.0);
    return spec;
}

/// The worked 3x4 output map used across the SOR examples.
inline Matrix paper_sor_C() {
    Matrix C(3, 4);
    C << 1, 1, 0, 0,
         1, 0, 0, 0,
         2, 1, 0, 0;
    return C;
}

}  // namespace geoalloc::testing
