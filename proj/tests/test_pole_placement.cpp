#include "geoalloc/spectrum.hpp"

#include "doctest.h"
#include "test_support.hpp"

using namespace geoalloc;
using geoalloc::testing::random_matrix;

namespace {

SpectrumSpec spec_of(std::initializer_list<std::complex<double>> vals) {
    SpectrumSpec s;
    s.values = vals;
    return s;
}

}  // namespace

TEST_CASE("double integrator: gain matches the characteristic-polynomial solution") {
    Matrix A(2, 2), C(1, 2);
    A << 0, 1, 0, 0;
    C << 1, 0;
    // A + LC = [l1 1; l2 0] has polynomial s^2 - l1 s - l2; matching
    // (s+1)(s+2) = s^2 + 3s + 2 gives L = (-3, -2).
    const Matrix L = place_poles(A, C, spec_of({-1.0, -2.0}));
    CHECK(std::abs(L(0, 0) + 3.0) < 1e-8);
    CHECK(std::abs(L(1, 0) + 2.0) < 1e-8);
}

TEST_CASE("spectrum already in place is accepted") {
    Matrix A(2, 2), C(1, 2);
    A << -1, 0, 0, -2;
    C << 1, 1;
    const Matrix L = place_poles(A, C, spec_of({-1.0, -2.0}));
    CHECK(eig_multiset_distance(eigenvalues_of(A + L * C), {{-1.0, 0.0}, {-2.0, 0.0}}) < 1e-6);
}

TEST_CASE("random observable pairs hit the requested multiset") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    int done = 0;
    while (done < 100) {
        const int n = 2 + static_cast<int>(unif(rng) * 5);  // n <= 6
        const int p = 1 + static_cast<int>(unif(rng) * 2);
        const Matrix A = random_matrix(rng, n, n);
        const Matrix C = random_matrix(rng, p, n);
        if (!is_observable(A, C)) continue;
        SpectrumSpec spec;
        int left = n;
        while (left > 0) {
            if (left >= 2 && unif(rng) < 0.4) {
                const double re = -unif(rng) - 0.2, im = unif(rng) + 0.1;
                spec.values.emplace_back(re, im);
                spec.values.emplace_back(re, -im);
                left -= 2;
            } else {
                spec.values.emplace_back(-unif(rng) * 2.0 - 0.1, 0.0);
                left -= 1;
            }
        }
        const Matrix L = place_poles(A, C, spec);
        CHECK(eig_multiset_distance(eigenvalues_of(A + L * C), spec.values) < 1e-6);
        ++done;
    }
}

TEST_CASE("repeated eigenvalues are placed (annihilation oracle)") {
    // A triple pole through a single output is necessarily defective, so a
    // raw eigensolver scatters around it; (Acl + 0.5 I)^3 = 0 is the sound
    // check, with the characteristic polynomial as the independent oracle.
    Matrix A(3, 3), C(1, 3);
    A << 0, 1, 0, 0, 0, 1, 0, 0, 0;
    C << 1, 0, 0;
    const Matrix L = place_poles(A, C, spec_of({-0.5, -0.5, -0.5}));
    const Matrix Acl = A + L * C;
    const Matrix F = Acl + 0.5 * Matrix::Identity(3, 3);
    CHECK((F * F * F).norm() / std::pow(std::max(1.0, F.norm()), 3) < 1e-8);
    // The multiset still agrees at the eigensolver's defective-cluster
    // resolution.
    CHECK(eig_multiset_distance(eigenvalues_of(Acl),
                                {{-0.5, 0.0}, {-0.5, 0.0}, {-0.5, 0.0}}) < 1e-4);
}

TEST_CASE("unobservable pairs and malformed spectra are rejected") {
    Matrix A(2, 2), C(1, 2);
    A << 1, 0, 0, 2;
    C << 1, 0;  // second mode invisible
    CHECK_THROWS_AS(place_poles(A, C, spec_of({-1.0, -2.0})), SynthesisError);

    Matrix Cgood(1, 2);
    Cgood << 1, 1;
    CHECK_THROWS_AS(place_poles(A, Cgood, spec_of({{-1.0, 0.5}, {-2.0, 0.0}})), SpecError);
    CHECK_THROWS_AS(place_poles(A, Cgood, spec_of({-1.0})), SpecError);
}

TEST_CASE("default stable spectra respect the time domain") {
    CHECK(SpectrumSpec::stable_default(4, TimeDomain::discrete).all_stable(TimeDomain::discrete));
    CHECK(SpectrumSpec::stable_default(4, TimeDomain::continuous).all_stable(TimeDomain::continuous));
    CHECK_FALSE(SpectrumSpec::stable_default(3, TimeDomain::continuous).all_stable(TimeDomain::discrete));
}
