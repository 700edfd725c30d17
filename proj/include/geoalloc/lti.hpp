#pragma once

#include "geoalloc/linalg.hpp"
#include "geoalloc/spectrum.hpp"

#include <string>

namespace geoalloc {

/// x+ = Ax + Bu, y = Cx with the successor operator fixed by time_domain.
struct LtiSystem {
    Matrix A;
    Matrix B;
    Matrix C;
    TimeDomain time_domain = TimeDomain::discrete;

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(C.rows()); }

    void validate() const {
        if (A.rows() < 1 || A.rows() != A.cols()) throw DimensionError("A must be square, n >= 1");
        if (B.rows() != A.rows() || B.cols() < 1) throw DimensionError("B shape mismatch");
        if (C.cols() != A.rows() || C.rows() < 1) throw DimensionError("C shape mismatch");
        if (!all_finite(A) || !all_finite(B) || !all_finite(C))
            throw std::invalid_argument("system matrices must be finite");
    }
};

enum class RedundancyClass { NOT_OR, SOR, WOR, GOR };

std::string to_string(RedundancyClass k);

struct RedundancyReport {
    RedundancyClass klass = RedundancyClass::NOT_OR;
    int n = 0, m = 0, p = 0, rank_C = 0;
    bool controllable = false;
    bool observable = false;
    bool left_invertible = false;
};

}  // namespace geoalloc
