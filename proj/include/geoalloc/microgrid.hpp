#pragma once

#include "geoalloc/inversion.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace geoalloc {

/// RLC filter, line coupling and PI loop parameters of one distributed
/// generation unit.
struct DguParams {
    double Ct = 2.2e-3;  // filter capacitance, F
    double Lt = 1.8e-3;  // filter inductance, H
    double Rt = 0.2;     // filter resistance, Ohm
    double Rij = 0.1;    // line resistance to the neighbor, Ohm
    double kP = 1.0;     // PI proportional gain
    double kI = 10.0;    // PI integral gain
    double Vref = 48.0;  // voltage reference, V

    void validate() const;
};

/// Closed-loop continuous-time network plus the constant drive produced by
/// the voltage references: xdot = A x + B u + affine.
struct DguNetwork {
    LtiSystem sys;  // continuous; state (V1, It1, z1, V2, It2, z2), u = load currents
    Vector affine;
};

DguNetwork build_dgu_network(const DguParams& p1, const DguParams& p2);

/// Exact zero-order hold: A_d = exp(A Ts), B_d = (int_0^Ts exp(A tau) dtau) B.
LtiSystem discretize_zoh(const LtiSystem& sys, double Ts);
Vector discretize_affine(const Matrix& A, const Vector& g, double Ts);

/// One step of the covert generator: d is emitted from the current shadow
/// state, then the shadow advances with the fictitious input (and the same
/// constant drive as the plant).
struct CovertStep {
    Vector d;
    Vector xcheck_next;
};
CovertStep covert_disturbance_step(const Vector& xcheck, const Vector& u_check,
                                   const Vector& y, const Matrix& D,
                                   const LtiSystem& plant_d, const Vector& affine_d);

struct LoadStep {
    double t = 0.0;
    Vector u;
};

enum class DisturbanceMode { off, covert };

struct ScenarioConfig {
    double Ts = 0.01;
    double T_end = 20.0;
    std::vector<LoadStep> load_profile;  // piecewise-constant, sorted by t
    DisturbanceMode disturbance = DisturbanceMode::off;
    double covert_offset = 8.0;   // amps added to u to form the fictitious load
    double covert_period = 5.0;   // seconds; the offset sign toggles every half period
    int r = 7;                    // inversion window
    std::uint64_t seed = 1;
    DguParams dgu1, dgu2;

    void validate() const;
    Vector load_at(double t) const;
    static ScenarioConfig defaults();
};

struct Trace {
    Vector t;
    Matrix x, u, d, y, yd;
    Matrix uhat_defender, uhat_attacker;  // padded to the grid length
    int valid_steps = 0;                  // estimates beyond this index reuse the last window
    double defender_max_err = 0.0;        // max per-step error over the metric range
    double attacker_steadystate_err = 0.0;
    int metric_begin = 0, metric_end = 0;  // [begin, end) range used for both metrics
};

/// End-to-end run: plant + covert generator + WOR defender + direct-LS
/// eavesdropper. The design must pass verify_allocation for the
/// discretized network; otherwise the run is refused.
Trace run_scenario(const ScenarioConfig& cfg, const AllocationDesign& design,
                   const WorDecomposition& dec);

void write_trace_csv(const std::string& path, const Trace& trace);

}  // namespace geoalloc
