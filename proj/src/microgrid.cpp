#include "geoalloc/microgrid.hpp"

#include "geoalloc/matrix_io.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace geoalloc {

void DguParams::validate() const {
    if (Ct <= 0 || Lt <= 0 || Rt <= 0 || Rij <= 0 || kP <= 0 || kI <= 0 || Vref <= 0)
        throw std::invalid_argument("DGU parameters must be strictly positive");
}

DguNetwork build_dgu_network(const DguParams& p1, const DguParams& p2) {
    p1.validate();
    p2.validate();
    DguNetwork net;
    Matrix A = Matrix::Zero(6, 6);
    Matrix B = Matrix::Zero(6, 2);
    Vector g = Vector::Zero(6);

    const DguParams prm[2] = {p1, p2};
    for (int i = 0; i < 2; ++i) {
        const auto& q = prm[i];
        const int o = 3 * i;        // offset of (V, It, zeta) for this unit
        const int on = 3 * (1 - i); // neighbor's block
        // C V' = It - IL + (Vj - Vi)/Rij
        A(o + 0, o + 0) = -1.0 / (q.Rij * q.Ct);
        A(o + 0, o + 1) = 1.0 / q.Ct;
        A(o + 0, on + 0) = 1.0 / (q.Rij * q.Ct);
        B(o + 0, i) = -1.0 / q.Ct;
        // L It' = Vt - V - Rt It with Vt = kP (Vref - V) + kI zeta
        A(o + 1, o + 0) = -(1.0 + q.kP) / q.Lt;
        A(o + 1, o + 1) = -q.Rt / q.Lt;
        A(o + 1, o + 2) = q.kI / q.Lt;
        g(o + 1) = q.kP * q.Vref / q.Lt;
        // zeta' = Vref - V
        A(o + 2, o + 0) = -1.0;
        g(o + 2) = q.Vref;
    }
    net.sys.A = A;
    net.sys.B = B;
    net.sys.C = Matrix::Identity(6, 6);
    net.sys.time_domain = TimeDomain::continuous;
    net.affine = g;
    return net;
}

LtiSystem discretize_zoh(const LtiSystem& sys, double Ts) {
    sys.validate();
    if (Ts <= 0) throw std::invalid_argument("Ts must be positive");
    const int n = sys.n();
    const int m = sys.m();
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = sys.A * Ts;
    aug.topRightCorner(n, m) = sys.B * Ts;
    const Matrix e = aug.exp();
    LtiSystem d;
    d.A = e.topLeftCorner(n, n);
    d.B = e.topRightCorner(n, m);
    d.C = sys.C;
    d.time_domain = TimeDomain::discrete;
    return d;
}

Vector discretize_affine(const Matrix& A, const Vector& g, double Ts) {
    const int n = static_cast<int>(A.rows());
    Matrix aug = Matrix::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = A * Ts;
    aug.topRightCorner(n, 1) = g * Ts;
    return aug.exp().topRightCorner(n, 1);
}

CovertStep covert_disturbance_step(const Vector& xcheck, const Vector& u_check,
                                   const Vector& y, const Matrix& D,
                                   const LtiSystem& plant_d, const Vector& affine_d) {
    CovertStep step;
    step.d = D.completeOrthogonalDecomposition().solve(plant_d.C * xcheck - y);
    step.xcheck_next = plant_d.A * xcheck + plant_d.B * u_check;
    if (affine_d.size()) step.xcheck_next += affine_d;
    return step;
}

void ScenarioConfig::validate() const {
    if (Ts <= 0) throw std::invalid_argument("Ts must be positive");
    if (T_end < 100.0 * Ts) throw std::invalid_argument("T_end must cover at least 100 samples");
    dgu1.validate();
    dgu2.validate();
    if (r < 1) throw std::invalid_argument("window r must be >= 1");
}

Vector ScenarioConfig::load_at(double t) const {
    Vector u = Vector::Zero(2);
    for (const auto& step : load_profile)
        if (step.t <= t + 1e-12) u = step.u;
    return u;
}

ScenarioConfig ScenarioConfig::defaults() {
    ScenarioConfig cfg;
    auto amps = [](double a, double b) {
        Vector v(2);
        v << a, b;
        return v;
    };
    cfg.load_profile = {{0.0, amps(5.0, 5.0)}, {5.0, amps(15.0, 10.0)}, {12.0, amps(8.0, 15.0)}};
    return cfg;
}

namespace {

// Metrics exclude the estimator tail (last r steps reuse window-interior
// solutions) and everything before the midpoint; "steady state" is the
// last 50% of usable samples.
void fill_metrics(Trace& tr, int r) {
    const int N = static_cast<int>(tr.t.size());
    tr.metric_begin = N / 2;
    tr.metric_end = std::max(tr.metric_begin + 1, N - r);
    double def = 0.0, att = 0.0;
    for (int k = tr.metric_begin; k < tr.metric_end; ++k) {
        def = std::max(def, (tr.uhat_defender.row(k) - tr.u.row(k)).cwiseAbs().maxCoeff());
        att = std::max(att, (tr.uhat_attacker.row(k) - tr.u.row(k)).cwiseAbs().maxCoeff());
    }
    tr.defender_max_err = def;
    tr.attacker_steadystate_err = att;
}

}  // namespace

Trace run_scenario(const ScenarioConfig& cfg, const AllocationDesign& design,
                   const WorDecomposition& dec) {
    cfg.validate();
    const DguNetwork net = build_dgu_network(cfg.dgu1, cfg.dgu2);
    const LtiSystem plant = discretize_zoh(net.sys, cfg.Ts);
    const Vector affine_d = discretize_affine(net.sys.A, net.affine, cfg.Ts);

    const Certificate cert = verify_allocation(plant, design, {}, design.certificates.seed
                                                                     ? design.certificates.seed
                                                                     : 20);
    if (!cert.pass())
        throw std::runtime_error("design failed verification; run the design step first");

    const int N = static_cast<int>(std::llround(cfg.T_end / cfg.Ts));
    const int n = plant.n(), m = plant.m(), p = plant.p();
    const int q = design.q();

    Trace tr;
    tr.t = Vector::LinSpaced(N, 0.0, (N - 1) * cfg.Ts);
    tr.x = Matrix::Zero(N, n);
    tr.u = Matrix::Zero(N, m);
    tr.d = Matrix::Zero(N, q);
    tr.y = Matrix::Zero(N, p);
    tr.yd = Matrix::Zero(N, p);

    Vector x = Vector::Zero(n);
    Vector xcheck = Vector::Zero(n);
    for (int k = 0; k < N; ++k) {
        const double t = tr.t(k);
        const Vector u = cfg.load_at(t);
        const Vector y = plant.C * x;
        Vector d = Vector::Zero(q);
        if (cfg.disturbance == DisturbanceMode::covert) {
            // Fictitious load: true load plus a square-wave offset so the
            // shadow mismatch never settles out.
            const double phase = std::fmod(t, cfg.covert_period);
            const double sign = phase < 0.5 * cfg.covert_period ? 1.0 : -1.0;
            const Vector ucheck = u.array() + sign * cfg.covert_offset;
            const CovertStep step = covert_disturbance_step(xcheck, ucheck, y, design.D, plant, affine_d);
            d = step.d;
            xcheck = step.xcheck_next;
        }
        tr.x.row(k) = x.transpose();
        tr.u.row(k) = u.transpose();
        tr.d.row(k) = d.transpose();
        tr.y.row(k) = y.transpose();
        tr.yd.row(k) = (y + design.D * d).transpose();
        x = plant.A * x + plant.B * u + affine_d;
    }

    const WorReconstruction def =
        wor_reconstruct(plant, design, dec, tr.yd, cfg.r, WorDefenderPath::full_system, affine_d);

    // The eavesdropper also knows the reference injection (the published
    // setpoints) and removes its response before inverting.
    Matrix yd_dev = tr.yd;
    Vector xg = Vector::Zero(n);
    for (int k = 0; k < N; ++k) {
        yd_dev.row(k) -= (plant.C * xg).transpose();
        xg = plant.A * xg + affine_d;
    }
    const EstimatorReport att = attacker_estimate(plant, yd_dev, AttackerMode::direct_ls, cfg.r);

    tr.valid_steps = static_cast<int>(def.u.uhat.rows());
    tr.uhat_defender = Matrix::Zero(N, m);
    tr.uhat_defender.topRows(def.u.uhat.rows()) = def.u.uhat;
    tr.uhat_attacker = Matrix::Zero(N, m);
    tr.uhat_attacker.topRows(att.uhat.rows()) = att.uhat;
    // Tail rows: hold the last available estimate (metrics never read them).
    for (int k = static_cast<int>(def.u.uhat.rows()); k < N; ++k)
        tr.uhat_defender.row(k) = def.u.uhat.row(def.u.uhat.rows() - 1);
    for (int k = tr.valid_steps; k < N; ++k)
        tr.uhat_attacker.row(k) = att.uhat.row(att.uhat.rows() - 1);

    fill_metrics(tr, std::max(cfg.r, N - static_cast<int>(def.u.uhat.rows())));
    return tr;
}

void write_trace_csv(const std::string& path, const Trace& tr) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    const int N = static_cast<int>(tr.t.size());
    os << "t";
    for (int j = 1; j <= tr.x.cols(); ++j) os << ",x" << j;
    for (int j = 1; j <= tr.u.cols(); ++j) os << ",u" << j;
    for (int j = 1; j <= tr.d.cols(); ++j) os << ",d" << j;
    for (int j = 1; j <= tr.yd.cols(); ++j) os << ",yd" << j;
    for (int j = 1; j <= tr.uhat_defender.cols(); ++j) os << ",uhat" << j;
    for (int j = 1; j <= tr.uhat_attacker.cols(); ++j) os << ",uhat_a" << j;
    os << '\n';
    for (int k = 0; k < N; ++k) {
        os << format_double(tr.t(k));
        auto emit = [&](const Matrix& M) {
            for (int j = 0; j < M.cols(); ++j) os << ',' << format_double(M(k, j));
        };
        emit(tr.x);
        emit(tr.u);
        emit(tr.d);
        emit(tr.yd);
        emit(tr.uhat_defender);
        emit(tr.uhat_attacker);
        os << '\n';
    }
}

}  // namespace geoalloc
