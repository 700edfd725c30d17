// Command-line frontend: analyze / design / verify / simulate over files.
// Exit codes: 0 success, 2 parse error, 3 class or precondition error,
// 4 verification failure.

#include "geoalloc/matrix_io.hpp"
#include "geoalloc/microgrid.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace geoalloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitClass = 3;
constexpr int kExitVerify = 4;

struct LoadedSystem {
    LtiSystem sys;
    std::optional<ScenarioConfig> scenario;  // present when loaded from a scenario file
};

DguParams dgu_from_json(const json& j, const DguParams& base = {}) {
    DguParams p = base;
    if (j.contains("Ct")) p.Ct = j["Ct"].get<double>();
    if (j.contains("Lt")) p.Lt = j["Lt"].get<double>();
    if (j.contains("Rt")) p.Rt = j["Rt"].get<double>();
    if (j.contains("Rij")) p.Rij = j["Rij"].get<double>();
    if (j.contains("kP")) p.kP = j["kP"].get<double>();
    if (j.contains("kI")) p.kI = j["kI"].get<double>();
    if (j.contains("Vref")) p.Vref = j["Vref"].get<double>();
    return p;
}

ScenarioConfig scenario_from_json(const json& j) {
    ScenarioConfig cfg = ScenarioConfig::defaults();
    if (j.contains("Ts")) cfg.Ts = j["Ts"].get<double>();
    if (j.contains("T_end")) cfg.T_end = j["T_end"].get<double>();
    if (j.contains("window")) cfg.r = j["window"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("disturbance")) {
        const auto mode = j["disturbance"].get<std::string>();
        if (mode == "off")
            cfg.disturbance = DisturbanceMode::off;
        else if (mode == "covert")
            cfg.disturbance = DisturbanceMode::covert;
        else
            throw std::invalid_argument("disturbance must be 'off' or 'covert'");
    }
    if (j.contains("covert_offset")) cfg.covert_offset = j["covert_offset"].get<double>();
    if (j.contains("covert_period")) cfg.covert_period = j["covert_period"].get<double>();
    if (j.contains("dgu1")) cfg.dgu1 = dgu_from_json(j["dgu1"]);
    if (j.contains("dgu2")) cfg.dgu2 = dgu_from_json(j["dgu2"]);
    if (j.contains("load_profile")) {
        cfg.load_profile.clear();
        for (const auto& step : j["load_profile"]) {
            LoadStep ls;
            ls.t = step["t"].get<double>();
            const auto& u = step["u"];
            ls.u = Vector(u.size());
            for (size_t i = 0; i < u.size(); ++i) ls.u(static_cast<int>(i)) = u[i].get<double>();
            cfg.load_profile.push_back(ls);
        }
    }
    return cfg;
}

json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return json::parse(is);
}

/// A system is either a named-block matrix file (A, B, C) or a scenario
/// JSON describing the two-unit microgrid (built and discretized here).
LoadedSystem load_system(const std::string& path, bool continuous) {
    LoadedSystem out;
    if (fs::path(path).extension() == ".json") {
        const ScenarioConfig cfg = scenario_from_json(read_json_file(path));
        const DguNetwork net = build_dgu_network(cfg.dgu1, cfg.dgu2);
        out.sys = discretize_zoh(net.sys, cfg.Ts);
        out.scenario = cfg;
        return out;
    }
    const auto blocks = read_named_matrices(path);
    for (const char* name : {"A", "B", "C"})
        if (!blocks.count(name))
            throw ParseError(std::string("missing block '") + name + "' in " + path, 0);
    out.sys.A = blocks.at("A");
    out.sys.B = blocks.at("B");
    out.sys.C = blocks.at("C");
    out.sys.time_domain = continuous ? TimeDomain::continuous : TimeDomain::discrete;
    out.sys.validate();
    return out;
}

json certificate_json(const Certificate& cert) {
    json j;
    j["pass"] = cert.pass();
    j["seed"] = cert.seed;
    j["checks"] = json::array();
    for (const auto& c : cert.checks)
        j["checks"].push_back({{"name", c.name}, {"residual", c.residual}, {"pass", c.pass}});
    return j;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << j.dump(2) << '\n';
}

SpectrumSpec parse_spectrum(const std::string& csv) {
    SpectrumSpec spec;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        spec.values.emplace_back(std::stod(tok), 0.0);
    }
    return spec;
}

int cmd_analyze(const std::string& input, bool continuous, const std::string& out,
                const TolerancePolicy& pol) {
    const LoadedSystem loaded = load_system(input, continuous);
    const RedundancyReport rep = classify_redundancy(loaded.sys, pol);
    json j;
    j["class"] = to_string(rep.klass);
    j["n"] = rep.n;
    j["m"] = rep.m;
    j["p"] = rep.p;
    j["rank_C"] = rep.rank_C;
    j["controllable"] = rep.controllable;
    j["observable"] = rep.observable;
    j["left_invertible"] = rep.left_invertible;
    if (rep.klass == RedundancyClass::WOR)
        j["dim_Sstar"] = sstar_inf(loaded.sys, pol).dim();
    if (out.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_json(out, j);
    return kExitOk;
}

int cmd_design(const std::string& input, bool continuous, const std::string& outdir,
               const std::string& spectra_bar, const std::string& spectra_flat,
               std::uint64_t seed, const TolerancePolicy& pol) {
    const LoadedSystem loaded = load_system(input, continuous);
    const LtiSystem& sys = loaded.sys;
    const RedundancyReport rep = classify_redundancy(sys, pol);

    AllocationDesign design;
    if (rep.klass == RedundancyClass::SOR) {
        design = design_D_sor(sys.C, pol);
    } else if (rep.klass == RedundancyClass::WOR) {
        const Subspace Sstar = sstar_inf(sys, pol);
        SpectrumSpec bar = spectra_bar.empty()
                               ? SpectrumSpec::stable_default(sys.n() - Sstar.dim(), sys.time_domain)
                               : parse_spectrum(spectra_bar);
        SpectrumSpec flat = spectra_flat.empty()
                                ? SpectrumSpec::stable_default(Sstar.dim(), sys.time_domain)
                                : parse_spectrum(spectra_flat);
        const Matrix L = friend_of_sstar(sys, Sstar, bar, flat, pol);
        const WorDecomposition dec = decompose_wor(sys, L, Sstar, pol);
        design = design_D_wor(sys, dec, pol);
    } else if (rep.klass == RedundancyClass::GOR) {
        std::cerr << "class GOR is analyzed but not auto-designed: split the output map into an "
                     "epic part (WOR treatment) and a complement of its image (SOR treatment), "
                     "then design each part.\n";
        return kExitClass;
    } else {
        std::cerr << "system is not output-redundant (p <= m): no disturbance subspace exists\n";
        return kExitClass;
    }

    design.certificates = verify_allocation(sys, design, pol, seed);

    fs::create_directories(outdir);
    NamedMatrices blocks;
    blocks.emplace_back("D", design.D);
    if (design.kind == DesignKind::WOR) blocks.emplace_back("L", design.L);
    if (design.kind == DesignKind::SOR) blocks.emplace_back("Q", design.Q);
    write_named_matrices((fs::path(outdir) / "design.txt").string(), blocks);
    write_json((fs::path(outdir) / "certificate.json").string(),
               certificate_json(design.certificates));
    std::cout << (design.certificates.pass() ? "design verified" : "design FAILED verification")
              << ", q = " << design.q() << '\n';
    return design.certificates.pass() ? kExitOk : kExitVerify;
}

AllocationDesign load_design(const LtiSystem& sys, const std::string& design_path,
                             const TolerancePolicy& pol) {
    const auto blocks = read_named_matrices(design_path);
    if (!blocks.count("D")) throw ParseError("design file lacks a D block", 0);
    AllocationDesign design;
    design.D = blocks.at("D");
    if (blocks.count("L")) {
        design.kind = DesignKind::WOR;
        design.L = blocks.at("L");
    } else {
        design.kind = DesignKind::SOR;
        design.Q = blocks.count("Q") ? blocks.at("Q")
                                     : sor_design_with_D(sys.C, design.D, pol).Q;
    }
    return design;
}

int cmd_verify(const std::string& input, bool continuous, const std::string& design_path,
               const std::string& out, std::uint64_t seed, const TolerancePolicy& pol) {
    const LoadedSystem loaded = load_system(input, continuous);
    const AllocationDesign design = load_design(loaded.sys, design_path, pol);
    const Certificate cert = verify_allocation(loaded.sys, design, pol, seed);
    const json j = certificate_json(cert);
    if (out.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_json(out, j);
    return cert.pass() ? kExitOk : kExitVerify;
}

int run_one_scenario(const ScenarioConfig& cfg, const std::string& design_path,
                     const fs::path& outdir, const TolerancePolicy& pol) {
    const DguNetwork net = build_dgu_network(cfg.dgu1, cfg.dgu2);
    const LtiSystem sys = discretize_zoh(net.sys, cfg.Ts);
    const AllocationDesign design = load_design(sys, design_path, pol);
    if (design.kind != DesignKind::WOR) {
        std::cerr << "microgrid scenarios need a WOR design (L block present)\n";
        return kExitClass;
    }
    const Certificate cert = verify_allocation(sys, design, pol, cfg.seed);
    if (!cert.pass()) {
        std::cerr << "design failed verification; regenerate it with `geoalloc design`\n";
        return kExitVerify;
    }
    AllocationDesign verified = design;
    verified.certificates = cert;
    const WorDecomposition dec = decompose_wor(sys, design.L, sstar_inf(sys, pol), pol);
    const Trace tr = run_scenario(cfg, verified, dec);

    fs::create_directories(outdir);
    write_trace_csv((outdir / "trace.csv").string(), tr);
    json metrics;
    metrics["steps"] = tr.t.size();
    metrics["defender_max_err"] = tr.defender_max_err;
    metrics["attacker_steadystate_err"] = tr.attacker_steadystate_err;
    metrics["metric_begin"] = tr.metric_begin;
    metrics["metric_end"] = tr.metric_end;
    write_json((outdir / "metrics.json").string(), metrics);
    std::cout << "trace written to " << (outdir / "trace.csv").string()
              << "  defender_max_err=" << tr.defender_max_err
              << "  attacker_steadystate_err=" << tr.attacker_steadystate_err << '\n';
    return kExitOk;
}

int cmd_simulate(const std::string& scenario_path, const std::string& design_path,
                 const std::string& outdir, int jobs, const TolerancePolicy& pol) {
    const json j = read_json_file(scenario_path);
    std::string design = design_path;
    if (design.empty() && j.is_object() && j.contains("design"))
        design = j["design"].get<std::string>();
    if (design.empty()) {
        std::cerr << "no design given: pass --design or a \"design\" path in the scenario\n";
        return kExitClass;
    }

    if (!j.is_array())
        return run_one_scenario(scenario_from_json(j), design, outdir, pol);

    // Scenario grid: one subdirectory per entry, optionally in parallel.
    std::vector<ScenarioConfig> grid;
    for (const auto& item : j) grid.push_back(scenario_from_json(item));
    std::vector<int> codes(grid.size(), kExitOk);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1)) {
            try {
                codes[i] = run_one_scenario(grid[i], design,
                                            fs::path(outdir) / ("scenario_" + std::to_string(i)),
                                            pol);
            } catch (const std::exception& e) {
                std::cerr << "scenario " << i << ": " << e.what() << '\n';
                codes[i] = kExitVerify;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (int c : codes)
        if (c != kExitOk) return c;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geometric output-allocation toolbox for LTI systems"};
    app.require_subcommand(1);

    std::string input, out, design_path, spectra_bar, spectra_flat;
    bool continuous = false;
    std::uint64_t seed = 20;
    int jobs = 1;
    const TolerancePolicy pol = TolerancePolicy::from_env();

    auto* analyze = app.add_subcommand("analyze", "classify redundancy and report structure");
    analyze->add_option("system", input, "matrix block file or scenario JSON")->required();
    analyze->add_flag("--continuous", continuous, "treat the system as continuous-time");
    analyze->add_option("-o,--out", out, "JSON report path (stdout if omitted)");

    auto* design = app.add_subcommand("design", "synthesize the allocation (D, and L for WOR)");
    design->add_option("system", input, "matrix block file or scenario JSON")->required();
    design->add_flag("--continuous", continuous, "treat the system as continuous-time");
    design->add_option("-o,--out", out, "output directory")->required();
    design->add_option("--spectra-bar", spectra_bar, "comma-separated quotient spectrum");
    design->add_option("--spectra-flat", spectra_flat, "comma-separated restriction spectrum");
    design->add_option("--seed", seed, "pencil sample seed");

    auto* verify = app.add_subcommand("verify", "re-certify an existing design");
    verify->add_option("system", input, "matrix block file or scenario JSON")->required();
    verify->add_flag("--continuous", continuous, "treat the system as continuous-time");
    verify->add_option("--design", design_path, "design matrix block file")->required();
    verify->add_option("-o,--out", out, "certificate JSON path (stdout if omitted)");
    verify->add_option("--seed", seed, "pencil sample seed");

    auto* simulate = app.add_subcommand("simulate", "run microgrid scenarios end to end");
    simulate->add_option("scenario", input, "scenario JSON (object or array)")->required();
    simulate->add_option("--design", design_path, "design matrix block file");
    simulate->add_option("-o,--out", out, "output directory")->required();
    simulate->add_option("--jobs", jobs, "concurrent scenarios for a grid");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) return cmd_analyze(input, continuous, out, pol);
        if (design->parsed())
            return cmd_design(input, continuous, out, spectra_bar, spectra_flat, seed, pol);
        if (verify->parsed()) return cmd_verify(input, continuous, design_path, out, seed, pol);
        if (simulate->parsed()) return cmd_simulate(input, design_path, out, jobs, pol);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const ClassError& e) {
        std::cerr << "class error: " << e.what() << '\n';
        return kExitClass;
    } catch (const DimensionError& e) {
        std::cerr << "precondition error: " << e.what() << '\n';
        return kExitClass;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitClass;
    }
    return kExitOk;
}
