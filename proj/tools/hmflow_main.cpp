// Command-line front end: flow runs, constant tables, verification suites,
// and the exact contracting-sphere comparison.
//
// Exit status: 0 success, 1 failed verification checks, 2 step/solver
// failure, 3 configuration error.

#include <CLI11.hpp>

#include "hmflow/constants.hpp"
#include "hmflow/flow.hpp"
#include "hmflow/geometry.hpp"
#include "hmflow/verify.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace hmflow;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kNumericalFailure = 2;
constexpr int kConfigError = 3;

struct RunCli {
    int n = 2, m = 1;
    double beta = 2.0;
    std::string init = "sphere:1.0";
    int N = 256;
    double t_end = 0.0;
    double cfl = 0.2;
    double cadence = 0.1;
    double fixed_dt = 0.0;
    double stop_q_defect = 0.0;
    int snapshot_stride = 0;
    bool no_volume_preserving = false;
    bool volume_projection = false;
    bool no_pinching_check = false;
    bool force = false;
    std::string out_dir = "out";
    std::uint64_t seed = 42;
};

RunConfig to_run_config(const RunCli& c) {
    RunConfig cfg;
    cfg.params = {c.n, c.m, c.beta};
    cfg.N = c.N;
    cfg.t_end = c.t_end;
    cfg.cfl = c.cfl;
    cfg.cadence = c.cadence;
    cfg.fixed_dt = c.fixed_dt;
    cfg.stop_q_defect = c.stop_q_defect;
    cfg.snapshot_stride = c.snapshot_stride;
    cfg.volume_preserving = !c.no_volume_preserving;
    cfg.volume_projection = c.volume_projection;
    cfg.check_initial_pinching = !c.no_pinching_check;
    cfg.out_dir = c.out_dir;
    cfg.seed = c.seed;

    const auto colon = c.init.find(':');
    const std::string kind = c.init.substr(0, colon);
    const std::string args =
        colon == std::string::npos ? "" : c.init.substr(colon + 1);
    if (kind == "sphere") {
        cfg.init = RunConfig::Init::Sphere;
        cfg.radius = args.empty() ? 1.0 : std::stod(args);
    } else if (kind == "ellipsoid") {
        cfg.init = RunConfig::Init::Ellipsoid;
        const auto comma = args.find(',');
        if (comma == std::string::npos)
            throw std::domain_error("ellipsoid init needs a,b");
        cfg.a = std::stod(args.substr(0, comma));
        cfg.b = std::stod(args.substr(comma + 1));
    } else if (kind == "file") {
        cfg.init = RunConfig::Init::File;
        cfg.init_file = args;
    } else {
        throw std::domain_error("unknown init kind: " + kind +
                                " (expected sphere:R | ellipsoid:a,b | "
                                "file:path)");
    }
    return cfg;
}

int cmd_run(const RunCli& cli) {
    RunConfig cfg = to_run_config(cli);
    if (!cfg.out_dir.empty()) {
        if (fs::exists(cfg.out_dir) && !cli.force) {
            std::cerr << "error: output directory '" << cfg.out_dir
                      << "' exists (pass --force to reuse)\n";
            return kConfigError;
        }
        fs::create_directories(cfg.out_dir);
    }
    cfg.validate();

    const RunResult res = run(cfg);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

    const auto& rec0 = res.records.front();
    const auto& rec1 = res.records.back();
    double drift = 0.0;
    for (const auto& r : res.records)
        drift = std::max(drift, std::abs(r.V - rec0.V) / rec0.V);
    const auto qmon = monitor_q_min(res.records, res.final_state.grid->dtheta);
    const auto bounds = monitor_bounds(res.records);
    const auto rate = fit_convergence_rate(
        res.records, res.pinching ? &*res.pinching : nullptr);

    std::printf("records = %zu\n", res.records.size());
    std::printf("t_final = %.17g\n", rec1.t);
    std::printf("volume_drift_rel = %.3e\n", drift);
    std::printf("q_min_final = %.17g\n", rec1.q_min);
    std::printf("q_defect_final = %.3e\n", rec1.q_defect);
    std::printf("q_min_violations = %d (tol_disc = %.3e)\n", qmon.violations,
                qmon.tol_disc);
    std::printf("inf_h = %.6g  sup_Hm = %.6g  rho in [%.6g, -]  D sup %.6g\n",
                bounds.inf_h, bounds.sup_Hm_max, bounds.inf_rho, bounds.sup_D);
    std::printf("axis_drift = %.3e\n", bounds.axis_drift);
    if (rate.applicable)
        std::printf("q_defect_rate = %.6g (r^2 = %.4f)\n", rate.slope,
                    rate.r_squared);
    if (res.pinching)
        std::printf("C_p = %.6g  initial_q_min = %.6g  pinched = %s\n",
                    res.pinching->C_p, res.initial_q_min,
                    res.initial_pinching_ok ? "yes" : "no");
    if (res.stopped_on_q_defect)
        std::printf("stopped early: q_defect below %.3e\n", cfg.stop_q_defect);

    if (res.failed) {
        std::cerr << "error: " << res.failure << "\n";
        return kNumericalFailure;
    }
    return kOk;
}

int cmd_constants(int n, int m, double beta, const std::string& out_file,
                  std::uint64_t seed) {
    if (!(beta > 1.0 / m)) {
        std::cerr << "error: need beta > 1/m for the constants pipeline\n";
        return kConfigError;
    }
    FlowParams p{n, m, beta};
    p.validate();
    ConstantsOptions opt;
    opt.seed = seed;
    const PinchingReport rep = compute_C_p(p, opt);
    const std::string text = serialize(rep);
    std::fputs(text.c_str(), stdout);
    if (!out_file.empty()) {
        std::ofstream f(out_file);
        if (!f) {
            std::cerr << "error: cannot write " << out_file << "\n";
            return kConfigError;
        }
        f << text;
    }
    return kOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
    const auto results = run_verify_suite(suite, seed);
    int failures = 0;
    std::printf("suite,check,status,measured,threshold,detail\n");
    for (const auto& r : results) {
        if (!r.pass) ++failures;
        std::printf("%s,%s,%s,%.12g,%.12g,%s\n", r.suite.c_str(),
                    r.name.c_str(), r.pass ? "pass" : "fail", r.measured,
                    r.threshold, r.detail.c_str());
    }
    std::printf("failures: %d / %zu\n", failures, results.size());
    return failures == 0 ? kOk : kCheckFailed;
}

int cmd_sphere_ode(int n, int m, double beta, double R0, double t_end,
                   double dt, const std::string& out_file) {
    FlowParams p{n, m, beta};
    p.validate();
    const double mb = p.mbeta();
    if (!(t_end < contracting_sphere_extinction(R0, mb))) {
        std::cerr << "error: t_end reaches the extinction time R0^d/d = "
                  << contracting_sphere_extinction(R0, mb) << "\n";
        return kConfigError;
    }
    if (!(dt > 0.0) || !(R0 > 0.0) || !(t_end > 0.0)) {
        std::cerr << "error: need R0 > 0, t_end > 0, dt > 0\n";
        return kConfigError;
    }

    std::FILE* fp = stdout;
    if (!out_file.empty()) {
        fp = std::fopen(out_file.c_str(), "w");
        if (!fp) {
            std::cerr << "error: cannot write " << out_file << "\n";
            return kConfigError;
        }
    }

    auto rate = [mb](double R) { return -std::pow(R, -mb); };
    double R = R0, t = 0.0, max_gap = 0.0;
    std::fprintf(fp, "t,R_numeric,R_exact\n");
    std::fprintf(fp, "%.17g,%.17g,%.17g\n", 0.0, R0, R0);
    while (t < t_end - 1e-15) {
        const double h = std::min(dt, t_end - t);
        const double k1 = rate(R);
        const double k2 = rate(R + h * k1);
        R += 0.5 * h * (k1 + k2);
        t += h;
        const double exact = contracting_sphere_radius(R0, mb, t);
        max_gap = std::max(max_gap, std::abs(R - exact) / exact);
        std::fprintf(fp, "%.17g,%.17g,%.17g\n", t, R, exact);
    }
    if (fp != stdout) {
        std::fclose(fp);
        std::printf("max_rel_gap = %.6e\n", max_gap);
    } else {
        std::fprintf(stderr, "max_rel_gap = %.6e\n", max_gap);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"volume-preserving curvature-power flow laboratory"};
    app.require_subcommand(1);

    RunCli rc;
    auto* run_cmd = app.add_subcommand(
        "run", "integrate the flow and emit diagnostics + snapshots");
    run_cmd->set_config("--config");
    run_cmd->add_option("--n", rc.n, "hypersurface dimension");
    run_cmd->add_option("--m", rc.m, "mean-curvature order");
    run_cmd->add_option("--beta", rc.beta, "speed power");
    run_cmd->add_option("--init", rc.init,
                        "sphere:R | ellipsoid:a,b | file:path");
    run_cmd->add_option("--N", rc.N, "grid segments (even)");
    run_cmd->add_option("--t-end", rc.t_end, "final time")->required();
    run_cmd->add_option("--cfl", rc.cfl, "CFL factor in (0,1)");
    run_cmd->add_option("--cadence", rc.cadence, "diagnostics interval");
    run_cmd->add_option("--dt", rc.fixed_dt, "fixed time step (0 = auto)");
    run_cmd->add_option("--stop-q-defect", rc.stop_q_defect,
                        "stop once q_defect drops below this");
    run_cmd->add_option("--snapshot-stride", rc.snapshot_stride,
                        "write a snapshot every k-th record");
    run_cmd->add_flag("--no-volume-preserving", rc.no_volume_preserving,
                      "h == 0 comparison mode");
    run_cmd->add_flag("--volume-projection", rc.volume_projection,
                      "rescale to the initial volume after each step");
    run_cmd->add_flag("--no-pinching-check", rc.no_pinching_check,
                      "skip the initial pinching check");
    run_cmd->add_option("--out", rc.out_dir, "output directory");
    run_cmd->add_flag("--force", rc.force, "allow existing output directory");
    run_cmd->add_option("--seed", rc.seed, "sampling seed")
        ->envname("HMFLOW_SEED");

    int cn = 2, cm = 1;
    double cbeta = 2.0;
    std::string cout_file;
    std::uint64_t cseed = 42;
    auto* const_cmd =
        app.add_subcommand("constants", "compute the pinching constants");
    const_cmd->add_option("--n", cn)->required();
    const_cmd->add_option("--m", cm)->required();
    const_cmd->add_option("--beta", cbeta)->required();
    const_cmd->add_option("--out", cout_file, "also write the report here");
    const_cmd->add_option("--seed", cseed)->envname("HMFLOW_SEED");

    std::string suite;
    std::uint64_t vseed = 42;
    auto* verify_cmd =
        app.add_subcommand("verify", "run a module verification suite");
    verify_cmd->add_option("suite", suite,
                           "symfun | constants | geometry | flow-short")
        ->required();
    verify_cmd->add_option("--seed", vseed)->envname("HMFLOW_SEED");

    int sn = 2, sm = 1;
    double sbeta = 2.0, sr0 = 1.0, st_end = 0.2, sdt = 1e-5;
    std::string sout;
    auto* ode_cmd = app.add_subcommand(
        "sphere-ode", "contracting sphere vs the exact solution");
    ode_cmd->add_option("--n", sn);
    ode_cmd->add_option("--m", sm);
    ode_cmd->add_option("--beta", sbeta);
    ode_cmd->add_option("--r0", sr0);
    ode_cmd->add_option("--t-end", st_end)->required();
    ode_cmd->add_option("--dt", sdt);
    ode_cmd->add_option("--out", sout, "CSV path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(rc);
        if (const_cmd->parsed())
            return cmd_constants(cn, cm, cbeta, cout_file, cseed);
        if (verify_cmd->parsed()) return cmd_verify(suite, vseed);
        if (ode_cmd->parsed())
            return cmd_sphere_ode(sn, sm, sbeta, sr0, st_end, sdt, sout);
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericalFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const StepFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalFailure;
    }
    return kConfigError;
}
