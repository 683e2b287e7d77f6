#include "hmflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>

namespace hmflow {

namespace {

double pow_int(double x, int k) {
    double r = 1.0;
    for (; k > 0; k >>= 1, x *= x)
        if (k & 1) r *= x;
    return r;
}

// dr/dt at every node for the current profile. Throws the geometry errors
// when the profile has left the admissible set.
struct RateEval {
    std::vector<double> rate;
    CurvatureField field;
    double h_applied = 0.0;
    double mean_sigma = 0.0;
};

RateEval eval_rate(const RadialProfile& prof, const FlowParams& params,
                   const AngularGrid& grid, bool volume_preserving) {
    RateEval ev;
    ev.field = curvatures(prof, params, grid);
    ev.mean_sigma = averaged_speed(prof, grid, ev.field);
    ev.h_applied = volume_preserving ? ev.mean_sigma : 0.0;

    const int N = prof.segments();
    std::vector<double> rt, rtt;
    radial_derivatives(prof, grid, rt, rtt);
    ev.rate.resize(N + 1);
    for (int j = 0; j <= N; ++j) {
        const double r = prof.r[j];
        const double J = std::sqrt(r * r + rt[j] * rt[j]);
        ev.rate[j] = (ev.h_applied - ev.field.sigma[j]) * J / r;
    }
    return ev;
}

// least squares fit y ~ a + b x; returns {b, r^2}
std::pair<double, double> linear_fit(const std::vector<double>& x,
                                     const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    if (n < 2) return {0.0, 0.0};
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return {0.0, 1.0};
    const double slope = sxy / sxx;
    const double r2 = (sxy * sxy) / (sxx * syy);
    return {slope, r2};
}

} // namespace

FlowState make_state(RadialProfile profile, double t, const FlowParams& params,
                     bool volume_preserving,
                     std::shared_ptr<const AngularGrid> grid) {
    profile.validate();
    params.validate();
    if (!grid) grid = std::make_shared<AngularGrid>(
                   AngularGrid::make(profile.segments()));
    FlowState st;
    st.params = params;
    st.t = t;
    st.volume_preserving = volume_preserving;
    st.grid = std::move(grid);
    st.field = curvatures(profile, params, *st.grid);
    st.mean_sigma = averaged_speed(profile, *st.grid, st.field);
    st.h = volume_preserving ? st.mean_sigma : 0.0;
    st.profile = std::move(profile);
    return st;
}

double select_dt(const FlowState& state, double cfl) {
    const auto& prof = state.profile;
    double min_r2 = std::numeric_limits<double>::infinity();
    double max_tr = 0.0;
    for (size_t j = 0; j < prof.r.size(); ++j) {
        min_r2 = std::min(min_r2, prof.r[j] * prof.r[j]);
        max_tr = std::max(max_tr, state.field.tr_sdot[j]);
    }
    if (!(max_tr > 0.0))
        throw StepFailure(-1, state.t, "nonpositive tr(dsigma) everywhere");
    const double dth = state.grid->dtheta;
    return cfl * dth * dth * min_r2 / max_tr;
}

FlowState step(const FlowState& state, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
    const auto& grid = *state.grid;
    const int N = state.profile.segments();

    try {
        // stage 1 uses the cached field of the current state
        std::vector<double> rt, rtt;
        radial_derivatives(state.profile, grid, rt, rtt);
        std::vector<double> v1(N + 1);
        for (int j = 0; j <= N; ++j) {
            const double r = state.profile.r[j];
            const double J = std::sqrt(r * r + rt[j] * rt[j]);
            v1[j] = (state.h - state.field.sigma[j]) * J / r;
        }

        RadialProfile pred = state.profile;
        for (int j = 0; j <= N; ++j) pred.r[j] += dt * v1[j];
        for (int j = 0; j <= N; ++j)
            if (!(pred.r[j] > 0.0) || !std::isfinite(pred.r[j]))
                throw StarShapednessLost(j);

        const RateEval s2 =
            eval_rate(pred, state.params, grid, state.volume_preserving);

        FlowState next;
        next.params = state.params;
        next.volume_preserving = state.volume_preserving;
        next.grid = state.grid;
        next.t = state.t + dt;
        next.profile = state.profile;
        const double half = 0.5 * dt;
        for (int j = 0; j <= N; ++j)
            next.profile.r[j] += half * (v1[j] + s2.rate[j]);
        for (int j = 0; j <= N; ++j)
            if (!(next.profile.r[j] > 0.0) || !std::isfinite(next.profile.r[j]))
                throw StarShapednessLost(j);

        next.field = curvatures(next.profile, next.params, grid);
        next.mean_sigma = averaged_speed(next.profile, grid, next.field);
        next.h = next.volume_preserving ? next.mean_sigma : 0.0;
        return next;
    } catch (const StarShapednessLost& e) {
        throw StepFailure(e.node, state.t,
                          "step failure at node " + std::to_string(e.node) +
                              ": star-shapedness lost");
    } catch (const ConeExit& e) {
        throw StepFailure(e.node, state.t,
                          "step failure at node " + std::to_string(e.node) +
                              ": positive-H_m cone exited");
    }
}

DiagnosticsRecord make_record(const FlowState& state, double dt_used) {
    const auto& grid = *state.grid;
    DiagnosticsRecord rec;
    rec.t = state.t;
    rec.V = volume(state.profile, grid);
    rec.area = area(state.profile, grid);
    rec.h = state.h;
    rec.dt = dt_used;

    const auto& f = state.field;
    const int n = state.params.n;
    rec.q_min = *std::min_element(f.q.begin(), f.q.end());
    rec.q_defect = pow_int(1.0 / n, n) - rec.q_min;
    rec.Hm_max = *std::max_element(f.Hm.begin(), f.Hm.end());
    rec.Hm_min = *std::min_element(f.Hm.begin(), f.Hm.end());
    rec.H_min = *std::min_element(f.H.begin(), f.H.end());
    rec.sigma_min = *std::min_element(f.sigma.begin(), f.sigma.end());
    rec.sigma_max = *std::max_element(f.sigma.begin(), f.sigma.end());

    const Radii rad = radii(state.profile, grid);
    rec.rho = rad.inradius;
    rec.D = rad.outer;
    rec.af_residual = alexandrov_fenchel_residual(state.profile, grid);
    rec.x_centroid = volume_centroid_x(state.profile, grid);
    return rec;
}

void RunConfig::validate() const {
    params.validate();
    if (!(t_end > 0.0)) throw std::domain_error("t_end must be > 0");
    if (!(cfl > 0.0) || !(cfl < 1.0))
        throw std::domain_error("cfl must lie in (0, 1)");
    if (N < 4 || N % 2 != 0)
        throw std::domain_error("N must be even and >= 4");
    if (!(cadence > 0.0)) throw std::domain_error("cadence must be > 0");
    if (fixed_dt < 0.0) throw std::domain_error("dt must be >= 0");
    if (init == Init::Sphere && !(radius > 0.0))
        throw std::domain_error("sphere radius must be > 0");
    if (init == Init::Ellipsoid && (!(a > 0.0) || !(b > 0.0)))
        throw std::domain_error("ellipsoid semi-axes must be > 0");
    if (init == Init::File && init_file.empty())
        throw std::domain_error("file init needs a snapshot path");
}

RunResult run(const RunConfig& cfg, const PinchingReport* precomputed) {
    cfg.validate();
    RunResult out;

    RadialProfile init;
    switch (cfg.init) {
        case RunConfig::Init::Sphere:
            init = make_sphere(cfg.params.n, cfg.N, cfg.radius);
            break;
        case RunConfig::Init::Ellipsoid:
            init = make_ellipsoid(cfg.params.n, cfg.N, cfg.a, cfg.b);
            break;
        case RunConfig::Init::File: {
            Snapshot snap = read_snapshot(cfg.init_file);
            init = std::move(snap.profile);
            if (init.n != cfg.params.n)
                throw std::domain_error(
                    "snapshot dimension does not match params");
            break;
        }
    }
    out.initial_profile = init;

    FlowState state = make_state(std::move(init), 0.0, cfg.params,
                                 cfg.volume_preserving);
    out.initial_q_min =
        *std::min_element(state.field.q.begin(), state.field.q.end());

    if (cfg.volume_preserving && cfg.check_initial_pinching) {
        if (precomputed) {
            out.pinching = *precomputed;
        } else {
            ConstantsOptions copt;
            copt.seed = cfg.seed;
            out.pinching = compute_C_p(cfg.params, copt);
        }
        out.initial_pinching_ok = out.initial_q_min > out.pinching->C_p;
        if (!out.initial_pinching_ok) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "initial pinching violated: min K/H^n = %.6g <= "
                          "C_p = %.6g; proceeding anyway",
                          out.initial_q_min, out.pinching->C_p);
            out.warnings.emplace_back(buf);
        }
    }

    const double V0 = volume(state.profile, *state.grid);
    const double vol_exponent = 1.0 / (cfg.params.n + 1);

    namespace fs = std::filesystem;
    const bool emit = !cfg.out_dir.empty();
    int snap_index = 0;
    auto maybe_snapshot = [&](const FlowState& st, bool force) {
        if (!emit) return;
        const bool due = cfg.snapshot_stride > 0 &&
                         static_cast<int>(out.records.size()) %
                                 cfg.snapshot_stride ==
                             0;
        if (force || due)
            write_snapshot(
                (fs::path(cfg.out_dir) /
                 ("snap_" + std::to_string(snap_index++) + ".txt"))
                    .string(),
                st.profile, st.t);
    };

    out.records.push_back(make_record(state, 0.0));
    maybe_snapshot(state, true);
    double next_record = cfg.cadence;

    const double t_eps = 1e-12 * std::max(1.0, cfg.t_end);
    while (state.t < cfg.t_end - t_eps) {
        double dt =
            cfg.fixed_dt > 0.0 ? cfg.fixed_dt : select_dt(state, cfg.cfl);
        dt = std::min(dt, cfg.t_end - state.t);
        try {
            state = step(state, dt);
        } catch (const StepFailure& e) {
            out.failed = true;
            out.failure = e.what();
            break;
        }
        if (cfg.volume_projection) {
            const double scale =
                std::pow(V0 / volume(state.profile, *state.grid),
                         vol_exponent);
            RadialProfile scaled = state.profile;
            for (auto& r : scaled.r) r *= scale;
            state = make_state(std::move(scaled), state.t, cfg.params,
                               cfg.volume_preserving, state.grid);
        }
        if (state.t >= next_record - t_eps || state.t >= cfg.t_end - t_eps) {
            out.records.push_back(make_record(state, dt));
            maybe_snapshot(state, false);
            while (next_record <= state.t + t_eps) next_record += cfg.cadence;
            if (cfg.stop_q_defect > 0.0 &&
                out.records.back().q_defect < cfg.stop_q_defect) {
                out.stopped_on_q_defect = true;
                break;
            }
        }
    }

    out.final_state = std::move(state);
    if (emit) {
        write_diagnostics_csv(
            (fs::path(cfg.out_dir) / "diagnostics.csv").string(),
            out.records);
        write_snapshot((fs::path(cfg.out_dir) /
                        ("snap_" + std::to_string(snap_index++) + ".txt"))
                           .string(),
                       out.final_state.profile, out.final_state.t);
    }
    return out;
}

void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsRecord>& records) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open CSV for writing: " + path);
    std::fprintf(fp,
                 "t,V,area,h,q_min,q_defect,Hm_max,Hm_min,H_min,rho,D,"
                 "af_residual,dt\n");
    for (const auto& r : records)
        std::fprintf(fp,
                     "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                     "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                     r.t, r.V, r.area, r.h, r.q_min, r.q_defect, r.Hm_max,
                     r.Hm_min, r.H_min, r.rho, r.D, r.af_residual, r.dt);
    std::fclose(fp);
}

QMinMonitor monitor_q_min(const std::vector<DiagnosticsRecord>& records,
                          double dtheta, double c) {
    QMinMonitor mon;
    double dt_max = 0.0;
    for (const auto& r : records) dt_max = std::max(dt_max, r.dt);
    mon.tol_disc = c * (dtheta * dtheta + dt_max);
    for (size_t k = 0; k + 1 < records.size(); ++k) {
        const double drop = records[k].q_min - records[k + 1].q_min;
        mon.worst_drop = std::max(mon.worst_drop, drop);
        if (drop > mon.tol_disc) {
            ++mon.violations;
            mon.flagged.push_back(static_cast<int>(k + 1));
        }
    }
    const double unit = dtheta * dtheta + dt_max;
    mon.c_required = unit > 0.0 ? std::max(0.0, mon.worst_drop) / unit : 0.0;
    return mon;
}

BoundsMonitor monitor_bounds(const std::vector<DiagnosticsRecord>& records) {
    BoundsMonitor b;
    if (records.empty()) return b;
    b.sup_Hm_max = -std::numeric_limits<double>::infinity();
    b.inf_h = std::numeric_limits<double>::infinity();
    b.inf_rho = std::numeric_limits<double>::infinity();
    b.sup_D = -std::numeric_limits<double>::infinity();
    b.min_af_residual = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
        b.sup_Hm_max = std::max(b.sup_Hm_max, r.Hm_max);
        b.inf_h = std::min(b.inf_h, r.h);
        b.inf_rho = std::min(b.inf_rho, r.rho);
        b.sup_D = std::max(b.sup_D, r.D);
        b.min_af_residual = std::min(b.min_af_residual, r.af_residual);
        b.axis_drift = std::max(
            b.axis_drift, std::abs(r.x_centroid - records.front().x_centroid));
    }
    std::vector<double> ts, logs;
    for (size_t k = 0; k + 1 < records.size(); ++k) {
        b.Hmin_integral += 0.5 *
                           (records[k].H_min + records[k + 1].H_min) *
                           (records[k + 1].t - records[k].t);
    }
    for (const auto& r : records)
        if (r.H_min > 0.0) {
            ts.push_back(r.t);
            logs.push_back(std::log(r.H_min));
        }
    b.Hmin_log_slope = linear_fit(ts, logs).first;
    return b;
}

RateFit fit_convergence_rate(const std::vector<DiagnosticsRecord>& records,
                             const PinchingReport* report) {
    RateFit fit;
    constexpr double kNoiseFloor = 1e-14;
    std::vector<double> ts, logs;
    for (const auto& r : records)
        if (r.q_defect > kNoiseFloor) {
            ts.push_back(r.t);
            logs.push_back(std::log(r.q_defect));
        }
    if (report) {
        double inf_h = std::numeric_limits<double>::infinity();
        for (const auto& r : records) inf_h = std::min(inf_h, r.h);
        fit.theoretical_floor_B =
            inf_h * report->C_p * report->delta_schulze;
    }
    if (ts.size() < 4) return fit; // nothing to fit (round sphere)

    const double t_half = 0.5 * (ts.front() + ts.back());
    std::vector<double> tw, lw;
    for (size_t i = 0; i < ts.size(); ++i)
        if (ts[i] >= t_half) {
            tw.push_back(ts[i]);
            lw.push_back(logs[i]);
        }
    if (tw.size() < 4) return fit;
    const auto [slope, r2] = linear_fit(tw, lw);
    fit.applicable = true;
    fit.slope = slope;
    fit.r_squared = r2;
    fit.window_t0 = tw.front();
    fit.window_t1 = tw.back();
    fit.points = static_cast<int>(tw.size());
    return fit;
}

SpeedEvolutionResidual verify_speed_evolution(const FlowState& before,
                                              const FlowState& after) {
    if (before.grid != after.grid && before.grid->N != after.grid->N)
        throw std::invalid_argument("states on different grids");
    const double dt = after.t - before.t;
    if (!(dt > 0.0))
        throw std::invalid_argument("states must be dt > 0 apart");
    const AngularGrid& grid = *before.grid;
    const int N = grid.N;
    const int n = before.params.n;

    // all spatial quantities on the time-midpoint profile
    RadialProfile mid = before.profile;
    for (int j = 0; j <= N; ++j)
        mid.r[j] = 0.5 * (before.profile.r[j] + after.profile.r[j]);
    const CurvatureField f = curvatures(mid, before.params, grid);
    const double h_mid = before.volume_preserving
                             ? averaged_speed(mid, grid, f)
                             : 0.0;

    std::vector<double> rt, rtt;
    radial_derivatives(mid, grid, rt, rtt);

    const auto& sig = f.sigma;
    const double dth = grid.dtheta;

    // The discrete sigma error field has a kink at the pole nodes (the pole
    // closure k_rot := k_profile carries a different truncation constant
    // than the interior k_rot stencil), so second differences through the
    // pole value do not converge. Near the poles we instead fit the even
    // expansion sigma = c0 + c2 theta^2 + c4 theta^4 through the first
    // three interior nodes, which stays O(dtheta^2) without touching the
    // pole sample.
    struct EvenFit {
        double c2 = 0.0, c4 = 0.0; // scaled: c2' = c2 dth^2, c4' = c4 dth^4
    };
    auto even_fit = [&](double s1, double s2, double s3) {
        EvenFit fit;                              // x = (j*dth)^2 / dth^2
        const double d12 = (s2 - s1) / 3.0;       // f[x1,x2], x: 1,4,9
        const double d23 = (s3 - s2) / 5.0;
        fit.c4 = (d23 - d12) / 8.0;
        fit.c2 = d12 - 5.0 * fit.c4;
        return fit;
    };
    const EvenFit fit0 = even_fit(sig[1], sig[2], sig[3]);
    const EvenFit fitN = even_fit(sig[N - 1], sig[N - 2], sig[N - 3]);

    auto sigma_th = [&](int j) {
        if (j == 0 || j == N) return 0.0; // even at the poles
        if (j == 1) return (2.0 * fit0.c2 + 4.0 * fit0.c4) / dth;
        if (j == N - 1) return -(2.0 * fitN.c2 + 4.0 * fitN.c4) / dth;
        return (sig[j + 1] - sig[j - 1]) / (2.0 * dth);
    };
    auto sigma_thth = [&](int j) {
        if (j == 0) return 2.0 * fit0.c2 / (dth * dth);
        if (j == N) return 2.0 * fitN.c2 / (dth * dth);
        if (j == 1) return (2.0 * fit0.c2 + 12.0 * fit0.c4) / (dth * dth);
        if (j == N - 1)
            return (2.0 * fitN.c2 + 12.0 * fitN.c4) / (dth * dth);
        return ((sig[j + 1] + sig[j - 1]) - 2.0 * sig[j]) / (dth * dth);
    };

    SpeedEvolutionResidual out;
    out.residual.resize(N + 1);
    for (int j = 0; j <= N; ++j) {
        const double r = mid.r[j];
        const double J2 = r * r + rt[j] * rt[j];
        const double J = std::sqrt(J2);
        const double st = sigma_th(j), stt = sigma_thth(j);
        const double J_th = (r * rt[j] + rt[j] * rtt[j]) / J;
        const double sigma_s = st / J;
        const double sigma_ss = stt / J2 - st * J_th / (J2 * J);

        double laplace;
        if (j == 0 || j == N) {
            // rotational term tends to sigma_ss on the axis
            laplace = (f.sdot_profile[j] + (n - 1) * f.sdot_rot[j]) * sigma_ss;
        } else {
            const double R = r * grid.sin_t[j];
            const double R_th = rt[j] * grid.sin_t[j] + r * grid.cos_t[j];
            const double R_s = R_th / J;
            laplace = f.sdot_profile[j] * sigma_ss +
                      (n - 1) * f.sdot_rot[j] * (R_s / R) * sigma_s;
        }
        const double tr_alphaA =
            f.sdot_profile[j] * f.k_profile[j] * f.k_profile[j] +
            (n - 1) * f.sdot_rot[j] * f.k_rot[j] * f.k_rot[j];
        const double rhs = laplace + (sig[j] - h_mid) * tr_alphaA;

        const double dsdt =
            (after.field.sigma[j] - before.field.sigma[j]) / dt;
        const double tangential = (h_mid - sig[j]) * rt[j] / r;
        const double lhs = dsdt - tangential * sigma_s;

        out.residual[j] = lhs - rhs;
        out.max_abs = std::max(out.max_abs, std::abs(out.residual[j]));
    }
    return out;
}

double contracting_sphere_extinction(double R0, double mbeta) {
    const double d = mbeta + 1.0;
    return std::pow(R0, d) / d;
}

double contracting_sphere_radius(double R0, double mbeta, double t) {
    const double d = mbeta + 1.0;
    const double core = std::pow(R0, d) - d * t;
    if (core <= 0.0)
        throw std::domain_error("contracting sphere is extinct at this time");
    return std::pow(core, 1.0 / d);
}

} // namespace hmflow
