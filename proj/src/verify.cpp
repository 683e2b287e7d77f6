#include "hmflow/verify.hpp"

#include "hmflow/constants.hpp"
#include "hmflow/flow.hpp"
#include "hmflow/geometry.hpp"
#include "hmflow/symfun.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace hmflow {

namespace {

struct Suite {
    std::string name;
    std::vector<CheckResult> results;

    void add(const std::string& check, bool pass, double measured,
             double threshold, const std::string& detail = "") {
        results.push_back({name, check, pass, measured, threshold, detail});
    }
    // pass when measured >= threshold
    void at_least(const std::string& check, double measured, double threshold,
                  const std::string& detail = "") {
        add(check, measured >= threshold, measured, threshold, detail);
    }
    // pass when measured <= threshold
    void at_most(const std::string& check, double measured, double threshold,
                 const std::string& detail = "") {
        add(check, measured <= threshold, measured, threshold, detail);
    }
};

std::vector<double> random_cone_point(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.05, 3.0);
    std::vector<double> k(n);
    for (auto& v : k) v = u(rng);
    return k;
}

std::vector<CheckResult> verify_symfun(std::uint64_t seed) {
    Suite s{"symfun", {}};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(0.0, 1.0);

    double min_grad = std::numeric_limits<double>::infinity();
    double min_concavity = std::numeric_limits<double>::infinity();
    double min_trace_slack = std::numeric_limits<double>::infinity();
    double min_maclaurin = std::numeric_limits<double>::infinity();
    double max_euler_rel = 0.0;
    double max_fd_rel = 0.0;

    for (int n = 2; n <= 5; ++n) {
        for (int m = 1; m <= n; ++m) {
            for (double beta : {1.0 / m + 0.1, 1.0, 2.0}) {
                FlowParams p{n, m, beta};
                if (p.mbeta() < 1.0) continue;
                std::vector<double> g(n);
                for (int rep = 0; rep < 1000; ++rep) {
                    auto k = random_cone_point(rng, n);
                    sigma_grad(k, p, g);
                    for (double gi : g) min_grad = std::min(min_grad, gi);

                    double dot = 0.0;
                    for (int i = 0; i < n; ++i) dot += g[i] * k[i];
                    const double sg = sigma(k, p);
                    max_euler_rel =
                        std::max(max_euler_rel,
                                 std::abs(dot - p.mbeta() * sg) /
                                     (p.mbeta() * sg));

                    auto k2 = random_cone_point(rng, n);
                    const double t = ut(rng);
                    std::vector<double> mix(n);
                    for (int i = 0; i < n; ++i)
                        mix[i] = t * k[i] + (1.0 - t) * k2[i];
                    const double lhs =
                        std::pow(elem_sym_normalized(mix, m), 1.0 / m);
                    const double rhs =
                        t * std::pow(elem_sym_normalized(k, m), 1.0 / m) +
                        (1.0 - t) *
                            std::pow(elem_sym_normalized(k2, m), 1.0 / m);
                    min_concavity = std::min(min_concavity, lhs - rhs);

                    min_trace_slack =
                        std::min(min_trace_slack, check_trace_bound(k, p).slack);
                    min_maclaurin =
                        std::min(min_maclaurin, check_maclaurin(k, m).slack);
                }
                // gradient vs finite differences on a smaller batch
                for (int rep = 0; rep < 50; ++rep) {
                    auto k = random_cone_point(rng, n);
                    sigma_grad(k, p, g);
                    double nrm = 0.0;
                    for (double v : k) nrm += v * v;
                    const double h = 1e-5 * std::sqrt(nrm);
                    for (int i = 0; i < n; ++i) {
                        auto kp = k, km = k;
                        kp[i] += h;
                        km[i] -= h;
                        const double fd =
                            (sigma(kp, p) - sigma(km, p)) / (2.0 * h);
                        max_fd_rel = std::max(
                            max_fd_rel, std::abs(g[i] - fd) / std::abs(fd));
                    }
                }
            }
        }
    }
    s.at_least("gradient_positivity", min_grad, 0.0, "min dsigma^i sampled");
    s.at_least("hm_root_concavity", min_concavity, -1e-10,
               "min concavity slack");
    s.at_least("trace_bound", min_trace_slack, -1e-10, "min trace slack");
    s.at_least("maclaurin", min_maclaurin, -1e-10, "min Maclaurin slack");
    s.at_most("euler_identity_rel", max_euler_rel, 1e-12);
    s.at_most("gradient_vs_fd_rel", max_fd_rel, 1e-6);

    // Umbilicity-gap inequality tied to the constants module estimate.
    const double eps = 0.1;
    double worst = std::numeric_limits<double>::infinity();
    for (int n = 2; n <= 4; ++n) {
        const double delta = estimate_delta_schulze(eps, n);
        const double inv_nn = std::pow(static_cast<double>(n), -n);
        for (int rep = 0; rep < 2000; ++rep) {
            auto k = random_cone_point(rng, n);
            double H = 0.0, a2 = 0.0, K = 1.0, kmin = k[0];
            for (double v : k) {
                H += v;
                a2 += v * v;
                K *= v;
                kmin = std::min(kmin, v);
            }
            if (kmin < eps * H) continue;
            const double den = inv_nn - K / std::pow(H, n);
            if (den < 1e-12) continue;
            const double lhs = (n * a2 - H * H) / (H * H);
            worst = std::min(worst, lhs - delta * den);
        }
    }
    s.at_least("schulze_gap_with_module_delta", worst, -1e-10);
    return s.results;
}

std::vector<CheckResult> verify_constants(std::uint64_t seed) {
    Suite s{"constants", {}};
    ConstantsOptions opt;
    opt.seed = seed;

    FlowParams p{2, 2, 1.0};
    double prev_m1 = 0.0, prev_m2 = std::numeric_limits<double>::infinity();
    double worst_m1 = 0.0, worst_m2 = 0.0;
    for (int i = 1; i <= 12; ++i) {
        const double eps = 0.5 * i / 13.0;
        const double m1 = estimate_M1(eps, p, opt);
        const double m2 = estimate_M2(eps, p, opt);
        worst_m1 = std::max(worst_m1, prev_m1 - m1);
        worst_m2 = std::max(worst_m2, m2 - prev_m2);
        prev_m1 = m1;
        prev_m2 = m2;
    }
    s.at_most("M1_nondecreasing_violation", worst_m1, 1e-8);
    s.at_most("M2_nonincreasing_violation", worst_m2, 1e-8);

    const auto rep = compute_C_p(p, opt);
    s.add("C_p_in_range", rep.C_p > 0.0 && rep.C_p < 0.25, rep.C_p, 0.25);
    s.at_most("eqeps_residual_rel",
              std::abs(rep.eqeps_residual) /
                  (rep.M1 * rep.eps_star * rep.eps_star),
              1e-6);

    // closed form vs grid search for the pinch constant
    double worst_gap = 0.0;
    for (double eps : {0.05, 0.1, 0.2}) {
        double grid_best = 0.0;
        const int G = 20000;
        for (int t = 0; t <= G; ++t) {
            const double k1 = eps * t / G;
            grid_best = std::max(grid_best, k1 * (1.0 - k1));
        }
        worst_gap = std::max(
            worst_gap, std::abs(grid_best - pinch_constant_from_eps(eps, 2)));
    }
    s.at_most("pinch_constant_closed_form_gap", worst_gap, 1e-6);

    // implication at the report's eps*
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int bad = 0, fired = 0;
    for (int it = 0; it < 10000; ++it) {
        std::vector<double> k(p.n);
        for (auto& v : k) v = u(rng);
        double H = 0.0, K = 1.0, kmin = 1e300;
        for (double v : k) {
            H += v;
            K *= v;
            kmin = std::min(kmin, v);
        }
        if (K > rep.C_p * std::pow(H, p.n)) {
            ++fired;
            if (!(kmin > rep.eps_star * H)) ++bad;
        }
    }
    s.add("pinch_implication", bad == 0 && fired > 10, bad, 0,
          "violations among " + std::to_string(fired) + " pinched samples");
    return s.results;
}

std::vector<CheckResult> verify_geometry(std::uint64_t seed) {
    Suite s{"geometry", {}};
    (void)seed;

    // sphere closed forms
    {
        const double R = 1.7;
        auto prof = make_sphere(2, 128, R);
        auto f = curvatures(prof, FlowParams{2, 1, 2.0});
        double worst = 0.0;
        for (size_t j = 0; j < f.k_profile.size(); ++j)
            worst = std::max({worst, std::abs(f.k_profile[j] - 1.0 / R),
                              std::abs(f.k_rot[j] - 1.0 / R)});
        s.at_most("sphere_curvature_error", worst, 1e-12);
        s.at_most("sphere_area_rel_error",
                  std::abs(area(prof) - 4.0 * M_PI * R * R) /
                      (4.0 * M_PI * R * R),
                  1e-8);
        s.at_most("sphere_volume_rel_error",
                  std::abs(volume(prof) - 4.0 / 3.0 * M_PI * R * R * R) /
                      (4.0 / 3.0 * M_PI * R * R * R),
                  1e-8);
        auto rad = radii(prof);
        s.at_most("sphere_radii_error",
                  std::max(std::abs(rad.inradius - R), std::abs(rad.outer - R)),
                  1e-9);
    }

    // discrete AM-GM: q <= 1/n^n + tol on convex profiles
    {
        double worst = -std::numeric_limits<double>::infinity();
        for (int n : {2, 3, 4}) {
            auto prof = make_ellipsoid(n, 256, 1.4, 1.0);
            auto f = curvatures(prof, FlowParams{n, 1, 2.0});
            const double lim = std::pow(static_cast<double>(n), -n);
            for (double q : f.q) worst = std::max(worst, q - lim);
        }
        s.at_most("q_am_gm_bound", worst, 1e-10);
    }

    // isoperimetric ordering rho <= (V/omega)^{1/(n+1)} <= D
    {
        double worst = -std::numeric_limits<double>::infinity();
        for (int n : {2, 3}) {
            for (double a : {1.0, 1.3, 1.8}) {
                auto prof = make_ellipsoid(n, 256, a, 1.0);
                const auto rad = radii(prof);
                const double mid =
                    std::pow(volume(prof) / unit_ball_volume(n + 1),
                             1.0 / (n + 1));
                worst = std::max(worst, rad.inradius - mid);
                worst = std::max(worst, mid - rad.outer);
            }
        }
        s.at_most("isoperimetric_ordering_violation", worst, 1e-9);
    }

    // reflection symmetry is bitwise
    {
        auto prof = make_ellipsoid(2, 64, 1.5, 1.0);
        auto f = curvatures(prof, FlowParams{2, 1, 2.0});
        double worst = 0.0;
        const int N = prof.segments();
        for (int j = 0; j <= N; ++j) {
            worst = std::max(worst, std::abs(f.k_profile[j] -
                                              f.k_profile[N - j]));
            worst = std::max(worst, std::abs(f.k_rot[j] - f.k_rot[N - j]));
        }
        s.at_most("reflection_symmetry_bitwise", worst, 0.0);
    }

    // curvature refinement order ~2 on the ellipsoid
    {
        auto err_at = [](int N) {
            auto prof = make_ellipsoid(2, N, 1.2, 1.0);
            const AngularGrid g = AngularGrid::make(N);
            auto f = curvatures(prof, FlowParams{2, 1, 2.0}, g);
            double worst = 0.0;
            for (int j = 0; j <= N; ++j) {
                const double t = std::atan2(1.2 * g.sin_t[j], 1.0 * g.cos_t[j]);
                const double st = std::sin(t), ct = std::cos(t);
                const double u = std::sqrt(ct * ct + 1.44 * st * st);
                const double km = 1.2 / (u * u * u);
                const double kr = 1.2 / u;
                worst = std::max({worst, std::abs(f.k_profile[j] - km),
                                  std::abs(f.k_rot[j] - kr)});
            }
            return worst;
        };
        const double e1 = err_at(64), e2 = err_at(128);
        const double order = std::log2(e1 / e2);
        s.add("curvature_refinement_order", std::abs(order - 2.0) <= 0.3,
              order, 2.0);
    }
    return s.results;
}

std::vector<CheckResult> verify_flow_short(std::uint64_t seed) {
    Suite s{"flow-short", {}};
    RunConfig cfg;
    cfg.params = {2, 1, 2.0};
    cfg.init = RunConfig::Init::Ellipsoid;
    cfg.a = 1.1;
    cfg.b = 1.0;
    cfg.N = 128;
    cfg.t_end = 1.0;
    cfg.cadence = 0.05;
    cfg.check_initial_pinching = false;
    cfg.seed = seed;
    const RunResult res = run(cfg);

    s.add("run_completed", !res.failed, res.failed ? 1 : 0, 0, res.failure);
    if (res.failed) return s.results;

    const double V0 = res.records.front().V;
    double drift = 0.0;
    double worst_h_gap = -std::numeric_limits<double>::infinity();
    for (const auto& r : res.records) {
        drift = std::max(drift, std::abs(r.V - V0) / V0);
        worst_h_gap = std::max({worst_h_gap, r.sigma_min - r.h,
                                r.h - r.sigma_max});
    }
    s.at_most("volume_drift_rel", drift, 1e-6);
    s.at_most("h_between_sigma_bounds", worst_h_gap, 0.0);

    const auto qmon =
        monitor_q_min(res.records, res.final_state.grid->dtheta);
    s.add("q_min_monotone", qmon.violations == 0, qmon.violations, 0);

    const auto bounds = monitor_bounds(res.records);
    s.at_least("h_lower_bound_witness", bounds.inf_h, 1e-6);
    s.add("Hm_sup_finite", std::isfinite(bounds.sup_Hm_max),
          bounds.sup_Hm_max, 0);
    s.at_least("af_residual_min", bounds.min_af_residual, -1e-8);

    // q_defect decreasing over the window
    s.at_most("q_defect_trend",
              res.records.back().q_defect - res.records.front().q_defect,
              0.0);
    return s.results;
}

} // namespace

std::vector<CheckResult> run_verify_suite(const std::string& suite,
                                          std::uint64_t seed) {
    if (suite == "symfun") return verify_symfun(seed);
    if (suite == "constants") return verify_constants(seed);
    if (suite == "geometry") return verify_geometry(seed);
    if (suite == "flow-short") return verify_flow_short(seed);
    throw std::domain_error("unknown verify suite: " + suite);
}

} // namespace hmflow
