#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hmflow/flow.hpp"

#include <algorithm>
#include <cmath>

using namespace hmflow;

namespace {

RunConfig ellipsoid_config(double a, int N, double t_end) {
    RunConfig cfg;
    cfg.params = {2, 1, 2.0};
    cfg.init = RunConfig::Init::Ellipsoid;
    cfg.a = a;
    cfg.b = 1.0;
    cfg.N = N;
    cfg.t_end = t_end;
    cfg.cadence = 0.02;
    cfg.check_initial_pinching = false;
    return cfg;
}

} // namespace

TEST_CASE("sphere is stationary under the volume-preserving flow") {
    RunConfig cfg;
    cfg.params = {2, 1, 2.0};
    cfg.init = RunConfig::Init::Sphere;
    cfg.radius = 1.0;
    cfg.N = 64;
    cfg.t_end = 0.25;
    cfg.cadence = 0.05;
    cfg.check_initial_pinching = false;
    const RunResult res = run(cfg);
    REQUIRE_FALSE(res.failed);
    double disp = 0.0;
    for (int j = 0; j <= 64; ++j)
        disp = std::max(disp, std::abs(res.final_state.profile.r[j] -
                                       res.initial_profile.r[j]));
    CHECK(disp <= 1e-13);
    for (const auto& r : res.records) {
        CHECK(r.V == doctest::Approx(res.records[0].V).epsilon(1e-13));
        CHECK(r.q_min ==
              doctest::Approx(res.records[0].q_min).epsilon(1e-13));
    }
}

TEST_CASE("select_dt closed form on the sphere") {
    // n=2, m=1, beta=2: tr dsigma = H = 2/R, so dt = cfl dtheta^2 R^3 / 2
    const double R = 1.3;
    auto st = make_state(make_sphere(2, 64, R), 0.0, FlowParams{2, 1, 2.0},
                         true);
    const double dth = st.grid->dtheta;
    CHECK(select_dt(st, 0.2) ==
          doctest::Approx(0.2 * dth * dth * R * R * R / 2.0).epsilon(1e-12));
    // quadratic scaling in dtheta
    auto st2 = make_state(make_sphere(2, 128, R), 0.0, FlowParams{2, 1, 2.0},
                          true);
    CHECK(select_dt(st2, 0.2) ==
          doctest::Approx(select_dt(st, 0.2) / 4.0).epsilon(1e-12));
    CHECK(select_dt(st, 0.2) > 0.0);
}

TEST_CASE("contracting sphere follows the closed-form radius") {
    RunConfig cfg;
    cfg.params = {2, 1, 2.0}; // m beta = 2, extinction at t = 1/3
    cfg.init = RunConfig::Init::Sphere;
    cfg.radius = 1.0;
    cfg.N = 16;
    cfg.t_end = 0.2;
    cfg.cadence = 0.05;
    cfg.fixed_dt = 1e-4;
    cfg.volume_preserving = false;
    cfg.check_initial_pinching = false;
    const RunResult res = run(cfg);
    REQUIRE_FALSE(res.failed);
    const double exact = contracting_sphere_radius(1.0, 2.0, 0.2);
    CHECK(std::pow(0.4, 1.0 / 3.0) == doctest::Approx(exact));
    for (int j = 0; j <= 16; ++j)
        CHECK(res.final_state.profile.r[j] ==
              doctest::Approx(exact).epsilon(1e-6));
    // h column is zero in the comparison mode
    for (const auto& r : res.records) CHECK(r.h == 0.0);
}

TEST_CASE("one step matches the sphere ODE at O(dt^3)") {
    const double R0 = 1.0, mb = 2.0;
    for (double dt : {1e-3, 5e-4, 2.5e-4}) {
        auto st = make_state(make_sphere(2, 32, R0), 0.0, FlowParams{2, 1, 2.0},
                             false);
        auto next = step(st, dt);
        const double exact = contracting_sphere_radius(R0, mb, dt);
        const double err = std::abs(next.profile.r[7] - exact);
        CHECK(err < 10.0 * dt * dt * dt);
    }
}

TEST_CASE("reflection-symmetric states stay symmetric bitwise") {
    auto cfg = ellipsoid_config(1.2, 64, 0.0);
    auto st = make_state(make_ellipsoid(2, 64, 1.2, 1.0), 0.0, cfg.params,
                         true);
    for (int it = 0; it < 25; ++it) {
        st = step(st, select_dt(st, 0.2));
        for (int j = 0; j <= 64; ++j)
            CHECK(st.profile.r[j] == st.profile.r[64 - j]);
    }
}

TEST_CASE("volume is preserved and drift shrinks at second order in dt") {
    auto drift_at = [&](double cfl) {
        auto cfg = ellipsoid_config(1.1, 96, 0.4);
        cfg.cfl = cfl;
        const RunResult res = run(cfg);
        REQUIRE_FALSE(res.failed);
        const double V0 = res.records[0].V;
        double d = 0.0;
        for (const auto& r : res.records)
            d = std::max(d, std::abs(r.V - V0) / V0);
        return d;
    };
    const double d1 = drift_at(0.2);
    const double d2 = drift_at(0.1);
    CHECK(d1 < 1e-6);
    CHECK(d1 / d2 > 3.5); // ~4x at second order
}

TEST_CASE("q_min monotone and h bounded on a short pinched run") {
    auto cfg = ellipsoid_config(1.05, 128, 0.5);
    const RunResult res = run(cfg);
    REQUIRE_FALSE(res.failed);
    const auto mon = monitor_q_min(res.records, res.final_state.grid->dtheta);
    CHECK(mon.violations == 0);
    for (const auto& r : res.records) {
        CHECK(r.h >= r.sigma_min - 1e-13);
        CHECK(r.h <= r.sigma_max + 1e-13);
    }
    // q_defect shrinks toward the sphere value
    CHECK(res.records.back().q_defect < res.records.front().q_defect);
}

TEST_CASE("monitor flags an artificial dip in q_min") {
    auto cfg = ellipsoid_config(1.05, 64, 0.2);
    RunResult res = run(cfg);
    REQUIRE_FALSE(res.failed);
    auto records = res.records;
    REQUIRE(records.size() >= 3);
    records[records.size() / 2].q_min -= 0.05; // inject a dip
    const auto mon = monitor_q_min(records, res.final_state.grid->dtheta);
    CHECK(mon.violations > 0);
    CHECK(mon.c_required > 1.0);
}

TEST_CASE("volume projection holds the enclosed volume to roundoff") {
    auto cfg = ellipsoid_config(1.2, 64, 0.3);
    cfg.volume_projection = true;
    const RunResult res = run(cfg);
    REQUIRE_FALSE(res.failed);
    const double V0 = res.records[0].V;
    for (const auto& r : res.records)
        CHECK(std::abs(r.V - V0) / V0 < 1e-13);
}

TEST_CASE("convergence-rate fit on a pinched ellipsoid run") {
    auto cfg = ellipsoid_config(1.08, 96, 6.0);
    cfg.cadence = 0.05;
    const RunResult res = run(cfg);
    REQUIRE_FALSE(res.failed);
    const auto fit = fit_convergence_rate(res.records);
    CHECK(fit.applicable);
    CHECK(fit.slope < 0.0);
    CHECK(fit.r_squared > 0.95);

    // sphere: not applicable (q_defect at the noise floor)
    RunConfig sc;
    sc.params = {2, 1, 2.0};
    sc.init = RunConfig::Init::Sphere;
    sc.N = 32;
    sc.t_end = 0.2;
    sc.cadence = 0.02;
    sc.check_initial_pinching = false;
    const auto sres = run(sc);
    CHECK_FALSE(fit_convergence_rate(sres.records).applicable);
}

TEST_CASE("speed-evolution residual vanishes on the sphere") {
    auto st = make_state(make_sphere(2, 64, 1.0), 0.0, FlowParams{2, 1, 2.0},
                         true);
    auto next = step(st, 1e-4);
    const auto res = verify_speed_evolution(st, next);
    CHECK(res.max_abs < 1e-10);
}

TEST_CASE("speed-evolution residual on the contracting sphere") {
    // spatially constant but time-dependent: checks the identity's
    // reaction term d sigma/dt = sigma tr(alpha A) with h = 0
    auto st = make_state(make_sphere(2, 64, 1.0), 0.0, FlowParams{2, 1, 2.0},
                         false);
    for (double dt : {2e-4, 1e-4, 5e-5}) {
        auto next = step(st, dt);
        const auto res = verify_speed_evolution(st, next);
        CHECK(res.max_abs < 50.0 * dt * dt / dt); // O(dt) via midpoint: loose
        CHECK(res.max_abs < 1e-2 * 1.0);
    }
    // midpoint evaluation makes the residual O(dt^2)
    auto r1 = verify_speed_evolution(st, step(st, 2e-4)).max_abs;
    auto r2 = verify_speed_evolution(st, step(st, 1e-4)).max_abs;
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("speed-evolution residual drops ~4x under grid doubling") {
    auto residual_at = [&](int N) {
        auto st = make_state(make_ellipsoid(2, N, 1.1, 1.0), 0.0,
                             FlowParams{2, 1, 2.0}, true);
        // dt proportional to dtheta^2; settle to a common time first so the
        // grid-scale start-up transient has decayed
        const double dt = 0.05 * std::pow(M_PI / N, 2.0);
        const int settle = 60 * (N / 96) * (N / 96);
        for (int i = 0; i < settle; ++i) st = step(st, dt);
        auto next = step(st, dt);
        return verify_speed_evolution(st, next).max_abs;
    };
    const double rA = residual_at(96);
    const double rB = residual_at(192);
    const double order = std::log2(rA / rB);
    CHECK(order == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("tr(alpha A) lower bound on pinched states") {
    // On K_eps states: sum dsigma^i k_i^2 >= eps * m beta * sigma * H
    auto st = make_state(make_ellipsoid(2, 128, 1.15, 1.0), 0.0,
                         FlowParams{2, 1, 2.0}, true);
    const auto& f = st.field;
    for (int j = 0; j <= 128; ++j) {
        const double H = f.H[j];
        const double kmin = std::min(f.k_profile[j], f.k_rot[j]);
        const double eps = kmin / H;
        const double tr_aA = f.sdot_profile[j] * f.k_profile[j] *
                                 f.k_profile[j] +
                             f.sdot_rot[j] * f.k_rot[j] * f.k_rot[j];
        CHECK(tr_aA >= eps * 2.0 * f.sigma[j] * H - 1e-12);
    }
}

TEST_CASE("step failure reports the offending node") {
    auto st = make_state(make_sphere(2, 32, 0.05), 0.0, FlowParams{2, 1, 2.0},
                         false);
    // contracting with a huge step drives r through zero
    CHECK_THROWS_AS(step(st, 1.0), StepFailure);
    try {
        step(st, 1.0);
    } catch (const StepFailure& e) {
        CHECK(e.node >= 0);
        CHECK(e.node <= 32);
    }
}

TEST_CASE("run is deterministic") {
    auto cfg = ellipsoid_config(1.1, 64, 0.3);
    const RunResult a = run(cfg);
    const RunResult b = run(cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].V == b.records[i].V);
        CHECK(a.records[i].q_min == b.records[i].q_min);
        CHECK(a.records[i].dt == b.records[i].dt);
    }
}

TEST_CASE("early stop on q_defect") {
    auto cfg = ellipsoid_config(1.05, 96, 50.0);
    cfg.stop_q_defect = 1e-6;
    cfg.cadence = 0.05;
    const RunResult res = run(cfg);
    REQUIRE_FALSE(res.failed);
    CHECK(res.stopped_on_q_defect);
    CHECK(res.final_state.t < 50.0);
    CHECK(res.records.back().q_defect < 1e-6);
}

TEST_CASE("config validation") {
    RunConfig cfg;
    cfg.params = {2, 1, 2.0};
    cfg.t_end = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::domain_error);
    cfg.t_end = 1.0;
    cfg.cfl = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::domain_error);
    cfg.cfl = 0.2;
    cfg.N = 63;
    CHECK_THROWS_AS(cfg.validate(), std::domain_error);
    cfg.N = 64;
    CHECK_NOTHROW(cfg.validate());
}
