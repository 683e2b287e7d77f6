#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hmflow/constants.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace hmflow;

namespace {

// Dense 1-parameter grid oracle for M1 in dimension 2: on the arc
// { |k| = 1, k_i >= eps H } the minimum of min_i dsigma^i is located by
// brute force over the boundary-to-boundary sweep.
double m1_grid_oracle_n2(double eps, const FlowParams& p, int G = 200000) {
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= G; ++s) {
        // sweep k = (c, 1-c) H with c in [eps, 1/2]
        const double c = eps + (0.5 - eps) * s / G;
        std::vector<double> k{c, 1.0 - c};
        const double nrm = oracle::norm2(k);
        for (auto& v : k) v /= nrm;
        auto g = sigma_grad(k, p);
        best = std::min(best, std::min(g[0], g[1]));
    }
    return best;
}

} // namespace

TEST_CASE("M1 for linear speed is the constant gradient") {
    FlowParams p{2, 1, 1.0}; // sigma = H/2
    for (double eps : {0.05, 0.2, 0.4})
        CHECK(estimate_M1(eps, p) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("M1 n=2 m=1 beta=2 against grid-search oracle") {
    FlowParams p{2, 1, 2.0}; // dsigma^i = H/2, minimized at the most
                             // unequal point of the slice
    for (double eps : {0.1, 0.25, 0.4}) {
        const double got = estimate_M1(eps, p);
        const double want = m1_grid_oracle_n2(eps, p);
        CHECK(got == doctest::Approx(want).epsilon(1e-7));
        // closed form of the boundary point
        const double closed =
            0.5 / std::sqrt(eps * eps + (1.0 - eps) * (1.0 - eps));
        CHECK(got == doctest::Approx(closed).epsilon(1e-9));
    }
}

TEST_CASE("M1 increasing, M2 decreasing in eps") {
    FlowParams p{2, 2, 1.0};
    double prev_m1 = 0.0;
    double prev_m2 = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 10; ++i) {
        const double eps = 0.5 * i / 11.0;
        const double m1 = estimate_M1(eps, p);
        const double m2 = estimate_M2(eps, p);
        CHECK(m1 >= prev_m1 - 1e-8);
        CHECK(m2 <= prev_m2 + 1e-8);
        prev_m1 = m1;
        prev_m2 = m2;
    }
}

TEST_CASE("M2 vanishes for the linear speed") {
    FlowParams p{2, 1, 1.0};
    CHECK(estimate_M2(0.1, p) == 0.0);
    CHECK(estimate_M2(0.3, p) == 0.0);
}

TEST_CASE("M2 for sigma = K in n=2 against dense random sampling") {
    // Hessian of k1 k2 has eigenvalues +-1 on diagonal perturbations and
    // divided difference -1 off-diagonal, so the slice bound is exactly 1.
    FlowParams p{2, 2, 1.0};
    const double got = estimate_M2(0.2, p);
    CHECK(got == doctest::Approx(1.0).epsilon(1e-9));

    // brute-force sampling of (k, B) never exceeds the estimate
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double brute = 0.0;
    for (int it = 0; it < 200000; ++it) {
        const double c = 0.2 + 0.3 * std::abs(u(rng));
        std::vector<double> k{c, 1.0 - c};
        const double nrm = oracle::norm2(k);
        for (auto& v : k) v /= nrm;
        std::vector<double> B{u(rng), 0.0, 0.0, u(rng)};
        B[1] = B[2] = u(rng);
        double fro = 0.0;
        for (double b : B) fro += b * b;
        fro = std::sqrt(fro);
        for (auto& b : B) b /= fro;
        brute = std::max(brute, std::abs(sigma_hessian_form(k, B, p)));
    }
    CHECK(brute <= got + 1e-9);
    CHECK(brute == doctest::Approx(got).epsilon(1e-2));
}

TEST_CASE("eps* bracketing and residual") {
    FlowParams p{2, 1, 2.0};
    ConstantsOptions opt;
    CHECK(eqeps_lhs(1e-4, p, opt) < 0.0);
    CHECK(eqeps_lhs(0.5 - 1e-4, p, opt) > 0.0);

    const double eps = solve_eps_star(p, opt);
    CHECK(eps > 0.0);
    CHECK(eps < 0.5);
    const double resid = eqeps_lhs(eps, p, opt);
    const double m1 = estimate_M1(eps, p, opt);
    CHECK(std::abs(resid) <= 1e-6 * m1 * eps * eps);
}

TEST_CASE("eps* degenerate linear case returns the floor") {
    FlowParams p{2, 1, 1.0};
    CHECK(solve_eps_star(p) == doctest::Approx(0.25)); // 0.5/n
}

TEST_CASE("eps* stable under doubled sample density") {
    FlowParams p{2, 2, 1.0};
    ConstantsOptions a;
    ConstantsOptions b;
    b.coarse_samples = 2 * a.coarse_samples;
    CHECK(solve_eps_star(p, a) ==
          doctest::Approx(solve_eps_star(p, b)).epsilon(1e-6));
}

TEST_CASE("pinch constant closed form and grid search") {
    CHECK(pinch_constant_from_eps(0.25, 2) == doctest::Approx(3.0 / 16.0));
    CHECK(pinch_constant_from_eps(0.1, 3) ==
          doctest::Approx(0.1 * 0.45 * 0.45).epsilon(1e-14));

    // eps -> 1/n limit approaches 1/n^n from below
    for (int n : {2, 3, 4}) {
        CHECK(pinch_constant_from_eps(1.0 / n - 1e-9, n) ==
              doctest::Approx(std::pow(n, -n)).epsilon(1e-6));
        CHECK(pinch_constant_from_eps(1.0 / n - 1e-6, n) < std::pow(n, -n));
    }

    // grid-search oracle over { k_1 = eps H, H = 1 }, remaining mass on a
    // sub-simplex sweep (n = 2, 3)
    for (double eps : {0.05, 0.1, 0.2}) {
        double best2 = 0.0;
        const int G = 4000;
        for (int s = 0; s <= G; ++s) {
            const double k1 = 0.0 + eps * s / G; // min k_i <= eps H
            const double k2 = 1.0 - k1;
            best2 = std::max(best2, k1 * k2);
        }
        CHECK(pinch_constant_from_eps(eps, 2) ==
              doctest::Approx(best2).epsilon(1e-6));

        double best3 = 0.0;
        for (int s = 0; s <= 400; ++s) {
            const double k1 = eps * s / 400.0;
            for (int t = 0; t <= G; ++t) {
                const double k2 = (1.0 - k1) * t / G;
                const double k3 = 1.0 - k1 - k2;
                if (k3 < k1 || k2 < k1) continue; // k1 is the min entry
                best3 = std::max(best3, k1 * k2 * k3);
            }
        }
        CHECK(pinch_constant_from_eps(eps, 3) ==
              doctest::Approx(best3).epsilon(1e-5));
    }
}

TEST_CASE("Lemma-type implication: K > C H^n forces min k > eps H") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n : {2, 3, 4}) {
        for (double eps : {0.05, 0.15}) {
            const double C = pinch_constant_from_eps(eps, n);
            int checked = 0;
            for (int it = 0; it < 100000; ++it) {
                std::vector<double> k(n);
                for (auto& v : k) v = u(rng) * (it % 3 == 0 ? 10.0 : 1.0);
                double H = 0.0, K = 1.0, kmin = k[0];
                for (double v : k) {
                    H += v;
                    K *= v;
                    kmin = std::min(kmin, v);
                }
                if (K > C * std::pow(H, n)) {
                    ++checked;
                    CHECK(kmin > eps * H);
                }
            }
            CHECK(checked > 100); // the filter must actually fire
        }
    }
}

TEST_CASE("delta for n=2 is the constant ratio 4") {
    // On H = 1: numerator (k1-k2)^2, denominator (k1-k2)^2/4, so the ratio
    // is identically 4; brute-force scan confirms before we freeze it.
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int s = 1; s < 2000; ++s) {
        const double k1 = 0.5 * s / 2000.0;
        const double k2 = 1.0 - k1;
        const double num = 2.0 * (k1 * k1 + k2 * k2) - 1.0;
        const double den = 0.25 - k1 * k2;
        if (den <= 0.0) continue;
        lo = std::min(lo, num / den);
        hi = std::max(hi, num / den);
    }
    // near the degenerate end of the sweep the cancellation noise in the
    // quotient reaches ~1e-9 relative; the constant is still unambiguous
    CHECK(lo == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(hi == doctest::Approx(4.0).epsilon(1e-8));

    const double delta = estimate_delta_schulze(0.2, 2);
    CHECK(delta == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("delta is positive and never exceeds a sampled ratio") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n : {2, 3}) {
        const double eps = 0.08;
        const double delta = estimate_delta_schulze(eps, n);
        CHECK(delta > 0.0);
        const double inv_nn = std::pow(static_cast<double>(n), -n);
        for (int it = 0; it < 20000; ++it) {
            std::vector<double> k(n);
            double H = 0.0;
            for (auto& v : k) H += (v = 0.01 + u(rng));
            for (auto& v : k) v /= H; // H = 1
            double kmin = k[0], a2 = 0.0, K = 1.0;
            for (double v : k) {
                kmin = std::min(kmin, v);
                a2 += v * v;
                K *= v;
            }
            if (kmin < eps) continue;
            const double den = inv_nn - K;
            if (den < 1e-9) continue;
            const double ratio = (n * a2 - 1.0) / den;
            CHECK(delta <= ratio + 1e-7);
        }
    }
}

TEST_CASE("compute_C_p assembles a consistent report") {
    for (const auto& p :
         {FlowParams{2, 1, 2.0}, FlowParams{2, 2, 1.0}, FlowParams{3, 2, 1.5}}) {
        const auto rep = compute_C_p(p);
        CHECK(rep.C_p > 0.0);
        CHECK(rep.C_p < std::pow(static_cast<double>(p.n), -p.n));
        CHECK(rep.C_p ==
              doctest::Approx(pinch_constant_from_eps(rep.eps_star, p.n)));
        CHECK(std::abs(rep.eqeps_residual) <=
              1e-6 * rep.M1 * rep.eps_star * rep.eps_star);
        CHECK(rep.delta_schulze > 0.0);

        // determinism: identical seed, identical serialized report
        const auto rep2 = compute_C_p(p);
        CHECK(serialize(rep) == serialize(rep2));
    }
}

TEST_CASE("report serialization format") {
    FlowParams p{2, 2, 1.0};
    const auto rep = compute_C_p(p);
    const auto text = serialize(rep);
    CHECK(text.find("n = 2") != std::string::npos);
    CHECK(text.find("m = 2") != std::string::npos);
    CHECK(text.find("eps_star = ") != std::string::npos);
    CHECK(text.find("C_p = ") != std::string::npos);
    CHECK(text.find("delta = ") != std::string::npos);
    CHECK(text.find("seed = 42") != std::string::npos);
}
