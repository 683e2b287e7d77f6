#pragma once

// Numerical realization of the pinching-constant pipeline: the extremal
// gradient/Hessian constants M1(eps), M2(eps) of the speed on the compact
// cone slices K_eps, the root eps* of
//
//     M1(eps) eps^2 - 2 n^{3/2} (1 - n eps) M2(eps) = 0,
//
// the pinching constant C_p = C(eps*, n) with
// C(eps, n) = max{ K/H^n : k >= 0, min k_i <= eps H, |k| = 1 }, and the
// umbilicity-gap constant delta(eps, n) of the inequality
// (n|A|^2 - H^2)/H^2 >= delta (1/n^n - K/H^n) on { k_1 >= eps H }.

#include "hmflow/symfun.hpp"

#include <cstdint>
#include <string>

namespace hmflow {

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConstantsOptions {
    int coarse_samples = 512;  // low-discrepancy pre-samples per estimate
    double polish_step_min = 1e-11;
    double bisect_width = 1e-12;
    uint64_t seed = 42;
    // Floor returned for eps* when the speed is linear (m = 1, beta = 1)
    // and the root equation degenerates to M1 eps^2 = 0.
    double linear_floor_scale = 0.5; // eps* = linear_floor_scale / n
};

struct PinchingReport {
    FlowParams params;
    double eps_star = 0.0;
    double M1 = 0.0;
    double M2 = 0.0;
    double C_p = 0.0;
    double delta_schulze = 0.0;
    double eqeps_residual = 0.0; // M1 e^2 - 2 n^{3/2}(1-n e) M2 at eps_star
    long sample_count = 0;
    std::uint64_t seed = 0;
    bool degenerate_linear = false;
};

// min{ dsigma^i(k) : i, k in K_eps, |k| = 1 }; strictly positive.
double estimate_M1(double eps, const FlowParams& p,
                   const ConstantsOptions& opt = {});

// max over k in K_eps with |k| = 1 and unit-Frobenius symmetric B of
// |sigma_hessian_form(k, B)|. The inner maximum over B is exact (the
// quadratic form diagonalizes into the k-Hessian block plus the divided
// differences); only the outer maximum over k is searched.
double estimate_M2(double eps, const FlowParams& p,
                   const ConstantsOptions& opt = {});

// Left side of the root equation at eps.
double eqeps_lhs(double eps, const FlowParams& p,
                 const ConstantsOptions& opt = {});

// Unique root of the equation in (0, 1/n) by bisection; falls back to the
// configured floor for the linear speed. Throws NumericalFailure when no
// sign change can be bracketed.
double solve_eps_star(const FlowParams& p, const ConstantsOptions& opt = {});

// C(eps, n) = eps (1-eps)^{n-1} / (n-1)^{n-1}: the maximum of K/H^n over
// nonnegative vectors with min k_i <= eps H. K > C(eps,n) H^n then forces
// min k_i > eps H.
double pinch_constant_from_eps(double eps, int n);

// Largest delta valid on { k_1 >= eps H, H = 1 }: infimum of the ratio
// (n|A|^2 - H^2) / (1/n^n - K/H^n) away from the umbilic diagonal, combined
// with the diagonal limit obtained by finite-difference extrapolation.
double estimate_delta_schulze(double eps, int n,
                              const ConstantsOptions& opt = {});

PinchingReport compute_C_p(const FlowParams& p,
                           const ConstantsOptions& opt = {});

// Flat `key = value` text record (keys: n, m, beta, eps_star, M1, M2, C_p,
// delta, seed).
std::string serialize(const PinchingReport& rep);

} // namespace hmflow
