#pragma once

// Pointwise symmetric-function kernel for curvature-driven speeds.
//
// The speed of the flow is sigma = H_m^beta, where H_m is the m-th mean
// curvature: the m-th elementary symmetric polynomial of the principal
// curvatures normalized by binom(n,m), so that H_1 = H/n and H_n = K and
// H_m = 1 on the unit sphere. sigma is positively homogeneous of degree
// m*beta in the curvatures.

#include <array>
#include <span>
#include <stdexcept>
#include <vector>

namespace hmflow {

// Principal curvatures at a point; order does not matter (all functions
// here are symmetric). Entries have units 1/length.
using CurvatureVector = std::vector<double>;

inline constexpr int kMaxDim = 32;

struct FlowParams {
    int n = 2;         // hypersurface dimension, >= 2
    int m = 1;         // mean-curvature order, in {1, .., n}
    double beta = 1.0; // power; the strict regime is beta > 1/m

    double mbeta() const { return static_cast<double>(m) * beta; }

    // Accepts the degenerate boundary m*beta == 1 (linear speed); rejects
    // m*beta < 1, where the machinery below is not valid.
    void validate() const;
};

// Boolean predicate plus the signed margin it was decided on, so tests can
// assert quantitative slack rather than a bare bool.
struct SlackCheck {
    bool ok = false;
    double slack = 0.0;
};

double binomial(int n, int m);

bool in_positive_cone(std::span<const double> kappa);

// H_m(kappa) = e_m(kappa) / binom(n,m). Defined for any real kappa.
double elem_sym_normalized(std::span<const double> kappa, int m);

// sigma = H_m^beta. Requires H_m(kappa) > 0 (the natural domain of the
// speed); throws std::domain_error otherwise.
double sigma(std::span<const double> kappa, const FlowParams& p);

// d sigma / d k_i = beta H_m^{beta-1} dH_m/dk_i. Requires kappa in the
// positive cone; every component is then strictly positive.
void sigma_grad(std::span<const double> kappa, const FlowParams& p,
                std::span<double> out);
std::vector<double> sigma_grad(std::span<const double> kappa,
                               const FlowParams& p);

// Hessian of sigma as a function of the k_i (the "diagonal block" of the
// full second derivative in matrix space). out is row-major n x n.
void sigma_hessian_k(std::span<const double> kappa, const FlowParams& p,
                     std::span<double> out);

// Divided difference (dsigma^i - dsigma^j)/(k_i - k_j), i != j, with the
// analytic limit d2sigma/dk_i^2 - d2sigma/dk_i dk_j substituted when
// |k_i - k_j| < 1e-8 * |kappa|.
double sigma_grad_quotient(std::span<const double> kappa, const FlowParams& p,
                           int i, int j);

// Second derivative of sigma as a function of the shape operator, applied
// twice to the symmetric matrix B (row-major n x n), evaluated in the frame
// where the shape operator is diag(kappa):
//
//   sum_{i,j} d2sigma/dk_i dk_j B_ii B_jj
//     + sum_{i != j} (dsigma^i - dsigma^j)/(k_i - k_j) B_ij^2.
double sigma_hessian_form(std::span<const double> kappa,
                          std::span<const double> B, const FlowParams& p);

// H_m^{1/m} <= H/n on the positive cone; slack = H/n - H_m^{1/m}.
SlackCheck check_maclaurin(std::span<const double> kappa, int m);

// tr(dsigma) >= m beta sigma^{1 - 1/(m beta)} on the positive cone;
// slack = tr(dsigma) - bound.
SlackCheck check_trace_bound(std::span<const double> kappa,
                             const FlowParams& p);

// Membership in K_eps = { min_i k_i >= eps * H > 0 }, 0 < eps <= 1/n.
bool cone_membership(std::span<const double> kappa, double eps);

// One-pass point evaluation for field assembly. Unlike sigma()/sigma_grad()
// this does not throw on cone exit: in_cone reports H_m > 0, and sigma/grad
// are only meaningful when it is set. grad uses the same formula as
// sigma_grad but skips the positivity check (needed transiently on states
// whose convexity is monitored rather than enforced).
struct PointEval {
    double Hm = 0.0;
    double sigma = 0.0;
    double tr_grad = 0.0;
    std::array<double, kMaxDim> grad{};
    bool in_cone = false;
};
PointEval sigma_point_eval(std::span<const double> kappa, const FlowParams& p);

} // namespace hmflow
