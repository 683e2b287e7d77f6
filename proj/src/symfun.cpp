#include "hmflow/symfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace hmflow {

namespace {

void require_dim(std::span<const double> kappa) {
    const int n = static_cast<int>(kappa.size());
    if (n < 2 || n > kMaxDim)
        throw std::domain_error("curvature vector dimension out of range: " +
                                std::to_string(n));
}

// e_m via the coefficient recurrence of prod_i (x + k_i); O(n*m), no
// allocation. deg must be <= kMaxDim.
double elem_sym_raw(std::span<const double> k, int deg, int skip_a = -1,
                    int skip_b = -1) {
    std::array<double, kMaxDim + 1> e{};
    e[0] = 1.0;
    int used = 0;
    for (int i = 0; i < static_cast<int>(k.size()); ++i) {
        if (i == skip_a || i == skip_b) continue;
        ++used;
        const int top = std::min(deg, used);
        for (int j = top; j >= 1; --j) e[j] += k[i] * e[j - 1];
    }
    return deg <= used ? e[deg] : 0.0;
}

double pow_fast(double x, double p) {
    if (p == 1.0) return x;
    if (p == 2.0) return x * x;
    return std::pow(x, p);
}

struct SigmaDerivs {
    double hm;            // H_m
    double sig;           // H_m^beta
    double dsig_pref;     // beta * H_m^{beta-1}
    double ddsig_pref;    // beta * (beta-1) * H_m^{beta-2}
    double inv_binom;
    std::array<double, kMaxDim> dhm; // dH_m/dk_i
};

SigmaDerivs grad_core(std::span<const double> kappa, const FlowParams& p) {
    require_dim(kappa);
    p.validate();
    if (p.n != static_cast<int>(kappa.size()))
        throw std::domain_error("curvature vector length does not match n");
    if (!in_positive_cone(kappa))
        throw std::domain_error(
            "sigma derivatives need the positive cone (some k_i <= 0)");

    SigmaDerivs d;
    d.inv_binom = 1.0 / binomial(p.n, p.m);
    d.hm = elem_sym_raw(kappa, p.m) * d.inv_binom;
    d.sig = pow_fast(d.hm, p.beta);
    d.dsig_pref = p.beta * pow_fast(d.hm, p.beta - 1.0);
    d.ddsig_pref = p.beta * (p.beta - 1.0) * pow_fast(d.hm, p.beta - 2.0);
    for (int i = 0; i < p.n; ++i)
        d.dhm[i] = elem_sym_raw(kappa, p.m - 1, i) * d.inv_binom;
    return d;
}

} // namespace

void FlowParams::validate() const {
    if (n < 2 || n > kMaxDim)
        throw std::domain_error("dimension n must be in [2, " +
                                std::to_string(kMaxDim) + "]");
    if (m < 1 || m > n)
        throw std::domain_error("order m must be in {1, .., n}");
    if (!(mbeta() >= 1.0) || !std::isfinite(beta))
        throw std::domain_error("need m*beta >= 1 (degree of the speed)");
}

double binomial(int n, int m) {
    if (m < 0 || m > n) return 0.0;
    m = std::min(m, n - m);
    double c = 1.0;
    for (int i = 1; i <= m; ++i) c = c * (n - m + i) / i;
    return c;
}

bool in_positive_cone(std::span<const double> kappa) {
    return std::all_of(kappa.begin(), kappa.end(),
                       [](double k) { return k > 0.0; });
}

double elem_sym_normalized(std::span<const double> kappa, int m) {
    require_dim(kappa);
    const int n = static_cast<int>(kappa.size());
    if (m < 1 || m > n)
        throw std::domain_error("elem_sym_normalized: m out of range");
    return elem_sym_raw(kappa, m) / binomial(n, m);
}

double sigma(std::span<const double> kappa, const FlowParams& p) {
    p.validate();
    if (p.n != static_cast<int>(kappa.size()))
        throw std::domain_error("curvature vector length does not match n");
    const double hm = elem_sym_normalized(kappa, p.m);
    if (!(hm > 0.0))
        throw std::domain_error(
            "speed undefined outside positive-H_m cone (H_m <= 0)");
    return pow_fast(hm, p.beta);
}

void sigma_grad(std::span<const double> kappa, const FlowParams& p,
                std::span<double> out) {
    const SigmaDerivs d = grad_core(kappa, p);
    if (static_cast<int>(out.size()) != p.n)
        throw std::domain_error("sigma_grad: bad output size");
    for (int i = 0; i < p.n; ++i) out[i] = d.dsig_pref * d.dhm[i];
}

std::vector<double> sigma_grad(std::span<const double> kappa,
                               const FlowParams& p) {
    std::vector<double> g(kappa.size());
    sigma_grad(kappa, p, g);
    return g;
}

void sigma_hessian_k(std::span<const double> kappa, const FlowParams& p,
                     std::span<double> out) {
    const SigmaDerivs d = grad_core(kappa, p);
    const int n = p.n;
    if (static_cast<int>(out.size()) != n * n)
        throw std::domain_error("sigma_hessian_k: bad output size");
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            // d2H_m/dk_i dk_j = e_{m-2}(kappa minus i,j)/binom for i != j,
            // and 0 on the diagonal (e_m is multilinear).
            double d2hm = 0.0;
            if (i != j)
                d2hm = elem_sym_raw(kappa, p.m - 2, i, j) * d.inv_binom;
            out[i * n + j] =
                d.ddsig_pref * d.dhm[i] * d.dhm[j] + d.dsig_pref * d2hm;
        }
    }
}

double sigma_grad_quotient(std::span<const double> kappa, const FlowParams& p,
                           int i, int j) {
    const SigmaDerivs d = grad_core(kappa, p);
    if (i == j) throw std::domain_error("sigma_grad_quotient: i == j");
    double norm = 0.0;
    for (double k : kappa) norm += k * k;
    norm = std::sqrt(norm);
    const double diff = kappa[i] - kappa[j];
    if (std::abs(diff) >= 1e-8 * norm) {
        return d.dsig_pref * (d.dhm[i] - d.dhm[j]) / diff;
    }
    // Degenerate eigenvalues: limit of the quotient is
    // d2sigma/dk_i^2 - d2sigma/dk_i dk_j.
    const double hess_ii = d.ddsig_pref * d.dhm[i] * d.dhm[i];
    const double hess_ij =
        d.ddsig_pref * d.dhm[i] * d.dhm[j] +
        d.dsig_pref * elem_sym_raw(kappa, p.m - 2, i, j) * d.inv_binom;
    return hess_ii - hess_ij;
}

double sigma_hessian_form(std::span<const double> kappa,
                          std::span<const double> B, const FlowParams& p) {
    const int n = p.n;
    if (static_cast<int>(B.size()) != n * n)
        throw std::domain_error("sigma_hessian_form: B must be n x n");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (B[i * n + j] != B[j * n + i])
                throw std::domain_error("sigma_hessian_form: B not symmetric");

    std::array<double, kMaxDim * kMaxDim> hess;
    sigma_hessian_k(kappa, p, std::span<double>(hess.data(), n * n));

    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            total += hess[i * n + j] * B[i * n + i] * B[j * n + j];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double bij = B[i * n + j];
            if (bij != 0.0)
                total += sigma_grad_quotient(kappa, p, i, j) * bij * bij;
        }
    return total;
}

SlackCheck check_maclaurin(std::span<const double> kappa, int m) {
    require_dim(kappa);
    if (!in_positive_cone(kappa))
        throw std::domain_error("check_maclaurin needs the positive cone");
    const int n = static_cast<int>(kappa.size());
    if (m < 1 || m > n) throw std::domain_error("check_maclaurin: bad m");
    double H = 0.0;
    for (double k : kappa) H += k;
    const double hm = elem_sym_normalized(kappa, m);
    const double slack = H / n - std::pow(hm, 1.0 / m);
    return {slack >= -1e-12 * H / n, slack};
}

SlackCheck check_trace_bound(std::span<const double> kappa,
                             const FlowParams& p) {
    const SigmaDerivs d = grad_core(kappa, p);
    double tr = 0.0;
    for (int i = 0; i < p.n; ++i) tr += d.dsig_pref * d.dhm[i];
    const double mb = p.mbeta();
    const double bound = mb * std::pow(d.sig, 1.0 - 1.0 / mb);
    const double slack = tr - bound;
    return {slack >= -1e-12 * tr, slack};
}

PointEval sigma_point_eval(std::span<const double> kappa,
                           const FlowParams& p) {
    PointEval e;
    const double inv_binom = 1.0 / binomial(p.n, p.m);
    e.Hm = elem_sym_raw(kappa, p.m) * inv_binom;
    if (!(e.Hm > 0.0)) return e;
    e.in_cone = true;
    e.sigma = pow_fast(e.Hm, p.beta);
    const double pref = p.beta * pow_fast(e.Hm, p.beta - 1.0);
    for (int i = 0; i < p.n; ++i) {
        e.grad[i] = pref * elem_sym_raw(kappa, p.m - 1, i) * inv_binom;
        e.tr_grad += e.grad[i];
    }
    return e;
}

bool cone_membership(std::span<const double> kappa, double eps) {
    require_dim(kappa);
    const int n = static_cast<int>(kappa.size());
    if (!(eps > 0.0) || !(eps <= 1.0 / n))
        throw std::domain_error("cone_membership: eps must lie in (0, 1/n]");
    double H = 0.0, kmin = kappa[0];
    for (double k : kappa) {
        H += k;
        kmin = std::min(kmin, k);
    }
    return H > 0.0 && kmin >= eps * H;
}

} // namespace hmflow
