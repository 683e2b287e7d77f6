#include "hmflow/constants.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>

namespace hmflow {

namespace {

constexpr std::array<int, 32> kPrimes = {
    2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,  37,  41,  43,  47,  53,
    59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

// Uniform point on the unit simplex (dimension n, sum = 1) from n-1 sorted
// low-discrepancy coordinates.
void simplex_point(std::uint64_t index, int n, std::span<double> x) {
    std::array<double, kMaxDim + 1> u;
    for (int d = 0; d < n - 1; ++d) u[d] = halton(index, kPrimes[d]);
    std::sort(u.begin(), u.begin() + (n - 1));
    double prev = 0.0;
    for (int d = 0; d < n - 1; ++d) {
        x[d] = u[d] - prev;
        prev = u[d];
    }
    x[n - 1] = 1.0 - prev;
}

using Objective = std::function<double(std::span<const double>)>;

// Deterministic mass-transfer pattern search on the unit simplex.
// Moves shift weight between coordinate pairs, so the iterates stay on the
// simplex exactly and can reach its boundary. Minimizes f.
double polish_on_simplex(std::vector<double>& x, const Objective& f,
                         double step_min) {
    const int n = static_cast<int>(x.size());
    double best = f(x);
    double h = 0.25;
    while (h > step_min) {
        bool improved = false;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                const double d = std::min(h, x[j]);
                if (d <= 0.0) continue;
                x[i] += d;
                x[j] -= d;
                const double v = f(x);
                if (v < best - 1e-300) {
                    best = v;
                    improved = true;
                } else {
                    x[i] -= d;
                    x[j] += d;
                }
            }
        }
        if (!improved) h *= 0.5;
    }
    return best;
}

struct SliceSearch {
    double value = 0.0;
    long evals = 0;
};

// Minimizes `f` over the slice { k_i >= eps H, H = 1 } by low-discrepancy
// sampling of the simplex factor plus pattern-search polish from the best
// starts. `f` receives the curvature vector k = eps*1 + (1 - n eps) x.
SliceSearch minimize_on_slice(double eps, int n, const Objective& f_of_k,
                              const ConstantsOptions& opt) {
    const double span = 1.0 - n * eps;
    long evals = 0;
    std::vector<double> k(n);
    auto f_of_x = [&](std::span<const double> x) {
        for (int i = 0; i < n; ++i) k[i] = eps + span * x[i];
        ++evals;
        return f_of_k(k);
    };

    struct Start {
        double value;
        std::vector<double> x;
    };
    std::vector<Start> starts;
    auto consider = [&](const std::vector<double>& x) {
        starts.push_back({f_of_x(x), x});
    };

    // structured starts: centroid and vertices
    std::vector<double> x(n, 1.0 / n);
    consider(x);
    for (int i = 0; i < n; ++i) {
        std::fill(x.begin(), x.end(), 0.0);
        x[i] = 1.0;
        consider(x);
    }
    const std::uint64_t offset = 1 + (opt.seed % 997);
    for (int s = 0; s < opt.coarse_samples; ++s) {
        simplex_point(offset + s, n, x);
        consider(x);
    }

    std::sort(starts.begin(), starts.end(),
              [](const Start& a, const Start& b) { return a.value < b.value; });
    const int n_polish = std::min<int>(4, static_cast<int>(starts.size()));
    double best = starts.front().value;
    for (int s = 0; s < n_polish; ++s) {
        std::vector<double> xs = starts[s].x;
        best = std::min(best, polish_on_simplex(xs, f_of_x, opt.polish_step_min));
    }
    return {best, evals};
}

void check_eps(double eps, int n) {
    if (!(eps > 0.0) || !(eps < 1.0 / n))
        throw std::domain_error("eps must lie in (0, 1/n)");
}

double norm2(std::span<const double> k) {
    double s = 0.0;
    for (double v : k) s += v * v;
    return std::sqrt(s);
}

// Exact maximum of |sigma_hessian_form(k, B)| over unit-Frobenius symmetric
// B: the form is block-diagonal in (diagonal entries of B) + (off-diagonal
// pairs), so its extreme eigenvalue is max(spectral radius of the k-Hessian,
// max |divided difference|).
double hessian_form_sup(std::span<const double> kappa, const FlowParams& p) {
    const int n = p.n;
    std::array<double, kMaxDim * kMaxDim> hbuf;
    std::span<double> hspan(hbuf.data(), static_cast<size_t>(n) * n);
    sigma_hessian_k(kappa, p, hspan);

    Eigen::MatrixXd D(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) D(i, j) = hbuf[i * n + j];
    double sup = 0.0;
    if (n <= 3) {
        if (n == 2) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es;
            es.computeDirect(D.topLeftCorner<2, 2>(),
                             Eigen::EigenvaluesOnly);
            sup = es.eigenvalues().cwiseAbs().maxCoeff();
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
            es.computeDirect(D.topLeftCorner<3, 3>(),
                             Eigen::EigenvaluesOnly);
            sup = es.eigenvalues().cwiseAbs().maxCoeff();
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            D, Eigen::EigenvaluesOnly);
        sup = es.eigenvalues().cwiseAbs().maxCoeff();
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            sup = std::max(sup, std::abs(sigma_grad_quotient(kappa, p, i, j)));
    return sup;
}

} // namespace

double estimate_M1(double eps, const FlowParams& p,
                   const ConstantsOptions& opt) {
    p.validate();
    check_eps(eps, p.n);
    std::vector<double> grad(p.n);
    auto objective = [&](std::span<const double> k) {
        sigma_grad(k, p, grad);
        const double scale = std::pow(norm2(k), p.mbeta() - 1.0);
        double m = grad[0];
        for (int i = 1; i < p.n; ++i) m = std::min(m, grad[i]);
        return m / scale;
    };
    return minimize_on_slice(eps, p.n, objective, opt).value;
}

double estimate_M2(double eps, const FlowParams& p,
                   const ConstantsOptions& opt) {
    p.validate();
    check_eps(eps, p.n);
    if (p.m == 1 && p.beta == 1.0) return 0.0; // linear speed, zero Hessian
    auto objective = [&](std::span<const double> k) {
        const double scale = std::pow(norm2(k), p.mbeta() - 2.0);
        return -hessian_form_sup(k, p) / scale; // maximize
    };
    return -minimize_on_slice(eps, p.n, objective, opt).value;
}

double eqeps_lhs(double eps, const FlowParams& p,
                 const ConstantsOptions& opt) {
    const double m1 = estimate_M1(eps, p, opt);
    const double m2 = estimate_M2(eps, p, opt);
    const double n = p.n;
    return m1 * eps * eps -
           2.0 * std::pow(n, 1.5) * (1.0 - n * eps) * m2;
}

double solve_eps_star(const FlowParams& p, const ConstantsOptions& opt) {
    p.validate();
    if (p.m == 1 && p.beta == 1.0) {
        // M2 == 0: the equation reduces to M1 eps^2 = 0 with no interior
        // root; return the configured floor.
        return opt.linear_floor_scale / p.n;
    }
    const double margin = 1e-4 / p.n;
    double lo = margin, hi = 1.0 / p.n - margin;
    double flo = eqeps_lhs(lo, p, opt);
    double fhi = eqeps_lhs(hi, p, opt);
    if (!(flo < 0.0) || !(fhi > 0.0)) {
        // refine the bracket by scanning
        constexpr int kScan = 64;
        double prev_e = lo, prev_f = flo;
        bool found = false;
        for (int s = 1; s <= kScan; ++s) {
            const double e = lo + (hi - lo) * s / kScan;
            const double fe = eqeps_lhs(e, p, opt);
            if (prev_f < 0.0 && fe >= 0.0) {
                lo = prev_e;
                flo = prev_f;
                hi = e;
                fhi = fe;
                found = true;
                break;
            }
            prev_e = e;
            prev_f = fe;
        }
        if (!found)
            throw NumericalFailure(
                "eps* bracketing failed: no sign change of the root "
                "equation in (0, 1/n)");
    }
    while (hi - lo > opt.bisect_width) {
        const double mid = 0.5 * (lo + hi);
        const double fm = eqeps_lhs(mid, p, opt);
        if (fm < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double pinch_constant_from_eps(double eps, int n) {
    if (n < 2) throw std::domain_error("pinch_constant_from_eps: n >= 2");
    check_eps(eps, n);
    // max of K/H^n over { k >= 0, min k_i <= eps H }, attained at
    // k = (eps, (1-eps)/(n-1), ..., (1-eps)/(n-1)) H by constrained AM-GM.
    return eps * std::pow((1.0 - eps) / (n - 1), n - 1);
}

double estimate_delta_schulze(double eps, int n, const ConstantsOptions& opt) {
    if (n < 2) throw std::domain_error("estimate_delta_schulze: n >= 2");
    check_eps(eps, n);
    const double inv_nn = std::pow(static_cast<double>(n), -n);
    const double exclusion = 1e-6;

    auto ratio = [&](std::span<const double> k) {
        double H = 0.0, a2 = 0.0, K = 1.0;
        for (double v : k) {
            H += v;
            a2 += v * v;
            K *= v;
        }
        const double H2 = H * H;
        const double num = (n * a2 - H2) / H2;
        const double den = inv_nn - K / std::pow(H, n);
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        return num / den;
    };

    // distance from the umbilic diagonal on the H=1 slice
    auto diag_dist = [&](std::span<const double> k) {
        double s = 0.0;
        for (double v : k) {
            const double d = v - 1.0 / n;
            s += d * d;
        }
        return std::sqrt(s);
    };

    auto objective = [&](std::span<const double> k) {
        if (diag_dist(k) <= exclusion)
            return std::numeric_limits<double>::infinity();
        return ratio(k);
    };
    const double sampled = minimize_on_slice(eps, n, objective, opt).value;

    // Diagonal limit along mean-zero directions, Richardson-extrapolated
    // from two step sizes (the ratio is an even, smooth function of the
    // offset along each direction).
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss;
    double limit = std::numeric_limits<double>::infinity();
    std::vector<double> dir(n), k(n);
    auto probe = [&](std::span<const double> w) {
        double nrm = norm2(w);
        if (nrm == 0.0) return;
        const double t1 = 1e-3, t2 = 5e-4;
        auto at = [&](double t) {
            for (int i = 0; i < n; ++i) k[i] = 1.0 / n + t * w[i] / nrm;
            return ratio(k);
        };
        const double r1 = at(t1), r2 = at(t2);
        limit = std::min(limit, (4.0 * r2 - r1) / 3.0);
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            std::fill(dir.begin(), dir.end(), 0.0);
            dir[i] = 1.0;
            dir[j] = -1.0;
            probe(dir);
        }
    for (int rep = 0; rep < 16; ++rep) {
        double mean = 0.0;
        for (auto& d : dir) mean += (d = gauss(rng));
        for (auto& d : dir) d -= mean / n;
        probe(dir);
    }
    return std::min(sampled, limit);
}

PinchingReport compute_C_p(const FlowParams& p, const ConstantsOptions& opt) {
    p.validate();
    PinchingReport rep;
    rep.params = p;
    rep.seed = opt.seed;
    rep.degenerate_linear = (p.m == 1 && p.beta == 1.0);
    rep.eps_star = solve_eps_star(p, opt);
    rep.M1 = estimate_M1(rep.eps_star, p, opt);
    rep.M2 = estimate_M2(rep.eps_star, p, opt);
    rep.eqeps_residual =
        rep.M1 * rep.eps_star * rep.eps_star -
        2.0 * std::pow(static_cast<double>(p.n), 1.5) *
            (1.0 - p.n * rep.eps_star) * rep.M2;
    rep.C_p = pinch_constant_from_eps(rep.eps_star, p.n);
    rep.delta_schulze = estimate_delta_schulze(rep.eps_star, p.n, opt);
    rep.sample_count = opt.coarse_samples;
    return rep;
}

std::string serialize(const PinchingReport& rep) {
    char buf[1024];
    std::snprintf(buf, sizeof(buf),
                  "n = %d\n"
                  "m = %d\n"
                  "beta = %.17g\n"
                  "eps_star = %.17g\n"
                  "M1 = %.17g\n"
                  "M2 = %.17g\n"
                  "C_p = %.17g\n"
                  "delta = %.17g\n"
                  "seed = %llu\n",
                  rep.params.n, rep.params.m, rep.params.beta, rep.eps_star,
                  rep.M1, rep.M2, rep.C_p, rep.delta_schulze,
                  static_cast<unsigned long long>(rep.seed));
    return buf;
}

} // namespace hmflow
