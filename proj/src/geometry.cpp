#include "hmflow/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace hmflow {

namespace {

double pow_int(double x, int k) {
    double r = 1.0;
    for (; k > 0; k >>= 1, x *= x)
        if (k & 1) r *= x;
    return r;
}

template <class F>
double simpson(const AngularGrid& g, F&& f) {
    double s = f(0) + f(g.N);
    for (int j = 1; j < g.N; ++j) s += f(j) * ((j & 1) ? 4.0 : 2.0);
    return s * g.dtheta / 3.0;
}

void check_grid(const RadialProfile& prof, const AngularGrid& grid) {
    if (grid.N != prof.segments())
        throw std::invalid_argument("grid/profile resolution mismatch");
}

// Profile and rotational principal curvatures; independent of the speed
// parameters. Poles use the smoothness closure k_rot = k_profile.
void principal_curvatures(const RadialProfile& prof, const AngularGrid& grid,
                          std::vector<double>& kp, std::vector<double>& kr) {
    const int N = prof.segments();
    for (int j = 0; j <= N; ++j)
        if (!(prof.r[j] > 0.0)) throw StarShapednessLost(j);

    std::vector<double> rt, rtt;
    radial_derivatives(prof, grid, rt, rtt);
    kp.resize(N + 1);
    kr.resize(N + 1);
    for (int j = 0; j <= N; ++j) {
        const double r = prof.r[j];
        const double t = rt[j];
        const double J2 = r * r + t * t;
        const double J = std::sqrt(J2);
        kp[j] = (r * r + 2.0 * t * t - r * rtt[j]) / (J2 * J);
        if (j == 0 || j == N)
            kr[j] = kp[j];
        else
            kr[j] = (r * grid.sin_t[j] - t * grid.cos_t[j]) /
                    (r * grid.sin_t[j] * J);
    }
}

} // namespace

AngularGrid AngularGrid::make(int N) {
    AngularGrid g;
    g.N = N;
    g.dtheta = M_PI / N;
    g.theta.resize(N + 1);
    g.sin_t.resize(N + 1);
    g.cos_t.resize(N + 1);
    for (int j = 0; j <= N / 2; ++j) {
        g.theta[j] = j * M_PI / N;
        g.sin_t[j] = std::sin(g.theta[j]);
        g.cos_t[j] = std::cos(g.theta[j]);
    }
    // mirror the tables so reflected nodes carry bitwise-equal weights
    for (int j = N / 2 + 1; j <= N; ++j) {
        g.theta[j] = j * M_PI / N;
        g.sin_t[j] = g.sin_t[N - j];
        g.cos_t[j] = -g.cos_t[N - j];
    }
    g.sin_t[0] = g.sin_t[N] = 0.0;
    return g;
}

double RadialProfile::dtheta() const { return M_PI / segments(); }

void RadialProfile::validate() const {
    if (n < 2 || n > kMaxDim)
        throw std::domain_error("profile dimension out of range");
    const int N = segments();
    if (N < 4 || N % 2 != 0)
        throw std::domain_error("profile needs an even node count N >= 4");
    for (int j = 0; j <= N; ++j)
        if (!(r[j] > 0.0) || !std::isfinite(r[j])) throw StarShapednessLost(j);
}

RadialProfile make_sphere(int n, int N, double radius) {
    if (!(radius > 0.0)) throw std::domain_error("sphere radius must be > 0");
    RadialProfile p;
    p.n = n;
    p.r.assign(N + 1, radius);
    p.validate();
    return p;
}

RadialProfile make_ellipsoid(int n, int N, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("ellipsoid semi-axes must be > 0");
    const AngularGrid g = AngularGrid::make(N);
    RadialProfile p;
    p.n = n;
    p.r.resize(N + 1);
    for (int j = 0; j <= N; ++j) {
        const double c = g.cos_t[j], s = g.sin_t[j];
        p.r[j] = a * b / std::sqrt(b * b * c * c + a * a * s * s);
    }
    p.validate();
    return p;
}

void radial_derivatives(const RadialProfile& prof, const AngularGrid& grid,
                        std::vector<double>& r_th,
                        std::vector<double>& r_thth) {
    check_grid(prof, grid);
    const int N = prof.segments();
    const double dt = grid.dtheta;
    const double inv2dt = 1.0 / (2.0 * dt);
    const double invdt2 = 1.0 / (dt * dt);
    const auto& r = prof.r;
    r_th.resize(N + 1);
    r_thth.resize(N + 1);
    r_th[0] = r_th[N] = 0.0; // even reflection across the poles
    r_thth[0] = 2.0 * (r[1] - r[0]) * invdt2;
    r_thth[N] = 2.0 * (r[N - 1] - r[N]) * invdt2;
    for (int j = 1; j < N; ++j) {
        r_th[j] = (r[j + 1] - r[j - 1]) * inv2dt;
        // grouped so that mirrored nodes round identically
        r_thth[j] = ((r[j + 1] + r[j - 1]) - 2.0 * r[j]) * invdt2;
    }
}

CurvatureField curvatures(const RadialProfile& prof, const FlowParams& p,
                          const AngularGrid& grid) {
    prof.validate();
    p.validate();
    if (p.n != prof.n)
        throw std::invalid_argument("profile/params dimension mismatch");
    const int N = prof.segments();
    CurvatureField f;
    principal_curvatures(prof, grid, f.k_profile, f.k_rot);
    f.H.resize(N + 1);
    f.K.resize(N + 1);
    f.Hm.resize(N + 1);
    f.sigma.resize(N + 1);
    f.q.resize(N + 1);
    f.sdot_profile.resize(N + 1);
    f.sdot_rot.resize(N + 1);
    f.tr_sdot.resize(N + 1);

    const int n = p.n;
    std::array<double, kMaxDim> kap;
    for (int j = 0; j <= N; ++j) {
        const double kp = f.k_profile[j], kr = f.k_rot[j];
        kap[0] = kp;
        for (int i = 1; i < n; ++i) kap[i] = kr;
        const PointEval e =
            sigma_point_eval(std::span<const double>(kap.data(), n), p);
        if (!e.in_cone) throw ConeExit(j);
        const double H = kp + (n - 1) * kr;
        const double K = kp * pow_int(kr, n - 1);
        f.H[j] = H;
        f.K[j] = K;
        f.Hm[j] = e.Hm;
        f.sigma[j] = e.sigma;
        f.q[j] = K / pow_int(H, n);
        f.sdot_profile[j] = e.grad[0];
        f.sdot_rot[j] = e.grad[1];
        f.tr_sdot[j] = e.tr_grad;
    }
    return f;
}

CurvatureField curvatures(const RadialProfile& prof, const FlowParams& p) {
    return curvatures(prof, p, AngularGrid::make(prof.segments()));
}

double area(const RadialProfile& prof, const AngularGrid& grid) {
    check_grid(prof, grid);
    const int n = prof.n;
    std::vector<double> rt, rtt;
    radial_derivatives(prof, grid, rt, rtt);
    const double s = unit_sphere_area(n - 1);
    return s * simpson(grid, [&](int j) {
               const double r = prof.r[j];
               const double J = std::sqrt(r * r + rt[j] * rt[j]);
               return pow_int(r * grid.sin_t[j], n - 1) * J;
           });
}

double area(const RadialProfile& prof) {
    return area(prof, AngularGrid::make(prof.segments()));
}

double volume(const RadialProfile& prof, const AngularGrid& grid) {
    check_grid(prof, grid);
    const int n = prof.n;
    const double s = unit_sphere_area(n - 1);
    return s / (n + 1) * simpson(grid, [&](int j) {
               return pow_int(prof.r[j], n + 1) *
                      pow_int(grid.sin_t[j], n - 1);
           });
}

double volume(const RadialProfile& prof) {
    return volume(prof, AngularGrid::make(prof.segments()));
}

double volume_centroid_x(const RadialProfile& prof, const AngularGrid& grid) {
    const int n = prof.n;
    const double s = unit_sphere_area(n - 1);
    const double mom = s / (n + 2) * simpson(grid, [&](int j) {
                           return pow_int(prof.r[j], n + 2) * grid.cos_t[j] *
                                  pow_int(grid.sin_t[j], n - 1);
                       });
    return mom / volume(prof, grid);
}

double averaged_speed(const RadialProfile& prof, const AngularGrid& grid,
                      const CurvatureField& field) {
    check_grid(prof, grid);
    const int n = prof.n;
    std::vector<double> rt, rtt;
    radial_derivatives(prof, grid, rt, rtt);
    auto weight = [&](int j) {
        const double r = prof.r[j];
        const double J = std::sqrt(r * r + rt[j] * rt[j]);
        return pow_int(r * grid.sin_t[j], n - 1) * J;
    };
    const double num =
        simpson(grid, [&](int j) { return field.sigma[j] * weight(j); });
    const double den = simpson(grid, weight);
    return num / den;
}

double averaged_speed(const RadialProfile& prof, const FlowParams& p) {
    const AngularGrid grid = AngularGrid::make(prof.segments());
    return averaged_speed(prof, grid, curvatures(prof, p, grid));
}

namespace {

// 1-D optimization of f over [lo, hi]: coarse scan to bracket, then ternary
// search to 1e-10 absolute in the argument.
template <class F>
double scan_ternary(double lo, double hi, bool maximize, F&& f) {
    constexpr int kScan = 256;
    double best_c = lo, best_v = f(lo);
    for (int s = 1; s <= kScan; ++s) {
        const double c = lo + (hi - lo) * s / kScan;
        const double v = f(c);
        if (maximize ? v > best_v : v < best_v) {
            best_v = v;
            best_c = c;
        }
    }
    const double w = (hi - lo) / kScan;
    double a = std::max(lo, best_c - w), b = std::min(hi, best_c + w);
    while (b - a > 1e-10) {
        const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        const bool keep_left = maximize ? f(m1) >= f(m2) : f(m1) <= f(m2);
        if (keep_left)
            b = m2;
        else
            a = m1;
    }
    return 0.5 * (a + b);
}

} // namespace

Radii radii(const RadialProfile& prof, const AngularGrid& grid) {
    check_grid(prof, grid);
    const int N = prof.segments();
    std::vector<double> x(N + 1), y(N + 1);
    for (int j = 0; j <= N; ++j) {
        x[j] = prof.r[j] * grid.cos_t[j];
        y[j] = prof.r[j] * grid.sin_t[j];
    }
    auto dist_min = [&](double c) {
        double d = std::numeric_limits<double>::infinity();
        for (int j = 0; j <= N; ++j)
            d = std::min(d, std::hypot(x[j] - c, y[j]));
        return d;
    };
    auto dist_max = [&](double c) {
        double d = 0.0;
        for (int j = 0; j <= N; ++j)
            d = std::max(d, std::hypot(x[j] - c, y[j]));
        return d;
    };
    const double lo = x[N], hi = x[0]; // poles bound the axis extent
    Radii out;
    out.center_in = scan_ternary(lo, hi, true, dist_min);
    out.inradius = dist_min(out.center_in);
    out.center_out = scan_ternary(lo, hi, false, dist_max);
    out.outer = dist_max(out.center_out);
    return out;
}

Radii radii(const RadialProfile& prof) {
    return radii(prof, AngularGrid::make(prof.segments()));
}

double hausdorff_to_ball(const RadialProfile& prof, const AngularGrid& grid,
                         double R) {
    check_grid(prof, grid);
    const int N = prof.segments();
    std::vector<double> x(N + 1), y(N + 1);
    for (int j = 0; j <= N; ++j) {
        x[j] = prof.r[j] * grid.cos_t[j];
        y[j] = prof.r[j] * grid.sin_t[j];
    }
    auto worst = [&](double c) {
        double d = 0.0;
        for (int j = 0; j <= N; ++j)
            d = std::max(d, std::abs(std::hypot(x[j] - c, y[j]) - R));
        return d;
    };
    const double c = scan_ternary(x[N], x[0], false, worst);
    return worst(c);
}

double alexandrov_fenchel_constant(int n) {
    return std::pow(n * unit_sphere_area(n), n + 1) /
           std::pow(unit_ball_volume(n + 1), n - 1);
}

double alexandrov_fenchel_residual(const RadialProfile& prof,
                                   const AngularGrid& grid) {
    check_grid(prof, grid);
    const int n = prof.n;
    std::vector<double> kp, kr, rt, rtt;
    principal_curvatures(prof, grid, kp, kr);
    radial_derivatives(prof, grid, rt, rtt);
    const double s = unit_sphere_area(n - 1);
    const double intH = s * simpson(grid, [&](int j) {
                            const double r = prof.r[j];
                            const double J =
                                std::sqrt(r * r + rt[j] * rt[j]);
                            const double H = kp[j] + (n - 1) * kr[j];
                            return H * pow_int(r * grid.sin_t[j], n - 1) * J;
                        });
    const double vol = volume(prof, grid);
    return std::pow(intH, n + 1) / std::pow(vol, n - 1) -
           alexandrov_fenchel_constant(n);
}

double alexandrov_fenchel_residual(const RadialProfile& prof) {
    return alexandrov_fenchel_residual(prof,
                                       AngularGrid::make(prof.segments()));
}

RatioCheck pinching_ratio_check(const CurvatureField& field, double B1) {
    RatioCheck out;
    for (size_t j = 0; j < field.k_profile.size(); ++j) {
        const double kp = field.k_profile[j], kr = field.k_rot[j];
        if (!(kp > 0.0) || !(kr > 0.0)) {
            out.max_ratio = std::numeric_limits<double>::infinity();
            out.ok = false;
            return out;
        }
        out.max_ratio = std::max({out.max_ratio, kr / kp, kp / kr});
    }
    out.ok = out.max_ratio <= B1;
    return out;
}

double unit_sphere_area(int d) {
    return 2.0 * std::pow(M_PI, (d + 1) / 2.0) / std::tgamma((d + 1) / 2.0);
}

double unit_ball_volume(int d) {
    return std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

void write_snapshot(const std::string& path, const RadialProfile& prof,
                    double t) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open snapshot file: " + path);
    const int N = prof.segments();
    std::fprintf(fp, "%d %d %.17g\n", prof.n, N, t);
    for (int j = 0; j <= N; ++j)
        std::fprintf(fp, "%.17g %.17g\n", j * M_PI / N, prof.r[j]);
    std::fclose(fp);
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open snapshot file: " + path);
    Snapshot snap;
    int N = 0;
    if (!(in >> snap.profile.n >> N >> snap.t))
        throw std::runtime_error("malformed snapshot header in " + path);
    if (N < 4 || N > (1 << 24))
        throw std::runtime_error("unreasonable snapshot resolution in " + path);
    snap.profile.r.resize(N + 1);
    for (int j = 0; j <= N; ++j) {
        double theta;
        if (!(in >> theta >> snap.profile.r[j]))
            throw std::runtime_error("truncated snapshot file: " + path);
    }
    snap.profile.validate();
    return snap;
}

} // namespace hmflow
