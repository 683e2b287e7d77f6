#pragma once

// Test-only reference implementations. Everything here is deliberately
// independent of the library code paths it is used to check: brute-force
// subset enumeration, finite differences, dense grid searches, and closed
// forms for spheres and ellipsoids.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace oracle {

// e_m by explicit enumeration of all m-subsets.
inline double elem_sym_bruteforce(std::span<const double> k, int m) {
    const int n = static_cast<int>(k.size());
    if (m == 0) return 1.0;
    if (m > n) return 0.0;
    double total = 0.0;
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    while (true) {
        double prod = 1.0;
        for (int i : idx) prod *= k[i];
        total += prod;
        int pos = m - 1;
        while (pos >= 0 && idx[pos] == n - m + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int i = pos + 1; i < m; ++i) idx[i] = idx[i - 1] + 1;
    }
    return total;
}

inline double binom(int n, int m) {
    double c = 1.0;
    for (int i = 1; i <= m; ++i) c = c * (n - m + i) / i;
    return c;
}

inline double hm_bruteforce(std::span<const double> k, int m) {
    return elem_sym_bruteforce(k, m) / binom(static_cast<int>(k.size()), m);
}

// Central finite difference of a scalar function along coordinate i.
inline double central_diff(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x, int i, double h) {
    std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
    xp[i] += h;
    xm[i] -= h;
    return (f(xp) - f(xm)) / (2.0 * h);
}

inline double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Random curvature vector in the positive cone with entries in [lo, hi].
inline std::vector<double> random_positive(std::mt19937_64& rng, int n,
                                           double lo = 0.05, double hi = 3.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> k(n);
    for (auto& v : k) v = u(rng);
    return k;
}

// ---- ellipsoid of revolution (semi-axis a along the rotation axis, b
// ---- equatorial), parametrized by the ellipse angle t in [0, pi] ----

struct EllipsoidPoint {
    double k_meridian;
    double k_rotational;
};

inline EllipsoidPoint ellipsoid_curvatures(double a, double b, double t) {
    const double st = std::sin(t), ct = std::cos(t);
    const double u = std::sqrt(b * b * ct * ct + a * a * st * st);
    return {a * b / (u * u * u), a / (b * u)};
}

// Polar angle theta of the ellipse point at parameter t.
inline double ellipsoid_theta(double a, double b, double t) {
    return std::atan2(b * std::sin(t), a * std::cos(t));
}

// Ellipse parameter t for a given polar angle theta (inverse of the above).
inline double ellipsoid_param(double a, double b, double theta) {
    return std::atan2(a * std::sin(theta), b * std::cos(theta));
}

inline double ellipsoid_radius(double a, double b, double theta) {
    const double st = std::sin(theta), ct = std::cos(theta);
    return a * b / std::sqrt(b * b * ct * ct + a * a * st * st);
}

} // namespace oracle
