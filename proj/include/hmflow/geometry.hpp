#pragma once

// Discrete convex hypersurfaces of revolution in R^{n+1}, star-shaped about
// the origin: a radial graph r(theta) over theta in [0, pi], rotated about
// the x-axis. Each node carries one profile curvature and one rotational
// curvature of multiplicity n-1.

#include "hmflow/symfun.hpp"

#include <string>
#include <vector>

namespace hmflow {

struct StarShapednessLost : std::runtime_error {
    int node;
    explicit StarShapednessLost(int j)
        : std::runtime_error("star-shapedness lost (r <= 0) at node " +
                             std::to_string(j)),
          node(j) {}
};

struct ConeExit : std::runtime_error {
    int node;
    explicit ConeExit(int j)
        : std::runtime_error("positive-H_m cone exited at node " +
                             std::to_string(j)),
          node(j) {}
};

// Uniform angular grid theta_j = j*pi/N with trig tables. The tables are
// mirror-exact: sin(theta_{N-j}) == sin(theta_j) and
// cos(theta_{N-j}) == -cos(theta_j) bitwise, so symmetric profiles produce
// bitwise-symmetric curvature fields.
struct AngularGrid {
    int N = 0;
    double dtheta = 0.0;
    std::vector<double> theta, sin_t, cos_t;

    static AngularGrid make(int N);
};

struct RadialProfile {
    int n = 2;             // hypersurface dimension (surface lives in R^{n+1})
    std::vector<double> r; // N+1 positive radii on the uniform grid

    int segments() const { return static_cast<int>(r.size()) - 1; }
    double dtheta() const;

    // N even and >= 4 (composite Simpson), r_j > 0 everywhere.
    void validate() const;
};

RadialProfile make_sphere(int n, int N, double radius);
// Semi-axis a along the rotation axis, b equatorial:
// r(theta) = a b / sqrt(b^2 cos^2 + a^2 sin^2).
RadialProfile make_ellipsoid(int n, int N, double a, double b);

// Per-node curvature data. The principal curvature vector at node j is
// (k_profile_j, k_rot_j, ..., k_rot_j) with k_rot repeated n-1 times.
struct CurvatureField {
    std::vector<double> k_profile, k_rot;
    std::vector<double> H, K, Hm, sigma, q;
    std::vector<double> sdot_profile, sdot_rot; // dsigma/dk per class
    std::vector<double> tr_sdot;
};

// Derivative stencils: central differences with even-reflection ghost nodes
// at the poles (r_theta = 0 there to O(dtheta^2)).
void radial_derivatives(const RadialProfile& prof, const AngularGrid& grid,
                        std::vector<double>& r_th, std::vector<double>& r_thth);

// Full curvature field. Throws StarShapednessLost when r <= 0 and ConeExit
// when H_m <= 0 at some node.
CurvatureField curvatures(const RadialProfile& prof, const FlowParams& p,
                          const AngularGrid& grid);
CurvatureField curvatures(const RadialProfile& prof, const FlowParams& p);

double area(const RadialProfile& prof, const AngularGrid& grid);
double area(const RadialProfile& prof);
double volume(const RadialProfile& prof, const AngularGrid& grid);
double volume(const RadialProfile& prof);

// x-coordinate of the volume centroid (the rotation axis is the x-axis).
double volume_centroid_x(const RadialProfile& prof, const AngularGrid& grid);

// h = (integral of sigma d mu) / |M|, the surface-measure mean of the speed
// under the same quadrature as area().
double averaged_speed(const RadialProfile& prof, const FlowParams& p);
double averaged_speed(const RadialProfile& prof, const AngularGrid& grid,
                      const CurvatureField& field);

struct Radii {
    double inradius = 0.0;
    double outer = 0.0;
    double center_in = 0.0;  // axis position of the optimal inball center
    double center_out = 0.0; // axis position of the circumball center
};

// Inradius and outer radius; by rotational symmetry the optimal centers lie
// on the axis, so both reduce to 1-D optimizations solved by ternary search
// (bracketed by a coarse scan) to 1e-10.
Radii radii(const RadialProfile& prof, const AngularGrid& grid);
Radii radii(const RadialProfile& prof);

// Hausdorff distance from the surface to the sphere of radius R with the
// best center on the axis.
double hausdorff_to_ball(const RadialProfile& prof, const AngularGrid& grid,
                         double R);

// (integral H d mu)^{n+1} / vol^{n-1} - C_n, where C_n is the sphere
// equality constant (n s_n)^{n+1} / omega_{n+1}^{n-1}; nonnegative up to
// quadrature error on convex bodies.
double alexandrov_fenchel_residual(const RadialProfile& prof,
                                   const AngularGrid& grid);
double alexandrov_fenchel_residual(const RadialProfile& prof);
double alexandrov_fenchel_constant(int n);

struct RatioCheck {
    bool ok = false;
    double max_ratio = 0.0; // max over nodes of max(k_rot/k_prof, k_prof/k_rot)
};

// Curvature comparability: max(k_rot/k_profile, k_profile/k_rot) <= B1 at
// every node.
RatioCheck pinching_ratio_check(const CurvatureField& field, double B1);

// Area of the unit d-sphere and volume of the unit d-ball.
double unit_sphere_area(int d);
double unit_ball_volume(int d);

// Snapshot file: header line "n N t", then N+1 lines "theta r" with 17
// significant digits (lossless double round-trip).
void write_snapshot(const std::string& path, const RadialProfile& prof,
                    double t);
struct Snapshot {
    RadialProfile profile;
    double t = 0.0;
};
Snapshot read_snapshot(const std::string& path);

} // namespace hmflow
