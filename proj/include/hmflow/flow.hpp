#pragma once

// Time integration of the volume-preserving flow dX/dt = (h(t) - sigma) N on
// radial profiles, where h(t) is the surface mean of sigma (or 0 in the
// comparison mode). In the radial graph the motion law reads
//
//     dr/dt = (h - sigma) * sqrt(r^2 + r_theta^2) / r.
//
// Steps are explicit Heun (RK2) with h recomputed at every stage; with the
// shared quadrature this makes the semi-discrete volume exactly conserved
// and leaves only the O(dt^2) temporal drift.

#include "hmflow/constants.hpp"
#include "hmflow/geometry.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hmflow {

struct StepFailure : std::runtime_error {
    int node;
    double t;
    StepFailure(int node_, double t_, const std::string& what_)
        : std::runtime_error(what_), node(node_), t(t_) {}
};

struct FlowState {
    RadialProfile profile;
    double t = 0.0;
    FlowParams params;
    bool volume_preserving = true;
    std::shared_ptr<const AngularGrid> grid;
    CurvatureField field; // always consistent with profile
    double h = 0.0;       // nonlocal term applied by the step (0 in h==0 mode)
    double mean_sigma = 0.0;
};

FlowState make_state(RadialProfile profile, double t, const FlowParams& params,
                     bool volume_preserving,
                     std::shared_ptr<const AngularGrid> grid = nullptr);

// One Heun step; throws StepFailure when the stepped profile loses
// star-shapedness, exits the positive-H_m cone, or turns non-finite.
FlowState step(const FlowState& state, double dt);

// Parabolic stability bound dt = cfl * dtheta^2 * min_j r_j^2 / max_j tr(dsigma).
double select_dt(const FlowState& state, double cfl);

struct DiagnosticsRecord {
    double t = 0, V = 0, area = 0, h = 0;
    double q_min = 0, q_defect = 0;
    double Hm_max = 0, Hm_min = 0, H_min = 0;
    double rho = 0, D = 0;
    double af_residual = 0, dt = 0;
    // monitored but not part of the CSV schema
    double x_centroid = 0;
    double sigma_min = 0, sigma_max = 0;
};

DiagnosticsRecord make_record(const FlowState& state, double dt_used);

struct RunConfig {
    FlowParams params;
    enum class Init { Sphere, Ellipsoid, File };
    Init init = Init::Sphere;
    double radius = 1.0;     // sphere
    double a = 1.0, b = 1.0; // ellipsoid semi-axes (a on the rotation axis)
    std::string init_file;   // snapshot path
    int N = 256;
    double t_end = 0.0;
    double cfl = 0.2;
    bool volume_preserving = true;
    bool volume_projection = false; // rescale r to the initial volume each step
    double cadence = 0.1;           // diagnostics interval in flow time
    double fixed_dt = 0.0;          // > 0 overrides select_dt
    double stop_q_defect = 0.0;     // > 0: stop once q_defect drops below
    bool check_initial_pinching = true;
    int snapshot_stride = 0; // 0: first/last only; k: every k-th record too
    std::string out_dir;     // when set: diagnostics.csv + snap_<i>.txt
    std::uint64_t seed = 42;

    void validate() const;
};

struct RunResult {
    std::vector<DiagnosticsRecord> records;
    FlowState final_state;
    RadialProfile initial_profile;
    bool failed = false;
    std::string failure;
    bool stopped_on_q_defect = false;
    std::optional<PinchingReport> pinching;
    bool initial_pinching_ok = true;
    double initial_q_min = 0.0;
    std::vector<std::string> warnings;
};

RunResult run(const RunConfig& cfg,
              const PinchingReport* precomputed_pinching = nullptr);

void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsRecord>& records);

// ---- trajectory monitors ----

struct QMinMonitor {
    int violations = 0;
    double worst_drop = 0.0; // largest decrease between adjacent records
    double tol_disc = 0.0;   // c * (dtheta^2 + max dt)
    double c_required = 0.0; // smallest c that would flag nothing
    std::vector<int> flagged;
};

// Checks q_min(t_{k+1}) >= q_min(t_k) - c*(dtheta^2 + max dt).
QMinMonitor monitor_q_min(const std::vector<DiagnosticsRecord>& records,
                          double dtheta, double c = 1.0);

struct BoundsMonitor {
    double sup_Hm_max = 0, inf_h = 0, inf_rho = 0, sup_D = 0;
    double Hmin_integral = 0;   // trapezoid of H_min over the run
    double Hmin_log_slope = 0;  // least-squares slope of log H_min
    double min_af_residual = 0;
    double axis_drift = 0;      // max |x_centroid(t) - x_centroid(0)|
};

BoundsMonitor monitor_bounds(const std::vector<DiagnosticsRecord>& records);

struct RateFit {
    bool applicable = false; // false when q_defect sits at the noise floor
    double slope = 0.0;      // d/dt log q_defect, expected negative
    double r_squared = 0.0;
    double window_t0 = 0.0, window_t1 = 0.0;
    int points = 0;
    double theoretical_floor_B = 0.0; // h0 * C_p * delta when a report is given
};

// Log-linear fit of q_defect over the final half of the usable window
// (records with q_defect below 1e-14 are treated as converged noise and
// excluded before the window is halved).
RateFit fit_convergence_rate(const std::vector<DiagnosticsRecord>& records,
                             const PinchingReport* report = nullptr);

struct SpeedEvolutionResidual {
    std::vector<double> residual;
    double max_abs = 0.0;
};

// Residual of the intrinsic speed-evolution identity
//     d sigma/dt = Laplace_{dsigma} sigma + (sigma - h) tr_{dsigma}(alpha A)
// across two consecutive states dt apart. The left side is the fixed-theta
// time difference minus the tangential advection of the radial
// parametrization, (h - sigma)(r_theta/r) dsigma/ds; the right side is
// assembled spatially on the time-midpoint profile, where the weighted
// Laplacian of a rotationally symmetric function reduces to
//     sdot_prof * sigma_ss + (n-1) sdot_rot * (R_s/R) sigma_s,
// with R the distance to the axis and s the profile arclength. Expected
// O(dt + dtheta^2) on consecutive accepted states of a run. States taken
// straight from analytic initial data still carry the fast grid-scale
// start-up transient near the poles and measure above that order.
SpeedEvolutionResidual verify_speed_evolution(const FlowState& before,
                                              const FlowState& after);

// Exact contracting-sphere solution of the h == 0 flow:
// R(t) = (R0^d - d t)^{1/d} with d = m*beta + 1.
double contracting_sphere_radius(double R0, double mbeta, double t);
double contracting_sphere_extinction(double R0, double mbeta);

} // namespace hmflow
