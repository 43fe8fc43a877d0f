#pragma once

#include <string>
#include <vector>

#include "ddcrane/crane.hpp"
#include "ddcrane/quality.hpp"
#include "ddcrane/qp.hpp"

namespace ddcrane {

/// Kinematic and sway limits of the waypoint program.
struct WaypointBounds {
    double ddtheta4_max = 0.01724;  // rad/s^2
    double dtheta4_max = 0.1724;    // rad/s
    double sway = 0.0349;           // rad
    double dsway = 0.0175;          // rad/s
    double final_sway = 0.0017;     // rad
    double final_dsway = 0.0087;    // rad/s

    void validate() const;
};

struct WaypointProblem {
    double theta4_start = 0.0;
    double theta4_target = M_PI / 4;
    int n_wp = 16;
    double sigma_ref = 10.0;  // 1/rad
    WaypointBounds bounds;
    double tau_min = 0.2;
    double tau_max = 10.0;
    std::vector<double> tau_starts{2.5, 1.5, 4.0};
    // false: dtheta4(k+1) = (theta4(k) - theta4(k-1))/tau; true: dtheta4(k) = (theta4(k) - theta4(k-1))/tau
    bool backward_difference = false;
    double substep = 1e-3;  // s, RK4 step when the nonlinear residual is on
    double margin = 2e-3;  // relative tightening of every bound inside the solver
    int max_outer = 40;
    int max_inner = 300;
    double feas_tol = 1e-7;
    int threads = 0;

    void validate() const;
};

struct SwayState {
    double theta1 = 0, theta2 = 0, dtheta1 = 0, dtheta2 = 0;
};

struct WaypointSolution {
    Eigen::VectorXd theta4, dtheta4, ddtheta4;
    double tau = 0.0;
    double total_time = 0.0;
    double objective = 0.0;
    double initial_objective = 0.0;  // straight line at the first start tau
    std::vector<SwayState> sway;     // at each waypoint time
    double kinematic_residual = 0.0; // max finite-difference equality residual
    double bound_violation = 0.0;    // max violation of the kinematic and sway bounds
    int iterations = 0;
    SolverStatus status = SolverStatus::MaxIters;
    int start_index = 0;
};

/// Objective value of a full waypoint vector.
double waypoint_objective(const WaypointProblem& pr, const Eigen::VectorXd& theta4, double tau);
/// theta4 reference: linear interpolation start -> target over the waypoints.
Eigen::VectorXd waypoint_reference(const WaypointProblem& pr);
/// Sway at waypoint times with (dtheta4(k), ddtheta4(k)) held over segment k.
std::vector<SwayState> segment_sway(const Eigen::VectorXd& dtheta4, const Eigen::VectorXd& ddtheta4,
                                    double tau, const CraneParams& params, double substep);
/// Max residual of the finite-difference relations of the chosen convention.
double kinematic_residual(const Eigen::VectorXd& theta4, const Eigen::VectorXd& dtheta4,
                          const Eigen::VectorXd& ddtheta4, double tau, bool backward = false);

/// Throws Infeasible when no start reaches a feasible point.
WaypointSolution solve_waypoint_nlp(const WaypointProblem& problem, const CraneParams& params);

/// 20 Hz acceleration-input playback: waypoint velocities linearly interpolated
/// in time, differentiated to acceleration, tail seconds of rest appended.
Trajectory waypoint_playback(const WaypointSolution& sol, const CraneParams& params,
                             double theta4_start, double rate = 20.0, double tail = 5.0);

struct RolloutCheck {
    double max_sway_excess = 0.0;   // max over samples of |theta_p| - sway bound
    double final_sway_excess = 0.0; // at the end of the motion vs the final bound
    bool feasible = false;          // both within tolerance
};

RolloutCheck verify_rollout(const Trajectory& rollout, const WaypointSolution& sol,
                            const WaypointBounds& bounds, double tolerance = 5e-3);

/// One method's outcome on a slewing scenario.
struct MethodResult {
    std::string name;
    Trajectory rollout;     // simulator response at 20 Hz
    double motion_time = 0.0;  // time-to-target or planned total time
};

struct ComparisonReport {
    TrajectoryQuality a, b;
    double time_ratio = 1.0;
    double theta1_ratio = 1.0;
    double theta2_ratio = 1.0;
    double final_error_ratio = 1.0;
    std::string a_name, b_name;
};

ComparisonReport compare(const MethodResult& a, const MethodResult& b, const ScoreSpec& scenario);

}  // namespace ddcrane
