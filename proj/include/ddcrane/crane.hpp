#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "ddcrane/trajectory.hpp"

namespace ddcrane {

/// Physical constants of the simplified rotary crane.
struct CraneParams {
    double boom_length = 2.0;               // l_b [m]
    double cable_length = 1.0;              // l [m]
    double luffing_angle = M_PI / 4.0;      // theta3 [rad]
    double gravity = 9.81;                  // g [m/s^2]
    bool nonlinear_residual = false;        // cubic pendulum correction on theta1/theta2

    double alpha1() const { return std::sqrt(gravity / cable_length); }
    double alpha2() const { return boom_length * std::sin(luffing_angle) / cable_length; }
    void validate() const;
};

/// State layout (theta1, theta2, theta4, dtheta1, dtheta2, dtheta4).
template <typename Scalar>
using CraneStateT = Eigen::Matrix<Scalar, 6, 1>;
using CraneState = CraneStateT<double>;

namespace state {
inline constexpr int theta1 = 0;
inline constexpr int theta2 = 1;
inline constexpr int theta4 = 2;
inline constexpr int dtheta1 = 3;
inline constexpr int dtheta2 = 4;
inline constexpr int dtheta4 = 5;
}  // namespace state

struct NoiseSpec {
    double angle_std = 0.002;
    double velocity_std = 0.005;
    std::uint64_t seed = 0;
};

template <typename Scalar>
CraneStateT<Scalar> state_derivative(const CraneStateT<Scalar>& x, const Scalar& u,
                                     const CraneParams& p) {
    const Scalar a1sq = Scalar(p.gravity / p.cable_length);
    const Scalar a2 = Scalar(p.alpha2());
    CraneStateT<Scalar> dx;
    dx(0) = x(3);
    dx(1) = x(4);
    dx(2) = x(5);
    dx(3) = -a1sq * x(0) + a2 * x(5) * x(5) + Scalar(2) * x(4) * x(5);
    dx(4) = -a1sq * x(1) - a2 * u;
    dx(5) = u;
    if (p.nonlinear_residual) {
        dx(3) += a1sq * x(0) * x(0) * x(0) / Scalar(6);
        dx(4) += a1sq * x(1) * x(1) * x(1) / Scalar(6);
    }
    return dx;
}

template <typename Scalar>
CraneStateT<Scalar> rk4_step(const CraneStateT<Scalar>& x, const Scalar& u, const Scalar& h,
                             const CraneParams& p) {
    const CraneStateT<Scalar> k1 = state_derivative<Scalar>(x, u, p);
    const CraneStateT<Scalar> k2 = state_derivative<Scalar>(x + (h / 2) * k1, u, p);
    const CraneStateT<Scalar> k3 = state_derivative<Scalar>(x + (h / 2) * k2, u, p);
    const CraneStateT<Scalar> k4 = state_derivative<Scalar>(x + h * k3, u, p);
    return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Closed-form controllability matrix. Rows follow the ordering
/// (theta1, dtheta1, theta2, dtheta2, theta4, dtheta4); column k is the
/// Lie bracket of order k of the drift and input fields.
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 6> controllability_matrix(const CraneStateT<Scalar>& x,
                                                   const CraneParams& p) {
    const Scalar a1 = Scalar(p.alpha1());
    const Scalar a2 = Scalar(p.alpha2());
    const Scalar a1_2 = a1 * a1;
    const Scalar a1_4 = a1_2 * a1_2;
    const Scalar th2 = x(1);
    const Scalar dth2 = x(4);
    const Scalar dth4 = x(5);
    const Scalar d1 = Scalar(4) * dth2 - a2 * dth4;
    const Scalar d2 = Scalar(2) * dth2 - a2 * dth4;
    const Scalar z(0);
    Eigen::Matrix<Scalar, 6, 6> Q;
    Q << z, z, 2 * dth2, -4 * a1_2 * th2, -2 * a1_2 * d1, 16 * a1_4 * th2,
         z, -2 * dth2, 2 * a1_2 * th2, 2 * a1_2 * d2, -8 * a1_4 * th2, -4 * a1_4 * d1,
         z, a2, z, -a1_2 * a2, z, a1_4 * a2,
         -a2, z, a1_2 * a2, z, -a1_4 * a2, z,
         z, Scalar(-1), z, z, z, z,
         Scalar(1), z, z, z, z, z;
    return Q;
}

template <typename Scalar>
Scalar det_formula(const CraneStateT<Scalar>& x, const CraneParams& p) {
    const Scalar a1 = Scalar(p.alpha1());
    const Scalar a2 = Scalar(p.alpha2());
    const Scalar th2 = x(1);
    const Scalar dth2 = x(4);
    const Scalar dth4 = x(5);
    const Scalar a1_2 = a1 * a1;
    const Scalar a1_10 = a1_2 * a1_2 * a1_2 * a1_2 * a1_2;
    const Scalar inner = 18 * a1_2 * th2 * th2 + a2 * a2 * dth4 * dth4 - 9 * a2 * dth2 * dth4 +
                         18 * dth2 * dth2;
    return 4 * a1_10 * a2 * a2 * inner;
}

/// Channel layouts produced by the simulator.
std::vector<std::string> acceleration_channel_names();  // ddtheta4, theta1, theta2, theta4, dtheta4
std::vector<std::string> velocity_channel_names();      // dtheta4, theta1, theta2, theta4

struct SimulateOptions {
    double rate = 20.0;
    double max_substep = 1e-3;
    double divergence_limit = 1e6;
};

/// RK4 with zero-order-hold input, one output sample per input sample.
/// Output channels follow acceleration_channel_names(). Noise, when given,
/// perturbs only the measured outputs.
Trajectory simulate(const CraneState& initial, const Eigen::VectorXd& input,
                    const CraneParams& params, const std::optional<NoiseSpec>& noise = std::nullopt,
                    const SimulateOptions& opts = {});

/// Same as simulate but also returns the state after the final sample interval.
Trajectory simulate(const CraneState& initial, const Eigen::VectorXd& input,
                    const CraneParams& params, const std::optional<NoiseSpec>& noise,
                    const SimulateOptions& opts, CraneState* final_state);

/// Drops the acceleration channel so the boom velocity becomes the input.
Trajectory to_velocity_input(const Trajectory& accel_layout);

/// Adds the acceleration channel derived from the boom velocity input.
Trajectory to_acceleration_input(const Trajectory& velocity_layout);

}  // namespace ddcrane
