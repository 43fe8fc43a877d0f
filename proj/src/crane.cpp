#include "ddcrane/crane.hpp"

#include <random>

#include "ddcrane/excitation.hpp"

namespace ddcrane {

void CraneParams::validate() const {
    if (!(boom_length > 0) || !(cable_length > 0) || !(gravity > 0))
        throw ConfigError("crane lengths and gravity must be positive");
    if (!std::isfinite(luffing_angle)) throw ConfigError("luffing angle must be finite");
}

std::vector<std::string> acceleration_channel_names() {
    return {"ddtheta4", "theta1", "theta2", "theta4", "dtheta4"};
}

std::vector<std::string> velocity_channel_names() {
    return {"dtheta4", "theta1", "theta2", "theta4"};
}

Trajectory simulate(const CraneState& initial, const Eigen::VectorXd& input,
                    const CraneParams& params, const std::optional<NoiseSpec>& noise,
                    const SimulateOptions& opts) {
    return simulate(initial, input, params, noise, opts, nullptr);
}

Trajectory simulate(const CraneState& initial, const Eigen::VectorXd& input,
                    const CraneParams& params, const std::optional<NoiseSpec>& noise,
                    const SimulateOptions& opts, CraneState* final_state) {
    params.validate();
    if (input.size() == 0) throw TooShort("simulate needs a nonempty input");
    if (!initial.allFinite() || !input.allFinite()) throw NonFiniteState("non-finite simulator input");
    const double dt = 1.0 / opts.rate;
    const int sub = static_cast<int>(std::ceil(dt / opts.max_substep - 1e-9));
    const double h = dt / sub;

    const int q = 5;
    Eigen::VectorXd data(q * input.size());
    CraneState x = initial;
    for (Index i = 0; i < input.size(); ++i) {
        const double u = input(i);
        data(q * i + 0) = u;
        data(q * i + 1) = x(state::theta1);
        data(q * i + 2) = x(state::theta2);
        data(q * i + 3) = x(state::theta4);
        data(q * i + 4) = x(state::dtheta4);
        for (int k = 0; k < sub; ++k) x = rk4_step<double>(x, u, h, params);
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > opts.divergence_limit)
            throw NonFiniteState("crane integration diverged");
    }
    if (noise) {
        if (noise->angle_std < 0 || noise->velocity_std < 0)
            throw ConfigError("noise standard deviations must be nonnegative");
        std::mt19937_64 rng(noise->seed);
        std::normal_distribution<double> n01(0.0, 1.0);
        for (Index i = 0; i < input.size(); ++i) {
            data(q * i + 1) += noise->angle_std * n01(rng);
            data(q * i + 2) += noise->angle_std * n01(rng);
            data(q * i + 3) += noise->angle_std * n01(rng);
            data(q * i + 4) += noise->velocity_std * n01(rng);
        }
    }
    if (final_state) *final_state = x;
    return {q, 1, opts.rate, std::move(data), acceleration_channel_names()};
}

Trajectory to_velocity_input(const Trajectory& t) {
    if (t.q != 5 || t.channel_names != acceleration_channel_names())
        throw ChannelMismatch("expected the acceleration-input layout");
    const Index n = t.samples();
    Eigen::VectorXd data(4 * n);
    for (Index i = 0; i < n; ++i) {
        data(4 * i + 0) = t(i, 4);
        data(4 * i + 1) = t(i, 1);
        data(4 * i + 2) = t(i, 2);
        data(4 * i + 3) = t(i, 3);
    }
    return {4, 1, t.rate, std::move(data), velocity_channel_names()};
}

Trajectory to_acceleration_input(const Trajectory& t) {
    if (t.q != 4 || t.channel_names != velocity_channel_names())
        throw ChannelMismatch("expected the velocity-input layout");
    const Index n = t.samples();
    const Eigen::VectorXd acc = differentiate_to_acceleration(t.channel(0), t.rate);
    Eigen::VectorXd data(5 * n);
    for (Index i = 0; i < n; ++i) {
        data(5 * i + 0) = acc(i);
        data(5 * i + 1) = t(i, 1);
        data(5 * i + 2) = t(i, 2);
        data(5 * i + 3) = t(i, 3);
        data(5 * i + 4) = t(i, 0);
    }
    return {5, 1, t.rate, std::move(data), acceleration_channel_names()};
}

}  // namespace ddcrane
