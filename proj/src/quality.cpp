#include "ddcrane/quality.hpp"

#include <algorithm>
#include <cmath>

#include "ddcrane/excitation.hpp"

namespace ddcrane {

using Eigen::VectorXd;

double time_to_target(const VectorXd& theta4, double rate, double target, double tolerance,
                      double hold) {
    const Index n = theta4.size();
    const auto span = static_cast<Index>(std::llround(hold * rate));
    // run[i]: number of consecutive in-band samples starting at i
    std::vector<Index> run(static_cast<std::size_t>(n + 1), 0);
    for (Index i = n - 1; i >= 0; --i)
        run[static_cast<std::size_t>(i)] =
            std::abs(theta4(i) - target) <= tolerance ? run[static_cast<std::size_t>(i + 1)] + 1 : 0;
    for (Index i = 0; i + span < n; ++i)
        if (run[static_cast<std::size_t>(i)] >= span + 1) return static_cast<double>(i) / rate;
    return -1.0;
}

TrajectoryQuality score_trajectory(const Trajectory& w, const Trajectory* ro, const ScoreSpec& spec) {
    TrajectoryQuality out;
    const Index n = w.samples();
    out.horizon = static_cast<double>(n) / w.rate;
    const VectorXd th4 = w.channel("theta4");
    const double t = time_to_target(th4, w.rate, spec.theta4_target, spec.tolerance, spec.hold);
    out.reached = t >= 0.0;
    out.time_to_target = out.reached ? t : out.horizon;

    const VectorXd th1 = w.channel("theta1").cwiseAbs();
    const VectorXd th2 = w.channel("theta2").cwiseAbs();
    out.max_sway_theta1 = th1.maxCoeff();
    out.max_sway_theta2 = th2.maxCoeff();
    out.max_sway = std::max(out.max_sway_theta1, out.max_sway_theta2);
    out.mean_sway = 0.5 * (th1.mean() + th2.mean());

    const VectorXd v = w.channel("dtheta4");
    VectorXd padded = VectorXd::Zero(n + 2);
    padded.segment(1, n) = v;
    const VectorXd c = 0.5 * (padded.tail(n) - padded.head(n)).cwiseAbs();
    out.max_smooth = c.maxCoeff();
    out.mean_smooth = c.mean();

    const double dirn = spec.theta4_target >= spec.theta4_start ? 1.0 : -1.0;
    double over = 0.0;
    for (Index i = 0; i < n; ++i) over += std::max(0.0, dirn * (th4(i) - spec.theta4_target));
    out.overshoot_integral = over / w.rate;
    out.final_error = std::abs(th4(n - 1) - spec.theta4_target);

    if (ro) {
        const Index k = std::min(n, ro->samples());
        const auto nc = static_cast<Index>(spec.rollout_channels.size());
        const VectorXd wts =
            spec.rollout_weights.size() ? spec.rollout_weights : VectorXd::Ones(nc);
        if (wts.size() != nc) throw DimensionMismatch("rollout weights mismatch");
        double acc = 0.0;
        for (Index j = 0; j < nc; ++j) {
            const int a = w.channel_index(spec.rollout_channels[static_cast<std::size_t>(j)]);
            const int b = ro->channel_index(spec.rollout_channels[static_cast<std::size_t>(j)]);
            for (Index i = 0; i < k; ++i) {
                const double e = w(i, a) - (*ro)(i, b);
                acc += wts(j) * e * e;
            }
        }
        out.rollout_error = std::sqrt(acc);
    }
    return out;
}

Trajectory rollout(const Trajectory& gen, const CraneParams& params, double theta4_start, double tail) {
    const auto extra = static_cast<Index>(std::llround(tail * gen.rate));
    const Index n = gen.samples();
    CraneState x0 = CraneState::Zero();
    x0(state::theta4) = theta4_start;
    SimulateOptions opts;
    opts.rate = gen.rate;
    if (gen.q == 5 && gen.channel_names == acceleration_channel_names()) {
        VectorXd u = VectorXd::Zero(n + extra);
        u.head(n) = gen.channel(0);
        return simulate(x0, u, params, std::nullopt, opts);
    }
    if (gen.q == 4 && gen.channel_names == velocity_channel_names()) {
        VectorXd v = VectorXd::Zero(n + extra + 1);
        v.head(n) = gen.channel(0);
        x0(state::dtheta4) = v(0);
        const VectorXd a = differentiate_to_acceleration(v, gen.rate);
        const Trajectory acc = simulate(x0, a.head(n + extra), params, std::nullopt, opts);
        return to_velocity_input(acc);
    }
    throw ChannelMismatch("rollout needs a crane channel layout");
}

}  // namespace ddcrane
