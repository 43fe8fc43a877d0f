#pragma once

#include <string>
#include <vector>

#include "ddcrane/crane.hpp"
#include "ddcrane/trajectory.hpp"

namespace ddcrane {

struct ScoreSpec {
    double theta4_start = 0.0;
    double theta4_target = 0.0;
    double tolerance = 0.035;  // rad
    double hold = 5.0;         // s
    std::vector<std::string> rollout_channels{"theta1", "theta2", "theta4"};
    Eigen::VectorXd rollout_weights;  // one per rollout channel, empty = ones
};

struct TrajectoryQuality {
    double time_to_target = 0.0;  // s, horizon when not reached
    bool reached = false;
    double horizon = 0.0;
    double max_sway = 0.0;
    double mean_sway = 0.0;
    double max_sway_theta1 = 0.0;
    double max_sway_theta2 = 0.0;
    double max_smooth = 0.0;
    double mean_smooth = 0.0;
    double overshoot_integral = 0.0;
    double rollout_error = 0.0;
    double final_error = 0.0;
};

/// Metrics of a predicted trajectory; rollout, when given, contributes the
/// weighted distance to the prediction over their common samples.
TrajectoryQuality score_trajectory(const Trajectory& predicted, const Trajectory* rollout,
                                   const ScoreSpec& spec);

/// First time after which theta4 stays within tolerance of target for hold
/// seconds; negative when never.
double time_to_target(const Eigen::VectorXd& theta4, double rate, double target, double tolerance,
                      double hold);

/// Plays the input channel of a generated trajectory on the crane simulator from
/// rest at theta4_start, appending tail seconds of zero input. The result uses
/// the channel layout of the given trajectory.
Trajectory rollout(const Trajectory& generated, const CraneParams& params, double theta4_start,
                   double tail = 0.0);

}  // namespace ddcrane
