#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ddcrane/crane.hpp"
#include "ddcrane/excitation.hpp"
#include "ddcrane/qp.hpp"
#include "ddcrane/recovery.hpp"
#include "ddcrane/tuning.hpp"
#include "ddcrane/waypoint.hpp"

namespace ddcrane {

enum class ChannelMode { Simulation, Experimental };

/// Excitation for one family of sequences. In derivative mode the sum of sines
/// is a boom velocity profile that is differentiated to the acceleration input.
struct ExcitationConfig {
    SumOfSinesSpec sines;
    int count = 1;
    bool velocity_profile = true;
};

struct ModelConfig {
    Index L = 300;
    Index n_hypothesis = 6;
    Index nu = -1;
    double delta = 0.0;
    bool delta_relative = true;
};

struct SimTuneConfig {
    std::vector<double> deltas{0.0};
    std::vector<double> lambdas{0.0};
    std::vector<Index> nus{-1};
    Index n_ini = 10;
    double epsilon = 1e-6;
    SolverSettings solver = simulation_settings();
};

struct TrajTuneConfig {
    std::vector<double> lambdas{0.0064};
    std::vector<double> mus{14.3214};
    std::vector<double> sigmas{2.5877};
    Eigen::VectorXd weights = Eigen::VectorXd::Ones(kMetricCount);
    bool use_rollout = true;
    double rollout_tail = 5.0;
};

struct BenchmarkConfig {
    WaypointProblem waypoints;
    TrajectoryGenSpec data_driven;  // same start/target as the waypoint problem
};

struct Seeds {
    std::uint64_t data = 1;
    std::uint64_t noise = 101;
    std::uint64_t test = 1001;
    std::uint64_t test_noise = 2001;
    std::uint64_t controllability = 7;
};

struct RunConfig {
    CraneParams crane;
    ChannelMode mode = ChannelMode::Simulation;
    bool noise_enabled = false;
    double angle_std = 0.002;
    double velocity_std = 0.005;
    ExcitationConfig data;
    ExcitationConfig test;
    ModelConfig model;
    SimTuneConfig sim_tuning;
    TrajectoryGenSpec scenario;
    TrajTuneConfig traj_tuning;
    BenchmarkConfig benchmark;
    SolverSettings solver;
    Seeds seeds;
    int threads = 0;
    int controllability_states = 1000;
    std::string out_dir = "out";

    void validate() const;
};

RunConfig default_config();
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);
/// Hash of the canonical JSON form (sorted keys, fixed formatting).
std::string config_hash(const RunConfig& c);

/// Simulator output converted to the configured channel layout.
Trajectory apply_mode(const Trajectory& accel_layout, ChannelMode mode);

/// Generates count sequences with per-sequence seeds derived from base seeds.
/// truth receives the noise-free copies when noise is enabled.
std::vector<Trajectory> generate_sequences(const RunConfig& c, const ExcitationConfig& ex,
                                           std::uint64_t seed, std::uint64_t noise_seed,
                                           std::vector<Trajectory>* truth = nullptr);

}  // namespace ddcrane
