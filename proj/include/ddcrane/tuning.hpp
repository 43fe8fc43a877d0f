#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "ddcrane/crane.hpp"
#include "ddcrane/quality.hpp"
#include "ddcrane/recovery.hpp"

namespace ddcrane {

/// Runs fn(0..n-1) on up to threads workers (threads <= 0 uses the hardware count).
void parallel_for(Index n, int threads, const std::function<void(Index)>& fn);

struct SimTuneGrid {
    std::vector<double> deltas{0.0};
    std::vector<double> lambdas{0.0};
    std::vector<Index> nus{-1};  // -1 keeps every column
    bool delta_relative = true;
    std::vector<Trajectory> tests;   // held-out, length L, provide the known data
    std::vector<Trajectory> truths;  // optional scoring targets (defaults to tests)
    Index n_ini = 10;
    double epsilon = 1e-6;
    SolverSettings solver = simulation_settings();
    int threads = 0;

    void validate() const;
};

struct SimTuneRow {
    Index nu = 0;
    double delta = 0.0;
    double lambda = 0.0;
    double score = 0.0;              // sum over tests of |w_test - w_hat|^2
    Eigen::VectorXd channel_scores;  // same sum split by channel
    Index rank = 0;                  // singular values kept
    Index columns = 0;
    bool feasible = true;
};

struct SimTuneResult {
    SimTuneRow best;
    std::vector<SimTuneRow> table;
};

/// Prefers smaller nu, then larger delta, then larger lambda among equal scores.
bool sim_row_better(const SimTuneRow& a, const SimTuneRow& b);

SimTuneResult tune_simulation(const std::vector<Trajectory>& data, Index L, const SimTuneGrid& grid);

/// Same search on an already assembled (Hankel) model.
SimTuneResult tune_simulation(const BehaviorModel& hankel, const SimTuneGrid& grid);

/// Builds the model of a tuning cell: QR selection of nu columns then SVD truncation.
BehaviorModel build_tuned_model(const BehaviorModel& hankel, Index nu, double delta,
                                bool delta_relative = true);

enum Metric : int {
    kTimeToTarget = 0,
    kMaxSway,
    kMeanSway,
    kMaxSmooth,
    kMeanSmooth,
    kOvershoot,
    kRolloutError,
    kMetricCount
};
const char* metric_name(int m);
Eigen::VectorXd metric_vector(const TrajectoryQuality& q);

struct TrajTuneGrid {
    std::vector<double> lambdas;
    std::vector<double> mus;
    std::vector<double> sigmas;
    Eigen::VectorXd weights = Eigen::VectorXd::Ones(kMetricCount);
    bool use_rollout = true;
    double rollout_tail = 5.0;  // s of zero input appended to the rollout
    CraneParams crane;
    int threads = 0;

    void validate() const;
};

struct TrajTuneRow {
    double lambda = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    bool feasible = true;
    TrajectoryQuality quality;
    Eigen::VectorXd metrics;  // raw metric vector
    double score = std::numeric_limits<double>::infinity();
};

struct TrajTuneResult {
    TrajTuneRow best;
    std::vector<TrajTuneRow> table;
    Eigen::VectorXd normalization;  // empirical maxima over feasible cells
    std::vector<TrajTuneRow> slice_lambda, slice_mu, slice_sigma;
};

/// Combined normalized objective of one metric vector.
double combined_score(const Eigen::VectorXd& metrics, const Eigen::VectorXd& normalization,
                      const Eigen::VectorXd& weights);

TrajTuneResult tune_trajectory(const BehaviorModel& model, const TrajectoryGenSpec& scenario,
                               const TrajTuneGrid& grid);

/// Evaluates one cell: generate, roll out, score. Throws Infeasible.
TrajTuneRow evaluate_trajectory_cell(const BehaviorModel& model, const TrajectoryGenSpec& spec,
                                     const TrajTuneGrid& grid);

}  // namespace ddcrane
