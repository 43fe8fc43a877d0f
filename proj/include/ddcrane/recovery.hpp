#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ddcrane/qp.hpp"
#include "ddcrane/trajectory.hpp"

namespace ddcrane {

/// Diagonal weights; an empty vector means identity.
struct WeightSpec {
    Eigen::VectorXd W;  // on the known-index residual
    Eigen::VectorXd R;  // on the full reference residual
};

/// Two-sided bounds lower <= (H g)_idx <= upper, encoded as paired inequalities.
struct BoxSpec {
    IndexSet idx;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

/// Terms of the weighted recovery / trajectory program over a model.
struct RecoveryTerms {
    IndexSet known_idx;
    Eigen::VectorXd known_vals;
    WeightSpec weights;
    double lambda = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    std::optional<Eigen::VectorXd> w_ref;
    Eigen::SparseMatrix<double> D;  // total-variation rows, empty when sigma = 0
    std::optional<IndexSet> eq_idx;
    Eigen::VectorXd eq_vals;
    std::optional<BoxSpec> box;
};

CompositeQP assemble_recovery_qp(const BehaviorModel& model, const RecoveryTerms& terms);

/// Direct evaluation of the weighted cost (norms computed explicitly).
double recovery_cost(const BehaviorModel& model, const RecoveryTerms& terms,
                     const Eigen::VectorXd& g);

/// Forward differences along time of the given channels with zero padding on
/// both ends: L+1 rows per channel.
Eigen::SparseMatrix<double> build_total_variation_operator(int q, Index L,
                                                           const std::vector<int>& channels);
Eigen::SparseMatrix<double> build_total_variation_operator(const BehaviorModel& model,
                                                           const std::vector<std::string>& channels);

Trajectory model_trajectory(const BehaviorModel& model, Eigen::VectorXd data);

struct RecoveryProblem {
    const BehaviorModel* model = nullptr;
    IndexSet known_idx;
    Eigen::VectorXd known_vals;
    Eigen::VectorXd W;
    double lambda = 0.0;
};

struct RecoveryResult {
    Eigen::VectorXd g;
    Eigen::VectorXd w_hat;
    SolverReport report;
};

RecoveryResult recover(const RecoveryProblem& problem, const SolverSettings& settings = {});

/// Known: the first n_ini samples and every input element afterwards.
struct SimulationSpec {
    Index n_ini = 10;
    double epsilon = 1e-6;
    Eigen::VectorXd initial;  // q * n_ini values
    Eigen::VectorXd inputs;   // m * (L - n_ini) values
};

SimulationSpec simulation_spec_from(const Trajectory& reference, Index n_ini, double epsilon = 1e-6);
IndexSet simulation_known_index(int q, int m, Index L, Index n_ini);

struct SimulationResult {
    Trajectory w_hat;
    Eigen::VectorXd g;
    SolverReport report;
};

/// Looser stopping rule without polishing; the recovered trajectory is far more
/// accurate than the tolerances suggest because the optimum is degenerate.
SolverSettings simulation_settings();

/// Factor once, then simulate many input sequences against one model.
class NonparametricSimulator {
public:
    NonparametricSimulator(const BehaviorModel& model, Index n_ini, double lambda,
                           double epsilon = 1e-6,
                           const SolverSettings& settings = simulation_settings());
    SimulationResult run(const SimulationSpec& spec);
    const IndexSet& known_index() const { return known_; }

private:
    const BehaviorModel* model_;
    Index n_ini_;
    double epsilon_;
    IndexSet known_;
    Eigen::MatrixXd HI_;
    CompositeSolver solver_;
};

/// Throws Infeasible when the epsilon box cannot be met.
SimulationResult nonparametric_simulate(const BehaviorModel& model, const SimulationSpec& spec,
                                        double lambda,
                                        const SolverSettings& settings = simulation_settings());

inline constexpr double kNoBound = std::numeric_limits<double>::infinity();

struct TrajectoryGenSpec {
    double theta4_start = 3 * M_PI / 8;
    double theta4_target = 5 * M_PI / 8;
    Index n_given = 10;
    Index L = 500;
    WeightSpec weights;
    double lambda = 0.0064;
    double mu = 14.3214;
    double sigma = 2.5877;
    std::vector<std::string> tv_channels{"theta4", "dtheta4"};
    double sway_bound = 0.035;
    double input_bound = 0.6;        // on the input channel
    double velocity_bound = kNoBound;  // on dtheta4 when it is an output
    bool use_known_term = true;
    bool endpoint_equality = true;
    Index n_pinned = 1;  // samples at each end held by the endpoint equality
    bool inequality = true;
    SolverSettings solver;

    void validate() const;
};

struct GeneratedTrajectory {
    Trajectory predicted;
    Eigen::VectorXd input;
    Eigen::VectorXd g;
    SolverReport report;
    double endpoint_residual = 0.0;
    double bound_violation = 0.0;
};

/// Resting sample with the boom at theta4.
Eigen::VectorXd resting_sample(const std::vector<std::string>& channels, double theta4);
/// Start samples for the first n_given steps, target samples afterwards.
Eigen::VectorXd reference_trajectory(const BehaviorModel& model, const TrajectoryGenSpec& spec);
RecoveryTerms trajectory_terms(const BehaviorModel& model, const TrajectoryGenSpec& spec);

/// Throws Infeasible when the bounds cannot be met.
GeneratedTrajectory generate_trajectory(const BehaviorModel& model, const TrajectoryGenSpec& spec);

struct IndirectResult {
    Eigen::VectorXd w_hat;
    Eigen::VectorXd w_p;
    Eigen::MatrixXd basis;  // orthonormal basis of H * null(H_I)
    Eigen::VectorXd beta;
    double orthogonality_residual = 0.0;
    double known_residual = 0.0;
};

IndirectResult indirect_generate(const BehaviorModel& model, const IndexSet& known_idx,
                                 const Eigen::VectorXd& known_vals, const Eigen::VectorXd& w_ref,
                                 double rank_tol = 1e-10);

}  // namespace ddcrane
