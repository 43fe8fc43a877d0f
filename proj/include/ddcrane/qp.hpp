#pragma once

#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "ddcrane/errors.hpp"

namespace ddcrane {

/// minimize 0.5 g'Pg + q'g + lambda*|g|_1  s.t.  A_eq g = b_eq,  A_in g <= b_in.
struct CompositeQP {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    double lambda = 0.0;
    Eigen::MatrixXd A_eq;
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd A_in;
    Eigen::VectorXd b_in;
    double offset = 0.0;  // constant added to the objective

    Eigen::Index dim() const { return q.size(); }
    /// Fills empty constraint blocks with correctly shaped zero-row matrices.
    void normalize();
    void validate() const;
    double objective(const Eigen::VectorXd& g) const;
};

enum class SolverStatus { Optimal, MaxIters, Infeasible };
std::string to_string(SolverStatus s);

struct SolverSettings {
    double tol_abs = 1e-8;
    double tol_rel = 1e-6;
    int max_iters = 200000;
    double time_limit = 0.0;  // seconds, 0 disables
    double rho = 0.1;
    double sigma = 1e-6;
    double alpha = 1.6;
    double eq_rho_scale = 1e3;
    bool adaptive_rho = true;
    int adapt_interval = 50;
    double adapt_tolerance = 5.0;
    int check_interval = 25;
    int scaling_iters = 10;
    double infeasibility_tol = 1e-6;
    bool polish = true;
    double polish_reg = 1e-7;
    int polish_refine = 4;
    double zero_tol = 1e-12;
};

/// First-order optimality residuals of the composite problem at (g, y_eq, y_in).
struct KktResidual {
    double stationarity = 0.0;     // distance of -grad to lambda * subdifferential
    double eq_violation = 0.0;     // |A_eq g - b_eq|_inf
    double ineq_violation = 0.0;   // max(0, A_in g - b_in)
    double dual_sign = 0.0;        // max(0, -y_in)
    double complementarity = 0.0;  // max |y_in_i (b_in - A_in g)_i|
    double max() const;
};

KktResidual kkt_residual(const CompositeQP& problem, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& y_eq, const Eigen::VectorXd& y_in,
                         double zero_tol = 1e-12);

struct SolverReport {
    Eigen::VectorXd g;
    Eigen::VectorXd y_eq;
    Eigen::VectorXd y_in;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double objective = 0.0;
    int iterations = 0;
    SolverStatus status = SolverStatus::MaxIters;
    bool polished = false;
    int refactorizations = 0;
    double rho = 0.0;
    KktResidual kkt;
};

/// Splitting solver with the matrix data fixed. The factorization is built once
/// and reused by every solve with new (q, b_eq, b_in).
class CompositeSolver {
public:
    CompositeSolver(const Eigen::MatrixXd& P, double lambda, const Eigen::MatrixXd& A_eq,
                    const Eigen::MatrixXd& A_in, SolverSettings settings = {});
    explicit CompositeSolver(const CompositeQP& problem, SolverSettings settings = {});
    ~CompositeSolver();
    CompositeSolver(CompositeSolver&&) noexcept;
    CompositeSolver& operator=(CompositeSolver&&) noexcept;

    SolverReport solve(const Eigen::VectorXd& q, const Eigen::VectorXd& b_eq,
                       const Eigen::VectorXd& b_in);

    Eigen::Index dim() const;
    const SolverSettings& settings() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

SolverReport solve(const CompositeQP& problem, const SolverSettings& settings = {});

/// Writes P, q, lambda and the constraint blocks to dir (raw float64 matrices plus
/// a JSON index). See README for the layout.
void dump_problem(const CompositeQP& problem, const std::string& dir);
CompositeQP load_problem(const std::string& dir);

}  // namespace ddcrane
