#pragma once

#include <cmath>
#include <limits>
#include <random>

#include "ddcrane/qp.hpp"
#include "fixtures.hpp"

namespace fixtures {

/// Random instance with a known feasible point. Small instances get a
/// positive definite P so the optimum is unique.
inline ddcrane::CompositeQP random_qp(Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::uniform_int_distribution<int> coin(0, 1);
    ddcrane::CompositeQP qp;
    const Index r = n <= 4 ? n + 1 : std::max<Index>(1, n - static_cast<Index>(ud(rng) * n / 2));
    const Eigen::MatrixXd F = random_matrix(r, n, rng);
    qp.P = F.transpose() * F / static_cast<double>(r) + 0.05 * Eigen::MatrixXd::Identity(n, n);
    qp.q = random_matrix(n, 1, rng);
    qp.lambda = coin(rng) ? ud(rng) : 0.0;
    const Eigen::VectorXd g0 = random_matrix(n, 1, rng) * 0.5;
    const Index n_eq = std::min<Index>(n - 1, static_cast<Index>(ud(rng) * 3));
    const Index n_in = n <= 4 ? static_cast<Index>(ud(rng) * 5) : static_cast<Index>(ud(rng) * 2 * n);
    qp.A_eq = random_matrix(n_eq, n, rng);
    qp.b_eq = qp.A_eq * g0;
    qp.A_in = random_matrix(n_in, n, rng);
    qp.b_in = qp.A_in * g0;
    for (Index i = 0; i < n_in; ++i) qp.b_in(i) += ud(rng) * ud(rng);
    qp.normalize();
    return qp;
}

/// Exact minimum by enumeration of sign patterns and active sets; each face
/// is solved as an equality constrained quadratic.
inline double enumeration_oracle(const ddcrane::CompositeQP& qp, Eigen::VectorXd* best_g = nullptr) {
    const Index n = qp.dim(), ne = qp.A_eq.rows(), ni = qp.A_in.rows();
    const int signs = qp.lambda > 0 ? 3 : 1;
    Index patterns = 1;
    for (Index i = 0; i < n; ++i) patterns *= signs;
    double best = std::numeric_limits<double>::infinity();
    for (Index pat = 0; pat < patterns; ++pat) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
        std::vector<Index> zero;
        Index code = pat;
        for (Index i = 0; i < n; ++i) {
            if (signs == 3) {
                const Index d = code % 3;
                code /= 3;
                if (d == 0) zero.push_back(i);
                s(i) = d == 1 ? 1.0 : (d == 2 ? -1.0 : 0.0);
            }
        }
        for (Index act = 0; act < (Index(1) << ni); ++act) {
            std::vector<Index> rows;
            for (Index k = 0; k < ni; ++k)
                if (act >> k & 1) rows.push_back(k);
            const Index nc = ne + static_cast<Index>(rows.size() + zero.size());
            Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + nc, n + nc);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + nc);
            K.topLeftCorner(n, n) = qp.P;
            rhs.head(n) = -(qp.q + qp.lambda * s);
            Index c = n;
            auto add = [&](const Eigen::RowVectorXd& a, double b) {
                K.block(c, 0, 1, n) = a;
                K.block(0, c, n, 1) = a.transpose();
                rhs(c++) = b;
            };
            for (Index k = 0; k < ne; ++k) add(qp.A_eq.row(k), qp.b_eq(k));
            for (Index k : rows) add(qp.A_in.row(k), qp.b_in(k));
            for (Index i : zero) add(Eigen::RowVectorXd::Unit(n, i), 0.0);
            const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
            if ((K * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
            const Eigen::VectorXd g = sol.head(n);
            if (ne && (qp.A_eq * g - qp.b_eq).cwiseAbs().maxCoeff() > 1e-9) continue;
            if (ni && (qp.A_in * g - qp.b_in).maxCoeff() > 1e-9) continue;
            bool sign_ok = true;
            for (Index i = 0; i < n; ++i)
                if (s(i) * g(i) < -1e-12) sign_ok = false;
            if (!sign_ok) continue;
            const double f = qp.objective(g);
            if (f < best) {
                best = f;
                if (best_g) *best_g = g;
            }
        }
    }
    return best;
}

/// Best objective over a uniform lattice of the box [-R, R]^n (inequality
/// constrained instances only).
inline double lattice_bound(const ddcrane::CompositeQP& qp, double R, int per_dim) {
    const Index n = qp.dim();
    Index total = 1;
    for (Index i = 0; i < n; ++i) total *= per_dim;
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd g(n);
    for (Index k = 0; k < total; ++k) {
        Index code = k;
        for (Index i = 0; i < n; ++i) {
            g(i) = -R + 2 * R * static_cast<double>(code % per_dim) / (per_dim - 1);
            code /= per_dim;
        }
        if (qp.A_in.rows() && (qp.A_in * g - qp.b_in).maxCoeff() > 0) continue;
        best = std::min(best, qp.objective(g));
    }
    return best;
}

}  // namespace fixtures
