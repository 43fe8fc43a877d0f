#pragma once

#include <random>

#include <Eigen/Dense>

#include "ddcrane/trajectory.hpp"

namespace fixtures {

using ddcrane::Index;
using ddcrane::Trajectory;

/// Second-order single-input single-output system x+ = A x + B u, y = C x.
struct Lti {
    Eigen::Matrix2d A;
    Eigen::Vector2d B;
    Eigen::RowVector2d C;

    Lti() {
        A << 0.9, 0.2, -0.2, 0.9;
        B << 0.0, 1.0;
        C << 1.0, 0.5;
    }

    /// Samples (u_k, y_k), y_k = C x_k.
    Trajectory run(const Eigen::Vector2d& x0, const Eigen::VectorXd& u) const {
        Eigen::VectorXd d(2 * u.size());
        Eigen::Vector2d x = x0;
        for (Index k = 0; k < u.size(); ++k) {
            d(2 * k) = u(k);
            d(2 * k + 1) = C * x;
            x = A * x + B * u(k);
        }
        return {2, 1, 1.0, d, {"u", "y"}};
    }

    Trajectory random(Index n, std::mt19937_64& rng) const {
        std::normal_distribution<double> nd;
        Eigen::VectorXd u(n);
        for (Index k = 0; k < n; ++k) u(k) = nd(rng);
        return run(Eigen::Vector2d(nd(rng), nd(rng)), u);
    }
};

inline Eigen::MatrixXd random_matrix(Index r, Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd M(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) M(i, j) = nd(rng);
    return M;
}

}  // namespace fixtures
