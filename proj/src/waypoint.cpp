#include "ddcrane/waypoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "ddcrane/excitation.hpp"
#include "ddcrane/tuning.hpp"

namespace ddcrane {

using Eigen::VectorXd;

void WaypointBounds::validate() const {
    if (!(ddtheta4_max > 0 && dtheta4_max > 0 && sway > 0 && dsway > 0 && final_sway > 0 &&
          final_dsway > 0))
        throw ConfigError("waypoint bounds must be positive");
    if (final_sway > sway || final_dsway > dsway)
        throw ConfigError("final sway bounds must not exceed the path bounds");
}

void WaypointProblem::validate() const {
    bounds.validate();
    if (n_wp < 3) throw ConfigError("n_wp must be at least 3");
    if (!(tau_min > 0) || !(tau_max > tau_min)) throw ConfigError("invalid tau search bounds");
    if (tau_starts.empty()) throw ConfigError("at least one tau start is needed");
    if (!(substep > 0)) throw ConfigError("substep must be positive");
}

VectorXd waypoint_reference(const WaypointProblem& pr) {
    return VectorXd::LinSpaced(pr.n_wp, pr.theta4_start, pr.theta4_target);
}

double waypoint_objective(const WaypointProblem& pr, const VectorXd& theta4, double tau) {
    const VectorXd ref = waypoint_reference(pr);
    return tau + pr.sigma_ref * pr.sigma_ref / pr.n_wp * (theta4 - ref).squaredNorm();
}

std::vector<SwayState> segment_sway(const VectorXd& dth, const VectorXd& ddth, double tau,
                                    const CraneParams& params, double substep) {
    const Index n = dth.size();
    std::vector<SwayState> out(static_cast<std::size_t>(n));
    if (!params.nonlinear_residual) {
        // With the boom rate and acceleration frozen the sway obeys a linear
        // constant-coefficient ODE; propagate it exactly on (theta1, theta2,
        // dtheta1, dtheta2, 1).
        const double a1sq = params.alpha1() * params.alpha1(), a2 = params.alpha2();
        Eigen::Matrix<double, 5, 1> x = Eigen::Matrix<double, 5, 1>::Zero();
        x(4) = 1.0;
        for (Index k = 0; k + 1 < n; ++k) {
            const double v = dth(k), a = ddth(k);
            Eigen::Matrix<double, 5, 5> G = Eigen::Matrix<double, 5, 5>::Zero();
            G(0, 2) = G(1, 3) = 1.0;
            G(2, 0) = G(3, 1) = -a1sq;
            G(2, 3) = 2 * v;
            G(2, 4) = a2 * v * v;
            G(3, 4) = -a2 * a;
            x = (G * tau).exp() * x;
            out[static_cast<std::size_t>(k + 1)] = {x(0), x(1), x(2), x(3)};
        }
        return out;
    }
    const int steps = std::max(1, static_cast<int>(std::ceil(tau / substep - 1e-9)));
    const double h = tau / steps;
    CraneState x = CraneState::Zero();
    for (Index k = 0; k + 1 < n; ++k) {
        const double v = dth(k), a = ddth(k);
        for (int s = 0; s < steps; ++s) {
            // boom rate held at v, acceleration at a over the segment
            x(state::dtheta4) = v;
            CraneState k1 = state_derivative<double>(x, a, params);
            CraneState x2 = x + (h / 2) * k1;
            x2(state::dtheta4) = v;
            CraneState k2 = state_derivative<double>(x2, a, params);
            CraneState x3 = x + (h / 2) * k2;
            x3(state::dtheta4) = v;
            CraneState k3 = state_derivative<double>(x3, a, params);
            CraneState x4 = x + h * k3;
            x4(state::dtheta4) = v;
            CraneState k4 = state_derivative<double>(x4, a, params);
            x += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        out[static_cast<std::size_t>(k + 1)] = {x(state::theta1), x(state::theta2), x(state::dtheta1),
                                                x(state::dtheta2)};
    }
    return out;
}

double kinematic_residual(const VectorXd& th, const VectorXd& dth, const VectorXd& ddth, double tau,
                          bool backward) {
    double r = 0.0;
    const Index n = th.size();
    if (backward) {
        for (Index j = 1; j < n; ++j) {
            r = std::max(r, std::abs(dth(j) - (th(j) - th(j - 1)) / tau));
            r = std::max(r, std::abs(ddth(j) - (dth(j) - dth(j - 1)) / tau));
        }
        return r;
    }
    for (Index j = 1; j + 1 < n; ++j) {
        r = std::max(r, std::abs(dth(j + 1) - (th(j) - th(j - 1)) / tau));
        r = std::max(r, std::abs(ddth(j + 1) - (dth(j) - dth(j - 1)) / tau));
    }
    return r;
}

namespace {

struct Unpacked {
    VectorXd th, dth, ddth;
    double tau = 0.0;
};

/// Reduced parameterization: the finite-difference relations and boundary
/// conditions hold by construction.
class Parameterization {
public:
    explicit Parameterization(const WaypointProblem& pr) : pr_(pr), n_(pr.n_wp) {
        const double span = std::abs(pr.theta4_target - pr.theta4_start);
        const double ts = span > 0 ? span : 1.0;
        if (pr.backward_difference) {
            free_theta_ = std::max<Index>(n_ - 4, 0);
            dim_ = free_theta_ + 1;
        } else {
            free_theta_ = n_ >= 5 ? n_ - 4 : (n_ == 4 ? 1 : 0);
            dim_ = free_theta_ + (n_ == 4 ? 0 : 1) + 1 + 1;
        }
        scale_ = VectorXd::Ones(dim_);
        Index i = 0;
        for (; i < free_theta_; ++i) scale_(i) = ts;
        if (!pr.backward_difference) {
            if (n_ != 4) scale_(i++) = pr.bounds.dtheta4_max;
            scale_(i++) = pr.bounds.ddtheta4_max;
        }
        scale_(i) = 1.0;
    }

    Index dim() const { return dim_; }

    VectorXd initial(double tau) const {
        const VectorXd ref = waypoint_reference(pr_);
        VectorXd z = VectorXd::Zero(dim_);
        for (Index i = 0; i < free_theta_; ++i) z(i) = ref(i + 1) / scale_(i);
        z(dim_ - 1) = tau;
        return z;
    }

    Unpacked unpack(const VectorXd& z) const {
        const VectorXd y = z.cwiseProduct(scale_);
        Unpacked u;
        u.tau = y(dim_ - 1);
        const double tau = u.tau;
        u.th = VectorXd::Zero(n_);
        u.dth = VectorXd::Zero(n_);
        u.ddth = VectorXd::Zero(n_);
        u.th(0) = pr_.theta4_start;
        u.th(n_ - 1) = pr_.theta4_target;
        Index i = 0;
        if (pr_.backward_difference) {
            // rest at the end forces the last three waypoints onto the target
            for (Index j = 1; j <= n_ - 4; ++j) u.th(j) = y(i++);
            for (Index j = std::max<Index>(n_ - 3, 1); j < n_; ++j) u.th(j) = pr_.theta4_target;
            for (Index j = 1; j < n_; ++j) u.dth(j) = (u.th(j) - u.th(j - 1)) / tau;
            for (Index j = 1; j < n_; ++j) u.ddth(j) = (u.dth(j) - u.dth(j - 1)) / tau;
            return u;
        }
        if (n_ >= 5) {
            for (Index j = 1; j <= n_ - 4; ++j) u.th(j) = y(i++);
            u.th(n_ - 3) = 2 * u.th(n_ - 4) - u.th(n_ - 5);
            u.th(n_ - 2) = u.th(n_ - 3);
            u.dth(1) = y(i++);
        } else if (n_ == 4) {
            u.th(1) = y(i++);
            u.th(2) = u.th(1);
            u.dth(1) = (u.th(1) - u.th(0)) / tau;
        } else {
            u.th(1) = u.th(0);
            u.dth(1) = y(i++);
            u.dth(1) = 0.0;
        }
        u.ddth(1) = y(i++);
        for (Index j = 1; j + 1 < n_; ++j) u.dth(j + 1) = (u.th(j) - u.th(j - 1)) / tau;
        for (Index j = 1; j + 1 < n_; ++j) u.ddth(j + 1) = (u.dth(j) - u.dth(j - 1)) / tau;
        return u;
    }

private:
    const WaypointProblem& pr_;
    Index n_;
    Index free_theta_ = 0;
    Index dim_ = 0;
    VectorXd scale_;
};

/// Segment-wise (velocity, acceleration) pairs handed to the sway propagation.
std::vector<SwayState> waypoint_sway(const WaypointProblem& pr, const Unpacked& u,
                                     const CraneParams& params) {
    const double tau = std::max(u.tau, 1e-3);
    if (!pr.backward_difference) return segment_sway(u.dth, u.ddth, tau, params, pr.substep);
    const Index n = u.dth.size();
    VectorXd v = VectorXd::Zero(n), a = VectorXd::Zero(n);
    for (Index k = 0; k + 1 < n; ++k) {
        v(k) = 0.5 * (u.dth(k) + u.dth(k + 1));
        a(k) = u.ddth(k + 1);
    }
    return segment_sway(v, a, tau, params, pr.substep);
}

struct Evaluator {
    const WaypointProblem& pr;
    const CraneParams& params;
    const Parameterization& par;
    double shrink;  // 1 - margin

    double objective(const Unpacked& u) const { return waypoint_objective(pr, u.th, u.tau); }

    /// Constraints normalized by their bounds, feasible when <= 0.
    VectorXd constraints(const Unpacked& u) const {
        const WaypointBounds& b = pr.bounds;
        const Index n = pr.n_wp;
        std::vector<double> c;
        c.reserve(static_cast<std::size_t>(16 * n));
        c.push_back((pr.tau_min - u.tau) / pr.tau_min);
        c.push_back((u.tau - pr.tau_max) / pr.tau_max);
        const double vm = shrink * b.dtheta4_max, am = shrink * b.ddtheta4_max;
        for (Index j = 1; j + 1 < n; ++j) {
            c.push_back(u.dth(j) / vm - 1);
            c.push_back(-u.dth(j) / vm - 1);
            c.push_back(u.ddth(j) / am - 1);
            c.push_back(-u.ddth(j) / am - 1);
        }
        const auto sw = waypoint_sway(pr, u, params);
        for (Index k = 1; k < n; ++k) {
            const bool fin = k == n - 1;
            const double pb = shrink * (fin ? b.final_sway : b.sway);
            const double vb = shrink * (fin ? b.final_dsway : b.dsway);
            const SwayState& s = sw[static_cast<std::size_t>(k)];
            for (double v : {s.theta1 / pb, s.theta2 / pb, s.dtheta1 / vb, s.dtheta2 / vb}) {
                c.push_back(v - 1);
                c.push_back(-v - 1);
            }
        }
        return Eigen::Map<VectorXd>(c.data(), static_cast<Index>(c.size()));
    }
};

struct AlResult {
    VectorXd z;
    double objective = 0.0;
    double violation = 0.0;
    int iterations = 0;
};

AlResult augmented_lagrangian(const Evaluator& ev, VectorXd z, const WaypointProblem& pr) {
    const Index d = z.size();
    VectorXd mult;
    double rho = 10.0;
    double prev_viol = std::numeric_limits<double>::infinity();
    int total_iters = 0;

    auto merit = [&](const VectorXd& zz, const VectorXd& mu) {
        const Unpacked u = ev.par.unpack(zz);
        const VectorXd c = ev.constraints(u);
        double v = ev.objective(u);
        for (Index i = 0; i < c.size(); ++i) {
            const double t = std::max(0.0, mu(i) + rho * c(i));
            v += (t * t - mu(i) * mu(i)) / (2 * rho);
        }
        return v;
    };

    mult = VectorXd::Zero(ev.constraints(ev.par.unpack(z)).size());
    AlResult res;
    for (int outer = 0; outer < pr.max_outer; ++outer) {
        // BFGS on the augmented Lagrangian with central-difference gradients
        auto grad = [&](const VectorXd& zz) {
            VectorXd g(d);
            for (Index i = 0; i < d; ++i) {
                const double h = 1e-6 * std::max(1.0, std::abs(zz(i)));
                VectorXd zp = zz, zm = zz;
                zp(i) += h;
                zm(i) -= h;
                g(i) = (merit(zp, mult) - merit(zm, mult)) / (2 * h);
            }
            return g;
        };
        Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(d, d);
        double f = merit(z, mult);
        VectorXd g = grad(z);
        for (int it = 0; it < pr.max_inner; ++it) {
            ++total_iters;
            if (g.lpNorm<Eigen::Infinity>() < 1e-9) break;
            VectorXd p = -Hinv * g;
            if (p.dot(g) >= 0) {
                Hinv.setIdentity();
                p = -g;
            }
            double step = 1.0;
            // keep tau positive along the search direction
            if (p(d - 1) < 0) step = std::min(step, 0.5 * (z(d - 1) - 1e-3) / -p(d - 1));
            double fn = f;
            VectorXd zn = z;
            bool ok = false;
            for (int ls = 0; ls < 50; ++ls) {
                zn = z + step * p;
                fn = merit(zn, mult);
                if (fn <= f + 1e-4 * step * p.dot(g)) {
                    ok = true;
                    break;
                }
                step *= 0.5;
            }
            if (!ok) {
                if (Hinv.isIdentity()) break;
                Hinv.setIdentity();
                continue;
            }
            const VectorXd gn = grad(zn);
            const VectorXd s = zn - z, yv = gn - g;
            const double sy = s.dot(yv);
            if (sy > 1e-14) {
                const double r = 1.0 / sy;
                const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
                Hinv = (I - r * s * yv.transpose()) * Hinv * (I - r * yv * s.transpose()) +
                       r * s * s.transpose();
            }
            const double df = f - fn;
            z = zn;
            f = fn;
            g = gn;
            if (df < 1e-15 * std::max(1.0, std::abs(f)) && s.lpNorm<Eigen::Infinity>() < 1e-12) break;
        }
        const Unpacked u = ev.par.unpack(z);
        const VectorXd c = ev.constraints(u);
        const double viol = std::max(0.0, c.maxCoeff());
        for (Index i = 0; i < c.size(); ++i) mult(i) = std::max(0.0, mult(i) + rho * c(i));
        res.z = z;
        res.objective = ev.objective(u);
        res.violation = viol;
        // complementarity proxy: multipliers must vanish on clearly inactive rows
        double comp = 0.0;
        for (Index i = 0; i < c.size(); ++i) comp = std::max(comp, std::abs(mult(i) * c(i)));
        if (viol <= pr.feas_tol && comp <= 1e-7) break;
        if (viol > 0.25 * prev_viol) rho = std::min(rho * 10.0, 1e9);
        prev_viol = viol;
    }
    res.iterations = total_iters;
    return res;
}

}  // namespace

WaypointSolution solve_waypoint_nlp(const WaypointProblem& pr, const CraneParams& params) {
    pr.validate();
    params.validate();
    const Parameterization par(pr);
    const Evaluator ev{pr, params, par, 1.0 - pr.margin};
    const Evaluator exact{pr, params, par, 1.0};

    std::vector<AlResult> runs(pr.tau_starts.size());
    parallel_for(static_cast<Index>(pr.tau_starts.size()), pr.threads, [&](Index k) {
        const double t0 = std::clamp(pr.tau_starts[static_cast<std::size_t>(k)], pr.tau_min, pr.tau_max);
        runs[static_cast<std::size_t>(k)] = augmented_lagrangian(ev, par.initial(t0), pr);
    });

    int best = -1;
    double best_obj = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const Unpacked u = par.unpack(runs[k].z);
        const double viol = std::max(0.0, exact.constraints(u).maxCoeff());
        if (viol <= 1e-6 && runs[k].objective < best_obj) {
            best_obj = runs[k].objective;
            best = static_cast<int>(k);
        }
    }
    if (best < 0) throw Infeasible("waypoint program: no start reached a feasible point");

    const AlResult& r = runs[static_cast<std::size_t>(best)];
    const Unpacked u = par.unpack(r.z);
    WaypointSolution sol;
    sol.theta4 = u.th;
    sol.dtheta4 = u.dth;
    sol.ddtheta4 = u.ddth;
    sol.tau = u.tau;
    sol.total_time = (pr.n_wp - 1) * u.tau;
    sol.objective = r.objective;
    sol.initial_objective = waypoint_objective(pr, waypoint_reference(pr), pr.tau_starts.front());
    sol.sway = waypoint_sway(pr, u, params);
    sol.kinematic_residual = kinematic_residual(u.th, u.dth, u.ddth, u.tau, pr.backward_difference);
    const WaypointBounds& b = pr.bounds;
    double v = 0.0;
    for (Index j = 0; j < pr.n_wp; ++j) {
        v = std::max(v, std::abs(u.dth(j)) - b.dtheta4_max);
        v = std::max(v, std::abs(u.ddth(j)) - b.ddtheta4_max);
    }
    for (int k = 1; k < pr.n_wp; ++k) {
        const bool fin = k == pr.n_wp - 1;
        const SwayState& s = sol.sway[static_cast<std::size_t>(k)];
        const double pb = fin ? b.final_sway : b.sway, vb = fin ? b.final_dsway : b.dsway;
        v = std::max({v, std::abs(s.theta1) - pb, std::abs(s.theta2) - pb, std::abs(s.dtheta1) - vb,
                      std::abs(s.dtheta2) - vb});
    }
    sol.bound_violation = std::max(0.0, v);
    sol.iterations = r.iterations;
    sol.start_index = best;
    sol.status = SolverStatus::Optimal;
    return sol;
}

Trajectory waypoint_playback(const WaypointSolution& sol, const CraneParams& params,
                             double theta4_start, double rate, double tail) {
    const double T = sol.total_time;
    const auto n = static_cast<Index>(std::ceil(T * rate - 1e-9)) + 1 +
                   static_cast<Index>(std::llround(tail * rate));
    VectorXd v = VectorXd::Zero(n + 1);
    const Index nw = sol.dtheta4.size();
    for (Index i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / rate;
        if (t >= T || sol.tau <= 0) continue;
        const double s = t / sol.tau;
        const auto k = std::min<Index>(static_cast<Index>(std::floor(s)), nw - 2);
        const double f = s - static_cast<double>(k);
        v(i) = (1 - f) * sol.dtheta4(k) + f * sol.dtheta4(k + 1);
    }
    const VectorXd a = differentiate_to_acceleration(v, rate);
    CraneState x0 = CraneState::Zero();
    x0(state::theta4) = theta4_start;
    x0(state::dtheta4) = v(0);
    SimulateOptions opts;
    opts.rate = rate;
    return simulate(x0, a.head(n), params, std::nullopt, opts);
}

RolloutCheck verify_rollout(const Trajectory& ro, const WaypointSolution& sol,
                            const WaypointBounds& b, double tol) {
    RolloutCheck c;
    const VectorXd t1 = ro.channel("theta1").cwiseAbs(), t2 = ro.channel("theta2").cwiseAbs();
    c.max_sway_excess = std::max(t1.maxCoeff(), t2.maxCoeff()) - b.sway;
    const auto kf = std::min<Index>(static_cast<Index>(std::llround(sol.total_time * ro.rate)),
                                    ro.samples() - 1);
    c.final_sway_excess = std::max(t1(kf), t2(kf)) - b.final_sway;
    c.feasible = c.max_sway_excess <= tol && c.final_sway_excess <= tol;
    return c;
}

ComparisonReport compare(const MethodResult& a, const MethodResult& b, const ScoreSpec& sc) {
    ComparisonReport rep;
    rep.a_name = a.name;
    rep.b_name = b.name;
    rep.a = score_trajectory(a.rollout, nullptr, sc);
    rep.b = score_trajectory(b.rollout, nullptr, sc);
    auto ratio = [](double x, double y) {
        if (x == y) return 1.0;
        if (y == 0.0) return std::numeric_limits<double>::infinity();
        return x / y;
    };
    rep.time_ratio = ratio(a.motion_time, b.motion_time);
    rep.theta1_ratio = ratio(rep.a.max_sway_theta1, rep.b.max_sway_theta1);
    rep.theta2_ratio = ratio(rep.a.max_sway_theta2, rep.b.max_sway_theta2);
    rep.final_error_ratio = ratio(rep.a.final_error, rep.b.final_error);
    return rep;
}

}  // namespace ddcrane
