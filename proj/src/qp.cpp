#include "ddcrane/qp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace ddcrane {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double col_inf_norm(const MatrixXd& A, Index j) {
    return A.rows() ? A.col(j).cwiseAbs().maxCoeff() : 0.0;
}

double scale_factor(double norm) {
    if (norm < 1e-4) return 1.0;
    return std::clamp(1.0 / std::sqrt(norm), 1e-4, 1e4);
}

VectorXd soft_threshold(const VectorXd& v, const VectorXd& thr) {
    return v.array().sign() * (v.array().abs() - thr.array()).max(0.0);
}

}  // namespace

std::string to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::Optimal: return "optimal";
        case SolverStatus::MaxIters: return "max_iters";
        case SolverStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

void CompositeQP::normalize() {
    const Index n = q.size();
    if (A_eq.size() == 0) A_eq.resize(0, n);
    if (b_eq.size() == 0) b_eq.resize(0);
    if (A_in.size() == 0) A_in.resize(0, n);
    if (b_in.size() == 0) b_in.resize(0);
}

void CompositeQP::validate() const {
    const Index n = q.size();
    if (P.rows() != n || P.cols() != n) throw DimensionMismatch("P must be n x n");
    if (A_eq.cols() != n && A_eq.rows() != 0) throw DimensionMismatch("A_eq column count");
    if (A_in.cols() != n && A_in.rows() != 0) throw DimensionMismatch("A_in column count");
    if (A_eq.rows() != b_eq.size()) throw DimensionMismatch("A_eq / b_eq rows");
    if (A_in.rows() != b_in.size()) throw DimensionMismatch("A_in / b_in rows");
    if (!(lambda >= 0.0)) throw DimensionMismatch("lambda must be nonnegative");
    const double pn = P.cwiseAbs().maxCoeff();
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(pn, 1.0))
        throw DimensionMismatch("P must be symmetric");
}

double CompositeQP::objective(const VectorXd& g) const {
    return 0.5 * g.dot(P * g) + q.dot(g) + lambda * g.lpNorm<1>() + offset;
}

double KktResidual::max() const {
    return std::max({stationarity, eq_violation, ineq_violation, dual_sign, complementarity});
}

KktResidual kkt_residual(const CompositeQP& pr, const VectorXd& g, const VectorXd& y_eq,
                         const VectorXd& y_in, double zero_tol) {
    KktResidual r;
    VectorXd grad = pr.P * g + pr.q;
    if (pr.A_eq.rows()) grad += pr.A_eq.transpose() * y_eq;
    if (pr.A_in.rows()) grad += pr.A_in.transpose() * y_in;
    for (Index i = 0; i < g.size(); ++i) {
        double s;
        if (std::abs(g(i)) > zero_tol)
            s = std::abs(grad(i) + pr.lambda * (g(i) > 0 ? 1.0 : -1.0));
        else
            s = std::max(0.0, std::abs(grad(i)) - pr.lambda);
        r.stationarity = std::max(r.stationarity, s);
    }
    if (pr.A_eq.rows()) r.eq_violation = inf_norm(pr.A_eq * g - pr.b_eq);
    if (pr.A_in.rows()) {
        const VectorXd slack = pr.b_in - pr.A_in * g;
        r.ineq_violation = std::max(0.0, -slack.minCoeff());
        r.dual_sign = std::max(0.0, -y_in.minCoeff());
        r.complementarity = (y_in.array() * slack.array()).abs().maxCoeff();
    }
    return r;
}

struct CompositeSolver::Impl {
    SolverSettings st;
    Index n = 0, p = 0, r = 0, m = 0;
    bool l1 = false;
    MatrixXd P;         // scaled
    MatrixXd A;         // scaled [A_eq; A_in]
    MatrixXd G_eq, G_in;
    VectorXd D, E;
    double c = 1.0;
    VectorXd wl1;       // scaled L1 weights c*lambda*D
    double lambda = 0.0;
    double rho = 0.1;
    Eigen::LLT<MatrixXd> llt;
    int refactorizations = 0;
    std::pair<std::vector<Index>, std::vector<Index>> last_failed;
    // unscaled copies for the certificate
    CompositeQP original;

    void build(const MatrixXd& P0, double lam, const MatrixXd& Aeq0, const MatrixXd& Ain0) {
        n = P0.rows();
        p = Aeq0.rows();
        r = Ain0.rows();
        m = p + r;
        lambda = lam;
        l1 = lam > 0.0;
        original.P = P0;
        original.lambda = lam;
        original.A_eq = Aeq0.rows() ? Aeq0 : MatrixXd(0, n);
        original.A_in = Ain0.rows() ? Ain0 : MatrixXd(0, n);
        P = P0;
        A.resize(m, n);
        if (p) A.topRows(p) = Aeq0;
        if (r) A.bottomRows(r) = Ain0;
        D = VectorXd::Ones(n);
        E = VectorXd::Ones(m);
        c = 1.0;
        for (int it = 0; it < st.scaling_iters; ++it) {
            VectorXd dt(n), et(m);
            for (Index j = 0; j < n; ++j)
                dt(j) = scale_factor(std::max(P.col(j).cwiseAbs().maxCoeff(), col_inf_norm(A, j)));
            for (Index i = 0; i < m; ++i) et(i) = scale_factor(A.row(i).cwiseAbs().maxCoeff());
            P = dt.asDiagonal() * P * dt.asDiagonal();
            A = et.asDiagonal() * A * dt.asDiagonal();
            D = D.cwiseProduct(dt);
            E = E.cwiseProduct(et);
        }
        double pmean = 0.0;
        for (Index j = 0; j < n; ++j) pmean += P.col(j).cwiseAbs().maxCoeff();
        pmean /= std::max<Index>(n, 1);
        if (pmean > 1e-8) {
            c = std::clamp(1.0 / pmean, 1e-4, 1e4);
            P *= c;
        }
        wl1 = (c * lambda) * D;
        G_eq = p ? MatrixXd(A.topRows(p).transpose() * A.topRows(p)) : MatrixXd::Zero(n, n);
        G_in = r ? MatrixXd(A.bottomRows(r).transpose() * A.bottomRows(r)) : MatrixXd::Zero(n, n);
        rho = st.rho;
        factor();
    }

    void factor() {
        MatrixXd K = P;
        K.diagonal().array() += st.sigma + (l1 ? rho : 0.0);
        if (p) K.noalias() += (st.eq_rho_scale * rho) * G_eq;
        if (r) K.noalias() += rho * G_in;
        llt.compute(K);
        if (llt.info() != Eigen::Success) {
            K.diagonal().array() += 1e-10 * std::max(1.0, K.diagonal().cwiseAbs().maxCoeff());
            llt.compute(K);
            if (llt.info() != Eigen::Success) throw Error("KKT factorization failed (P not PSD?)");
        }
        ++refactorizations;
    }

    VectorXd rho_vec() const {
        VectorXd rv(m);
        if (p) rv.head(p).setConstant(st.eq_rho_scale * rho);
        if (r) rv.tail(r).setConstant(rho);
        return rv;
    }

    struct Unscaled {
        VectorXd g, y_eq, y_in;
    };

    Unscaled unscale(const VectorXd& x, const VectorXd& yA) const {
        Unscaled u;
        u.g = D.cwiseProduct(x);
        const VectorXd y = E.cwiseProduct(yA) / c;
        u.y_eq = y.head(p);
        u.y_in = y.tail(r);
        return u;
    }

    bool polish(const VectorXd& z1, const VectorXd& zA, const VectorXd& yA,
                const VectorXd& qs, const VectorXd& bs, VectorXd& x_out, VectorXd& yA_out) {
        std::vector<Index> free_idx;
        VectorXd sgn = VectorXd::Zero(n);
        for (Index i = 0; i < n; ++i) {
            if (l1) {
                if (z1(i) == 0.0) continue;
                sgn(i) = z1(i) > 0 ? 1.0 : -1.0;
            }
            free_idx.push_back(i);
        }
        std::vector<Index> act;
        for (Index i = 0; i < p; ++i) act.push_back(i);
        for (Index i = p; i < m; ++i)
            if (bs(i) - zA(i) < yA(i)) act.push_back(i);
        // Same face as the last failed attempt: the answer would not change.
        if (!last_failed.first.empty() || !last_failed.second.empty())
            if (last_failed.first == free_idx && last_failed.second == act) return false;
        last_failed = {free_idx, act};
        const Index nf = static_cast<Index>(free_idx.size());
        const Index na = static_cast<Index>(act.size());
        x_out = VectorXd::Zero(n);
        yA_out = VectorXd::Zero(m);
        if (nf == 0 && na == 0) return true;
        const MatrixXd Pf = P(free_idx, free_idx);
        const MatrixXd Af = A(act, free_idx);
        const Index N = nf + na;
        MatrixXd K(N, N);
        K.topLeftCorner(nf, nf) = Pf;
        K.topRightCorner(nf, na) = Af.transpose();
        K.bottomLeftCorner(na, nf) = Af;
        K.bottomRightCorner(na, na).setZero();
        VectorXd rhs(N);
        for (Index k = 0; k < nf; ++k) {
            const Index i = free_idx[static_cast<std::size_t>(k)];
            rhs(k) = -qs(i) - wl1(i) * sgn(i);
        }
        for (Index k = 0; k < na; ++k) rhs(nf + k) = bs(act[static_cast<std::size_t>(k)]);
        MatrixXd Kreg = K;
        Kreg.diagonal().head(nf).array() += st.polish_reg;
        Kreg.diagonal().tail(na).array() -= st.polish_reg;
        Eigen::LDLT<MatrixXd> ldlt(Kreg);
        VectorXd sol;
        bool ok = ldlt.info() == Eigen::Success;
        if (ok) {
            sol = ldlt.solve(rhs);
            ok = sol.allFinite();
        }
        Eigen::PartialPivLU<MatrixXd> lu;
        if (!ok) {
            lu.compute(Kreg);
            sol = lu.solve(rhs);
            if (!sol.allFinite()) return false;
        }
        for (int it = 0; it < st.polish_refine; ++it) {
            const VectorXd res = rhs - K * sol;
            const VectorXd d = ok ? VectorXd(ldlt.solve(res)) : VectorXd(lu.solve(res));
            if (!d.allFinite()) break;
            sol += d;
        }
        for (Index k = 0; k < nf; ++k) x_out(free_idx[static_cast<std::size_t>(k)]) = sol(k);
        for (Index k = 0; k < na; ++k) yA_out(act[static_cast<std::size_t>(k)]) = sol(nf + k);
        return x_out.allFinite() && yA_out.allFinite();
    }

    double kkt_target(const Unscaled& u, const VectorXd& q0) const {
        double scale = std::max(inf_norm(q0), inf_norm(original.P * u.g));
        if (p) scale = std::max(scale, inf_norm(original.A_eq.transpose() * u.y_eq));
        if (r) scale = std::max(scale, inf_norm(original.A_in.transpose() * u.y_in));
        scale = std::max(scale, lambda);
        return st.tol_abs + st.tol_rel * scale;
    }

    SolverReport run(const VectorXd& q0, const VectorXd& beq0, const VectorXd& bin0) {
        if (q0.size() != n || beq0.size() != p || bin0.size() != r)
            throw DimensionMismatch("solve: data sizes do not match the factored problem");
        const auto t0 = std::chrono::steady_clock::now();
        original.q = q0;
        original.b_eq = beq0;
        original.b_in = bin0;
        original.offset = 0.0;
        last_failed = {};
        const VectorXd qs = c * D.cwiseProduct(q0);
        VectorXd bs(m);
        if (p) bs.head(p) = E.head(p).cwiseProduct(beq0);
        if (r) bs.tail(r) = E.tail(r).cwiseProduct(bin0);
        VectorXd lo(m);
        if (p) lo.head(p) = bs.head(p);
        if (r) lo.tail(r).setConstant(-std::numeric_limits<double>::infinity());

        const VectorXd Dinv = D.cwiseInverse();
        const VectorXd Einv = E.cwiseInverse();
        const double alpha = st.alpha;

        VectorXd x = VectorXd::Zero(n), z1 = VectorXd::Zero(n), y1 = VectorXd::Zero(n);
        VectorXd zA = VectorXd::Zero(m), yA = VectorXd::Zero(m);
        VectorXd rv = rho_vec();
        VectorXd yA_prev = yA;

        SolverReport rep;
        double tol_factor = st.polish ? 100.0 : 1.0;
        bool done = false;
        bool converged = false;
        int iter = 0;
        double prim = 0.0, dual = 0.0;

        auto finish_polish = [&](SolverReport& out) -> bool {
            VectorXd xp, yAp;
            if (!polish(z1, zA, yA, qs, bs, xp, yAp)) return false;
            const Unscaled u = unscale(xp, yAp);
            const KktResidual k = kkt_residual(original, u.g, u.y_eq, u.y_in, st.zero_tol);
            const double target = kkt_target(u, q0);
            if (k.max() > target) return false;
            out.g = u.g;
            out.y_eq = u.y_eq;
            out.y_in = u.y_in;
            out.kkt = k;
            out.polished = true;
            return true;
        };

        for (iter = 1; iter <= st.max_iters; ++iter) {
            VectorXd rhs = st.sigma * x - qs;
            if (l1) rhs += rho * z1 - y1;
            if (m) rhs.noalias() += A.transpose() * (rv.cwiseProduct(zA) - yA);
            const VectorXd xt = llt.solve(rhs);
            const VectorXd zAt = m ? VectorXd(A * xt) : VectorXd();
            const VectorXd xr = alpha * xt + (1 - alpha) * x;
            x = xr;
            if (l1) {
                const VectorXd z1r = alpha * xt + (1 - alpha) * z1;
                const VectorXd z1n = soft_threshold(z1r + y1 / rho, wl1 / rho);
                y1 += rho * (z1r - z1n);
                z1 = z1n;
            }
            if (m) {
                yA_prev = yA;
                const VectorXd zAr = alpha * zAt + (1 - alpha) * zA;
                const VectorXd zAn = (zAr + yA.cwiseQuotient(rv)).cwiseMax(lo).cwiseMin(bs);
                yA += rv.cwiseProduct(zAr - zAn);
                zA = zAn;
            }

            const bool check = iter % st.check_interval == 0 || iter == st.max_iters;
            if (!check) continue;

            const VectorXd Ax = m ? VectorXd(A * x) : VectorXd();
            const VectorXd Px = P * x;
            VectorXd Aty = VectorXd::Zero(n);
            if (m) Aty.noalias() += A.transpose() * yA;
            if (l1) Aty += y1;
            prim = 0.0;
            double ax_norm = 0.0, z_norm = 0.0;
            if (m) {
                prim = inf_norm(Einv.cwiseProduct(Ax - zA));
                ax_norm = inf_norm(Einv.cwiseProduct(Ax));
                z_norm = inf_norm(Einv.cwiseProduct(zA));
            }
            if (l1) {
                prim = std::max(prim, inf_norm(D.cwiseProduct(x - z1)));
                ax_norm = std::max(ax_norm, inf_norm(D.cwiseProduct(x)));
                z_norm = std::max(z_norm, inf_norm(D.cwiseProduct(z1)));
            }
            const VectorXd dres = Px + qs + Aty;
            dual = inf_norm(Dinv.cwiseProduct(dres)) / c;
            const double px_norm = inf_norm(Dinv.cwiseProduct(Px)) / c;
            const double aty_norm = inf_norm(Dinv.cwiseProduct(Aty)) / c;
            const double q_norm = inf_norm(Dinv.cwiseProduct(qs)) / c;
            const double eps_p =
                tol_factor * (st.tol_abs + st.tol_rel * std::max(ax_norm, z_norm));
            const double eps_d =
                tol_factor * (st.tol_abs + st.tol_rel * std::max({px_norm, aty_norm, q_norm}));

            if (prim <= eps_p && dual <= eps_d) {
                if (st.polish && finish_polish(rep)) {
                    done = true;
                    converged = true;
                    break;
                }
                if (tol_factor <= 1.0) {
                    converged = true;
                    break;
                }
                tol_factor = std::max(1.0, tol_factor / 10.0);
                continue;
            }

            // primal infeasibility certificate from the dual increment
            if (r) {
                VectorXd dy = yA - yA_prev;
                for (Index i = p; i < m; ++i) dy(i) = std::max(dy(i), 0.0);
                const double dy_norm = inf_norm(E.cwiseProduct(dy));
                if (dy_norm > st.infeasibility_tol) {
                    dy /= dy_norm;
                    const double support = bs.dot(dy);
                    if (support < -st.infeasibility_tol) {
                        const double aty_inf = inf_norm(Dinv.cwiseProduct(A.transpose() * dy));
                        if (aty_inf < st.infeasibility_tol) {
                            rep.status = SolverStatus::Infeasible;
                            rep.primal_residual = prim;
                            rep.dual_residual = dual;
                            rep.iterations = iter;
                            const Unscaled u = unscale(x, yA);
                            rep.g = u.g;
                            rep.y_eq = u.y_eq;
                            rep.y_in = u.y_in;
                            rep.kkt = kkt_residual(original, u.g, u.y_eq, u.y_in, st.zero_tol);
                            rep.objective = original.objective(u.g);
                            rep.rho = rho;
                            rep.refactorizations = refactorizations;
                            return rep;
                        }
                    }
                }
            }

            if (st.time_limit > 0) {
                const double el =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                if (el > st.time_limit) break;
            }

            if (st.adaptive_rho && iter % st.adapt_interval == 0) {
                const double pr_rel = prim / std::max(std::max(ax_norm, z_norm), 1e-30);
                const double du_rel =
                    dual / std::max(std::max({px_norm, aty_norm, q_norm}), 1e-30);
                double rho_new = rho * std::sqrt(pr_rel / std::max(du_rel, 1e-30));
                rho_new = std::clamp(rho_new, 1e-6, 1e6);
                if (rho_new > st.adapt_tolerance * rho || rho_new < rho / st.adapt_tolerance) {
                    rho = rho_new;
                    rv = rho_vec();
                    factor();
                }
            }
        }

        if (iter > st.max_iters) iter = st.max_iters;
        rep.iterations = iter;
        rep.primal_residual = prim;
        rep.dual_residual = dual;
        rep.rho = rho;
        if (!done) {
            if (st.polish && !converged && finish_polish(rep)) {
                done = true;
                converged = true;
            }
        }
        if (!done) {
            VectorXd xs = x;
            if (l1)
                for (Index i = 0; i < n; ++i)
                    if (z1(i) == 0.0) xs(i) = 0.0;
            const Unscaled u = unscale(xs, yA);
            rep.g = u.g;
            rep.y_eq = u.y_eq;
            rep.y_in = u.y_in;
            rep.kkt = kkt_residual(original, u.g, u.y_eq, u.y_in, st.zero_tol);
            rep.polished = false;
        }
        rep.status = converged ? SolverStatus::Optimal : SolverStatus::MaxIters;
        rep.objective = original.objective(rep.g);
        rep.refactorizations = refactorizations;
        return rep;
    }
};

CompositeSolver::CompositeSolver(const MatrixXd& P, double lambda, const MatrixXd& A_eq,
                                 const MatrixXd& A_in, SolverSettings settings)
    : impl_(std::make_unique<Impl>()) {
    impl_->st = settings;
    impl_->build(P, lambda, A_eq, A_in);
}

CompositeSolver::CompositeSolver(const CompositeQP& pr, SolverSettings settings)
    : CompositeSolver(pr.P, pr.lambda, pr.A_eq, pr.A_in, settings) {}

CompositeSolver::~CompositeSolver() = default;
CompositeSolver::CompositeSolver(CompositeSolver&&) noexcept = default;
CompositeSolver& CompositeSolver::operator=(CompositeSolver&&) noexcept = default;

SolverReport CompositeSolver::solve(const VectorXd& q, const VectorXd& b_eq, const VectorXd& b_in) {
    return impl_->run(q, b_eq, b_in);
}

Index CompositeSolver::dim() const { return impl_->n; }
const SolverSettings& CompositeSolver::settings() const { return impl_->st; }

SolverReport solve(const CompositeQP& problem, const SolverSettings& settings) {
    CompositeQP pr = problem;
    pr.normalize();
    pr.validate();
    CompositeSolver s(pr, settings);
    SolverReport rep = s.solve(pr.q, pr.b_eq, pr.b_in);
    rep.objective += pr.offset;
    return rep;
}

}  // namespace ddcrane
