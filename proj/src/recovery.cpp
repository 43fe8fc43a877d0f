#include "ddcrane/recovery.hpp"

#include <cmath>

namespace ddcrane {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd weights_or_ones(const VectorXd& w, Index n, const char* what) {
    if (w.size() == 0) return VectorXd::Ones(n);
    if (w.size() != n) throw DimensionMismatch(std::string(what) + " weight length mismatch");
    if ((w.array() < 0).any()) throw DimensionMismatch(std::string(what) + " weights must be >= 0");
    return w;
}

void box_rows(const MatrixXd& H, const BoxSpec& box, MatrixXd& A, VectorXd& b) {
    const Index k = box.idx.size();
    if (box.lower.size() != k || box.upper.size() != k)
        throw DimensionMismatch("box bounds length mismatch");
    Index rows = 0;
    for (Index i = 0; i < k; ++i) rows += std::isfinite(box.upper(i)) + std::isfinite(box.lower(i));
    A.resize(rows, H.cols());
    b.resize(rows);
    Index r = 0;
    for (Index i = 0; i < k; ++i) {
        const Index row = box.idx[i];
        if (std::isfinite(box.upper(i))) {
            A.row(r) = H.row(row);
            b(r++) = box.upper(i);
        }
        if (std::isfinite(box.lower(i))) {
            A.row(r) = -H.row(row);
            b(r++) = -box.lower(i);
        }
    }
}

}  // namespace

CompositeQP assemble_recovery_qp(const BehaviorModel& model, const RecoveryTerms& t) {
    const MatrixXd& H = model.M;
    const Index rows = H.rows(), nu = H.cols();
    check_bounds(t.known_idx, rows);
    if (t.known_vals.size() != t.known_idx.size())
        throw DimensionMismatch("known values do not match the known index set");
    if (t.mu < 0 || t.sigma < 0 || t.lambda < 0)
        throw DimensionMismatch("lambda, mu, sigma must be nonnegative");

    // Stack B and b so that the quadratic terms read |b - B g|^2.
    const VectorXd W = weights_or_ones(t.weights.W, t.known_idx.size(), "W");
    Index brows = t.known_idx.size();
    const bool use_ref = t.mu > 0;
    if (use_ref) {
        if (!t.w_ref) throw DimensionMismatch("mu > 0 needs a reference trajectory");
        if (t.w_ref->size() != rows) throw DimensionMismatch("reference length mismatch");
        brows += rows;
    }
    const bool use_tv = t.sigma > 0;
    if (use_tv) {
        if (t.D.cols() != rows) throw DimensionMismatch("total-variation operator width mismatch");
        brows += t.D.rows();
    }
    MatrixXd B(brows, nu);
    VectorXd b = VectorXd::Zero(brows);
    Index r = 0;
    const VectorXd sw = W.cwiseSqrt();
    if (t.known_idx.size()) {
        B.topRows(t.known_idx.size()) = sw.asDiagonal() * H(t.known_idx.indices(), Eigen::all);
        b.head(t.known_idx.size()) = sw.cwiseProduct(t.known_vals);
        r += t.known_idx.size();
    }
    if (use_ref) {
        const VectorXd sr = (t.mu * weights_or_ones(t.weights.R, rows, "R")).cwiseSqrt();
        B.middleRows(r, rows) = sr.asDiagonal() * H;
        b.segment(r, rows) = sr.cwiseProduct(*t.w_ref);
        r += rows;
    }
    if (use_tv) {
        B.middleRows(r, t.D.rows()) = std::sqrt(t.sigma) * (t.D * H);
        r += t.D.rows();
    }

    CompositeQP qp;
    qp.P = MatrixXd::Zero(nu, nu);
    qp.q = VectorXd::Zero(nu);
    if (brows > 0) {
        qp.P.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose(), 2.0);
        qp.P.triangularView<Eigen::StrictlyUpper>() = qp.P.transpose();
        qp.q = -2.0 * (B.transpose() * b);
    }
    qp.offset = b.squaredNorm();
    qp.lambda = t.lambda;

    if (t.eq_idx) {
        check_bounds(*t.eq_idx, rows);
        if (t.eq_vals.size() != t.eq_idx->size()) throw DimensionMismatch("equality values mismatch");
        qp.A_eq = H(t.eq_idx->indices(), Eigen::all);
        qp.b_eq = t.eq_vals;
    }
    if (t.box) {
        check_bounds(t.box->idx, rows);
        box_rows(H, *t.box, qp.A_in, qp.b_in);
    }
    qp.normalize();
    return qp;
}

double recovery_cost(const BehaviorModel& model, const RecoveryTerms& t, const VectorXd& g) {
    const VectorXd w = model.M * g;
    const VectorXd W = weights_or_ones(t.weights.W, t.known_idx.size(), "W");
    double cost = 0.0;
    for (Index k = 0; k < t.known_idx.size(); ++k) {
        const double e = t.known_vals(k) - w(t.known_idx[k]);
        cost += W(k) * e * e;
    }
    if (t.mu > 0) {
        const VectorXd R = weights_or_ones(t.weights.R, w.size(), "R");
        cost += t.mu * (R.array() * (*t.w_ref - w).array().square()).sum();
    }
    if (t.sigma > 0) cost += t.sigma * (t.D * w).squaredNorm();
    cost += t.lambda * g.lpNorm<1>();
    return cost;
}

Eigen::SparseMatrix<double> build_total_variation_operator(int q, Index L,
                                                           const std::vector<int>& channels) {
    std::vector<Eigen::Triplet<double>> trips;
    const Index per = L + 1;
    for (std::size_t ci = 0; ci < channels.size(); ++ci) {
        const int c = channels[ci];
        if (c < 0 || c >= q) throw OutOfBounds("total-variation channel out of range");
        const Index base = static_cast<Index>(ci) * per;
        for (Index k = 0; k <= L; ++k) {
            if (k < L) trips.emplace_back(base + k, q * k + c, 1.0);
            if (k >= 1) trips.emplace_back(base + k, q * (k - 1) + c, -1.0);
        }
    }
    Eigen::SparseMatrix<double> D(static_cast<Index>(channels.size()) * per, q * L);
    D.setFromTriplets(trips.begin(), trips.end());
    return D;
}

Eigen::SparseMatrix<double> build_total_variation_operator(const BehaviorModel& model,
                                                           const std::vector<std::string>& channels) {
    std::vector<int> idx;
    for (const auto& c : channels) idx.push_back(model.channel_index(c));
    return build_total_variation_operator(model.q, model.L, idx);
}

Trajectory model_trajectory(const BehaviorModel& model, VectorXd data) {
    return {model.q, model.m, model.rate, std::move(data), model.channel_names};
}

RecoveryResult recover(const RecoveryProblem& pr, const SolverSettings& settings) {
    if (!pr.model) throw DimensionMismatch("recovery problem without a model");
    RecoveryTerms t;
    t.known_idx = pr.known_idx;
    t.known_vals = pr.known_vals;
    t.weights.W = pr.W;
    t.lambda = pr.lambda;
    const CompositeQP qp = assemble_recovery_qp(*pr.model, t);
    RecoveryResult res;
    res.report = solve(qp, settings);
    if (res.report.status == SolverStatus::Infeasible) throw Infeasible("recovery problem infeasible");
    res.g = res.report.g;
    res.w_hat = pr.model->M * res.g;
    return res;
}

SolverSettings simulation_settings() {
    SolverSettings s;
    s.tol_abs = 1e-7;
    s.tol_rel = 1e-6;
    s.max_iters = 1000;
    s.polish = false;
    return s;
}

IndexSet simulation_known_index(int q, int m, Index L, Index n_ini) {
    std::vector<Index> v;
    for (Index i = 0; i < q * n_ini; ++i) v.push_back(i);
    for (Index s = n_ini; s < L; ++s)
        for (int c = 0; c < m; ++c) v.push_back(q * s + c);
    return IndexSet(std::move(v));
}

SimulationSpec simulation_spec_from(const Trajectory& ref, Index n_ini, double epsilon) {
    SimulationSpec s;
    s.n_ini = n_ini;
    s.epsilon = epsilon;
    if (ref.samples() <= n_ini) throw TooShort("reference shorter than the initial window");
    s.initial = ref.data.head(ref.q * n_ini);
    const Index rest = ref.samples() - n_ini;
    s.inputs.resize(ref.m * rest);
    for (Index i = 0; i < rest; ++i)
        for (int c = 0; c < ref.m; ++c) s.inputs(ref.m * i + c) = ref(n_ini + i, c);
    return s;
}

namespace {

VectorXd simulation_known_values(const BehaviorModel& model, const SimulationSpec& spec) {
    if (spec.n_ini < 1 || spec.n_ini >= model.L) throw DimensionMismatch("n_ini must lie in [1, L)");
    if (spec.initial.size() != model.q * spec.n_ini)
        throw DimensionMismatch("initial window length mismatch");
    if (spec.inputs.size() != model.m * (model.L - spec.n_ini))
        throw DimensionMismatch("input sequence length mismatch");
    VectorXd v(spec.initial.size() + spec.inputs.size());
    v << spec.initial, spec.inputs;
    return v;
}

CompositeSolver simulator_solver(const MatrixXd& HI, double lambda, const SolverSettings& st) {
    MatrixXd P = MatrixXd::Zero(HI.cols(), HI.cols());
    P.selfadjointView<Eigen::Lower>().rankUpdate(HI.transpose(), 2.0);
    P.triangularView<Eigen::StrictlyUpper>() = P.transpose();
    MatrixXd A(2 * HI.rows(), HI.cols());
    A << HI, -HI;
    return CompositeSolver(P, lambda, MatrixXd(0, HI.cols()), A, st);
}

}  // namespace

NonparametricSimulator::NonparametricSimulator(const BehaviorModel& model, Index n_ini, double lambda,
                                               double epsilon, const SolverSettings& settings)
    : model_(&model),
      n_ini_(n_ini),
      epsilon_(epsilon),
      known_(simulation_known_index(model.q, model.m, model.L, n_ini)),
      HI_(model.M(known_.indices(), Eigen::all)),
      solver_(simulator_solver(HI_, lambda, settings)) {
    if (!(epsilon > 0)) throw DimensionMismatch("epsilon must be positive");
}

SimulationResult NonparametricSimulator::run(const SimulationSpec& spec) {
    if (spec.n_ini != n_ini_) throw DimensionMismatch("simulation spec n_ini differs from the simulator");
    const VectorXd wI = simulation_known_values(*model_, spec);
    const double eps = spec.epsilon > 0 ? spec.epsilon : epsilon_;
    const VectorXd q = -2.0 * (HI_.transpose() * wI);
    VectorXd b(2 * wI.size());
    b << wI.array() + eps, -(wI.array() - eps);
    SimulationResult res;
    res.report = solver_.solve(q, VectorXd(0), b);
    res.report.objective += wI.squaredNorm();
    if (res.report.status == SolverStatus::Infeasible)
        throw Infeasible("input consistency box infeasible for this model");
    res.g = res.report.g;
    res.w_hat = model_trajectory(*model_, model_->M * res.g);
    return res;
}

SimulationResult nonparametric_simulate(const BehaviorModel& model, const SimulationSpec& spec,
                                        double lambda, const SolverSettings& settings) {
    NonparametricSimulator sim(model, spec.n_ini, lambda, spec.epsilon, settings);
    return sim.run(spec);
}

void TrajectoryGenSpec::validate() const {
    if (n_given < 1) throw ConfigError("n_given must be at least 1");
    if (2 * n_given >= L) throw ConfigError("2*n_given must be smaller than L");
    if (n_pinned < 1 || 2 * n_pinned >= L) throw ConfigError("n_pinned must be in [1, L/2)");
    if (!(sway_bound > 0) || !(input_bound > 0) || !(velocity_bound > 0))
        throw ConfigError("bounds must be positive");
    if (lambda < 0 || mu < 0 || sigma < 0) throw ConfigError("lambda, mu, sigma must be >= 0");
    if (!std::isfinite(theta4_start) || !std::isfinite(theta4_target))
        throw ConfigError("boom angles must be finite");
}

VectorXd resting_sample(const std::vector<std::string>& channels, double theta4) {
    VectorXd s = VectorXd::Zero(static_cast<Index>(channels.size()));
    for (std::size_t c = 0; c < channels.size(); ++c)
        if (channels[c] == "theta4") s(static_cast<Index>(c)) = theta4;
    return s;
}

VectorXd reference_trajectory(const BehaviorModel& model, const TrajectoryGenSpec& spec) {
    const VectorXd ws = resting_sample(model.channel_names, spec.theta4_start);
    const VectorXd wt = resting_sample(model.channel_names, spec.theta4_target);
    VectorXd ref(model.q * model.L);
    for (Index i = 0; i < model.L; ++i) ref.segment(model.q * i, model.q) = i < spec.n_given ? ws : wt;
    return ref;
}

RecoveryTerms trajectory_terms(const BehaviorModel& model, const TrajectoryGenSpec& spec) {
    spec.validate();
    if (model.L != spec.L) throw DimensionMismatch("model depth differs from the trajectory length");
    model.channel_index("theta4");
    const int q = model.q;
    const Index L = model.L;
    const VectorXd ws = resting_sample(model.channel_names, spec.theta4_start);
    const VectorXd wt = resting_sample(model.channel_names, spec.theta4_target);

    RecoveryTerms t;
    if (spec.use_known_term) {
        t.known_idx = IndexSet::unite(IndexSet::samples(q, 0, spec.n_given),
                                      IndexSet::samples(q, L - spec.n_given, spec.n_given));
        t.known_vals.resize(t.known_idx.size());
        for (Index k = 0; k < spec.n_given; ++k) {
            t.known_vals.segment(q * k, q) = ws;
            t.known_vals.segment(q * (spec.n_given + k), q) = wt;
        }
    }
    t.weights = spec.weights;
    t.lambda = spec.lambda;
    t.mu = spec.mu;
    t.sigma = spec.sigma;
    t.w_ref = reference_trajectory(model, spec);
    if (spec.sigma > 0) t.D = build_total_variation_operator(model, spec.tv_channels);
    if (spec.endpoint_equality) {
        const Index np = spec.n_pinned;
        t.eq_idx = IndexSet::unite(IndexSet::samples(q, 0, np), IndexSet::samples(q, L - np, np));
        t.eq_vals.resize(2 * np * q);
        for (Index k = 0; k < np; ++k) {
            t.eq_vals.segment(q * k, q) = ws;
            t.eq_vals.segment(q * (np + k), q) = wt;
        }
    }
    if (spec.inequality) {
        std::vector<std::pair<int, double>> bounded;
        for (int c = 0; c < q; ++c) {
            const std::string& name = model.channel_names[static_cast<std::size_t>(c)];
            double bnd = kNoBound;
            if (name == "theta1" || name == "theta2") bnd = spec.sway_bound;
            else if (c < model.m) bnd = spec.input_bound;
            else if (name == "dtheta4") bnd = spec.velocity_bound;
            if (std::isfinite(bnd)) bounded.emplace_back(c, bnd);
        }
        if (!bounded.empty()) {
            std::vector<Index> idx;
            std::vector<double> ub;
            for (Index i = 0; i < L; ++i)
                for (const auto& [c, bnd] : bounded) {
                    idx.push_back(q * i + c);
                    ub.push_back(bnd);
                }
            BoxSpec box;
            box.idx = IndexSet(std::move(idx));
            box.upper = Eigen::Map<VectorXd>(ub.data(), static_cast<Index>(ub.size()));
            box.lower = -box.upper;
            t.box = std::move(box);
        }
    }
    return t;
}

GeneratedTrajectory generate_trajectory(const BehaviorModel& model, const TrajectoryGenSpec& spec) {
    const RecoveryTerms t = trajectory_terms(model, spec);
    const CompositeQP qp = assemble_recovery_qp(model, t);
    GeneratedTrajectory out;
    out.report = solve(qp, spec.solver);
    if (out.report.status == SolverStatus::Infeasible)
        throw Infeasible("trajectory bounds cannot be met by the captured behavior");
    out.g = out.report.g;
    out.predicted = model_trajectory(model, model.M * out.g);
    out.input.resize(out.predicted.samples() * model.m);
    for (Index i = 0; i < out.predicted.samples(); ++i)
        for (int c = 0; c < model.m; ++c) out.input(model.m * i + c) = out.predicted(i, c);
    if (t.eq_idx)
        out.endpoint_residual =
            (truncate(out.predicted.data, *t.eq_idx) - t.eq_vals).cwiseAbs().maxCoeff();
    if (t.box) {
        const VectorXd v = truncate(out.predicted.data, t.box->idx);
        out.bound_violation = std::max(0.0, std::max((v - t.box->upper).maxCoeff(),
                                                     (t.box->lower - v).maxCoeff()));
    }
    return out;
}

IndirectResult indirect_generate(const BehaviorModel& model, const IndexSet& known_idx,
                                 const VectorXd& known_vals, const VectorXd& w_ref, double rank_tol) {
    const MatrixXd& H = model.M;
    check_bounds(known_idx, H.rows());
    if (known_vals.size() != known_idx.size()) throw DimensionMismatch("known values mismatch");
    if (w_ref.size() != H.rows()) throw DimensionMismatch("reference length mismatch");
    const MatrixXd HI = H(known_idx.indices(), Eigen::all);
    Eigen::BDCSVD<MatrixXd> svd(HI, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const VectorXd& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    const Index r = smax > 0 ? (s.array() > rank_tol * smax).count() : 0;
    const Index c = H.cols();
    if (r >= c) throw DegenerateNullspace("known rows have full column rank");

    IndirectResult out;
    const VectorXd gp = svd.matrixV().leftCols(r) *
                        (s.head(r).cwiseInverse().asDiagonal() *
                         (svd.matrixU().leftCols(r).transpose() * known_vals));
    out.w_p = H * gp;
    const MatrixXd HZ = H * svd.matrixV().rightCols(c - r);
    Eigen::BDCSVD<MatrixXd> zs(HZ, Eigen::ComputeThinU);
    const VectorXd& sz = zs.singularValues();
    const Index rz = (sz.size() && sz(0) > 0) ? (sz.array() > rank_tol * sz(0)).count() : 0;
    // Directions of null(H_I) that vanish under H carry no trajectory freedom.
    if (rz == 0 || sz(0) <= rank_tol * std::max(1.0, H.cwiseAbs().maxCoeff()))
        throw DegenerateNullspace("H * null(H_I) is trivial");
    out.basis = zs.matrixU().leftCols(rz);
    out.beta = out.basis.transpose() * (w_ref - out.w_p);
    out.w_hat = out.w_p + out.basis * out.beta;
    out.orthogonality_residual = (out.basis.transpose() * (out.w_hat - w_ref)).cwiseAbs().maxCoeff();
    out.known_residual = (truncate(out.w_hat, known_idx) - known_vals).cwiseAbs().maxCoeff();
    return out;
}

}  // namespace ddcrane
