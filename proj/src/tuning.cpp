#include "ddcrane/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace ddcrane {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void parallel_for(Index n, int threads, const std::function<void(Index)>& fn) {
    int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    t = std::max(1, std::min<int>(t, static_cast<int>(n)));
    if (t <= 1) {
        for (Index i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k)
        pool.emplace_back([&] {
            for (Index i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

void SimTuneGrid::validate() const {
    if (deltas.empty() || lambdas.empty() || nus.empty()) throw ConfigError("empty tuning grid");
    if (tests.empty()) throw ConfigError("tuning needs held-out test trajectories");
    if (!truths.empty() && truths.size() != tests.size())
        throw ConfigError("truths must pair with tests");
    for (double d : deltas)
        if (d < 0 || (delta_relative && d >= 1)) throw ConfigError("delta out of range");
    for (double l : lambdas)
        if (l < 0) throw ConfigError("lambda must be nonnegative");
    for (Index nu : nus)
        if (nu == 0 || nu < -1) throw ConfigError("nu must be positive or -1");
}

bool sim_row_better(const SimTuneRow& a, const SimTuneRow& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.columns != b.columns) return a.columns < b.columns;
    if (a.delta != b.delta) return a.delta > b.delta;
    return a.lambda > b.lambda;
}

BehaviorModel build_tuned_model(const BehaviorModel& hankel, Index nu, double delta, bool rel) {
    BehaviorModel m = (nu > 0 && nu < hankel.cols()) ? select_columns_qr(hankel, nu) : hankel;
    if (nu > 0 && nu >= hankel.cols()) m.nu = nu;
    if (delta > 0) m = denoise_svd(m, delta, rel);
    return m;
}

SimTuneResult tune_simulation(const std::vector<Trajectory>& data, Index L, const SimTuneGrid& grid) {
    return tune_simulation(build_hankel(data, L), grid);
}

SimTuneResult tune_simulation(const BehaviorModel& hankel, const SimTuneGrid& grid) {
    grid.validate();
    for (const auto& t : grid.tests)
        if (t.samples() != hankel.L || t.q != hankel.q)
            throw DimensionMismatch("test trajectories must have q*L elements");
    std::vector<Index> nus = grid.nus;
    for (auto& nu : nus)
        if (nu < 0 || nu > hankel.cols()) nu = hankel.cols();
    std::vector<double> deltas = grid.deltas, lambdas = grid.lambdas;
    std::sort(nus.begin(), nus.end());
    nus.erase(std::unique(nus.begin(), nus.end()), nus.end());
    std::sort(deltas.begin(), deltas.end());
    deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());
    std::sort(lambdas.begin(), lambdas.end());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

    std::vector<Index> order;
    if (nus.front() < hankel.cols()) order = qr_pivot_order(hankel.M);

    const auto& truths = grid.truths.empty() ? grid.tests : grid.truths;
    std::vector<SimulationSpec> specs;
    for (const auto& t : grid.tests) specs.push_back(simulation_spec_from(t, grid.n_ini, grid.epsilon));

    SimTuneResult res;
    for (Index nu : nus) {
        BehaviorModel sel = hankel;
        if (nu < hankel.cols()) {
            std::vector<Index> cols(order.begin(), order.begin() + nu);
            sel = select_columns(hankel, cols);
        }
        const bool need_svd = std::any_of(deltas.begin(), deltas.end(), [](double d) { return d > 0; });
        ThinSvd svd;
        if (need_svd) svd = thin_svd(sel.M);
        const Index cells = static_cast<Index>(deltas.size() * lambdas.size());
        std::vector<SimTuneRow> rows(static_cast<std::size_t>(cells));
        std::vector<BehaviorModel> models;
        for (double d : deltas) {
            models.push_back(d > 0 ? denoise_svd(sel, svd, d, grid.delta_relative) : sel);
            models.back().nu = nu;
        }
        parallel_for(cells, grid.threads, [&](Index cell) {
            const std::size_t di = static_cast<std::size_t>(cell) / lambdas.size();
            const std::size_t li = static_cast<std::size_t>(cell) % lambdas.size();
            SimTuneRow row;
            row.nu = nu;
            row.columns = sel.cols();
            row.delta = deltas[di];
            row.lambda = lambdas[li];
            row.rank = need_svd && deltas[di] > 0 ? kept_rank(svd.s, deltas[di], grid.delta_relative)
                                                  : std::min(sel.rows(), sel.cols());
            row.channel_scores = VectorXd::Zero(hankel.q);
            try {
                NonparametricSimulator sim(models[di], grid.n_ini, row.lambda, grid.epsilon, grid.solver);
                for (std::size_t k = 0; k < specs.size(); ++k) {
                    const SimulationResult r = sim.run(specs[k]);
                    const VectorXd e = r.w_hat.data - truths[k].data;
                    for (Index i = 0; i < e.size(); ++i) row.channel_scores(i % hankel.q) += e(i) * e(i);
                }
                row.score = row.channel_scores.sum();
            } catch (const Infeasible&) {
                row.feasible = false;
                row.score = std::numeric_limits<double>::infinity();
                row.channel_scores.setConstant(std::numeric_limits<double>::infinity());
            }
            rows[static_cast<std::size_t>(cell)] = row;
        });
        for (auto& r : rows) res.table.push_back(std::move(r));
    }
    res.best = res.table.front();
    for (const auto& r : res.table)
        if (sim_row_better(r, res.best)) res.best = r;
    return res;
}

const char* metric_name(int m) {
    static const char* names[] = {"time_to_target", "max_sway",    "mean_sway",    "max_smooth",
                                  "mean_smooth",    "overshoot_integral", "rollout_error"};
    return (m >= 0 && m < kMetricCount) ? names[m] : "unknown";
}

VectorXd metric_vector(const TrajectoryQuality& q) {
    VectorXd v(kMetricCount);
    v << q.time_to_target, q.max_sway, q.mean_sway, q.max_smooth, q.mean_smooth,
        q.overshoot_integral, q.rollout_error;
    return v;
}

void TrajTuneGrid::validate() const {
    if (lambdas.empty() || mus.empty() || sigmas.empty()) throw ConfigError("empty trajectory grid");
    if (weights.size() != kMetricCount || (weights.array() < 0).any())
        throw ConfigError("metric weights must be nonnegative, one per metric");
}

double combined_score(const VectorXd& metrics, const VectorXd& norm, const VectorXd& weights) {
    double s = 0.0;
    for (Index i = 0; i < metrics.size(); ++i)
        if (weights(i) > 0) s += weights(i) * metrics(i) / (norm(i) > 0 ? norm(i) : 1.0);
    return s;
}

namespace {

/// Gram blocks of the trajectory program so cells differ only by scalar factors.
struct TrajectoryGrams {
    MatrixXd GI, GR, GD;
    VectorXd hI, hR;
    double cI = 0.0, cR = 0.0;
    CompositeQP constraints;
};

TrajectoryGrams trajectory_grams(const BehaviorModel& model, const TrajectoryGenSpec& spec) {
    TrajectoryGenSpec s = spec;
    s.mu = 1.0;
    s.sigma = 1.0;
    const RecoveryTerms t = trajectory_terms(model, s);
    const MatrixXd& H = model.M;
    const Index nu = H.cols();
    TrajectoryGrams g;
    auto gram = [&](const MatrixXd& B) {
        MatrixXd G = MatrixXd::Zero(nu, nu);
        if (B.rows() == 0) return G;
        G.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose());
        G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
        return G;
    };
    const VectorXd W = t.weights.W.size() ? t.weights.W : VectorXd::Ones(t.known_idx.size());
    const VectorXd R = t.weights.R.size() ? t.weights.R : VectorXd::Ones(H.rows());
    if (t.known_idx.size()) {
        const MatrixXd HI = H(t.known_idx.indices(), Eigen::all);
        g.GI = gram(W.cwiseSqrt().asDiagonal() * HI);
        g.hI = HI.transpose() * W.cwiseProduct(t.known_vals);
        g.cI = (W.array() * t.known_vals.array().square()).sum();
    } else {
        g.GI = MatrixXd::Zero(nu, nu);
        g.hI = VectorXd::Zero(nu);
    }
    g.GR = gram(R.cwiseSqrt().asDiagonal() * H);
    g.hR = H.transpose() * R.cwiseProduct(*t.w_ref);
    g.cR = (R.array() * t.w_ref->array().square()).sum();
    g.GD = gram(MatrixXd(t.D * H));
    RecoveryTerms c = t;
    c.known_idx = IndexSet();
    c.known_vals.resize(0);
    c.weights.W.resize(0);
    c.mu = 0.0;
    c.sigma = 0.0;
    g.constraints = assemble_recovery_qp(model, c);
    return g;
}

TrajTuneRow evaluate_with_qp(const BehaviorModel& model, const TrajectoryGenSpec& spec,
                             const TrajTuneGrid& grid, const CompositeQP& qp) {
    TrajTuneRow row;
    row.lambda = spec.lambda;
    row.mu = spec.mu;
    row.sigma = spec.sigma;
    const SolverReport rep = solve(qp, spec.solver);
    if (rep.status == SolverStatus::Infeasible) throw Infeasible("trajectory cell infeasible");
    const Trajectory pred = model_trajectory(model, model.M * rep.g);
    ScoreSpec ss;
    ss.theta4_start = spec.theta4_start;
    ss.theta4_target = spec.theta4_target;
    if (grid.use_rollout) {
        const Trajectory ro = rollout(pred, grid.crane, spec.theta4_start, grid.rollout_tail);
        row.quality = score_trajectory(pred, &ro, ss);
    } else {
        row.quality = score_trajectory(pred, nullptr, ss);
    }
    row.metrics = metric_vector(row.quality);
    if (!grid.use_rollout) row.metrics(kRolloutError) = 0.0;
    return row;
}

}  // namespace

TrajTuneRow evaluate_trajectory_cell(const BehaviorModel& model, const TrajectoryGenSpec& spec,
                                     const TrajTuneGrid& grid) {
    const RecoveryTerms t = trajectory_terms(model, spec);
    return evaluate_with_qp(model, spec, grid, assemble_recovery_qp(model, t));
}

TrajTuneResult tune_trajectory(const BehaviorModel& model, const TrajectoryGenSpec& scenario,
                               const TrajTuneGrid& grid) {
    grid.validate();
    auto sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const std::vector<double> lams = sorted(grid.lambdas), mus = sorted(grid.mus),
                              sigs = sorted(grid.sigmas);
    const TrajectoryGrams G = trajectory_grams(model, scenario);
    const Index cells = static_cast<Index>(lams.size() * mus.size() * sigs.size());
    TrajTuneResult res;
    res.table.resize(static_cast<std::size_t>(cells));
    parallel_for(cells, grid.threads, [&](Index cell) {
        const auto c = static_cast<std::size_t>(cell);
        const std::size_t si = c % sigs.size();
        const std::size_t mi = (c / sigs.size()) % mus.size();
        const std::size_t li = c / (sigs.size() * mus.size());
        TrajectoryGenSpec spec = scenario;
        spec.lambda = lams[li];
        spec.mu = mus[mi];
        spec.sigma = sigs[si];
        CompositeQP qp = G.constraints;
        qp.P = 2.0 * (G.GI + spec.mu * G.GR + spec.sigma * G.GD);
        qp.q = -2.0 * (G.hI + spec.mu * G.hR);
        qp.offset = G.cI + spec.mu * G.cR;
        qp.lambda = spec.lambda;
        TrajTuneRow row;
        try {
            row = evaluate_with_qp(model, spec, grid, qp);
        } catch (const Infeasible&) {
            row.lambda = spec.lambda;
            row.mu = spec.mu;
            row.sigma = spec.sigma;
            row.feasible = false;
            row.metrics = VectorXd::Constant(kMetricCount, std::numeric_limits<double>::infinity());
        }
        res.table[c] = row;
    });
    res.normalization = VectorXd::Zero(kMetricCount);
    bool any = false;
    for (const auto& r : res.table)
        if (r.feasible) {
            any = true;
            res.normalization = res.normalization.cwiseMax(r.metrics);
        }
    if (!any) throw Infeasible("every trajectory tuning cell is infeasible");
    std::size_t best = 0;
    bool have = false;
    for (std::size_t i = 0; i < res.table.size(); ++i) {
        auto& r = res.table[i];
        r.score = r.feasible ? combined_score(r.metrics, res.normalization, grid.weights)
                             : std::numeric_limits<double>::infinity();
        if (r.feasible && (!have || r.score < res.table[best].score)) {
            best = i;
            have = true;
        }
    }
    res.best = res.table[best];
    for (const auto& r : res.table) {
        if (r.mu == res.best.mu && r.sigma == res.best.sigma) res.slice_lambda.push_back(r);
        if (r.lambda == res.best.lambda && r.sigma == res.best.sigma) res.slice_mu.push_back(r);
        if (r.lambda == res.best.lambda && r.mu == res.best.mu) res.slice_sigma.push_back(r);
    }
    return res;
}

}  // namespace ddcrane
