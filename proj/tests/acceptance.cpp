// Acceptance checks, one line per criterion. Usage: acceptance [--criterion N]...
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ddcrane/config.hpp"
#include "ddcrane/crane.hpp"
#include "ddcrane/excitation.hpp"
#include "ddcrane/qp.hpp"
#include "ddcrane/quality.hpp"
#include "ddcrane/recovery.hpp"
#include "ddcrane/trajectory.hpp"
#include "ddcrane/tuning.hpp"
#include "ddcrane/waypoint.hpp"
#include "fixtures.hpp"
#include "qp_oracle.hpp"

using namespace ddcrane;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Collects sub-checks and prints the criterion line.
struct Line {
    int id;
    std::string title;
    std::string detail;
    bool pass = true;

    void check(const char* what, double value, const char* op, double limit) {
        bool ok = false;
        const std::string o(op);
        if (o == "<=") ok = value <= limit;
        else if (o == "<") ok = value < limit;
        else if (o == ">=") ok = value >= limit;
        else if (o == "==") ok = value == limit;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s%s=%.4g (%s %.4g)%s", detail.empty() ? "" : "; ", what,
                      value, op, limit, ok ? "" : " FAIL");
        detail += buf;
        pass = pass && ok;
    }
    void within(const char* what, double value, double lo, double hi) {
        const bool ok = value >= lo && value <= hi;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s%s=%.4g (in [%.4g, %.4g])%s", detail.empty() ? "" : "; ",
                      what, value, lo, hi, ok ? "" : " FAIL");
        detail += buf;
        pass = pass && ok;
    }
    void flag(const char* what, bool ok) {
        detail += (detail.empty() ? "" : "; ") + std::string(what) + (ok ? "=yes" : "=no FAIL");
        pass = pass && ok;
    }
    bool print() const {
        std::printf("[%s] criterion %d %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(),
                    detail.c_str());
        std::fflush(stdout);
        return pass;
    }
};

double rmse(const VectorXd& a, const VectorXd& b) {
    return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

// Noise-free acceleration-input crane data.
RunConfig crane_config() {
    RunConfig c = default_config();
    c.mode = ChannelMode::Simulation;
    c.noise_enabled = false;
    return c;
}

std::vector<Trajectory> held_out(const RunConfig& c, int count, double duration, std::uint64_t seed) {
    ExcitationConfig ex = c.test;
    ex.count = count;
    ex.sines.duration = duration;
    return generate_sequences(c, ex, seed, seed + 500);
}

bool criterion1() {
    const auto t0 = Clock::now();
    Line line{1, "fundamental-lemma exactness"};
    const fixtures::Lti sys;
    std::mt19937_64 rng(11);
    const Index L = 10;
    const BehaviorModel H = build_hankel(sys.random(200, rng), L);
    const RankReport rr = identifiability_rank(H, 2);
    line.check("rank", static_cast<double>(rr.rank), "==", 12);

    const Index n_ini = 3;
    const IndexSet known = simulation_known_index(2, 1, L, n_ini);
    double err = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Trajectory w = sys.random(L, rng);
        RecoveryProblem pr;
        pr.model = &H;
        pr.known_idx = known;
        pr.known_vals = truncate(w.data, known);
        const RecoveryResult r = recover(pr);
        err = std::max(err, (r.w_hat - w.data).cwiseAbs().maxCoeff());
    }
    line.check("max_error", err, "<=", 1e-6);
    line.check("runtime_s", seconds_since(t0), "<", 5.0);
    return line.print();
}

bool criterion2() {
    const auto t0 = Clock::now();
    Line line{2, "boom-channel exactness"};
    const RunConfig c = crane_config();
    const Index L = 300;
    const BehaviorModel H = build_hankel(generate_sequences(c, c.data, c.seeds.data, c.seeds.noise), L);
    const RankReport rr = identifiability_rank(H, 6);
    const auto tests = held_out(c, 10, static_cast<double>(L) / c.data.sines.rate, c.seeds.test);
    NonparametricSimulator sim(H, 10, 0.0, 1e-6, c.sim_tuning.solver);
    double e4 = 0.0, ev = 0.0;
    for (const auto& t : tests) {
        const SimulationResult r = sim.run(simulation_spec_from(t, 10, 1e-6));
        e4 = std::max(e4, rmse(r.w_hat.channel("theta4"), t.channel("theta4")));
        ev = std::max(ev, rmse(r.w_hat.channel("dtheta4"), t.channel("dtheta4")));
    }
    line.check("rmse_theta4", e4, "<=", 1e-4);
    line.check("rmse_dtheta4", ev, "<=", 1e-4);
    line.within("rank", static_cast<double>(rr.rank), 306, 330);
    line.check("runtime_s", seconds_since(t0), "<", 120.0);
    return line.print();
}

bool criterion3() {
    const auto t0 = Clock::now();
    Line line{3, "denoised model improves sway channels"};
    RunConfig c = crane_config();
    c.noise_enabled = true;
    const Index L = 300;
    const double test_duration = static_cast<double>(L) / c.data.sines.rate;

    // Case 1: the default 60 s modeling record. Case 2: twenty 60 s records
    // drawn from the nominal band that the held-out sequences use.
    ExcitationConfig large;
    large.sines.duration = 60.0;
    large.count = 20;
    const BehaviorModel H1 = build_hankel(generate_sequences(c, c.data, c.seeds.data, c.seeds.noise), L);
    const BehaviorModel H2 =
        build_hankel(generate_sequences(c, large, c.seeds.data + 50, c.seeds.noise + 50), L);

    // Ten held-out sequences, measured with noise, tune the hyperparameters
    // and are scored against their noise-free response.
    ExcitationConfig ex = c.test;
    ex.count = 10;
    ex.sines.duration = test_duration;
    std::vector<Trajectory> test_truth;
    const auto test = generate_sequences(c, ex, c.seeds.test, c.seeds.test + 500, &test_truth);

    SimTuneGrid grid;
    grid.nus = {600, 1500, 2000};
    grid.deltas = {0.0, 1e-5, 1e-4};
    grid.lambdas = {0.0, 1e-5, 1e-4};
    grid.tests = test;
    grid.truths = test_truth;
    grid.solver = c.sim_tuning.solver;
    const SimTuneResult tuned = tune_simulation(H2, grid);
    const SimTuneRow& b = tuned.best;
    const BehaviorModel M2 = build_tuned_model(H2, b.nu, b.delta);

    auto score = [&](const BehaviorModel& M, double lambda) {
        VectorXd s = VectorXd::Zero(M.q);
        NonparametricSimulator sim(M, 10, lambda, 1e-6, c.sim_tuning.solver);
        for (std::size_t k = 0; k < test.size(); ++k) {
            const SimulationResult r = sim.run(simulation_spec_from(test[k], 10, 1e-6));
            const VectorXd e = r.w_hat.data - test_truth[k].data;
            for (Index i = 0; i < e.size(); ++i) s(i % M.q) += e(i) * e(i);
        }
        return s;
    };
    const VectorXd s1 = score(H1, b.lambda);
    const VectorXd s2 = score(M2, b.lambda);
    const int i1 = H1.channel_index("theta1"), i2 = H1.channel_index("theta2");
    char buf[128];
    std::snprintf(buf, sizeof buf, "tuned nu=%ld delta=%.3g lambda=%.3g",
                  static_cast<long>(b.nu), b.delta, b.lambda);
    line.detail = buf;
    std::snprintf(buf, sizeof buf, "; columns case1=%ld case2=%ld", static_cast<long>(H1.cols()),
                  static_cast<long>(H2.cols()));
    line.detail += buf;
    line.check("score_theta1_tuned", s2(i1), "<", s1(i1));
    line.check("score_theta2_tuned", s2(i2), "<", s1(i2));
    line.check("runtime_s", seconds_since(t0), "<", 900.0);
    return line.print();
}

/// Model used by the trajectory-generation criteria: noise-free data, QR
/// selection down to the numerical rank.
BehaviorModel trajectory_model(const RunConfig& c, Index L) {
    ExcitationConfig ex = c.data;
    ex.sines.duration = 240.0;
    const BehaviorModel H = build_hankel(generate_sequences(c, ex, c.seeds.data, c.seeds.noise), L);
    const Index r = numerical_rank(H.M);
    return select_columns_qr(H, std::min<Index>(H.cols(), r));
}

bool criterion4() {
    const auto t0 = Clock::now();
    Line line{4, "trajectory generation scenario"};
    const RunConfig c = crane_config();
    TrajectoryGenSpec spec = c.scenario;
    spec.solver = c.solver;
    const BehaviorModel M = trajectory_model(c, spec.L);
    const auto ts = Clock::now();
    const GeneratedTrajectory gen = generate_trajectory(M, spec);
    const double solve_s = seconds_since(ts);
    const Trajectory ro = rollout(gen.predicted, c.crane, spec.theta4_start, 0.0);
    const double tt = time_to_target(ro.channel("theta4"), ro.rate, spec.theta4_target, 0.035, 5.0);

    // Longest run of predicted samples with sway above 0.025 rad.
    Index run = 0, longest = 0;
    const VectorXd t1 = gen.predicted.channel("theta1"), t2 = gen.predicted.channel("theta2");
    for (Index i = 0; i < t1.size(); ++i) {
        run = std::max(std::abs(t1(i)), std::abs(t2(i))) > 0.025 ? run + 1 : 0;
        longest = std::max(longest, run);
    }
    line.check("endpoint_residual", gen.endpoint_residual, "<=", 1e-6);
    line.flag("reached", tt >= 0);
    line.check("rollout_time_to_target_s", tt >= 0 ? tt : INFINITY, "<=", 20.0);
    line.check("sway_excess_duration_s", static_cast<double>(longest) / gen.predicted.rate, "<=", 1.0);
    line.check("rollout_final_error",
               std::abs(ro.channel("theta4")(ro.samples() - 1) - spec.theta4_target), "<=", 5e-3);
    line.check("solve_runtime_s", solve_s, "<", 180.0);
    std::printf("  (total runtime %.1f s)\n", seconds_since(t0));
    return line.print();
}

bool criterion5() {
    const auto t0 = Clock::now();
    Line line{5, "solver certification"};
    std::mt19937_64 rng(5);
    double worst_kkt = 0.0, worst_gap = 0.0;
    int infeasible = 0, lattice_violations = 0;
    for (int k = 0; k < 200; ++k) {
        const Index n = k < 20 ? 1 + k % 4 : 5 + (k * 7) % 46;
        const CompositeQP qp = fixtures::random_qp(n, rng);
        const SolverReport r = solve(qp);
        if (r.status != SolverStatus::Optimal) ++infeasible;
        worst_kkt = std::max(worst_kkt, kkt_residual(qp, r.g, r.y_eq, r.y_in).max());
        if (k < 20) {
            const double f = fixtures::enumeration_oracle(qp);
            if (qp.A_eq.rows() == 0 && f > fixtures::lattice_bound(qp, 4.0, 21) + 1e-9)
                ++lattice_violations;
            worst_gap = std::max(worst_gap, std::abs(r.objective - f));
        }
    }
    line.check("non_optimal", infeasible, "==", 0);
    line.check("max_kkt_residual", worst_kkt, "<=", 1e-6);
    line.check("max_oracle_gap", worst_gap, "<=", 1e-4);
    line.check("oracle_above_lattice", lattice_violations, "==", 0);
    line.check("runtime_s", seconds_since(t0), "<", 120.0);
    return line.print();
}

bool criterion6() {
    const auto t0 = Clock::now();
    Line line{6, "controllability determinant"};
    const CraneParams p;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ud(-0.5, 0.5);
    double rel = 0.0, degenerate = 0.0;
    for (int k = 0; k < 100; ++k) {
        CraneState x;
        for (int i = 0; i < 6; ++i) x(i) = ud(rng);
        const double num = controllability_matrix(x, p).determinant();
        const double f = det_formula(x, p);
        rel = std::max(rel, std::abs(num - f) / std::max(std::abs(f), 1e-300));
        x(state::theta2) = x(state::dtheta2) = x(state::dtheta4) = 0.0;
        degenerate = std::max({degenerate, std::abs(controllability_matrix(x, p).determinant()),
                               std::abs(det_formula(x, p))});
    }
    line.check("max_relative_error", rel, "<=", 1e-8);
    line.check("max_degenerate_det", degenerate, "<=", 1e-10);
    line.check("runtime_s", seconds_since(t0), "<", 1.0);
    return line.print();
}

bool criterion7() {
    const auto t0 = Clock::now();
    Line line{7, "benchmark comparison"};
    const RunConfig c = crane_config();
    const WaypointProblem& wp = c.benchmark.waypoints;
    const WaypointSolution sol = solve_waypoint_nlp(wp, c.crane);
    const Trajectory mb = waypoint_playback(sol, c.crane, wp.theta4_start);
    const RolloutCheck chk = verify_rollout(mb, sol, wp.bounds);

    TrajectoryGenSpec spec = c.benchmark.data_driven;
    spec.solver = c.solver;
    const BehaviorModel M = trajectory_model(c, spec.L);
    const GeneratedTrajectory gen = generate_trajectory(M, spec);
    const Trajectory dd = rollout(gen.predicted, c.crane, spec.theta4_start, 5.0);
    const double tt = time_to_target(dd.channel("theta4"), dd.rate, spec.theta4_target, 0.035, 5.0);

    ScoreSpec sc;
    sc.theta4_start = wp.theta4_start;
    sc.theta4_target = wp.theta4_target;
    const ComparisonReport rep =
        compare({"data-driven", dd, tt >= 0 ? tt : INFINITY}, {"model-based", mb, sol.total_time}, sc);
    line.flag("model_based_verified", chk.feasible);
    line.within("model_based_total_s", sol.total_time, 20.0, 60.0);
    line.flag("data_driven_reached", tt >= 0);
    line.check("time_ratio", rep.time_ratio, "<=", 0.8);
    line.check("theta2_ratio", rep.theta2_ratio, "<=", 1.0);
    line.check("runtime_s", seconds_since(t0), "<", 600.0);
    std::printf("  (model-based %.2f s, data-driven %.2f s, max|theta2| %.4g vs %.4g)\n",
                sol.total_time, tt, rep.a.max_sway_theta2, rep.b.max_sway_theta2);
    return line.print();
}

bool criterion8() {
    Line line{8, "indirect method equivalence"};
    const fixtures::Lti sys;
    std::mt19937_64 rng(8);
    const Index L = 30;
    const BehaviorModel H = build_hankel(sys.random(400, rng), L);
    const IndexSet known = IndexSet::unite(IndexSet::samples(2, 0, 3), IndexSet::samples(2, L - 3, 3));
    const Trajectory w = sys.random(L, rng);
    const VectorXd wk = truncate(w.data, known);
    VectorXd ref = VectorXd::Zero(2 * L);
    for (Index i = L / 3; i < L; ++i) ref(2 * i + 1) = 1.0;
    const IndirectResult ind = indirect_generate(H, known, wk, ref);

    // Direct program with the known term weighted far above the reference term.
    RecoveryTerms t;
    t.known_idx = known;
    t.known_vals = wk;
    t.weights.W = VectorXd::Constant(known.size(), 1e6);
    t.mu = 1.0;
    t.w_ref = ref;
    const SolverReport r = solve(assemble_recovery_qp(H, t));
    const VectorXd direct = H.M * r.g;
    line.check("orthogonality_residual", ind.orthogonality_residual, "<=", 1e-8);
    line.check("max_elementwise_gap", (ind.w_hat - direct).cwiseAbs().maxCoeff(), "<=", 1e-3);
    return line.print();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::vector<int> which;
    app.add_option("--criterion,-c", which, "criteria to run (default all)")->check(CLI::Range(1, 8));
    CLI11_PARSE(app, argc, argv);
    if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8};
    const std::vector<std::function<bool()>> all{criterion1, criterion2, criterion3, criterion4,
                                                 criterion5, criterion6, criterion7, criterion8};
    bool ok = true;
    for (int k : which) {
        try {
            ok = all[static_cast<std::size_t>(k - 1)]() && ok;
        } catch (const std::exception& e) {
            std::printf("[FAIL] criterion %d: exception: %s\n", k, e.what());
            ok = false;
        }
    }
    return ok ? 0 : 1;
}
