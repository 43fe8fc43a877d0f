// ddcrane: batch front end for data generation, modeling, tuning and trajectory generation.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ddcrane/config.hpp"
#include "ddcrane/io.hpp"
#include "ddcrane/quality.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ddcrane;

namespace {

struct Context {
    RunConfig cfg;
    std::string hash;
};

std::string path_in(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

std::string indexed(const std::string& stem, std::size_t k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu.csv", stem.c_str(), k);
    return buf;
}

Metadata artifact_meta(const Context& ctx, std::uint64_t seed) {
    return {{"config_hash", ctx.hash}, {"seed", std::to_string(seed)}};
}

json artifact_json(const Context& ctx, std::uint64_t seed) {
    return {{"config_hash", ctx.hash}, {"seed", seed}};
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Finite doubles pass through; others become null so the JSON stays valid.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<Trajectory> read_set(const std::string& dir, const std::string& stem) {
    std::vector<std::string> files;
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir)) {
            const std::string n = e.path().filename().string();
            if (n.rfind(stem + "_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path().string());
        }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no " + stem + " files in " + dir + " (run gen-data first)");
    std::vector<Trajectory> out;
    for (const auto& f : files) out.push_back(read_trajectory_csv(f));
    return out;
}

json quality_json(const TrajectoryQuality& q) {
    return {{"time_to_target", num(q.time_to_target)},
            {"reached", q.reached},
            {"horizon", q.horizon},
            {"max_sway", q.max_sway},
            {"mean_sway", q.mean_sway},
            {"max_sway_theta1", q.max_sway_theta1},
            {"max_sway_theta2", q.max_sway_theta2},
            {"max_smooth", q.max_smooth},
            {"mean_smooth", q.mean_smooth},
            {"overshoot_integral", q.overshoot_integral},
            {"rollout_error", q.rollout_error},
            {"final_error", q.final_error}};
}

json report_json(const SolverReport& r) {
    return {{"status", to_string(r.status)},
            {"iterations", r.iterations},
            {"polished", r.polished},
            {"objective", num(r.objective)},
            {"primal_residual", num(r.primal_residual)},
            {"dual_residual", num(r.dual_residual)},
            {"kkt_residual", num(r.kkt.max())}};
}

ScoreSpec score_spec(const TrajectoryGenSpec& s) {
    ScoreSpec sc;
    sc.theta4_start = s.theta4_start;
    sc.theta4_target = s.theta4_target;
    return sc;
}

// ---- commands --------------------------------------------------------------

int cmd_gen_data(const Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const std::string ddir = path_in(c.out_dir, "data"), tdir = path_in(c.out_dir, "test");
    ensure_directory(ddir);
    ensure_directory(tdir);
    std::vector<Trajectory> truth;
    const auto data = generate_sequences(c, c.data, c.seeds.data, c.seeds.noise);
    json files = json::array();
    Index samples = 0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        Metadata meta = artifact_meta(ctx, c.seeds.data + k);
        meta["noise_seed"] = std::to_string(c.seeds.noise + k);
        write_trajectory_csv(path_in(ddir, indexed("data", k)), data[k], meta);
        files.push_back(indexed("data", k));
        samples += data[k].samples();
    }
    const auto tests = generate_sequences(c, c.test, c.seeds.test, c.seeds.test_noise, &truth);
    for (std::size_t k = 0; k < tests.size(); ++k) {
        write_trajectory_csv(path_in(tdir, indexed("test", k)), tests[k],
                             artifact_meta(ctx, c.seeds.test + k));
        if (c.noise_enabled)
            write_trajectory_csv(path_in(tdir, indexed("truth", k)), truth[k],
                                 artifact_meta(ctx, c.seeds.test + k));
    }

    // Fifteen times more columns than rows is the working guideline.
    const int q = data.front().q;
    const Index rows = q * c.model.L;
    Index cols = 0;
    for (const auto& d : data) cols += std::max<Index>(0, d.samples() - c.model.L + 1);
    const bool enough = cols >= 15 * rows;
    if (!enough)
        std::fprintf(stderr,
                     "warning: %ld Hankel columns for %ld rows at L=%ld; about %ld are recommended\n",
                     static_cast<long>(cols), static_cast<long>(rows), static_cast<long>(c.model.L),
                     static_cast<long>(15 * rows));
    json j = artifact_json(ctx, c.seeds.data);
    j["data_files"] = files;
    j["test_count"] = tests.size();
    j["total_samples"] = samples;
    j["duration_s"] = static_cast<double>(samples) / c.data.sines.rate;
    j["hankel_rows"] = rows;
    j["hankel_cols"] = cols;
    j["column_guideline_met"] = enough;
    write_json(path_in(ddir, "manifest.json"), j);
    std::printf("wrote %zu data and %zu test sequences to %s\n", data.size(), tests.size(),
                c.out_dir.c_str());
    return 0;
}

BehaviorModel build_configured_model(const RunConfig& c, json& info) {
    const auto data = read_set(path_in(c.out_dir, "data"), "data");
    const BehaviorModel H = build_hankel(data, c.model.L);
    const RankReport rr = identifiability_rank(H, c.model.n_hypothesis);
    info["rank"] = rr.rank;
    info["expected_rank"] = rr.expected;
    info["identifiable"] = rr.satisfied;
    info["sigma_max"] = rr.sigma_max;
    info["hankel_rows"] = H.rows();
    info["hankel_cols"] = H.cols();
    Index nu = c.model.nu;
    if (nu == 0) nu = rr.rank;  // 0 selects down to the numerical rank
    return build_tuned_model(H, nu, c.model.delta, c.model.delta_relative);
}

int cmd_build_model(const Context& ctx, const std::string& dir) {
    json info = artifact_json(ctx, ctx.cfg.seeds.data);
    const BehaviorModel M = build_configured_model(ctx.cfg, info);
    Metadata meta = artifact_meta(ctx, ctx.cfg.seeds.data);
    save_model(dir, M, meta);
    info["model_rows"] = M.rows();
    info["model_cols"] = M.cols();
    info["nu"] = M.nu;
    info["delta"] = M.delta;
    write_json(path_in(dir, "manifest.json"), info);
    std::printf("model %ldx%ld (rank %ld, expected %ld) -> %s\n", static_cast<long>(M.rows()),
                static_cast<long>(M.cols()), static_cast<long>(info["rank"].get<Index>()),
                static_cast<long>(info["expected_rank"].get<Index>()), dir.c_str());
    return 0;
}

int cmd_tune_sim(const Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const std::string dir = path_in(c.out_dir, "tune_sim");
    ensure_directory(dir);
    const std::string tdir = path_in(c.out_dir, "test");
    SimTuneGrid grid;
    grid.deltas = c.sim_tuning.deltas;
    grid.lambdas = c.sim_tuning.lambdas;
    grid.nus = c.sim_tuning.nus;
    grid.delta_relative = c.model.delta_relative;
    grid.n_ini = c.sim_tuning.n_ini;
    grid.epsilon = c.sim_tuning.epsilon;
    grid.solver = c.sim_tuning.solver;
    grid.threads = c.threads;
    for (auto& t : read_set(tdir, "test")) grid.tests.push_back(t.window(0, c.model.L));
    if (c.noise_enabled)
        for (auto& t : read_set(tdir, "truth")) grid.truths.push_back(t.window(0, c.model.L));
    const BehaviorModel H = build_hankel(read_set(path_in(c.out_dir, "data"), "data"), c.model.L);
    const SimTuneResult res = tune_simulation(H, grid);

    std::vector<std::string> header{"nu", "delta", "lambda", "columns", "rank", "feasible", "score"};
    for (const auto& n : H.channel_names) header.push_back("score_" + n);
    std::vector<std::vector<double>> rows;
    for (const auto& r : res.table) {
        std::vector<double> row{static_cast<double>(r.nu), r.delta, r.lambda, static_cast<double>(r.columns),
                                static_cast<double>(r.rank), r.feasible ? 1.0 : 0.0, r.score};
        for (Index i = 0; i < r.channel_scores.size(); ++i) row.push_back(r.channel_scores(i));
        rows.push_back(row);
    }
    write_table_csv(path_in(dir, "table.csv"), header, rows, artifact_meta(ctx, c.seeds.data));
    const SimTuneRow& b = res.best;
    json j = artifact_json(ctx, c.seeds.data);
    j["best"] = {{"nu", b.nu}, {"delta", b.delta}, {"lambda", b.lambda}, {"score", num(b.score)},
                 {"rank", b.rank}, {"columns", b.columns}, {"feasible", b.feasible}};
    write_json(path_in(dir, "best.json"), j);
    if (!b.feasible) {
        std::fprintf(stderr, "no feasible tuning cell\n");
        return 2;
    }
    save_model(path_in(dir, "model"), build_tuned_model(H, b.nu, b.delta, grid.delta_relative),
               artifact_meta(ctx, c.seeds.data));
    std::printf("best nu=%ld delta=%g lambda=%g score=%g\n", static_cast<long>(b.nu), b.delta, b.lambda,
                b.score);
    return 0;
}

TrajectoryGenSpec scenario_with_solver(const RunConfig& c) {
    TrajectoryGenSpec s = c.scenario;
    s.solver = c.solver;
    return s;
}

int cmd_tune_traj(const Context& ctx, const std::string& model_dir) {
    const RunConfig& c = ctx.cfg;
    const BehaviorModel M = load_model(model_dir);
    TrajTuneGrid grid;
    grid.lambdas = c.traj_tuning.lambdas;
    grid.mus = c.traj_tuning.mus;
    grid.sigmas = c.traj_tuning.sigmas;
    grid.weights = c.traj_tuning.weights;
    grid.use_rollout = c.traj_tuning.use_rollout;
    grid.rollout_tail = c.traj_tuning.rollout_tail;
    grid.crane = c.crane;
    grid.threads = c.threads;
    const TrajTuneResult res = tune_trajectory(M, scenario_with_solver(c), grid);

    const std::string dir = path_in(c.out_dir, "tune_traj");
    ensure_directory(dir);
    std::vector<std::string> header{"lambda", "mu", "sigma", "feasible", "score"};
    for (int k = 0; k < kMetricCount; ++k) header.push_back(metric_name(k));
    auto dump = [&](const std::string& name, const std::vector<TrajTuneRow>& table) {
        std::vector<std::vector<double>> rows;
        for (const auto& r : table) {
            std::vector<double> row{r.lambda, r.mu, r.sigma, r.feasible ? 1.0 : 0.0, r.score};
            for (int k = 0; k < kMetricCount; ++k)
                row.push_back(r.metrics.size() ? r.metrics(k) : std::nan(""));
            rows.push_back(row);
        }
        write_table_csv(path_in(dir, name), header, rows, artifact_meta(ctx, c.seeds.data));
    };
    dump("table.csv", res.table);
    dump("slice_lambda.csv", res.slice_lambda);
    dump("slice_mu.csv", res.slice_mu);
    dump("slice_sigma.csv", res.slice_sigma);
    json j = artifact_json(ctx, c.seeds.data);
    j["best"] = {{"lambda", res.best.lambda}, {"mu", res.best.mu}, {"sigma", res.best.sigma},
                 {"score", num(res.best.score)}, {"quality", quality_json(res.best.quality)}};
    json norm = json::object();
    for (int k = 0; k < kMetricCount; ++k) norm[metric_name(k)] = num(res.normalization(k));
    j["normalization"] = norm;
    write_json(path_in(dir, "best.json"), j);
    std::printf("best lambda=%g mu=%g sigma=%g score=%g\n", res.best.lambda, res.best.mu, res.best.sigma,
                res.best.score);
    return 0;
}

int write_generated(const Context& ctx, const BehaviorModel& M, const TrajectoryGenSpec& spec,
                    const std::string& dir) {
    ensure_directory(dir);
    const GeneratedTrajectory gen = generate_trajectory(M, spec);
    const Trajectory ro = rollout(gen.predicted, ctx.cfg.crane, spec.theta4_start, 5.0);
    const ScoreSpec sc = score_spec(spec);
    const TrajectoryQuality pq = score_trajectory(gen.predicted, &ro, sc);
    const TrajectoryQuality rq = score_trajectory(ro, nullptr, sc);
    const Metadata meta = artifact_meta(ctx, ctx.cfg.seeds.data);
    write_trajectory_csv(path_in(dir, "trajectory.csv"), gen.predicted, meta);
    write_trajectory_csv(path_in(dir, "rollout.csv"), ro, meta);
    json j = artifact_json(ctx, ctx.cfg.seeds.data);
    j["scenario"] = {{"theta4_start", spec.theta4_start}, {"theta4_target", spec.theta4_target},
                     {"n_given", spec.n_given},           {"L", spec.L},
                     {"lambda", spec.lambda},             {"mu", spec.mu},
                     {"sigma", spec.sigma}};
    j["time_to_target"] = num(pq.reached ? pq.time_to_target : NAN);
    j["rollout_time_to_target"] = num(rq.reached ? rq.time_to_target : NAN);
    j["endpoint_residual"] = gen.endpoint_residual;
    j["bound_violation"] = gen.bound_violation;
    j["predicted"] = quality_json(pq);
    j["rollout"] = quality_json(rq);
    j["solver"] = report_json(gen.report);
    write_json(path_in(dir, "manifest.json"), j);
    std::printf("time_to_target %.2f s (rollout %.2f s), endpoint residual %.2e -> %s\n",
                pq.time_to_target, rq.time_to_target, gen.endpoint_residual, dir.c_str());
    return 0;
}

int cmd_gen_traj(const Context& ctx, const std::string& model_dir) {
    const BehaviorModel M = load_model(model_dir);
    return write_generated(ctx, M, scenario_with_solver(ctx.cfg), path_in(ctx.cfg.out_dir, "gen_traj"));
}

int cmd_simulate(const Context& ctx, const std::string& model_dir, double lambda) {
    const RunConfig& c = ctx.cfg;
    const BehaviorModel M = load_model(model_dir);
    const std::string tdir = path_in(c.out_dir, "test"), dir = path_in(c.out_dir, "simulate");
    ensure_directory(dir);
    const auto tests = read_set(tdir, "test");
    std::vector<Trajectory> truths;
    if (c.noise_enabled) truths = read_set(tdir, "truth");
    NonparametricSimulator sim(M, c.sim_tuning.n_ini, lambda, c.sim_tuning.epsilon, c.sim_tuning.solver);
    Eigen::VectorXd score = Eigen::VectorXd::Zero(M.q);
    json runs = json::array();
    for (std::size_t k = 0; k < tests.size(); ++k) {
        const Trajectory t = tests[k].window(0, M.L);
        const Trajectory& truth = truths.empty() ? t : truths[k];
        const SimulationResult r = sim.run(simulation_spec_from(t, c.sim_tuning.n_ini, c.sim_tuning.epsilon));
        write_trajectory_csv(path_in(dir, indexed("sim", k)), r.w_hat, artifact_meta(ctx, c.seeds.test + k));
        const Eigen::VectorXd e = r.w_hat.data - truth.window(0, M.L).data;
        json per = json::object();
        Eigen::VectorXd s = Eigen::VectorXd::Zero(M.q);
        for (Index i = 0; i < e.size(); ++i) s(i % M.q) += e(i) * e(i);
        for (int ch = 0; ch < M.q; ++ch)
            per[M.channel_names[static_cast<std::size_t>(ch)]] = std::sqrt(s(ch) / static_cast<double>(M.L));
        score += s;
        runs.push_back({{"file", indexed("sim", k)}, {"rmse", per}, {"solver", report_json(r.report)}});
    }
    json j = artifact_json(ctx, c.seeds.test);
    json sc = json::object();
    for (int ch = 0; ch < M.q; ++ch) sc[M.channel_names[static_cast<std::size_t>(ch)]] = score(ch);
    j["score"] = sc;
    j["total_score"] = score.sum();
    j["runs"] = runs;
    write_json(path_in(dir, "scores.json"), j);
    std::printf("simulated %zu sequences, total score %g\n", tests.size(), score.sum());
    return 0;
}

int cmd_benchmark(const Context& ctx, const std::string& model_dir) {
    const RunConfig& c = ctx.cfg;
    const std::string dir = path_in(c.out_dir, "benchmark");
    ensure_directory(dir);
    WaypointProblem wp = c.benchmark.waypoints;
    wp.threads = c.threads;
    const WaypointSolution sol = solve_waypoint_nlp(wp, c.crane);
    const Trajectory play = waypoint_playback(sol, c.crane, wp.theta4_start);
    const RolloutCheck chk = verify_rollout(play, sol, wp.bounds);
    const Metadata meta = artifact_meta(ctx, c.seeds.data);

    std::vector<std::vector<double>> rows;
    for (Index k = 0; k < sol.theta4.size(); ++k) {
        const SwayState& s = sol.sway[static_cast<std::size_t>(k)];
        rows.push_back({static_cast<double>(k) * sol.tau, sol.theta4(k), sol.dtheta4(k), sol.ddtheta4(k),
                        s.theta1, s.theta2, s.dtheta1, s.dtheta2});
    }
    write_table_csv(path_in(dir, "waypoints.csv"),
                    {"t", "theta4", "dtheta4", "ddtheta4", "theta1", "theta2", "dtheta1", "dtheta2"}, rows,
                    meta);
    write_trajectory_csv(path_in(dir, "playback.csv"), play, meta);
    json j = artifact_json(ctx, c.seeds.data);
    j["tau"] = sol.tau;
    j["total_time"] = sol.total_time;
    j["objective"] = sol.objective;
    j["initial_objective"] = sol.initial_objective;
    j["kinematic_residual"] = sol.kinematic_residual;
    j["bound_violation"] = sol.bound_violation;
    j["status"] = to_string(sol.status);
    j["iterations"] = sol.iterations;
    j["rollout_check"] = {{"max_sway_excess", chk.max_sway_excess},
                          {"final_sway_excess", chk.final_sway_excess},
                          {"feasible", chk.feasible}};
    write_json(path_in(dir, "manifest.json"), j);
    std::printf("model-based total time %.2f s (tau %.3f), rollout check %s\n", sol.total_time, sol.tau,
                chk.feasible ? "passed" : "FAILED");

    if (!model_dir.empty()) {
        TrajectoryGenSpec dd = c.benchmark.data_driven;
        dd.solver = c.solver;
        return write_generated(ctx, load_model(model_dir), dd, path_in(dir, "data_driven"));
    }
    return chk.feasible ? 0 : 2;
}

double motion_time(const Trajectory& t, const ScoreSpec& sc) {
    const double tt = time_to_target(t.channel("theta4"), t.rate, sc.theta4_target, sc.tolerance, sc.hold);
    return tt >= 0 ? tt : INFINITY;
}

int cmd_compare(const Context& ctx, std::string a, std::string b, double a_time, double b_time) {
    const RunConfig& c = ctx.cfg;
    const std::string bdir = path_in(c.out_dir, "benchmark");
    if (a.empty()) a = path_in(path_in(bdir, "data_driven"), "rollout.csv");
    if (b.empty()) b = path_in(bdir, "playback.csv");
    if (b_time <= 0 && fs::exists(path_in(bdir, "manifest.json")) && b == path_in(bdir, "playback.csv"))
        b_time = json::parse(read_text(path_in(bdir, "manifest.json"))).at("total_time").get<double>();
    ScoreSpec sc;
    sc.theta4_start = c.benchmark.waypoints.theta4_start;
    sc.theta4_target = c.benchmark.waypoints.theta4_target;
    const Trajectory ta = read_trajectory_csv(a), tb = read_trajectory_csv(b);
    const MethodResult ma{"a", ta, a_time > 0 ? a_time : motion_time(ta, sc)};
    const MethodResult mb{"b", tb, b_time > 0 ? b_time : motion_time(tb, sc)};
    const ComparisonReport rep = compare(ma, mb, sc);
    const std::string dir = path_in(c.out_dir, "compare");
    ensure_directory(dir);
    json j = artifact_json(ctx, c.seeds.data);
    j["a"] = {{"file", a}, {"motion_time", num(ma.motion_time)}, {"quality", quality_json(rep.a)}};
    j["b"] = {{"file", b}, {"motion_time", num(mb.motion_time)}, {"quality", quality_json(rep.b)}};
    j["ratios"] = {{"time", num(rep.time_ratio)},
                   {"max_theta1", num(rep.theta1_ratio)},
                   {"max_theta2", num(rep.theta2_ratio)},
                   {"final_error", num(rep.final_error_ratio)}};
    write_json(path_in(dir, "report.json"), j);
    write_table_csv(path_in(dir, "ratios.csv"), {"time", "max_theta1", "max_theta2", "final_error"},
                    {{rep.time_ratio, rep.theta1_ratio, rep.theta2_ratio, rep.final_error_ratio}},
                    artifact_meta(ctx, c.seeds.data));
    std::printf("ratios a/b: time %.3f, theta1 %.3f, theta2 %.3f, final error %.3f\n", rep.time_ratio,
                rep.theta1_ratio, rep.theta2_ratio, rep.final_error_ratio);
    return 0;
}

int cmd_controllability(const Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const std::string dir = path_in(c.out_dir, "controllability");
    ensure_directory(dir);
    std::mt19937_64 rng(c.seeds.controllability);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    std::vector<std::vector<double>> rows;
    double max_rel = 0.0, min_abs = INFINITY, max_abs = 0.0, degenerate = 0.0;
    int singular = 0;
    for (int k = 0; k < c.controllability_states; ++k) {
        CraneState x;
        for (int i = 0; i < 6; ++i) x(i) = ud(rng);
        const double f = det_formula(x, c.crane);
        const double d = controllability_matrix(x, c.crane).determinant();
        max_rel = std::max(max_rel, std::abs(d - f) / std::max(std::abs(f), 1e-300));
        min_abs = std::min(min_abs, std::abs(f));
        max_abs = std::max(max_abs, std::abs(f));
        if (std::abs(f) <= 1e-10) ++singular;
        rows.push_back({x(0), x(1), x(2), x(3), x(4), x(5), f, d});
        CraneState z = x;
        z(state::theta2) = z(state::dtheta2) = z(state::dtheta4) = 0.0;
        degenerate = std::max(degenerate, std::abs(controllability_matrix(z, c.crane).determinant()));
    }
    write_table_csv(path_in(dir, "states.csv"),
                    {"theta1", "theta2", "theta4", "dtheta1", "dtheta2", "dtheta4", "det_formula", "det_numeric"},
                    rows, artifact_meta(ctx, c.seeds.controllability));
    json j = artifact_json(ctx, c.seeds.controllability);
    j["states"] = c.controllability_states;
    j["max_relative_mismatch"] = max_rel;
    j["min_abs_det"] = min_abs;
    j["max_abs_det"] = max_abs;
    j["singular_states"] = singular;
    j["max_det_on_linearization_set"] = degenerate;
    j["measure_zero_check"] = singular == 0;
    write_json(path_in(dir, "summary.json"), j);
    std::printf("%d states: max relative mismatch %.2e, singular %d, |det| in [%.3g, %.3g]\n",
                c.controllability_states, max_rel, singular, min_abs, max_abs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven crane trajectory toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir, mode;
    std::uint64_t seed = 0;
    int threads = -1;
    bool noise = false, no_noise = false;
    double L = 0;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "base seed for every stochastic stage");
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (0 = hardware)");
    app.add_option("--mode", mode, "channel mode")->check(CLI::IsMember({"simulation", "experimental"}));
    app.add_flag("--noise", noise, "enable measurement noise");
    app.add_flag("--no-noise", no_noise, "disable measurement noise");
    app.add_option("--L", L, "model depth in samples");

    std::string model_dir, a_file, b_file;
    double lambda = 0.0, a_time = 0.0, b_time = 0.0;
    auto* gen_data = app.add_subcommand("gen-data", "generate excitation data and test sequences");
    auto* build = app.add_subcommand("build-model", "build the Hankel model from generated data");
    build->add_option("--model", model_dir, "model directory (default <out>/model)");
    auto* tune_sim = app.add_subcommand("tune-sim", "grid search over nu, delta, lambda");
    auto* tune_traj = app.add_subcommand("tune-traj", "grid search over lambda, mu, sigma");
    tune_traj->add_option("--model", model_dir, "model directory");
    auto* gen_traj = app.add_subcommand("gen-traj", "generate an optimal slewing trajectory");
    gen_traj->add_option("--model", model_dir, "model directory");
    auto* simulate_cmd = app.add_subcommand("simulate", "nonparametric simulation of the test sequences");
    simulate_cmd->add_option("--model", model_dir, "model directory");
    simulate_cmd->add_option("--lambda", lambda, "L1 weight");
    auto* bench = app.add_subcommand("benchmark", "model-based waypoint benchmark");
    bench->add_option("--model", model_dir, "also generate the data-driven trajectory with this model");
    auto* cmp = app.add_subcommand("compare", "compare two rollouts");
    cmp->add_option("--a", a_file, "first rollout CSV (default: benchmark data-driven rollout)");
    cmp->add_option("--b", b_file, "second rollout CSV (default: benchmark playback)");
    cmp->add_option("--a-time", a_time, "motion time of a (default: time-to-target)");
    cmp->add_option("--b-time", b_time, "motion time of b (default: planned total time)");
    auto* ctrl = app.add_subcommand("controllability", "determinant statistics over random states");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        Context ctx;
        ctx.cfg = config_path.empty() ? default_config() : load_config(config_path);
        RunConfig& c = ctx.cfg;
        if (app.count("--seed")) {
            c.seeds.data = seed;
            c.seeds.noise = seed + 100;
            c.seeds.test = seed + 1000;
            c.seeds.test_noise = seed + 2000;
            c.seeds.controllability = seed + 6;
        }
        if (!out_dir.empty()) c.out_dir = out_dir;
        if (threads >= 0) c.threads = threads;
        if (!mode.empty()) c.mode = mode == "simulation" ? ChannelMode::Simulation : ChannelMode::Experimental;
        if (noise) c.noise_enabled = true;
        if (no_noise) c.noise_enabled = false;
        if (L > 0) c.model.L = static_cast<Index>(L);
        c.validate();
        ctx.hash = config_hash(c);
        ensure_directory(c.out_dir);
        write_json(path_in(c.out_dir, "config.json"), config_to_json(c));

        const std::string default_model = path_in(c.out_dir, "model");
        if (model_dir.empty() && !bench->parsed()) model_dir = default_model;
        if (gen_data->parsed()) return cmd_gen_data(ctx);
        if (build->parsed()) return cmd_build_model(ctx, model_dir);
        if (tune_sim->parsed()) return cmd_tune_sim(ctx);
        if (tune_traj->parsed()) return cmd_tune_traj(ctx, model_dir);
        if (gen_traj->parsed()) return cmd_gen_traj(ctx, model_dir);
        if (simulate_cmd->parsed()) return cmd_simulate(ctx, model_dir, lambda);
        if (bench->parsed()) return cmd_benchmark(ctx, model_dir);
        if (cmp->parsed()) return cmd_compare(ctx, a_file, b_file, a_time, b_time);
        if (ctrl->parsed()) return cmd_controllability(ctx);
    } catch (const Infeasible& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
