#include "ddcrane/config.hpp"

#include <fstream>

#include "ddcrane/io.hpp"

namespace ddcrane {

using nlohmann::json;

namespace {

template <typename T>
void get(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void get_vec(const json& j, const char* key, Eigen::VectorXd& out) {
    if (!j.contains(key)) return;
    const auto v = j.at(key).get<std::vector<double>>();
    out = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json sines_json(const SumOfSinesSpec& s) {
    return {{"n_sines", s.n_sines},   {"freq_mean", s.freq_mean},
            {"freq_std", s.freq_std}, {"duration", s.duration},
            {"rate", s.rate},         {"amplitude_limit", s.amplitude_limit},
            {"taper_duration", s.taper_duration}};
}

void sines_from(const json& j, SumOfSinesSpec& s) {
    get(j, "n_sines", s.n_sines);
    get(j, "freq_mean", s.freq_mean);
    get(j, "freq_std", s.freq_std);
    get(j, "duration", s.duration);
    get(j, "rate", s.rate);
    get(j, "amplitude_limit", s.amplitude_limit);
    get(j, "taper_duration", s.taper_duration);
}

json excitation_json(const ExcitationConfig& e) {
    json j = sines_json(e.sines);
    j["count"] = e.count;
    j["velocity_profile"] = e.velocity_profile;
    return j;
}

void excitation_from(const json& j, ExcitationConfig& e) {
    sines_from(j, e.sines);
    get(j, "count", e.count);
    get(j, "velocity_profile", e.velocity_profile);
}

json solver_json(const SolverSettings& s) {
    return {{"tol_abs", s.tol_abs},       {"tol_rel", s.tol_rel},
            {"max_iters", s.max_iters},   {"time_limit", s.time_limit},
            {"rho", s.rho},               {"sigma", s.sigma},
            {"alpha", s.alpha},           {"adaptive_rho", s.adaptive_rho},
            {"polish", s.polish},         {"check_interval", s.check_interval}};
}

void solver_from(const json& j, SolverSettings& s) {
    get(j, "tol_abs", s.tol_abs);
    get(j, "tol_rel", s.tol_rel);
    get(j, "max_iters", s.max_iters);
    get(j, "time_limit", s.time_limit);
    get(j, "rho", s.rho);
    get(j, "sigma", s.sigma);
    get(j, "alpha", s.alpha);
    get(j, "adaptive_rho", s.adaptive_rho);
    get(j, "polish", s.polish);
    get(j, "check_interval", s.check_interval);
}

double bound_in(const json& j, const char* key, double def) {
    if (!j.contains(key)) return def;
    if (j.at(key).is_null()) return kNoBound;
    return j.at(key).get<double>();
}

json bound_out(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json scenario_json(const TrajectoryGenSpec& s) {
    return {{"theta4_start", s.theta4_start},
            {"theta4_target", s.theta4_target},
            {"n_given", s.n_given},
            {"n_pinned", s.n_pinned},
            {"L", s.L},
            {"lambda", s.lambda},
            {"mu", s.mu},
            {"sigma", s.sigma},
            {"W", to_std(s.weights.W)},
            {"R", to_std(s.weights.R)},
            {"tv_channels", s.tv_channels},
            {"sway_bound", bound_out(s.sway_bound)},
            {"input_bound", bound_out(s.input_bound)},
            {"velocity_bound", bound_out(s.velocity_bound)},
            {"use_known_term", s.use_known_term},
            {"endpoint_equality", s.endpoint_equality},
            {"inequality", s.inequality}};
}

void scenario_from(const json& j, TrajectoryGenSpec& s) {
    get(j, "theta4_start", s.theta4_start);
    get(j, "theta4_target", s.theta4_target);
    get(j, "n_given", s.n_given);
    get(j, "n_pinned", s.n_pinned);
    get(j, "L", s.L);
    get(j, "lambda", s.lambda);
    get(j, "mu", s.mu);
    get(j, "sigma", s.sigma);
    get_vec(j, "W", s.weights.W);
    get_vec(j, "R", s.weights.R);
    get(j, "tv_channels", s.tv_channels);
    s.sway_bound = bound_in(j, "sway_bound", s.sway_bound);
    s.input_bound = bound_in(j, "input_bound", s.input_bound);
    s.velocity_bound = bound_in(j, "velocity_bound", s.velocity_bound);
    get(j, "use_known_term", s.use_known_term);
    get(j, "endpoint_equality", s.endpoint_equality);
    get(j, "inequality", s.inequality);
}

json waypoint_json(const WaypointProblem& w) {
    const WaypointBounds& b = w.bounds;
    return {{"theta4_start", w.theta4_start},
            {"theta4_target", w.theta4_target},
            {"n_wp", w.n_wp},
            {"sigma_ref", w.sigma_ref},
            {"tau_min", w.tau_min},
            {"tau_max", w.tau_max},
            {"tau_starts", w.tau_starts},
            {"substep", w.substep},
            {"margin", w.margin},
            {"backward_difference", w.backward_difference},
            {"bounds",
             {{"ddtheta4_max", b.ddtheta4_max},
              {"dtheta4_max", b.dtheta4_max},
              {"sway", b.sway},
              {"dsway", b.dsway},
              {"final_sway", b.final_sway},
              {"final_dsway", b.final_dsway}}}};
}

void waypoint_from(const json& j, WaypointProblem& w) {
    get(j, "theta4_start", w.theta4_start);
    get(j, "theta4_target", w.theta4_target);
    get(j, "n_wp", w.n_wp);
    get(j, "sigma_ref", w.sigma_ref);
    get(j, "tau_min", w.tau_min);
    get(j, "tau_max", w.tau_max);
    get(j, "tau_starts", w.tau_starts);
    get(j, "substep", w.substep);
    get(j, "margin", w.margin);
    get(j, "backward_difference", w.backward_difference);
    if (j.contains("bounds")) {
        const json& b = j.at("bounds");
        get(b, "ddtheta4_max", w.bounds.ddtheta4_max);
        get(b, "dtheta4_max", w.bounds.dtheta4_max);
        get(b, "sway", w.bounds.sway);
        get(b, "dsway", w.bounds.dsway);
        get(b, "final_sway", w.bounds.final_sway);
        get(b, "final_dsway", w.bounds.final_dsway);
    }
}

}  // namespace

RunConfig default_config() {
    RunConfig c;
    // Broadband draw for the modeling data: the narrow default band does not
    // excite enough directions for a depth-300 model.
    c.data.sines.n_sines = 600;
    c.data.sines.freq_mean = 0.0;
    c.data.sines.freq_std = 40.0;
    c.data.sines.duration = 60.0;
    c.data.count = 1;
    c.test.sines.duration = 15.0;
    c.test.count = 10;
    c.scenario.velocity_bound = 0.6;
    c.scenario.input_bound = kNoBound;
    c.benchmark.data_driven.theta4_start = 0.0;
    c.benchmark.data_driven.theta4_target = M_PI / 4;
    c.benchmark.data_driven.velocity_bound = 0.6;
    c.benchmark.data_driven.input_bound = kNoBound;
    // Rest held exactly over the given samples; a soft start lets the
    // prediction begin from a swing the real crane does not have.
    c.benchmark.data_driven.n_pinned = c.benchmark.data_driven.n_given;
    c.benchmark.data_driven.sway_bound = 0.005;
    c.benchmark.waypoints.backward_difference = true;
    return c;
}

void RunConfig::validate() const {
    crane.validate();
    data.sines.validate();
    test.sines.validate();
    if (data.count < 1 || test.count < 0) throw ConfigError("sequence counts must be positive");
    if (model.L < 1) throw ConfigError("model depth must be positive");
    if (angle_std < 0 || velocity_std < 0) throw ConfigError("noise stds must be nonnegative");
    scenario.validate();
    benchmark.waypoints.validate();
}

RunConfig config_from_json(const json& j) {
    RunConfig c = default_config();
    if (j.contains("crane")) {
        const json& k = j.at("crane");
        get(k, "boom_length", c.crane.boom_length);
        get(k, "cable_length", c.crane.cable_length);
        get(k, "luffing_angle", c.crane.luffing_angle);
        get(k, "gravity", c.crane.gravity);
        get(k, "nonlinear_residual", c.crane.nonlinear_residual);
    }
    if (j.contains("mode")) {
        const auto m = j.at("mode").get<std::string>();
        if (m == "simulation") c.mode = ChannelMode::Simulation;
        else if (m == "experimental") c.mode = ChannelMode::Experimental;
        else throw ConfigError("mode must be simulation or experimental");
    }
    if (j.contains("noise")) {
        const json& n = j.at("noise");
        get(n, "enabled", c.noise_enabled);
        get(n, "angle_std", c.angle_std);
        get(n, "velocity_std", c.velocity_std);
    }
    if (j.contains("data")) excitation_from(j.at("data"), c.data);
    if (j.contains("test")) excitation_from(j.at("test"), c.test);
    if (j.contains("model")) {
        const json& m = j.at("model");
        get(m, "L", c.model.L);
        get(m, "n_hypothesis", c.model.n_hypothesis);
        get(m, "nu", c.model.nu);
        get(m, "delta", c.model.delta);
        get(m, "delta_relative", c.model.delta_relative);
    }
    if (j.contains("sim_tuning")) {
        const json& s = j.at("sim_tuning");
        get(s, "deltas", c.sim_tuning.deltas);
        get(s, "lambdas", c.sim_tuning.lambdas);
        get(s, "nus", c.sim_tuning.nus);
        get(s, "n_ini", c.sim_tuning.n_ini);
        get(s, "epsilon", c.sim_tuning.epsilon);
        if (s.contains("solver")) solver_from(s.at("solver"), c.sim_tuning.solver);
    }
    if (j.contains("scenario")) scenario_from(j.at("scenario"), c.scenario);
    if (j.contains("traj_tuning")) {
        const json& t = j.at("traj_tuning");
        get(t, "lambdas", c.traj_tuning.lambdas);
        get(t, "mus", c.traj_tuning.mus);
        get(t, "sigmas", c.traj_tuning.sigmas);
        get_vec(t, "weights", c.traj_tuning.weights);
        get(t, "use_rollout", c.traj_tuning.use_rollout);
        get(t, "rollout_tail", c.traj_tuning.rollout_tail);
    }
    if (j.contains("benchmark")) {
        const json& b = j.at("benchmark");
        if (b.contains("waypoints")) waypoint_from(b.at("waypoints"), c.benchmark.waypoints);
        if (b.contains("data_driven")) scenario_from(b.at("data_driven"), c.benchmark.data_driven);
    }
    if (j.contains("solver")) solver_from(j.at("solver"), c.solver);
    if (j.contains("seeds")) {
        const json& s = j.at("seeds");
        get(s, "data", c.seeds.data);
        get(s, "noise", c.seeds.noise);
        get(s, "test", c.seeds.test);
        get(s, "test_noise", c.seeds.test_noise);
        get(s, "controllability", c.seeds.controllability);
    }
    get(j, "threads", c.threads);
    get(j, "controllability_states", c.controllability_states);
    get(j, "out_dir", c.out_dir);
    c.validate();
    return c;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["crane"] = {{"boom_length", c.crane.boom_length},
                  {"cable_length", c.crane.cable_length},
                  {"luffing_angle", c.crane.luffing_angle},
                  {"gravity", c.crane.gravity},
                  {"nonlinear_residual", c.crane.nonlinear_residual}};
    j["mode"] = c.mode == ChannelMode::Simulation ? "simulation" : "experimental";
    j["noise"] = {{"enabled", c.noise_enabled}, {"angle_std", c.angle_std},
                  {"velocity_std", c.velocity_std}};
    j["data"] = excitation_json(c.data);
    j["test"] = excitation_json(c.test);
    j["model"] = {{"L", c.model.L},
                  {"n_hypothesis", c.model.n_hypothesis},
                  {"nu", c.model.nu},
                  {"delta", c.model.delta},
                  {"delta_relative", c.model.delta_relative}};
    j["sim_tuning"] = {{"deltas", c.sim_tuning.deltas},
                       {"lambdas", c.sim_tuning.lambdas},
                       {"nus", c.sim_tuning.nus},
                       {"n_ini", c.sim_tuning.n_ini},
                       {"epsilon", c.sim_tuning.epsilon},
                       {"solver", solver_json(c.sim_tuning.solver)}};
    j["scenario"] = scenario_json(c.scenario);
    j["traj_tuning"] = {{"lambdas", c.traj_tuning.lambdas},
                        {"mus", c.traj_tuning.mus},
                        {"sigmas", c.traj_tuning.sigmas},
                        {"weights", to_std(c.traj_tuning.weights)},
                        {"use_rollout", c.traj_tuning.use_rollout},
                        {"rollout_tail", c.traj_tuning.rollout_tail}};
    j["benchmark"] = {{"waypoints", waypoint_json(c.benchmark.waypoints)},
                      {"data_driven", scenario_json(c.benchmark.data_driven)}};
    j["solver"] = solver_json(c.solver);
    j["seeds"] = {{"data", c.seeds.data},
                  {"noise", c.seeds.noise},
                  {"test", c.seeds.test},
                  {"test_noise", c.seeds.test_noise},
                  {"controllability", c.seeds.controllability}};
    j["threads"] = c.threads;
    j["controllability_states"] = c.controllability_states;
    j["out_dir"] = c.out_dir;
    return j;
}

RunConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": schema violation: " + e.what());
    }
}

std::string config_hash(const RunConfig& c) {
    json j = config_to_json(c);
    j.erase("out_dir");
    j.erase("threads");
    return hex64(fnv1a64(j.dump()));
}

Trajectory apply_mode(const Trajectory& t, ChannelMode mode) {
    return mode == ChannelMode::Simulation ? t : to_velocity_input(t);
}

std::vector<Trajectory> generate_sequences(const RunConfig& c, const ExcitationConfig& ex,
                                           std::uint64_t seed, std::uint64_t noise_seed,
                                           std::vector<Trajectory>* truth) {
    std::vector<Trajectory> out;
    if (truth) truth->clear();
    for (int i = 0; i < ex.count; ++i) {
        SumOfSinesSpec s = ex.sines;
        s.seed = seed + static_cast<std::uint64_t>(i);
        const Eigen::VectorXd sig = generate_excitation(s);
        const Eigen::VectorXd u = ex.velocity_profile ? differentiate_to_acceleration(sig, s.rate) : sig;
        SimulateOptions opts;
        opts.rate = s.rate;
        std::optional<NoiseSpec> noise;
        if (c.noise_enabled) noise = NoiseSpec{c.angle_std, c.velocity_std, noise_seed + static_cast<std::uint64_t>(i)};
        const Trajectory clean = simulate(CraneState::Zero(), u, c.crane, std::nullopt, opts);
        if (noise) {
            out.push_back(apply_mode(simulate(CraneState::Zero(), u, c.crane, noise, opts), c.mode));
            if (truth) truth->push_back(apply_mode(clean, c.mode));
        } else {
            out.push_back(apply_mode(clean, c.mode));
            if (truth) truth->push_back(out.back());
        }
    }
    return out;
}

}  // namespace ddcrane
