#include <random>

#include "doctest.h"

#include "ddcrane/crane.hpp"
#include "ddcrane/recovery.hpp"
#include "fixtures.hpp"

using namespace ddcrane;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct LtiModel {
    fixtures::Lti sys;
    std::mt19937_64 rng{31};
    BehaviorModel H;
    explicit LtiModel(Index L, Index T = 300) : H(build_hankel(sys.random(T, rng), L)) {}
};

}  // namespace

TEST_SUITE("recovery") {

TEST_CASE("known column is recovered") {
    LtiModel f(8);
    RecoveryProblem pr;
    pr.model = &f.H;
    pr.known_idx = IndexSet::all(f.H.rows());
    pr.known_vals = f.H.M.col(5);
    const RecoveryResult r = recover(pr);
    CHECK((r.w_hat - f.H.M.col(5)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("hidden output sample") {
    LtiModel f(12);
    const Trajectory w = f.sys.random(12, f.rng);
    std::vector<Index> idx;
    for (Index i = 0; i < 24; ++i)
        if (i != 2 * 6 + 1) idx.push_back(i);
    RecoveryProblem pr;
    pr.model = &f.H;
    pr.known_idx = IndexSet(idx);
    pr.known_vals = truncate(w.data, pr.known_idx);
    const RecoveryResult r = recover(pr);
    CHECK(std::abs(r.w_hat(13) - w.data(13)) <= 1e-6);
}

TEST_CASE("weights pull the fit toward the known values") {
    LtiModel f(10);
    const Trajectory w = f.sys.random(10, f.rng);
    VectorXd noisy = w.data;
    noisy(7) += 0.3;
    RecoveryProblem pr;
    pr.model = &f.H;
    pr.known_idx = IndexSet::all(20);
    pr.known_vals = noisy;
    double prev = INFINITY;
    for (double wt : {1.0, 10.0, 100.0}) {
        pr.W = VectorXd::Ones(20);
        pr.W(7) = wt;
        const RecoveryResult r = recover(pr);
        const double res = std::abs(r.w_hat(7) - noisy(7));
        CHECK(res <= prev + 1e-9);
        prev = res;
    }
}

TEST_CASE("assembled objective equals the directly evaluated cost") {
    LtiModel f(10);
    RecoveryTerms t;
    t.known_idx = IndexSet::unite(IndexSet::samples(2, 0, 2), IndexSet::samples(2, 8, 2));
    t.known_vals = fixtures::random_matrix(8, 1, f.rng);
    t.weights.W = VectorXd::LinSpaced(8, 0.5, 2.0);
    t.weights.R = VectorXd::LinSpaced(20, 1.0, 3.0);
    t.lambda = 0.3;
    t.mu = 1.7;
    t.sigma = 0.9;
    t.w_ref = VectorXd(fixtures::random_matrix(20, 1, f.rng));
    t.D = build_total_variation_operator(2, 10, {1});
    const CompositeQP qp = assemble_recovery_qp(f.H, t);
    for (int k = 0; k < 5; ++k) {
        const VectorXd g = fixtures::random_matrix(f.H.cols(), 1, f.rng);
        const double direct = recovery_cost(f.H, t, g);
        CHECK(qp.objective(g) == doctest::Approx(direct).epsilon(1e-10));
    }
    RecoveryTerms plain;
    plain.known_idx = t.known_idx;
    plain.known_vals = t.known_vals;
    plain.lambda = 0.1;
    const CompositeQP lasso = assemble_recovery_qp(f.H, plain);
    const MatrixXd HI = truncate(f.H.M, plain.known_idx);
    CHECK((lasso.P - 2 * HI.transpose() * HI).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK_THROWS_AS(assemble_recovery_qp(f.H, [] {
                        RecoveryTerms b;
                        b.known_idx = IndexSet({0, 1});
                        b.known_vals = VectorXd::Zero(3);
                        return b;
                    }()),
                    DimensionMismatch);
}

TEST_CASE("square invertible model gives H^-1 w") {
    std::mt19937_64 rng(9);
    BehaviorModel H;
    H.M = fixtures::random_matrix(6, 6, rng) + 4 * MatrixXd::Identity(6, 6);
    H.L = 3;
    H.q = 2;
    H.m = 1;
    H.channel_names = {"u", "y"};
    const VectorXd w = fixtures::random_matrix(6, 1, rng);
    RecoveryProblem pr;
    pr.model = &H;
    pr.known_idx = IndexSet::all(6);
    pr.known_vals = w;
    const RecoveryResult r = recover(pr);
    CHECK((r.g - H.M.lu().solve(w)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("total variation operator") {
    const auto D = build_total_variation_operator(2, 5, {1});
    CHECK(D.rows() == 6);
    VectorXd c = VectorXd::Zero(10);
    for (Index i = 0; i < 5; ++i) c(2 * i + 1) = 3.0;
    VectorXd dc = D * c;
    CHECK(dc(0) == 3.0);
    CHECK(dc(5) == -3.0);
    CHECK(dc.segment(1, 4).isZero(0.0));
    VectorXd ramp = VectorXd::Zero(10);
    for (Index i = 0; i < 5; ++i) ramp(2 * i + 1) = 0.5 * static_cast<double>(i + 1);
    dc = D * ramp;
    CHECK(dc(0) == 0.5);
    for (Index k = 1; k < 5; ++k) CHECK(dc(k) == doctest::Approx(0.5));
    CHECK(dc(5) == -2.5);

    std::mt19937_64 rng(10);
    const VectorXd w = fixtures::random_matrix(10, 1, rng);
    double direct = w(1) * w(1) + w(9) * w(9);
    for (Index i = 1; i < 5; ++i) direct += std::pow(w(2 * i + 1) - w(2 * i - 1), 2);
    CHECK((D * w).squaredNorm() == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("nonparametric simulation") {
    LtiModel f(20);
    const IndexSet known = simulation_known_index(2, 1, 20, 4);
    CHECK(known.size() == 8 + 16);
    SimulationSpec zero;
    zero.n_ini = 4;
    zero.initial = VectorXd::Zero(8);
    zero.inputs = VectorXd::Zero(16);
    const SimulationResult z = nonparametric_simulate(f.H, zero, 0.0);
    CHECK(z.w_hat.data.cwiseAbs().maxCoeff() <= 1e-6 + 1e-7);

    NonparametricSimulator sim(f.H, 4, 0.0);
    for (int k = 0; k < 5; ++k) {
        const Trajectory w = f.sys.random(20, f.rng);
        const SimulationResult r = sim.run(simulation_spec_from(w, 4));
        CHECK((r.w_hat.channel(1) - w.channel(1)).cwiseAbs().maxCoeff() <= 1e-5);
        CHECK((r.w_hat.channel(0) - w.channel(0)).cwiseAbs().maxCoeff() <= 1e-6 + 1e-7);
    }
    SimulationSpec bad = zero;
    bad.inputs = VectorXd::Zero(3);
    CHECK_THROWS_AS(sim.run(bad), DimensionMismatch);
}

TEST_CASE("inconsistent box is infeasible") {
    // a model spanning only the zero input cannot match a nonzero input
    BehaviorModel H;
    H.M = MatrixXd::Zero(8, 3);
    H.M(1, 0) = 1.0;
    H.L = 4;
    H.q = 2;
    H.m = 1;
    H.channel_names = {"u", "y"};
    SimulationSpec s;
    s.n_ini = 1;
    s.initial = VectorXd::Zero(2);
    s.inputs = VectorXd::Ones(3);
    CHECK_THROWS_AS(nonparametric_simulate(H, s, 0.0), Infeasible);
}

TEST_CASE("reference trajectory and terms") {
    BehaviorModel H;
    H.L = 30;
    H.q = 5;
    H.m = 1;
    H.channel_names = acceleration_channel_names();
    H.M = MatrixXd::Zero(150, 4);
    TrajectoryGenSpec s;
    s.L = 30;
    s.n_given = 5;
    const VectorXd ref = reference_trajectory(H, s);
    CHECK(ref(3) == s.theta4_start);
    CHECK(ref(5 * 4 + 3) == s.theta4_start);
    CHECK(ref(5 * 5 + 3) == s.theta4_target);
    CHECK(ref(5 * 29 + 4) == 0.0);
    const RecoveryTerms t = trajectory_terms(H, s);
    CHECK(t.known_idx.size() == 2 * 5 * 5);
    CHECK(t.eq_idx->indices() == std::vector<Index>{0, 1, 2, 3, 4, 145, 146, 147, 148, 149});
    // sway channels bounded on every sample; input unbounded in this layout only if requested
    CHECK(t.box->idx.size() == 30 * 3);
    s.n_pinned = 2;
    const RecoveryTerms t2 = trajectory_terms(H, s);
    REQUIRE(t2.eq_idx->size() == 20);
    CHECK(t2.eq_idx->indices()[9] == 9);
    CHECK(t2.eq_idx->indices()[10] == 140);
    CHECK(t2.eq_vals(5 + 3) == s.theta4_start);
    CHECK(t2.eq_vals(10 + 3) == s.theta4_target);
    s.n_pinned = 15;
    CHECK_THROWS_AS(trajectory_terms(H, s), ConfigError);
    s.n_pinned = 1;
    s.n_given = 15;
    CHECK_THROWS_AS(trajectory_terms(H, s), ConfigError);
}

TEST_CASE("indirect method") {
    LtiModel f(20, 400);
    const IndexSet known = IndexSet::unite(IndexSet::samples(2, 0, 3), IndexSet::samples(2, 17, 3));
    const Trajectory w = f.sys.random(20, f.rng);
    const VectorXd wk = truncate(w.data, known);
    const VectorXd ref = fixtures::random_matrix(40, 1, f.rng);
    const IndirectResult r = indirect_generate(f.H, known, wk, ref);
    CHECK(r.known_residual <= 1e-8);
    CHECK(r.orthogonality_residual <= 1e-8);
    // projection is the closest behavior point: random affine moves do worse
    for (int k = 0; k < 5; ++k) {
        const VectorXd step = r.basis * fixtures::random_matrix(r.basis.cols(), 1, f.rng);
        CHECK((r.w_hat - ref).norm() <= (r.w_hat + 0.1 * step - ref).norm());
    }
    CHECK_THROWS_AS(indirect_generate(f.H, IndexSet::all(40), w.data, ref), DegenerateNullspace);
}

}
