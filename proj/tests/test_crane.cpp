#include <array>
#include <map>
#include <random>

#include "doctest.h"

#include "ddcrane/crane.hpp"

using namespace ddcrane;
using Eigen::VectorXd;

namespace {

// Polynomials in the six state variables, used to form Lie brackets exactly.
using Mono = std::array<int, 6>;
using Poly = std::map<Mono, double>;
using Field = std::array<Poly, 6>;

Poly operator+(Poly a, const Poly& b) {
    for (const auto& [m, c] : b) a[m] += c;
    return a;
}
Poly operator*(const Poly& a, const Poly& b) {
    Poly r;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) {
            Mono m;
            for (int i = 0; i < 6; ++i) m[static_cast<std::size_t>(i)] = ma[static_cast<std::size_t>(i)] + mb[static_cast<std::size_t>(i)];
            r[m] += ca * cb;
        }
    return r;
}
Poly scale(Poly a, double s) {
    for (auto& [m, c] : a) c *= s;
    return a;
}
Poly var(int i, double c = 1.0) {
    Mono m{};
    m[static_cast<std::size_t>(i)] = 1;
    return {{m, c}};
}
Poly constant(double c) { return {{Mono{}, c}}; }
Poly diff(const Poly& p, int i) {
    Poly r;
    for (const auto& [m, c] : p) {
        const int e = m[static_cast<std::size_t>(i)];
        if (e == 0) continue;
        Mono d = m;
        d[static_cast<std::size_t>(i)] = e - 1;
        r[d] += c * e;
    }
    return r;
}
double eval(const Poly& p, const CraneState& x) {
    double s = 0.0;
    for (const auto& [m, c] : p) {
        double t = c;
        for (int i = 0; i < 6; ++i) t *= std::pow(x(i), m[static_cast<std::size_t>(i)]);
        s += t;
    }
    return s;
}
// [F, V] = DV F - DF V
Field bracket(const Field& F, const Field& V) {
    Field r;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
            r[ui] = r[ui] + diff(V[ui], j) * F[uj] + scale(diff(F[ui], j) * V[uj], -1.0);
        }
    return r;
}

}  // namespace

TEST_SUITE("crane") {

TEST_CASE("derived constants") {
    const CraneParams p;
    CHECK(p.alpha1() == doctest::Approx(std::sqrt(9.81)).epsilon(1e-15));
    CHECK(p.alpha2() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CraneParams bad;
    bad.cable_length = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("state derivative hand evaluations") {
    const CraneParams p;
    CHECK(state_derivative<double>(CraneState::Zero(), 0.0, p).isZero(0.0));
    CraneState x = CraneState::Zero();
    x(state::theta1) = 0.1;
    CraneState d = state_derivative<double>(x, 0.0, p);
    CHECK(d(state::dtheta1) == doctest::Approx(-0.981).epsilon(1e-14));
    d(state::dtheta1) = 0.0;
    CHECK(d.isZero(0.0));

    x.setZero();
    x(state::dtheta2) = 0.2;
    x(state::dtheta4) = 0.3;
    d = state_derivative<double>(x, 0.0, p);
    CHECK(d(state::dtheta1) == doctest::Approx(std::sqrt(2.0) * 0.09 + 0.12).epsilon(1e-14));
    CHECK(d(state::dtheta2) == 0.0);
    CHECK(d(state::dtheta4) == 0.0);
}

TEST_CASE("simulate equilibrium stays at zero") {
    const Trajectory t = simulate(CraneState::Zero(), VectorXd::Zero(100), CraneParams{});
    CHECK(t.samples() == 100);
    CHECK(t.q == 5);
    CHECK(t.channel_names == acceleration_channel_names());
    CHECK(t.data.isZero(0.0));
}

TEST_CASE("boom channel is an exact double integrator") {
    const VectorXd u = VectorXd::Constant(41, 0.1);
    const Trajectory t = simulate(CraneState::Zero(), u, CraneParams{});
    CHECK(t(20, 4) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::abs(t(20, 3) - 0.05) <= 1e-9);
    // analytic double integrator of the zero-order-hold input
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    VectorXd w(200);
    for (auto& v : w) v = 0.2 * nd(rng);
    const Trajectory r = simulate(CraneState::Zero(), w, CraneParams{});
    double th = 0.0, om = 0.0, err = 0.0;
    for (Index k = 0; k < w.size(); ++k) {
        err = std::max({err, std::abs(r(k, 3) - th), std::abs(r(k, 4) - om)});
        th += om / 20.0 + 0.5 * w(k) / 400.0;
        om += w(k) / 20.0;
    }
    CHECK(err <= 1e-9);
}

TEST_CASE("free pendulum matches the harmonic oscillator") {
    CraneState x0 = CraneState::Zero();
    x0(state::theta1) = 0.05;
    const CraneParams p;
    const Trajectory t = simulate(x0, VectorXd::Zero(101), p);
    double err = 0.0;
    for (Index k = 0; k < t.samples(); ++k)
        err = std::max(err, std::abs(t(k, 1) - 0.05 * std::cos(p.alpha1() * k / 20.0)));
    CHECK(err <= 1e-6);
}

TEST_CASE("amplitude does not grow over 25 s") {
    CraneState x0 = CraneState::Zero();
    x0(state::theta1) = 0.03;
    x0(state::theta2) = -0.02;
    const Trajectory t = simulate(x0, VectorXd::Zero(500), CraneParams{});
    CHECK(t.channel(1).cwiseAbs().maxCoeff() <= 0.03 + 1e-6);
    CHECK(t.channel(2).cwiseAbs().maxCoeff() <= 0.02 + 1e-6);
}

TEST_CASE("noise touches outputs only and is seeded") {
    VectorXd u = VectorXd::Constant(50, 0.05);
    const Trajectory clean = simulate(CraneState::Zero(), u, CraneParams{});
    const Trajectory a = simulate(CraneState::Zero(), u, CraneParams{}, NoiseSpec{0.002, 0.005, 9});
    const Trajectory b = simulate(CraneState::Zero(), u, CraneParams{}, NoiseSpec{0.002, 0.005, 9});
    const Trajectory c = simulate(CraneState::Zero(), u, CraneParams{}, NoiseSpec{0.002, 0.005, 10});
    CHECK(a.data == b.data);
    CHECK(a.data != c.data);
    CHECK(a.channel(0) == clean.channel(0));
    CHECK((a.channel(1) - clean.channel(1)).norm() > 0);
}

TEST_CASE("divergence is reported") {
    CraneState x0 = CraneState::Zero();
    x0(state::dtheta4) = 1e7;
    CHECK_THROWS_AS(simulate(x0, VectorXd::Zero(10), CraneParams{}), NonFiniteState);
}

TEST_CASE("channel layout conversions round trip") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    VectorXd u(60);
    for (auto& v : u) v = nd(rng);
    const Trajectory a = simulate(CraneState::Zero(), u, CraneParams{});
    const Trajectory v = to_velocity_input(a);
    CHECK(v.q == 4);
    CHECK(v.m == 1);
    CHECK(v.channel_names == velocity_channel_names());
    CHECK(v.channel(0) == a.channel(4));
    const Trajectory back = to_acceleration_input(v);
    CHECK(back.q == 5);
    CHECK((back.samples_view().bottomRows(4) - a.samples_view().bottomRows(4)).isZero(0.0));
}

TEST_CASE("first controllability column at rest") {
    const CraneParams p;
    const auto Q = controllability_matrix<double>(CraneState::Zero(), p);
    Eigen::Matrix<double, 6, 1> c;
    c << 0, 0, 0, -p.alpha2(), 0, 1;
    CHECK((Q.col(0) - c).isZero(0.0));
}

TEST_CASE("closed form equals the Lie brackets of the vector fields") {
    const CraneParams p;
    const double a1sq = p.gravity / p.cable_length, a2 = p.alpha2();
    using namespace state;
    Field F, b;
    F[theta1] = var(dtheta1);
    F[theta2] = var(dtheta2);
    F[theta4] = var(dtheta4);
    F[dtheta1] = var(theta1, -a1sq) + scale(var(dtheta4) * var(dtheta4), a2) + scale(var(dtheta2) * var(dtheta4), 2.0);
    F[dtheta2] = var(theta2, -a1sq);
    b[dtheta2] = constant(-a2);
    b[dtheta4] = constant(1.0);
    std::vector<Field> cols{b};
    for (int k = 1; k < 6; ++k) cols.push_back(bracket(F, cols.back()));
    // printed row order (theta1, dtheta1, theta2, dtheta2, theta4, dtheta4)
    const int rows[6] = {theta1, dtheta1, theta2, dtheta2, theta4, dtheta4};
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ud(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        CraneState x;
        for (int i = 0; i < 6; ++i) x(i) = ud(rng);
        const auto Q = controllability_matrix(x, p);
        double err = 0.0;
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c)
                err = std::max(err, std::abs(Q(r, c) - eval(cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(rows[r])], x)));
        CHECK(err <= 1e-9 * Q.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("determinant formula") {
    CraneParams unit;
    unit.gravity = 1.0;
    unit.cable_length = 1.0;
    unit.boom_length = 1.0;
    unit.luffing_angle = M_PI / 2;
    CraneState x = CraneState::Zero();
    x(state::theta2) = 1.0;
    CHECK(det_formula(x, unit) == doctest::Approx(72.0).epsilon(1e-12));
    x(state::theta2) = 0.0;
    x(state::theta1) = 0.7;
    x(state::dtheta1) = -0.3;
    CHECK(det_formula(x, CraneParams{}) == 0.0);
    CHECK(std::abs(controllability_matrix(x, CraneParams{}).determinant()) <= 1e-10);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ud(-1, 1);
    int singular = 0;
    for (int k = 0; k < 100; ++k) {
        for (int i = 0; i < 6; ++i) x(i) = ud(rng);
        const double f = det_formula(x, CraneParams{});
        const double n = controllability_matrix(x, CraneParams{}).determinant();
        CHECK(std::abs(n - f) <= 1e-8 * std::abs(f));
        if (std::abs(f) < 1e-10) ++singular;
    }
    CHECK(singular == 0);
}

}
