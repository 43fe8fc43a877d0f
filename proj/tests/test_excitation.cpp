#include "doctest.h"

#include "ddcrane/excitation.hpp"
#include "ddcrane/errors.hpp"

using namespace ddcrane;
using Eigen::VectorXd;

TEST_SUITE("excitation") {

TEST_CASE("single deterministic sine without taper") {
    SumOfSinesSpec s;
    s.n_sines = 1;
    s.freq_mean = 1.0;
    s.freq_std = 0.0;
    s.duration = 10.0;
    s.taper_duration = 0.0;
    const VectorXd v = generate_excitation(s);
    VectorXd raw(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) raw(k) = std::sin(k / 20.0);
    CHECK((v - raw * (0.6 / raw.cwiseAbs().maxCoeff())).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(v.cwiseAbs().maxCoeff() == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("peak and endpoints for random specs") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SumOfSinesSpec s;
        s.seed = seed;
        s.duration = 30.0 + static_cast<double>(seed);
        const VectorXd v = generate_excitation(s);
        CHECK(v.size() == static_cast<Eigen::Index>(std::llround(s.duration * 20)));
        CHECK(std::abs(v.cwiseAbs().maxCoeff() - 0.6) <= 1e-12);
        CHECK(v(0) == 0.0);
        CHECK(v(v.size() - 1) == 0.0);
    }
}

TEST_CASE("determinism and seed sensitivity") {
    SumOfSinesSpec a, b;
    a.seed = b.seed = 42;
    CHECK(generate_excitation(a) == generate_excitation(b));
    b.seed = 43;
    CHECK(draw_frequencies(a) != draw_frequencies(b));
}

TEST_CASE("smoothness of the untapered signal") {
    SumOfSinesSpec s;
    s.seed = 7;
    s.taper_duration = 0.0;
    const VectorXd v = generate_excitation(s);
    const VectorXd f = draw_frequencies(s);
    const Eigen::Index n = v.size();
    const VectorXd d2 = v.segment(2, n - 2) - 2 * v.segment(1, n - 2) + v.head(n - 2);
    const double bound = f.array().square().sum() * 0.6 / (20.0 * 20.0) * 1.1;
    CHECK(d2.cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("spec validation") {
    SumOfSinesSpec s;
    s.duration = 0.0;
    CHECK_THROWS_AS(generate_excitation(s), ConfigError);
    s = {};
    s.taper_duration = 40.0;
    CHECK_THROWS_AS(generate_excitation(s), ConfigError);
    s = {};
    s.n_sines = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("degenerate draws are rejected") {
    SumOfSinesSpec s;
    s.n_sines = 1;
    s.freq_mean = 0.0;
    s.freq_std = 0.0;
    s.taper_duration = 0.0;
    CHECK_THROWS_AS(generate_excitation(s), DegenerateSignal);
}

TEST_CASE("differentiation") {
    CHECK(differentiate_to_acceleration(VectorXd::Constant(10, 0.3), 20.0).isZero(0.0));
    VectorXd ramp(8);
    for (Eigen::Index k = 0; k < 8; ++k) ramp(k) = 0.05 * static_cast<double>(k);
    const VectorXd a = differentiate_to_acceleration(ramp, 20.0);
    CHECK((a - VectorXd::Ones(8)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(differentiate_to_acceleration(VectorXd::Zero(1), 20.0), TooShort);

    SumOfSinesSpec s;
    s.seed = 3;
    const VectorXd v = generate_excitation(s);
    const VectorXd back = integrate_acceleration(differentiate_to_acceleration(v, 20.0), 20.0, v(0));
    CHECK((back - v).cwiseAbs().maxCoeff() <= 1e-9);
}

}
