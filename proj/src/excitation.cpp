#include "ddcrane/excitation.hpp"

#include <cmath>
#include <random>

#include "ddcrane/errors.hpp"

namespace ddcrane {

void SumOfSinesSpec::validate() const {
    if (n_sines < 1) throw ConfigError("n_sines must be at least 1");
    if (!(freq_std >= 0)) throw ConfigError("freq_std must be nonnegative");
    if (!(duration > 0)) throw ConfigError("duration must be positive");
    if (!(rate > 0)) throw ConfigError("rate must be positive");
    if (!(amplitude_limit > 0)) throw ConfigError("amplitude_limit must be positive");
    if (!(taper_duration >= 0) || 2 * taper_duration > duration)
        throw ConfigError("taper must satisfy 0 <= 2*taper_duration <= duration");
}

namespace {

struct Draw {
    Eigen::VectorXd freqs;
    Eigen::VectorXd raw;
};

Draw draw(const SumOfSinesSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(std::llround(spec.duration * spec.rate));
    if (n < 2) throw TooShort("excitation needs at least two samples");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> dist(spec.freq_mean, spec.freq_std);
    for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::VectorXd f(spec.n_sines);
        for (auto& v : f) v = spec.freq_std > 0 ? dist(rng) : spec.freq_mean;
        Eigen::VectorXd raw = Eigen::VectorXd::Zero(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) / spec.rate;
            for (Eigen::Index i = 0; i < f.size(); ++i) raw(k) += std::sin(f(i) * t);
        }
        const double peak = raw.cwiseAbs().maxCoeff();
        if (peak > 1e-12 * spec.n_sines) return {f, raw};
    }
    throw DegenerateSignal("sum of sines vanished on the sample grid");
}

}  // namespace

Eigen::VectorXd draw_frequencies(const SumOfSinesSpec& spec) { return draw(spec).freqs; }

Eigen::VectorXd generate_excitation(const SumOfSinesSpec& spec) {
    Draw d = draw(spec);
    Eigen::VectorXd v = d.raw;
    const auto nt = static_cast<Eigen::Index>(std::llround(spec.taper_duration * spec.rate));
    const Eigen::Index n = v.size();
    if (nt > 0) {
        for (Eigen::Index k = 0; k <= nt && k < n; ++k) {
            const double r = 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(k) / nt);
            v(k) *= r;
            v(n - 1 - k) *= r;
        }
        v(0) = 0.0;
        v(n - 1) = 0.0;
    }
    // Scaling after the taper keeps the peak exactly at the limit even when
    // the raw maximum falls inside a ramp.
    const double peak = v.cwiseAbs().maxCoeff();
    if (!(peak > 0)) throw DegenerateSignal("tapered excitation vanished");
    return v * (spec.amplitude_limit / peak);
}

Eigen::VectorXd differentiate_to_acceleration(const Eigen::VectorXd& velocity, double rate) {
    const Eigen::Index n = velocity.size();
    if (n < 2) throw TooShort("differentiation needs at least two samples");
    Eigen::VectorXd a(n);
    a.head(n - 1) = (velocity.tail(n - 1) - velocity.head(n - 1)) * rate;
    a(n - 1) = a(n - 2);
    return a;
}

Eigen::VectorXd integrate_acceleration(const Eigen::VectorXd& acceleration, double rate, double v0) {
    Eigen::VectorXd v(acceleration.size());
    if (v.size() == 0) return v;
    v(0) = v0;
    for (Eigen::Index k = 1; k < v.size(); ++k) v(k) = v(k - 1) + acceleration(k - 1) / rate;
    return v;
}

}  // namespace ddcrane
