#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace ddcrane {

/// Sum of sines with normally distributed frequencies.
struct SumOfSinesSpec {
    int n_sines = 4;
    double freq_mean = 0.8;  // rad/s
    double freq_std = 0.3;   // rad/s
    double duration = 60.0;  // s
    double rate = 20.0;      // Hz
    double amplitude_limit = 0.6;
    double taper_duration = 1.0;  // s, raised cosine at each end
    std::uint64_t seed = 0;

    void validate() const;
};

/// Samples sin(f_i t) summed over the drawn frequencies on the grid t_k = k/rate,
/// tapered at both ends, then scaled to peak amplitude_limit.
Eigen::VectorXd generate_excitation(const SumOfSinesSpec& spec);

/// Frequencies used by generate_excitation for this spec (first accepted draw).
Eigen::VectorXd draw_frequencies(const SumOfSinesSpec& spec);

/// Forward difference times rate; the last sample repeats the previous value.
Eigen::VectorXd differentiate_to_acceleration(const Eigen::VectorXd& velocity, double rate);

/// Inverse of differentiate_to_acceleration given the first velocity sample.
Eigen::VectorXd integrate_acceleration(const Eigen::VectorXd& acceleration, double rate, double v0);

}  // namespace ddcrane
