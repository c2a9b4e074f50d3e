#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace sindympc::signals {

enum class Kind { prbs, sinusoid_sum, step, impulse, constant };

[[nodiscard]] std::string_view to_string(Kind kind);
[[nodiscard]] Kind             kind_from_string(std::string_view name);

/**
 * Forcing-signal description. Which fields matter depends on `kind`:
 *
 *  - prbs:         levels (one drawn per `hold`-day window), seed
 *  - sinusoid_sum: offset + sum_i amplitudes[i] * sin(frequencies[i] * t + phases[i])
 *  - step:         levels[j] after the j-th entry of switch_times (levels.size() == switch_times.size() + 1)
 *  - impulse:      offset everywhere, offset + amplitudes[j] on the sample nearest switch_times[j]
 *  - constant:     levels[0]
 */
struct SignalSpec {
    Kind                kind = Kind::prbs;
    std::vector<double> levels{0.15, 0.5};
    std::vector<double> amplitudes;
    std::vector<double> frequencies; ///< rad/day
    std::vector<double> phases;
    std::vector<double> switch_times;
    double              offset   = 0.0;
    double              hold     = 7.0;
    std::uint64_t       seed     = 0;
    double              duration = 100.0;
    double              dt       = 0.1;

    /// @throws InvalidSpec
    void validate() const;
    /// duration/dt + 1
    [[nodiscard]] std::size_t sample_count() const;

    bool operator==(const SignalSpec&) const = default;
};

/// SplitMix64 finalizer applied to `state` advanced by one golden-ratio increment.
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t state) noexcept;

/// Samples at t = i*dt, i = 0 .. duration/dt. Bit-identical for equal specs.
[[nodiscard]] Eigen::VectorXd generate(const SignalSpec& spec);

} // namespace sindympc::signals
