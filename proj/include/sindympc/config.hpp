#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "sindympc/dynamics.hpp"
#include "sindympc/mpc.hpp"
#include "sindympc/signals.hpp"
#include "sindympc/sysid.hpp"

namespace sindympc {

/**
 * @brief Every setting of the identify-then-control pipeline in one place.
 *
 * Stored as JSON. Signal seeds that the file leaves out follow the global
 * seed: training uses `seed`, the held-out signal `seed + 1`.
 */
struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string   output_dir = "out";

    SeirParams      plant;
    Eigen::VectorXd x0 = seir_default_x0();

    signals::SignalSpec   training;
    sysid::DerivativeMode derivatives = sysid::DerivativeMode::exact;

    int    sindy_order    = 3;
    double sindy_lambda   = 0.1;
    int    sindy_max_iter = 10;

    signals::SignalSpec validation;
    double replay_duration  = 300.0; ///< days simulated when replaying the training signal
    double divergence_bound = 2.0;   ///< max |x| accepted in validation runs (twice the population)

    mpc::MpcConfig mpc = mpc::MpcConfig::seir_benchmark(true);
    bool           constrained = false; ///< apply mpc.state_constraint in `mpc` runs

    /// @throws InvalidSpec
    void validate() const;
    /// MPC settings with or without the state constraint.
    [[nodiscard]] mpc::MpcConfig mpc_settings(bool with_constraint) const;
    /// Component reported as "peak"; the constrained one, else the heaviest weighted state.
    [[nodiscard]] Eigen::Index monitored_component() const;
    /// Overrides the global seed and re-derives both signal seeds.
    void reseed(std::uint64_t new_seed);
};

[[nodiscard]] std::string      config_to_json(const ExperimentConfig& cfg);
/// @throws InvalidSpec for malformed or out-of-range values and unknown keys.
[[nodiscard]] ExperimentConfig config_from_json(const std::string& text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);
void                           save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

} // namespace sindympc
