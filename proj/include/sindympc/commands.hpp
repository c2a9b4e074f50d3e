#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sindympc/config.hpp"
#include "sindympc/io.hpp"
#include "sindympc/mpc.hpp"

namespace sindympc {

// Pipeline stages as plain functions; the cmd_* wrappers add file I/O and console output.
namespace pipeline {

struct TrainingData {
    Trajectory      trajectory;
    Eigen::MatrixXd derivatives;
};

[[nodiscard]] TrainingData generate_training(const ExperimentConfig& cfg);
[[nodiscard]] sysid::SindyFit            fit_sindy_model(const ExperimentConfig& cfg, const TrainingData& data);
[[nodiscard]] sysid::LinearDiscreteModel fit_dmdc_model(const TrainingData& data);

enum class ValidationSignal { held_out, training_replay };

struct ValidationReport {
    Trajectory                     truth;
    Trajectory                     prediction; ///< a prefix of truth's grid when the model diverged
    bool                           diverged = false;
    double                         diverged_time = 0.0;
    std::vector<sysid::RmseReport> rmse;       ///< one per state
};

[[nodiscard]] ValidationReport validate_model(const ExperimentConfig& cfg, const Predictor& model,
                                              ValidationSignal signal);

/// Plant under constant nominal transmission (no intervention) over the MPC duration.
[[nodiscard]] Trajectory      run_uncontrolled(const ExperimentConfig& cfg);
[[nodiscard]] mpc::MpcResult  run_mpc(const ExperimentConfig& cfg, const Predictor& model, bool constrained);

struct SummaryRow {
    std::string variant;
    double      peak       = 0.0;
    double      cumulative = 0.0;
    double      effort     = 0.0; ///< relative to the nominal transmission rate
    bool        feasible   = true;
};

/// All solver steps feasible and the plant never diverged.
[[nodiscard]] bool       run_feasible(const mpc::MpcResult& result);
[[nodiscard]] SummaryRow summarize(const std::string& variant, const ExperimentConfig& cfg, const mpc::MpcResult& result);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows, const std::string& component_name);

} // namespace pipeline

enum class Method { sindy, dmdc };

[[nodiscard]] Method      method_from_string(const std::string& name);
[[nodiscard]] std::string to_string(Method method);

struct CommandOptions {
    Method                               method = Method::sindy;
    std::optional<std::filesystem::path> model;  ///< default: <output_dir>/<method>_model.json
    pipeline::ValidationSignal           signal = pipeline::ValidationSignal::held_out;
};

struct Console {
    std::ostream& out;
    std::ostream& err;
};

// Each returns the process exit code; failures throw.
int cmd_generate(const ExperimentConfig& cfg, Console console);
int cmd_fit(const ExperimentConfig& cfg, const CommandOptions& options, Console console);
int cmd_validate(const ExperimentConfig& cfg, const CommandOptions& options, Console console);
int cmd_mpc(const ExperimentConfig& cfg, const CommandOptions& options, Console console);
int cmd_compare(const ExperimentConfig& cfg, Console console);

} // namespace sindympc
