// sindympc <generate|fit|validate|mpc|compare> --config PATH [overrides]
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sindympc/commands.hpp"
#include "sindympc/errors.hpp"

namespace {

struct Overrides {
    std::optional<double>        lambda;
    std::optional<int>           order;
    std::optional<std::uint64_t> seed;
    std::optional<std::string>   out;
    bool                         constrained = false;
};

} // namespace

int main(int argc, char** argv) {
    using namespace sindympc;

    CLI::App app{"Sparse identification and model predictive control pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides   ov;
    std::string method = "sindy";
    std::string model;
    std::string signal = "heldout";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--seed", ov.seed, "Override the global seed");
        cmd->add_option("--out", ov.out, "Override the output directory");
        cmd->add_option("--lambda", ov.lambda, "Override the sparsity threshold");
        cmd->add_option("--order", ov.order, "Override the library order");
    };

    auto* generate = app.add_subcommand("generate", "Simulate training data");
    auto* fit      = app.add_subcommand("fit", "Identify a model from the training data");
    auto* validate = app.add_subcommand("validate", "Compare model predictions with the true plant");
    auto* run_mpc  = app.add_subcommand("mpc", "Closed-loop control with an identified model");
    auto* compare  = app.add_subcommand("compare", "Run the full pipeline and write summary.csv");
    for (auto* cmd : {generate, fit, validate, run_mpc, compare}) {
        add_common(cmd);
    }
    for (auto* cmd : {fit, validate, run_mpc}) {
        cmd->add_option("--method", method, "Model type")->check(CLI::IsMember({"sindy", "dmdc"}));
    }
    for (auto* cmd : {validate, run_mpc}) {
        cmd->add_option("--model", model, "Model file (default <out>/<method>_model.json)");
    }
    validate->add_option("--signal", signal, "Test input")->check(CLI::IsMember({"heldout", "training"}));
    run_mpc->add_flag("--constrained", ov.constrained, "Enforce the configured state constraint");

    CLI11_PARSE(app, argc, argv);

    Console console{std::cout, std::cerr};
    try {
        ExperimentConfig cfg = load_config(config_path);
        if (ov.seed) cfg.reseed(*ov.seed);
        if (ov.out) cfg.output_dir = *ov.out;
        if (ov.lambda) cfg.sindy_lambda = *ov.lambda;
        if (ov.order) cfg.sindy_order = *ov.order;
        if (ov.constrained) cfg.constrained = true;
        cfg.validate();

        CommandOptions options;
        options.method = method_from_string(method);
        if (!model.empty()) options.model = model;
        options.signal = signal == "training" ? pipeline::ValidationSignal::training_replay
                                              : pipeline::ValidationSignal::held_out;

        if (generate->parsed()) return cmd_generate(cfg, console);
        if (fit->parsed()) return cmd_fit(cfg, options, console);
        if (validate->parsed()) return cmd_validate(cfg, options, console);
        if (run_mpc->parsed()) return cmd_mpc(cfg, options, console);
        return cmd_compare(cfg, console);
    } catch (const InvalidSpec& e) {
        std::cerr << "error: invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
