#include "sindympc/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "sindympc/errors.hpp"
#include "sindympc/features.hpp"

namespace sindympc {

namespace fs = std::filesystem;

namespace pipeline {

namespace {

std::size_t steps_of(const signals::SignalSpec& spec) { return spec.sample_count() - 1; }

Trajectory simulate_plant(const ExperimentConfig& cfg, const Eigen::VectorXd& signal, double dt) {
    return integrate_rk4(seir_system(cfg.plant), cfg.x0, signal, dt, static_cast<std::size_t>(signal.size() - 1));
}

} // namespace

TrainingData generate_training(const ExperimentConfig& cfg) {
    const Eigen::VectorXd signal = signals::generate(cfg.training);
    Trajectory            traj   = simulate_plant(cfg, signal, cfg.training.dt);
    Eigen::MatrixXd       deriv  = cfg.derivatives == sysid::DerivativeMode::exact
                                       ? exact_derivatives(seir_system(cfg.plant), traj)
                                       : central_differences(traj);
    return {std::move(traj), std::move(deriv)};
}

sysid::SindyFit fit_sindy_model(const ExperimentConfig& cfg, const TrainingData& data) {
    return sysid::fit_sindy(data.trajectory, data.derivatives, cfg.sindy_order, cfg.sindy_lambda, cfg.sindy_max_iter);
}

sysid::LinearDiscreteModel fit_dmdc_model(const TrainingData& data) { return sysid::fit_dmdc(data.trajectory); }

ValidationReport validate_model(const ExperimentConfig& cfg, const Predictor& model, ValidationSignal signal) {
    signals::SignalSpec spec = cfg.validation;
    if (signal == ValidationSignal::training_replay) {
        spec          = cfg.training;
        spec.duration = cfg.replay_duration;
        spec.validate();
    }
    const Eigen::VectorXd input = signals::generate(spec);

    ValidationReport report;
    report.truth = simulate_plant(cfg, input, spec.dt);
    const Simulation sim = model.simulate(cfg.x0, input, spec.dt, steps_of(spec), 0.0, cfg.divergence_bound);
    report.diverged      = sim.diverged();
    report.diverged_time = sim.diverged_time;
    report.prediction    = sim.trajectory;
    for (Eigen::Index k = 0; k < report.truth.state_dim(); ++k) {
        report.rmse.push_back(sysid::prediction_rmse(report.prediction, report.truth, k));
    }
    return report;
}

Trajectory run_uncontrolled(const ExperimentConfig& cfg) {
    const auto steps = static_cast<std::size_t>(std::llround(cfg.mpc.duration_days / cfg.mpc.inner_dt));
    return integrate_rk4(seir_system(cfg.plant), cfg.x0, Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(steps), 1, cfg.plant.beta0),
                         cfg.mpc.inner_dt, steps);
}

mpc::MpcResult run_mpc(const ExperimentConfig& cfg, const Predictor& model, bool constrained) {
    return mpc::run_closed_loop(seir_system(cfg.plant), model, cfg.x0, cfg.mpc_settings(constrained));
}

bool run_feasible(const mpc::MpcResult& result) {
    if (result.aborted) {
        return false;
    }
    for (const auto& s : result.steps) {
        if (!s.solution.feasible) {
            return false;
        }
    }
    return true;
}

SummaryRow summarize(const std::string& variant, const ExperimentConfig& cfg, const mpc::MpcResult& result) {
    const Eigen::Index c = cfg.monitored_component();
    return {variant, mpc::peak(result.closed_loop, c), mpc::cumulative(result.closed_loop, c),
            mpc::control_effort(result, Eigen::VectorXd::Constant(1, cfg.plant.beta0)), run_feasible(result)};
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows, const std::string& component_name) {
    out << "variant,peak_" << component_name << ",cumulative_" << component_name << ",control_effort,feasible\n";
    for (const auto& r : rows) {
        out << r.variant << ',' << io::format_double(r.peak) << ',' << io::format_double(r.cumulative) << ','
            << io::format_double(r.effort) << ',' << (r.feasible ? 1 : 0) << '\n';
    }
}

} // namespace pipeline

Method method_from_string(const std::string& name) {
    if (name == "sindy") {
        return Method::sindy;
    }
    if (name == "dmdc") {
        return Method::dmdc;
    }
    throw InvalidSpec("unknown method '" + name + "' (expected sindy or dmdc)");
}

std::string to_string(Method method) { return method == Method::sindy ? "sindy" : "dmdc"; }

namespace {

using pipeline::ValidationSignal;

const std::vector<std::string> kStateNames{"S", "E", "I", "R"};

fs::path out_dir(const ExperimentConfig& cfg) {
    fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw InvalidData("cannot create output directory " + dir.string());
    }
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InvalidData("cannot write " + path.string());
    }
    return out;
}

fs::path model_path(const ExperimentConfig& cfg, const CommandOptions& o) {
    return o.model ? *o.model : fs::path(cfg.output_dir) / (to_string(o.method) + "_model.json");
}

std::string run_tag(const std::string& model_name, bool constrained) {
    return model_name + (constrained ? "_constrained" : "");
}

pipeline::TrainingData read_training(const ExperimentConfig& cfg) {
    const fs::path dir = cfg.output_dir;
    if (!fs::exists(dir / "training.csv")) {
        throw InvalidData("missing " + (dir / "training.csv").string() + " (run generate first)");
    }
    Trajectory traj = io::trajectory_from_table(io::read_table(dir / "training.csv"), 4, 1);
    Eigen::MatrixXd deriv;
    if (fs::exists(dir / "derivatives.csv")) {
        const io::Table t = io::read_table(dir / "derivatives.csv");
        if (t.values.rows() != traj.rows() || t.values.cols() != 5) {
            throw InvalidData("derivatives.csv does not match training.csv");
        }
        deriv = t.values.rightCols(4);
    }
    return {std::move(traj), std::move(deriv)};
}

void write_generated(const ExperimentConfig& cfg, const pipeline::TrainingData& data, Console console) {
    const fs::path dir = out_dir(cfg);
    io::write_table(dir / "training.csv", io::trajectory_table(data.trajectory));
    io::write_table(dir / "derivatives.csv",
                    io::state_table(data.trajectory.times(), data.derivatives, {"dS", "dE", "dI", "dR"}));

    std::map<double, int> levels;
    for (Eigen::Index i = 0; i < data.trajectory.rows(); ++i) {
        ++levels[data.trajectory.inputs()(i, 0)];
    }
    console.out << "generate: " << data.trajectory.rows() << " rows, t = 0.." << data.trajectory.times()[data.trajectory.rows() - 1]
                << ", peak I = " << mpc::peak(data.trajectory, 2) << "\n  input levels:";
    for (const auto& [level, count] : levels) {
        console.out << ' ' << level << " x" << count;
    }
    console.out << "\n  wrote " << (dir / "training.csv").string() << ", " << (dir / "derivatives.csv").string() << '\n';
}

void write_fit(const ExperimentConfig& cfg, Method method, const pipeline::TrainingData& data, Console console) {
    const fs::path dir = out_dir(cfg);
    if (method == Method::sindy) {
        if (data.derivatives.rows() == 0) {
            throw InvalidData("missing derivatives.csv (run generate first)");
        }
        const sysid::SindyFit fit = pipeline::fit_sindy_model(cfg, data);
        io::save_model(dir / "sindy_model.json", fit.model);
        {
            auto out = open_out(dir / "sindy_report.csv");
            io::write_sparse_report(out, fit.model);
        }
        {
            auto out = open_out(dir / "sindy_library.csv");
            io::write_library_terms(out, fit.model.library, fit.model.names);
        }
        console.out << "fit sindy: order " << cfg.sindy_order << ", lambda " << cfg.sindy_lambda << ", "
                    << fit.model.active_terms() << " active terms of " << fit.model.library.size() << " ("
                    << *std::max_element(fit.regression.sweeps.begin(), fit.regression.sweeps.end()) << " sweeps max)\n";
        for (Eigen::Index k = 0; k < fit.model.xi.cols(); ++k) {
            console.out << "  d" << fit.model.names[static_cast<std::size_t>(k)] << "/dt =";
            bool any = false;
            for (Eigen::Index j = 0; j < fit.model.xi.rows(); ++j) {
                if (fit.model.xi(j, k) != 0.0) {
                    console.out << ' ' << (fit.model.xi(j, k) < 0 ? "- " : (any ? "+ " : ""))
                                << io::format_double(std::abs(fit.model.xi(j, k))) << ' '
                                << features::term_name(fit.model.library, j, fit.model.names);
                    any = true;
                }
            }
            console.out << (any ? "\n" : " 0\n");
        }
        for (const auto& w : fit.warnings) {
            console.err << "warning: " << w << '\n';
        }
        console.out << "  wrote " << (dir / "sindy_model.json").string() << ", " << (dir / "sindy_report.csv").string()
                    << '\n';
    } else {
        const sysid::LinearDiscreteModel m = pipeline::fit_dmdc_model(data);
        io::save_model(dir / "dmdc_model.json", m);
        {
            auto out = open_out(dir / "dmdc_report.csv");
            io::write_linear_report(out, m);
        }
        const double rho = m.spectral_radius();
        console.out << "fit dmdc: A " << m.a.rows() << "x" << m.a.cols() << ", B " << m.b.rows() << "x" << m.b.cols()
                    << ", dt " << m.dt << ", spectral radius " << io::format_double(rho)
                    << (rho > 1.0 ? " (unstable)" : "") << '\n';
        console.out << "  wrote " << (dir / "dmdc_model.json").string() << ", " << (dir / "dmdc_report.csv").string()
                    << '\n';
    }
}

void write_validation(const ExperimentConfig& cfg, const std::string& model_name, ValidationSignal signal,
                      const pipeline::ValidationReport& rep, Console console) {
    const fs::path    dir  = out_dir(cfg);
    const std::string tag  = model_name + (signal == ValidationSignal::held_out ? "_heldout" : "_training");
    const Eigen::Index rows = rep.truth.rows();

    io::Table table;
    table.header = io::trajectory_header(4, 1);
    for (const auto& n : kStateNames) {
        table.header.push_back(n + "_pred");
    }
    table.values.resize(rows, 10);
    table.values.leftCols(6) << rep.truth.times(), rep.truth.states(), rep.truth.inputs();
    table.values.rightCols(4).setConstant(std::numeric_limits<double>::quiet_NaN());
    table.values.rightCols(4).topRows(rep.prediction.rows()) = rep.prediction.states();
    io::write_table(dir / ("validation_" + tag + ".csv"), table);

    io::Table rmse;
    rmse.header = {"component", "rmse", "samples", "saturated"};
    rmse.values.resize(4, 4);
    for (Eigen::Index k = 0; k < 4; ++k) {
        const auto& r = rep.rmse[static_cast<std::size_t>(k)];
        rmse.values.row(k) << static_cast<double>(k), r.rmse, static_cast<double>(r.samples), r.saturated ? 1.0 : 0.0;
    }
    io::write_table(dir / ("rmse_" + tag + ".csv"), rmse);

    console.out << "validate " << model_name << " on the "
                << (signal == ValidationSignal::held_out ? "held-out signal" : "training signal replay") << " ("
                << rep.truth.times()[rows - 1] << " days)\n  rmse:";
    for (Eigen::Index k = 0; k < 4; ++k) {
        console.out << ' ' << kStateNames[static_cast<std::size_t>(k)] << '=' << rep.rmse[static_cast<std::size_t>(k)].rmse;
    }
    console.out << '\n';
    if (rep.diverged) {
        console.out << "  DIVERGED at day " << rep.diverged_time << " (|x| > " << cfg.divergence_bound << ")\n";
    } else {
        console.out << "  no divergence\n";
    }
    console.out << "  wrote " << (dir / ("validation_" + tag + ".csv")).string() << '\n';
}

pipeline::SummaryRow write_mpc(const ExperimentConfig& cfg, const std::string& model_name, bool constrained,
                               const mpc::MpcResult& result, Console console) {
    const fs::path    dir = out_dir(cfg);
    const std::string tag = run_tag(model_name, constrained);
    io::write_table(dir / ("mpc_" + tag + ".csv"), io::mpc_table(result));
    io::write_table(dir / ("solver_stats_" + tag + ".csv"), io::solver_stats_table(result));

    const pipeline::SummaryRow row = pipeline::summarize(tag, cfg, result);
    console.out << "mpc " << tag << ": peak I = " << row.peak << ", cumulative I = " << row.cumulative
                << ", control effort = " << row.effort << ", steps = " << result.steps.size() << '\n';
    int infeasible = 0;
    for (const auto& s : result.steps) {
        infeasible += s.solution.feasible ? 0 : 1;
    }
    if (infeasible > 0) {
        console.err << "warning: " << tag << ": " << infeasible << " of " << result.steps.size()
                    << " steps returned moves violating the state constraint\n";
    }
    if (result.aborted) {
        console.err << "warning: " << tag << ": plant diverged, results are partial\n";
    }
    return row;
}

template <class F>
auto stage(const std::string& name, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw std::runtime_error("stage '" + name + "' failed: " + e.what());
    }
}

} // namespace

int cmd_generate(const ExperimentConfig& cfg, Console console) {
    write_generated(cfg, pipeline::generate_training(cfg), console);
    return 0;
}

int cmd_fit(const ExperimentConfig& cfg, const CommandOptions& options, Console console) {
    write_fit(cfg, options.method, read_training(cfg), console);
    return 0;
}

int cmd_validate(const ExperimentConfig& cfg, const CommandOptions& options, Console console) {
    const io::ModelDocument doc   = io::load_model(model_path(cfg, options));
    const auto              model = io::make_predictor(doc);
    write_validation(cfg, model->name(), options.signal, pipeline::validate_model(cfg, *model, options.signal), console);
    return 0;
}

int cmd_mpc(const ExperimentConfig& cfg, const CommandOptions& options, Console console) {
    const io::ModelDocument doc   = io::load_model(model_path(cfg, options));
    const auto              model = io::make_predictor(doc);
    (void)write_mpc(cfg, model->name(), cfg.constrained, pipeline::run_mpc(cfg, *model, cfg.constrained), console);
    return 0;
}

int cmd_compare(const ExperimentConfig& cfg, Console console) {
    const auto data = stage("generate", [&] {
        auto d = pipeline::generate_training(cfg);
        write_generated(cfg, d, console);
        return d;
    });
    stage("fit sindy", [&] { write_fit(cfg, Method::sindy, data, console); });
    stage("fit dmdc", [&] { write_fit(cfg, Method::dmdc, data, console); });

    const fs::path dir   = cfg.output_dir;
    const auto     sindy = io::make_predictor(io::load_model(dir / "sindy_model.json"));
    const auto     dmdc  = io::make_predictor(io::load_model(dir / "dmdc_model.json"));

    stage("validate sindy", [&] {
        write_validation(cfg, "sindy", ValidationSignal::held_out,
                         pipeline::validate_model(cfg, *sindy, ValidationSignal::held_out), console);
    });
    stage("validate dmdc", [&] {
        write_validation(cfg, "dmdc", ValidationSignal::training_replay,
                         pipeline::validate_model(cfg, *dmdc, ValidationSignal::training_replay), console);
    });

    std::vector<pipeline::SummaryRow> rows;
    stage("uncontrolled", [&] {
        const Trajectory traj = pipeline::run_uncontrolled(cfg);
        io::write_table(dir / "uncontrolled.csv", io::trajectory_table(traj));
        const Eigen::Index c = cfg.monitored_component();
        rows.push_back({"uncontrolled", mpc::peak(traj, c), mpc::cumulative(traj, c), 0.0, true});
        console.out << "uncontrolled: peak I = " << rows.back().peak << ", cumulative I = " << rows.back().cumulative
                    << '\n';
    });
    const bool has_constraint = cfg.mpc.state_constraint.has_value();
    for (const auto* model : {sindy.get(), dmdc.get()}) {
        for (const bool constrained : {false, true}) {
            if (constrained && !has_constraint) {
                continue;
            }
            const std::string name = model == sindy.get() ? "sindy-mpc" : "dmd-mpc";
            rows.push_back(stage(run_tag(model->name(), constrained) + " mpc", [&] {
                auto row    = write_mpc(cfg, model->name(), constrained, pipeline::run_mpc(cfg, *model, constrained),
                                        console);
                row.variant = name + (constrained ? "-constrained" : "");
                return row;
            }));
        }
    }

    {
        auto out = open_out(dir / "summary.csv");
        pipeline::write_summary(out, rows, kStateNames[static_cast<std::size_t>(cfg.monitored_component())]);
    }
    console.out << "summary:\n";
    pipeline::write_summary(console.out, rows, kStateNames[static_cast<std::size_t>(cfg.monitored_component())]);
    console.out << "  wrote " << (dir / "summary.csv").string() << '\n';
    return 0;
}

} // namespace sindympc
