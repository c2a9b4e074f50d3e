#include "sindympc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sindympc/errors.hpp"

namespace sindympc {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw InvalidSpec(where + " must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (allowed.count(key) == 0) {
            throw InvalidSpec("unknown key '" + key + "' in " + where);
        }
    }
}

template <class T>
void read_opt(const json& obj, const char* key, T& target) {
    if (obj.contains(key)) {
        target = obj.at(key).get<T>();
    }
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Weights may be given as a scalar and broadcast over the input.
Eigen::VectorXd weights_from(const json& j, Eigen::Index size) {
    if (j.is_number()) {
        return Eigen::VectorXd::Constant(size, j.get<double>());
    }
    return vec_from(j);
}

json signal_json(const signals::SignalSpec& s) {
    return {{"kind", std::string(signals::to_string(s.kind))},
            {"levels", s.levels},
            {"amplitudes", s.amplitudes},
            {"frequencies", s.frequencies},
            {"phases", s.phases},
            {"switch_times", s.switch_times},
            {"offset", s.offset},
            {"hold", s.hold},
            {"seed", s.seed},
            {"duration", s.duration},
            {"dt", s.dt}};
}

// Returns whether the seed was given explicitly.
bool signal_from(const json& j, signals::SignalSpec& s, const std::string& where) {
    check_keys(j,
               {"kind", "levels", "amplitudes", "frequencies", "phases", "switch_times", "offset", "hold", "seed",
                "duration", "dt"},
               where);
    if (j.contains("kind")) {
        s.kind = signals::kind_from_string(j.at("kind").get<std::string>());
    }
    read_opt(j, "levels", s.levels);
    read_opt(j, "amplitudes", s.amplitudes);
    read_opt(j, "frequencies", s.frequencies);
    read_opt(j, "phases", s.phases);
    read_opt(j, "switch_times", s.switch_times);
    read_opt(j, "offset", s.offset);
    read_opt(j, "hold", s.hold);
    read_opt(j, "duration", s.duration);
    read_opt(j, "dt", s.dt);
    read_opt(j, "seed", s.seed);
    return j.contains("seed");
}

json mpc_json(const mpc::MpcConfig& m, bool constrained) {
    json constraint = nullptr;
    if (m.state_constraint) {
        constraint = {{"component", m.state_constraint->component}, {"upper", m.state_constraint->upper}};
    }
    const auto& o = m.solver.optimizer;
    return {{"q_weights", vec_json(m.q_weights)},
            {"reference", vec_json(m.reference)},
            {"ru", vec_json(m.ru)},
            {"rdu", vec_json(m.rdu)},
            {"input_reference", vec_json(m.input_reference)},
            {"u_min", vec_json(m.u_min)},
            {"u_max", vec_json(m.u_max)},
            {"initial_input", vec_json(m.initial_input)},
            {"prediction_horizon", m.prediction_horizon_days},
            {"control_horizon", m.control_horizon_days},
            {"control_sample", m.control_sample_days},
            {"duration", m.duration_days},
            {"inner_dt", m.inner_dt},
            {"divergence_bound", m.divergence_bound},
            {"state_constraint", constraint},
            {"constrained", constrained},
            {"solver",
             {{"outer_iterations", o.outer_iterations},
              {"inner_evaluations", o.inner_evaluations},
              {"fd_step", o.fd_step},
              {"gradient_tolerance", o.gradient_tolerance},
              {"initial_penalty", o.initial_penalty},
              {"penalty_growth", o.penalty_growth},
              {"feasibility_tolerance", m.solver.feasibility_tolerance}}}};
}

void mpc_from(const json& j, mpc::MpcConfig& m, bool& constrained) {
    check_keys(j,
               {"q_weights", "reference", "ru", "rdu", "input_reference", "u_min", "u_max", "initial_input",
                "prediction_horizon", "control_horizon", "control_sample", "duration", "inner_dt",
                "divergence_bound", "state_constraint", "constrained", "solver"},
               "mpc");
    if (j.contains("q_weights")) m.q_weights = vec_from(j.at("q_weights"));
    if (j.contains("reference")) m.reference = vec_from(j.at("reference"));
    if (j.contains("u_min")) m.u_min = vec_from(j.at("u_min"));
    if (j.contains("u_max")) m.u_max = vec_from(j.at("u_max"));
    const Eigen::Index q = m.u_min.size();
    if (j.contains("ru")) m.ru = weights_from(j.at("ru"), q);
    if (j.contains("rdu")) m.rdu = weights_from(j.at("rdu"), q);
    if (j.contains("input_reference")) m.input_reference = weights_from(j.at("input_reference"), q);
    if (j.contains("initial_input")) m.initial_input = weights_from(j.at("initial_input"), q);
    read_opt(j, "prediction_horizon", m.prediction_horizon_days);
    read_opt(j, "control_horizon", m.control_horizon_days);
    read_opt(j, "control_sample", m.control_sample_days);
    read_opt(j, "duration", m.duration_days);
    read_opt(j, "inner_dt", m.inner_dt);
    read_opt(j, "divergence_bound", m.divergence_bound);
    read_opt(j, "constrained", constrained);
    if (j.contains("state_constraint")) {
        const json& c = j.at("state_constraint");
        if (c.is_null()) {
            m.state_constraint.reset();
        } else {
            check_keys(c, {"component", "upper"}, "mpc.state_constraint");
            m.state_constraint = mpc::StateConstraint{c.at("component").get<Eigen::Index>(), c.at("upper").get<double>()};
        }
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        check_keys(s,
                   {"outer_iterations", "inner_evaluations", "fd_step", "gradient_tolerance", "initial_penalty",
                    "penalty_growth", "feasibility_tolerance"},
                   "mpc.solver");
        auto& o = m.solver.optimizer;
        read_opt(s, "outer_iterations", o.outer_iterations);
        read_opt(s, "inner_evaluations", o.inner_evaluations);
        read_opt(s, "fd_step", o.fd_step);
        read_opt(s, "gradient_tolerance", o.gradient_tolerance);
        read_opt(s, "initial_penalty", o.initial_penalty);
        read_opt(s, "penalty_growth", o.penalty_growth);
        read_opt(s, "feasibility_tolerance", m.solver.feasibility_tolerance);
    }
}

} // namespace

void ExperimentConfig::validate() const {
    plant.validate();
    if (x0.size() != 4 || !x0.allFinite() || (x0.array() < 0.0).any()) {
        throw InvalidSpec("x0 must hold four finite nonnegative fractions");
    }
    training.validate();
    validation.validate();
    if (sindy_order < 1 || sindy_max_iter < 1) {
        throw InvalidSpec("sindy order and max_iter must be at least 1");
    }
    if (!(sindy_lambda >= 0.0)) {
        throw InvalidSpec("sindy lambda must be nonnegative");
    }
    if (!(replay_duration > 0.0) || !(divergence_bound > 0.0)) {
        throw InvalidSpec("replay duration and divergence bound must be positive");
    }
    mpc.validate();
    if (mpc.state_dim() != 4 || mpc.input_dim() != 1) {
        throw InvalidSpec("the SEIR pipeline needs an MPC config with 4 states and 1 input");
    }
    if (constrained && !mpc.state_constraint) {
        throw InvalidSpec("constrained run requested but mpc.state_constraint is null");
    }
    if (output_dir.empty()) {
        throw InvalidSpec("output_dir must not be empty");
    }
}

mpc::MpcConfig ExperimentConfig::mpc_settings(bool with_constraint) const {
    mpc::MpcConfig m = mpc;
    if (!with_constraint) {
        m.state_constraint.reset();
    } else if (!m.state_constraint) {
        throw InvalidSpec("constrained run requested but mpc.state_constraint is null");
    }
    return m;
}

Eigen::Index ExperimentConfig::monitored_component() const {
    if (mpc.state_constraint) {
        return mpc.state_constraint->component;
    }
    Eigen::Index k = 0;
    mpc.q_weights.maxCoeff(&k);
    return k;
}

void ExperimentConfig::reseed(std::uint64_t new_seed) {
    seed            = new_seed;
    training.seed   = new_seed;
    validation.seed = new_seed + 1;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    const json doc = {
        {"seed", cfg.seed},
        {"output_dir", cfg.output_dir},
        {"plant", {{"beta0", cfg.plant.beta0}, {"gamma", cfg.plant.gamma}, {"k", cfg.plant.k}, {"x0", vec_json(cfg.x0)}}},
        {"training",
         {{"signal", signal_json(cfg.training)},
          {"derivatives", cfg.derivatives == sysid::DerivativeMode::exact ? "exact" : "central_differences"}}},
        {"sindy", {{"order", cfg.sindy_order}, {"lambda", cfg.sindy_lambda}, {"max_iter", cfg.sindy_max_iter}}},
        {"validation",
         {{"signal", signal_json(cfg.validation)},
          {"replay_duration", cfg.replay_duration},
          {"divergence_bound", cfg.divergence_bound}}},
        {"mpc", mpc_json(cfg.mpc, cfg.constrained)}};
    return doc.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    ExperimentConfig cfg;
    try {
        const json doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
        check_keys(doc, {"seed", "output_dir", "plant", "training", "sindy", "validation", "mpc"}, "config");
        read_opt(doc, "seed", cfg.seed);
        read_opt(doc, "output_dir", cfg.output_dir);
        cfg.training.seed   = cfg.seed;
        cfg.validation.seed = cfg.seed + 1;

        if (doc.contains("plant")) {
            const json& p = doc.at("plant");
            check_keys(p, {"beta0", "gamma", "k", "x0"}, "plant");
            read_opt(p, "beta0", cfg.plant.beta0);
            read_opt(p, "gamma", cfg.plant.gamma);
            read_opt(p, "k", cfg.plant.k);
            if (p.contains("x0")) cfg.x0 = vec_from(p.at("x0"));
        }
        if (doc.contains("training")) {
            const json& t = doc.at("training");
            check_keys(t, {"signal", "derivatives"}, "training");
            if (t.contains("signal")) signal_from(t.at("signal"), cfg.training, "training.signal");
            if (t.contains("derivatives")) {
                const auto mode = t.at("derivatives").get<std::string>();
                if (mode == "exact") {
                    cfg.derivatives = sysid::DerivativeMode::exact;
                } else if (mode == "central_differences") {
                    cfg.derivatives = sysid::DerivativeMode::central_differences;
                } else {
                    throw InvalidSpec("unknown derivative mode '" + mode + "'");
                }
            }
        }
        if (doc.contains("sindy")) {
            const json& s = doc.at("sindy");
            check_keys(s, {"order", "lambda", "max_iter"}, "sindy");
            read_opt(s, "order", cfg.sindy_order);
            read_opt(s, "lambda", cfg.sindy_lambda);
            read_opt(s, "max_iter", cfg.sindy_max_iter);
        }
        if (doc.contains("validation")) {
            const json& v = doc.at("validation");
            check_keys(v, {"signal", "replay_duration", "divergence_bound"}, "validation");
            if (v.contains("signal")) signal_from(v.at("signal"), cfg.validation, "validation.signal");
            read_opt(v, "replay_duration", cfg.replay_duration);
            read_opt(v, "divergence_bound", cfg.divergence_bound);
        }
        if (doc.contains("mpc")) {
            mpc_from(doc.at("mpc"), cfg.mpc, cfg.constrained);
        }
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidSpec("cannot read config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InvalidData("cannot write " + path.string());
    }
    out << config_to_json(cfg);
}

} // namespace sindympc
