#include "sindympc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sindympc/errors.hpp"

namespace sindympc::mpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Index whole_multiple(double span, double step, const char* what) {
    const double ratio   = span / step;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        throw InvalidSpec(std::string(what) + " must be a positive whole multiple of its step");
    }
    return static_cast<Eigen::Index>(rounded);
}

double weighted_sq(const Eigen::VectorXd& v, const Eigen::VectorXd& w) { return (w.array() * v.array().square()).sum(); }

struct Candidate {
    Eigen::VectorXd moves;
    double          cost      = kInf;
    double          violation = -kInf;
};

// Feasible beats infeasible; then lower cost, or lower violation when both infeasible.
bool better(const Candidate& a, const Candidate& b, bool constrained, double tol) {
    if (!constrained) {
        return a.cost < b.cost;
    }
    const bool fa = a.violation <= tol;
    const bool fb = b.violation <= tol;
    if (fa != fb) {
        return fa;
    }
    if (fa) {
        return a.cost < b.cost;
    }
    return a.violation < b.violation || (a.violation == b.violation && a.cost < b.cost);
}

} // namespace

Eigen::Index MpcConfig::moves() const {
    return whole_multiple(control_horizon_days, control_sample_days, "control horizon");
}

Eigen::Index MpcConfig::steps_per_move() const {
    return whole_multiple(control_sample_days, inner_dt, "control sample time");
}

Eigen::Index MpcConfig::horizon_steps() const {
    return whole_multiple(prediction_horizon_days, inner_dt, "prediction horizon");
}

void MpcConfig::validate() const {
    const auto n = q_weights.size();
    const auto q = u_min.size();
    if (n < 1 || q < 1) {
        throw InvalidSpec("MPC config needs state and input dimensions");
    }
    if (reference.size() != n || u_max.size() != q || ru.size() != q || rdu.size() != q ||
        input_reference.size() != q || initial_input.size() != q) {
        throw InvalidSpec("MPC config vectors have inconsistent sizes");
    }
    if ((q_weights.array() < 0.0).any() || (ru.array() < 0.0).any() || (rdu.array() < 0.0).any()) {
        throw InvalidSpec("MPC weights must be nonnegative");
    }
    if ((u_min.array() > u_max.array()).any()) {
        throw InvalidSpec("MPC input bounds need u_min <= u_max");
    }
    if (!(control_horizon_days <= prediction_horizon_days + 1e-12)) {
        throw InvalidSpec("control horizon must not exceed the prediction horizon");
    }
    if (!(inner_dt > 0.0) || !(duration_days > 0.0) || !(control_sample_days > 0.0)) {
        throw InvalidSpec("MPC time spans must be positive");
    }
    (void)moves();
    (void)steps_per_move();
    (void)horizon_steps();
    whole_multiple(prediction_horizon_days, control_sample_days, "prediction horizon");
    if (state_constraint && (state_constraint->component < 0 || state_constraint->component >= n)) {
        throw InvalidSpec("state constraint component out of range");
    }
}

MpcConfig MpcConfig::seir_benchmark(bool constrained) {
    MpcConfig cfg;
    cfg.q_weights = Eigen::Vector4d(0.0, 0.0, 1.0, 0.0);
    cfg.reference = Eigen::VectorXd::Zero(4);
    cfg.ru        = Eigen::VectorXd::Constant(1, 0.1);
    cfg.rdu       = Eigen::VectorXd::Constant(1, 0.1);
    cfg.input_reference = Eigen::VectorXd::Constant(1, 0.5);
    cfg.u_min           = Eigen::VectorXd::Constant(1, 0.15);
    cfg.u_max           = Eigen::VectorXd::Constant(1, 0.5);
    cfg.initial_input   = Eigen::VectorXd::Constant(1, 0.5);
    if (constrained) {
        cfg.state_constraint = StateConstraint{2, 0.05};
    }
    return cfg;
}

Eigen::MatrixXd expand_moves(const Eigen::VectorXd& moves, const MpcConfig& cfg) {
    const Eigen::Index q = cfg.input_dim();
    const Eigen::Index m = cfg.moves();
    if (moves.size() != m * q) {
        throw ContractViolation("expected " + std::to_string(m * q) + " decision values, got " +
                                std::to_string(moves.size()));
    }
    const Eigen::Index per  = cfg.steps_per_move();
    const Eigen::Index rows = cfg.horizon_steps();
    Eigen::MatrixXd    input(rows, q);
    for (Eigen::Index s = 0; s < rows; ++s) {
        const Eigen::Index i = std::min(s / per, m - 1);
        input.row(s)         = moves.segment(i * q, q).transpose();
    }
    return input;
}

HorizonPrediction predict_horizon(const Predictor& model, const Eigen::VectorXd& x, const Eigen::VectorXd& moves,
                                  const MpcConfig& cfg) {
    const Eigen::MatrixXd input = expand_moves(moves, cfg);
    Simulation sim = model.simulate(x, input, cfg.inner_dt, static_cast<std::size_t>(input.rows()), 0.0,
                                    cfg.divergence_bound);
    return HorizonPrediction{std::move(sim.trajectory), sim.diverged()};
}

double cost(const HorizonPrediction& predicted, const Eigen::VectorXd& moves, const Eigen::VectorXd& u_prev,
            const MpcConfig& cfg) {
    if (predicted.diverged) {
        return kInf;
    }
    const Eigen::Index q      = cfg.input_dim();
    const Eigen::Index stride = cfg.steps_per_move();
    const auto&        states = predicted.trajectory.states();

    double j = 0.0;
    for (Eigen::Index row = 0; row < states.rows(); row += stride) {
        j += weighted_sq(states.row(row).transpose() - cfg.reference, cfg.q_weights);
    }
    Eigen::VectorXd previous = u_prev;
    for (Eigen::Index i = 0; i * q < moves.size(); ++i) {
        const Eigen::VectorXd u = moves.segment(i * q, q);
        j += weighted_sq(u - cfg.input_reference, cfg.ru) + weighted_sq(u - previous, cfg.rdu);
        previous = u;
    }
    return j;
}

double constraint_violation(const HorizonPrediction& predicted, const MpcConfig& cfg) {
    if (!cfg.state_constraint) {
        return -kInf;
    }
    if (predicted.diverged) {
        return kInf;
    }
    const auto& c = *cfg.state_constraint;
    return predicted.trajectory.states().col(c.component).maxCoeff() - c.upper;
}

OcpSolution solve_ocp(const Predictor& model, const Eigen::VectorXd& x, const Eigen::VectorXd& warm_start,
                      const Eigen::VectorXd& u_prev, const MpcConfig& cfg) {
    const Eigen::Index m = cfg.moves();
    const Eigen::Index q = cfg.input_dim();
    if (warm_start.size() != m * q) {
        throw ContractViolation("warm start has the wrong length");
    }
    const bool   constrained = cfg.state_constraint.has_value();
    const double tol         = cfg.solver.feasibility_tolerance;

    opt::Box box{cfg.u_min.replicate(m, 1), cfg.u_max.replicate(m, 1)};

    int  evaluations = 0;
    auto evaluate    = [&](const Eigen::VectorXd& moves) {
        ++evaluations;
        const HorizonPrediction p = predict_horizon(model, x, moves, cfg);
        return Candidate{moves, cost(p, moves, u_prev, cfg), constraint_violation(p, cfg)};
    };
    const opt::Problem problem = [&](const Eigen::VectorXd& moves) {
        const Candidate c = evaluate(moves);
        return opt::Evaluation{c.cost, c.violation};
    };

    const Candidate warm = evaluate(box.project(warm_start));
    const opt::Result run = opt::minimize_augmented_lagrangian(problem, warm.moves, box, constrained,
                                                               cfg.solver.optimizer);
    // The optimizer keeps its iterates inside the box; project once more so the
    // returned moves are bit-exactly within bounds.
    std::vector<Candidate> candidates{warm, evaluate(box.project(run.x))};

    bool infeasible_problem = false;
    if (constrained) {
        const Candidate probe = evaluate(box.lower);
        infeasible_problem    = probe.violation > tol;
        candidates.push_back(probe);

        // Pull an infeasible optimizer result back along the segment towards the
        // best feasible candidate, keeping the farthest feasible point.
        const Candidate& optimum = candidates[1];
        const Candidate* anchor  = nullptr;
        for (const auto& c : candidates) {
            if (c.violation <= tol && (anchor == nullptr || c.cost < anchor->cost)) {
                anchor = &c;
            }
        }
        if (optimum.violation > tol && anchor != nullptr) {
            const Eigen::VectorXd from = anchor->moves;
            const Eigen::VectorXd dir  = optimum.moves - from;
            double                lo = 0.0, hi = 1.0;
            std::optional<Candidate> boundary;
            for (int it = 0; it < 30; ++it) {
                const double    mid = 0.5 * (lo + hi);
                const Candidate c   = evaluate(box.project(from + mid * dir));
                if (c.violation <= tol) {
                    lo       = mid;
                    boundary = c;
                } else {
                    hi = mid;
                }
            }
            if (boundary) {
                candidates.push_back(*boundary);
            }
        }
    }

    const Candidate* best = &candidates.front();
    for (const auto& c : candidates) {
        if (better(c, *best, constrained, tol)) {
            best = &c;
        }
    }

    OcpSolution sol;
    sol.moves              = best->moves;
    sol.cost               = best->cost;
    sol.violation          = best->violation;
    sol.warm_cost          = warm.cost;
    sol.warm_violation     = warm.violation;
    sol.outer_iterations   = run.outer_iterations;
    sol.evaluations        = evaluations;
    sol.feasible           = !constrained || best->violation <= tol;
    sol.infeasible_problem = infeasible_problem;
    return sol;
}

MpcResult run_closed_loop(const ControlledSystem& plant, const Predictor& model, const Eigen::VectorXd& x0,
                          const MpcConfig& cfg) {
    cfg.validate();
    if (plant.state_dim != cfg.state_dim() || model.state_dim() != cfg.state_dim() ||
        plant.input_dim != cfg.input_dim() || model.input_dim() != cfg.input_dim() || x0.size() != cfg.state_dim()) {
        throw ContractViolation("closed loop: plant, model, x0 and config dimensions differ");
    }
    const Eigen::Index q     = cfg.input_dim();
    const Eigen::Index m     = cfg.moves();
    const Eigen::Index per   = cfg.steps_per_move();
    const auto         total = static_cast<Eigen::Index>(std::llround(cfg.duration_days / cfg.inner_dt));

    std::vector<double>          times{0.0};
    std::vector<Eigen::VectorXd> states{x0};
    std::vector<Eigen::VectorXd> inputs;
    std::vector<double>          row_cost;

    MpcResult       result;
    Eigen::VectorXd x       = x0;
    Eigen::VectorXd u_prev  = cfg.initial_input;
    Eigen::VectorXd plan    = cfg.initial_input.replicate(m, 1);
    const opt::Box  box{cfg.u_min.replicate(m, 1), cfg.u_max.replicate(m, 1)};

    auto input_cost = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& previous) {
        return weighted_sq(u - cfg.input_reference, cfg.ru) + weighted_sq(u - previous, cfg.rdu);
    };
    auto state_cost = [&](const Eigen::VectorXd& s) { return weighted_sq(s - cfg.reference, cfg.q_weights); };

    for (Eigen::Index done = 0, j = 0; done < total; ++j) {
        const Eigen::Index n_inner = std::min(per, total - done);
        const double       t       = static_cast<double>(done) * cfg.inner_dt;

        Eigen::VectorXd warm(m * q);
        warm << plan.tail((m - 1) * q), plan.tail(q);
        warm = box.project(warm);

        StepRecord record;
        record.time       = t;
        record.warm_start = warm;
        record.solution   = solve_ocp(model, x, warm, u_prev, cfg);
        record.applied    = record.solution.moves.head(q);
        record.stage_cost = state_cost(x) + input_cost(record.applied, u_prev);

        const Eigen::MatrixXd hold = record.applied.transpose().replicate(n_inner, 1);
        const Simulation      step = try_integrate_rk4(plant, x, hold, cfg.inner_dt, static_cast<std::size_t>(n_inner), t);
        const Simulation      guess =
            model.simulate(x, hold, cfg.inner_dt, static_cast<std::size_t>(n_inner), t, cfg.divergence_bound);

        const auto& rows = step.trajectory.states();
        for (Eigen::Index r = 1; r < rows.rows(); ++r) {
            times.push_back(step.trajectory.times()[r]);
            states.push_back(rows.row(r).transpose());
        }
        for (Eigen::Index r = 0; r + 1 < rows.rows(); ++r) {
            inputs.push_back(record.applied);
            row_cost.push_back(state_cost(rows.row(r).transpose()) +
                               input_cost(record.applied, r == 0 ? u_prev : record.applied));
        }
        if (step.diverged()) {
            result.aborted = true;
            result.steps.push_back(std::move(record));
            break;
        }
        const Eigen::VectorXd x_next = rows.row(rows.rows() - 1).transpose();
        record.prediction_error =
            guess.diverged() ? kInf
                             : (guess.trajectory.states().row(guess.trajectory.rows() - 1).transpose() - x_next)
                                   .lpNorm<Eigen::Infinity>();

        plan   = record.solution.moves;
        u_prev = record.applied;
        x      = x_next;
        done += n_inner;
        result.steps.push_back(std::move(record));
    }

    // Final row: repeat the last applied input, charge only the state term.
    inputs.push_back(inputs.empty() ? cfg.initial_input : inputs.back());
    row_cost.push_back(state_cost(states.back()));

    const auto      rows = static_cast<Eigen::Index>(times.size());
    Eigen::VectorXd tv(rows);
    Eigen::MatrixXd sv(rows, cfg.state_dim());
    Eigen::MatrixXd uv(rows, q);
    result.row_stage_cost.resize(rows);
    result.row_violation.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto i = static_cast<std::size_t>(r);
        tv[r]        = times[i];
        sv.row(r)    = states[i].transpose();
        uv.row(r)    = inputs[i].transpose();
        result.row_stage_cost[r] = row_cost[i];
        result.row_violation[r] =
            cfg.state_constraint ? states[i][cfg.state_constraint->component] - cfg.state_constraint->upper
                                 : std::numeric_limits<double>::quiet_NaN();
    }
    result.closed_loop = Trajectory(std::move(tv), std::move(sv), std::move(uv));
    return result;
}

double peak(const Trajectory& traj, Eigen::Index component) { return traj.states().col(component).maxCoeff(); }

double cumulative(const Trajectory& traj, Eigen::Index component) {
    const auto& c   = traj.states().col(component);
    double      sum = 0.0;
    for (Eigen::Index i = 0; i + 1 < traj.rows(); ++i) {
        sum += 0.5 * (c[i] + c[i + 1]) * (traj.times()[i + 1] - traj.times()[i]);
    }
    return sum;
}

double control_effort(const MpcResult& result, const Eigen::VectorXd& u_ref) {
    double       effort = 0.0;
    const double end    = result.closed_loop.times()[result.closed_loop.rows() - 1];
    for (std::size_t j = 0; j < result.steps.size(); ++j) {
        const double stop = j + 1 < result.steps.size() ? result.steps[j + 1].time : end;
        effort += (result.steps[j].applied - u_ref).lpNorm<1>() * (stop - result.steps[j].time);
    }
    return effort;
}

} // namespace sindympc::mpc
