#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sindympc/dynamics.hpp"
#include "sindympc/optimizer.hpp"
#include "sindympc/predictor.hpp"

namespace sindympc::mpc {

/// Upper bound on one state component, x[component] <= upper.
struct StateConstraint {
    Eigen::Index component = 0;
    double       upper     = 0.0;

    bool operator==(const StateConstraint&) const = default;
};

struct SolverSettings {
    opt::Options optimizer;
    /// Constraint residual accepted as satisfied when ranking candidate solutions.
    double feasibility_tolerance = 1e-6;
};

/**
 * @brief Receding-horizon problem definition.
 *
 * The decision vector holds M = control_horizon / control_sample moves of
 * input_dim() values each; move i is held over [i*Ts, (i+1)*Ts) and the last
 * move is held through the rest of the prediction horizon.
 *
 * Cost = sum_k ||x_k - r||_Q^2 over the samples t = 0, Ts, 2Ts, ..., Tp
 *      + sum_i R_u ||u_i - u_ref||^2 + R_du ||u_i - u_{i-1}||^2,   u_{-1} = u_prev.
 */
struct MpcConfig {
    Eigen::VectorXd q_weights;       ///< diagonal of Q (state_dim)
    Eigen::VectorXd ru;              ///< diagonal of R_u (input_dim)
    Eigen::VectorXd rdu;             ///< diagonal of R_du (input_dim)
    Eigen::VectorXd reference;       ///< state reference r
    Eigen::VectorXd input_reference; ///< u_ref; R_u penalizes distance from it
    double          prediction_horizon_days = 14.0;
    double          control_horizon_days    = 14.0;
    double          control_sample_days     = 7.0;
    Eigen::VectorXd u_min;
    Eigen::VectorXd u_max;
    std::optional<StateConstraint> state_constraint;
    double          duration_days    = 100.0;
    double          inner_dt         = 0.1;
    Eigen::VectorXd initial_input;   ///< u_prev before the first step
    double          divergence_bound = 1e6;
    SolverSettings  solver;

    [[nodiscard]] Eigen::Index state_dim() const { return q_weights.size(); }
    [[nodiscard]] Eigen::Index input_dim() const { return u_min.size(); }
    [[nodiscard]] Eigen::Index moves() const;
    [[nodiscard]] Eigen::Index steps_per_move() const;
    [[nodiscard]] Eigen::Index horizon_steps() const;

    /// @throws InvalidSpec
    void validate() const;

    /// Q = diag(0,0,1,0), R_u = R_du = 0.1 around u_ref = beta0 = 0.5,
    /// u in [0.15, 0.5], Ts = 7, Tp = Tc = 14 days, optional I <= 0.05.
    [[nodiscard]] static MpcConfig seir_benchmark(bool constrained);
};

struct HorizonPrediction {
    Trajectory trajectory; ///< inner_dt grid starting at t = 0
    bool       diverged = false;
};

/// Zero-order-hold expansion of the moves onto the inner integration grid.
[[nodiscard]] Eigen::MatrixXd expand_moves(const Eigen::VectorXd& moves, const MpcConfig& cfg);

[[nodiscard]] HorizonPrediction predict_horizon(const Predictor& model, const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& moves, const MpcConfig& cfg);

/// +inf for diverged predictions.
[[nodiscard]] double cost(const HorizonPrediction& predicted, const Eigen::VectorXd& moves,
                          const Eigen::VectorXd& u_prev, const MpcConfig& cfg);

/// max_k (x_k[c] - upper) over every prediction sample; +inf when diverged,
/// -inf when the config has no state constraint.
[[nodiscard]] double constraint_violation(const HorizonPrediction& predicted, const MpcConfig& cfg);

struct OcpSolution {
    Eigen::VectorXd moves;
    double          cost      = 0.0;
    double          violation = 0.0;
    double          warm_cost      = 0.0; ///< clamped warm start, for the dominance check
    double          warm_violation = 0.0;
    int             outer_iterations = 0;
    int             evaluations      = 0;
    bool            feasible         = true;
    bool            infeasible_problem = false; ///< even u == u_min violates the constraint
};

/**
 * Minimizes cost over moves in [u_min, u_max] subject to the state constraint.
 * The returned moves are the best of the optimizer result, the clamped warm
 * start, the u_min probe and a boundary point between them, ranked feasible
 * first, then by cost (by violation among infeasible ones). So they are never
 * worse than the warm start and lie inside the bounds exactly.
 */
[[nodiscard]] OcpSolution solve_ocp(const Predictor& model, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& warm_start, const Eigen::VectorXd& u_prev,
                                    const MpcConfig& cfg);

struct StepRecord {
    double          time = 0.0;
    Eigen::VectorXd warm_start;
    OcpSolution     solution;
    Eigen::VectorXd applied;
    double          stage_cost       = 0.0; ///< ||x_j - r||_Q^2 + input terms of the applied move
    double          prediction_error = 0.0; ///< max |model - plant| at the end of the step
};

struct MpcResult {
    Trajectory              closed_loop;       ///< plant states and applied inputs on the inner grid
    Eigen::VectorXd         row_stage_cost;    ///< per closed-loop row
    Eigen::VectorXd         row_violation;     ///< per row; NaN without a state constraint
    std::vector<StepRecord> steps;
    bool                    aborted = false;   ///< plant diverged; results are partial
};

/// Full-state feedback loop: every Ts days solve, apply the first move to the plant (RK4 at inner_dt).
[[nodiscard]] MpcResult run_closed_loop(const ControlledSystem& plant, const Predictor& model,
                                        const Eigen::VectorXd& x0, const MpcConfig& cfg);

// Closed-loop metrics.
[[nodiscard]] double peak(const Trajectory& traj, Eigen::Index component);
/// Trapezoidal integral of one component over the trajectory.
[[nodiscard]] double cumulative(const Trajectory& traj, Eigen::Index component);
/// sum_j ||u_j - u_ref||_1 * (duration of step j)
[[nodiscard]] double control_effort(const MpcResult& result, const Eigen::VectorXd& u_ref);

} // namespace sindympc::mpc
