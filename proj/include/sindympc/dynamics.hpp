#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>

#include <Eigen/Dense>

namespace sindympc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/**
 * @brief Time-stamped state and input history sampled on a uniform grid.
 *
 * Row i of `states()` and `inputs()` belongs to `times()[i]`. The input row is
 * the value held (zero-order hold) over [t_i, t_{i+1}).
 */
class Trajectory {
public:
    Trajectory() = default;

    /// Validates shapes, strict monotonicity and uniform spacing (1e-12 relative).
    Trajectory(VectorXd times, MatrixXd states, MatrixXd inputs);

    [[nodiscard]] const VectorXd& times() const noexcept { return times_; }
    [[nodiscard]] const MatrixXd& states() const noexcept { return states_; }
    [[nodiscard]] const MatrixXd& inputs() const noexcept { return inputs_; }

    [[nodiscard]] Eigen::Index rows() const noexcept { return times_.size(); }
    [[nodiscard]] Eigen::Index state_dim() const noexcept { return states_.cols(); }
    [[nodiscard]] Eigen::Index input_dim() const noexcept { return inputs_.cols(); }
    [[nodiscard]] bool empty() const noexcept { return times_.size() == 0; }

    /// Sample spacing; 0 for single-row trajectories.
    [[nodiscard]] double dt() const noexcept;

    /// Rows [0, count).
    [[nodiscard]] Trajectory head(Eigen::Index count) const;

private:
    VectorXd times_;
    MatrixXd states_;
    MatrixXd inputs_;
};

/// Result of a stepped simulation that may stop early on divergence.
struct Simulation {
    Trajectory                 trajectory;    ///< accepted rows only
    std::optional<std::size_t> diverged_step; ///< step whose result was rejected
    double                     diverged_time = 0.0;

    [[nodiscard]] bool diverged() const noexcept { return diverged_step.has_value(); }
    /// The full trajectory, or IntegrationDiverged.
    [[nodiscard]] const Trajectory& value() const;
};

/// Maps (t, x, u, dt) to the next state.
using StepFunction = std::function<VectorXd(double, const VectorXd&, const VectorXd&, double)>;

/**
 * @brief Shared driver for every fixed-step simulator in the library.
 *
 * Applies `input` row min(k, rows-1) over step k. Stops at the first state that
 * is non-finite or whose max-norm exceeds `divergence_bound`.
 */
[[nodiscard]] Simulation simulate_steps(const StepFunction& step, const VectorXd& x0,
                                        const MatrixXd& input, double dt, std::size_t n_steps,
                                        double t0, double divergence_bound);

/// dx/dt = rhs(t, x, u) with x in R^n and u in R^q.
struct ControlledSystem {
    using Rhs = std::function<VectorXd(double, const VectorXd&, const VectorXd&)>;

    Eigen::Index state_dim = 0;
    Eigen::Index input_dim = 0;
    Rhs          rhs;

    /// rhs with dimension checks on the arguments and the result.
    [[nodiscard]] VectorXd operator()(double t, const VectorXd& x, const VectorXd& u) const;
};

struct SeirParams {
    double beta0 = 0.5; ///< nominal transmission rate [1/day]
    double gamma = 0.2; ///< recovery rate [1/day]
    double k     = 0.2; ///< incubation rate [1/day]

    [[nodiscard]] double r0() const { return beta0 / gamma; }
    void validate() const;
};

/// x = [S, E, I, R], u = transmission rate.
[[nodiscard]] VectorXd seir_rhs(const VectorXd& x, double u, const SeirParams& p);
[[nodiscard]] ControlledSystem seir_system(const SeirParams& p);

/// Benchmark initial condition, completed with R(0) = 0.
[[nodiscard]] VectorXd seir_default_x0();

/// One classical RK4 step with the input held constant.
[[nodiscard]] VectorXd rk4_step(const ControlledSystem& sys, double t, const VectorXd& x,
                                const VectorXd& u, double dt);

/// Non-throwing form of integrate_rk4.
[[nodiscard]] Simulation try_integrate_rk4(const ControlledSystem& sys, const VectorXd& x0,
                                           const MatrixXd& input, double dt, std::size_t n_steps,
                                           double t0 = 0.0,
                                           double divergence_bound = std::numeric_limits<double>::infinity());

/**
 * @brief Fixed-step RK4 with zero-order-hold inputs.
 *
 * `input` row k is applied over step k; it needs at least `n_steps` rows. The
 * returned trajectory has n_steps + 1 rows; its input rows are the applied
 * values, with the last row repeating the final available sample.
 *
 * @throws IntegrationDiverged when a state is non-finite or its max-norm
 *         exceeds `divergence_bound`.
 */
[[nodiscard]] Trajectory integrate_rk4(const ControlledSystem& sys, const VectorXd& x0,
                                       const MatrixXd& input, double dt, std::size_t n_steps,
                                       double t0 = 0.0,
                                       double divergence_bound = std::numeric_limits<double>::infinity());

/// Row i = sys.rhs(times[i], states[i], inputs[i]).
[[nodiscard]] MatrixXd exact_derivatives(const ControlledSystem& sys, const Trajectory& traj);

/// Second-order central differences; one-sided second-order stencils at both ends.
[[nodiscard]] MatrixXd central_differences(const Trajectory& traj);

} // namespace sindympc
