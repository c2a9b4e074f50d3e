#pragma once

#include <functional>

#include <Eigen/Dense>

namespace sindympc::opt {

/// Objective value and scalar inequality residual g (feasible when g <= 0).
struct Evaluation {
    double objective = 0.0;
    double violation = 0.0;
};

using Problem = std::function<Evaluation(const Eigen::VectorXd&)>;

struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& x) const;
};

struct Options {
    int    outer_iterations  = 5;
    int    inner_evaluations = 200;  ///< per outer iteration
    double fd_step           = 1e-6; ///< relative central-difference step
    double gradient_tolerance = 1e-10;
    double initial_penalty   = 100.0;
    double penalty_growth    = 10.0;
};

struct Result {
    Eigen::VectorXd x;
    Evaluation      value;
    int             outer_iterations = 0;
    int             evaluations      = 0;
};

/**
 * Projected quasi-Newton (BFGS) minimization of a scalar function over a box,
 * with central finite-difference gradients. Stops on a vanishing projected
 * gradient, a failed line search or when `max_evaluations` is spent.
 */
[[nodiscard]] Result minimize_box(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                                  const Box& box, int max_evaluations, const Options& options);

/**
 * Augmented Lagrangian for min f(x) s.t. g(x) <= 0, x in box. Each outer
 * iteration minimizes f + (rho/2) max(0, g + mu/rho)^2 - mu^2/(2 rho) with
 * minimize_box, then updates mu and grows rho when g did not shrink enough.
 * With `constrained` false a single unpenalized solve is performed.
 */
[[nodiscard]] Result minimize_augmented_lagrangian(const Problem& problem, const Eigen::VectorXd& x0, const Box& box,
                                                   bool constrained, const Options& options);

} // namespace sindympc::opt
