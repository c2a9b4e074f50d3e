#include "sindympc/predictor.hpp"

#include <cmath>

#include "sindympc/errors.hpp"

namespace sindympc {

SystemPredictor::SystemPredictor(ControlledSystem sys, std::string name) : sys_(std::move(sys)), name_(std::move(name)) {}

Simulation SystemPredictor::simulate(const Eigen::VectorXd& x0, const Eigen::MatrixXd& input, double dt,
                                     std::size_t n_steps, double t0, double divergence_bound) const {
    return try_integrate_rk4(sys_, x0, input, dt, n_steps, t0, divergence_bound);
}

SparsePredictor::SparsePredictor(sysid::SparseModel model) : model_(std::move(model)) {
    model_.validate();
    if (model_.domain == sysid::TimeDomain::continuous) {
        compiled_ = sysid::as_system(model_);
    }
}

Simulation SparsePredictor::simulate(const Eigen::VectorXd& x0, const Eigen::MatrixXd& input, double dt,
                                     std::size_t n_steps, double t0, double divergence_bound) const {
    if (model_.domain == sysid::TimeDomain::continuous) {
        return try_integrate_rk4(compiled_, x0, input, dt, n_steps, t0, divergence_bound);
    }
    return sysid::try_simulate_sparse(model_, x0, input, dt, n_steps, t0, divergence_bound);
}

LinearPredictor::LinearPredictor(sysid::LinearDiscreteModel model) : model_(std::move(model)) { model_.validate(); }

Simulation LinearPredictor::simulate(const Eigen::VectorXd& x0, const Eigen::MatrixXd& input, double dt,
                                     std::size_t n_steps, double t0, double divergence_bound) const {
    if (std::abs(dt - model_.dt) > 1e-9 * std::max(1.0, model_.dt)) {
        throw ContractViolation("linear model sampled at " + std::to_string(model_.dt) +
                                " days cannot predict with dt = " + std::to_string(dt));
    }
    return sysid::try_simulate_linear(model_, x0, input, n_steps, t0, divergence_bound);
}

} // namespace sindympc
