#include "sindympc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sindympc/errors.hpp"

namespace sindympc {

Trajectory::Trajectory(VectorXd times, MatrixXd states, MatrixXd inputs)
    : times_(std::move(times)), states_(std::move(states)), inputs_(std::move(inputs)) {
    const auto m = times_.size();
    if (m < 1) {
        throw ContractViolation("trajectory needs at least one row");
    }
    if (states_.rows() != m || inputs_.rows() != m) {
        throw ContractViolation("trajectory row counts differ: times " + std::to_string(m) + ", states " +
                                std::to_string(states_.rows()) + ", inputs " + std::to_string(inputs_.rows()));
    }
    if (m < 2) {
        return;
    }
    const double step = times_[1] - times_[0];
    // Grids are built as t0 + i*dt, so spacing only jitters at the ulp level of the largest time.
    const double tol = 1e-12 * std::max({std::abs(times_[0]), std::abs(times_[m - 1]), step});
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
        const double d = times_[i + 1] - times_[i];
        if (!(d > 0.0)) {
            throw ContractViolation("trajectory times must be strictly increasing");
        }
        if (std::abs(d - step) > tol) {
            throw ContractViolation("trajectory times are not uniformly spaced");
        }
    }
}

double Trajectory::dt() const noexcept {
    if (times_.size() < 2) {
        return 0.0;
    }
    return (times_[times_.size() - 1] - times_[0]) / static_cast<double>(times_.size() - 1);
}

Trajectory Trajectory::head(Eigen::Index count) const {
    if (count < 1 || count > rows()) {
        throw ContractViolation("trajectory head out of range");
    }
    return Trajectory(times_.head(count), states_.topRows(count), inputs_.topRows(count));
}

const Trajectory& Simulation::value() const {
    if (diverged_step) {
        throw IntegrationDiverged(*diverged_step, diverged_time);
    }
    return trajectory;
}

VectorXd ControlledSystem::operator()(double t, const VectorXd& x, const VectorXd& u) const {
    if (x.size() != state_dim || u.size() != input_dim) {
        throw ContractViolation("system called with x of size " + std::to_string(x.size()) + " and u of size " +
                                std::to_string(u.size()) + ", expected " + std::to_string(state_dim) + " and " +
                                std::to_string(input_dim));
    }
    VectorXd dx = rhs(t, x, u);
    if (dx.size() != state_dim) {
        throw ContractViolation("system rhs returned wrong dimension");
    }
    return dx;
}

void SeirParams::validate() const {
    if (!(beta0 > 0.0) || !(gamma > 0.0) || !(k > 0.0) || !std::isfinite(beta0) || !std::isfinite(gamma) ||
        !std::isfinite(k)) {
        throw InvalidSpec("SEIR parameters must be finite and positive");
    }
}

VectorXd seir_rhs(const VectorXd& x, double u, const SeirParams& p) {
    if (x.size() != 4) {
        throw ContractViolation("SEIR state must have 4 components");
    }
    const double s = x[0], e = x[1], i = x[2];
    const double infection = u * s * i;
    VectorXd dx(4);
    dx << -infection, infection - p.k * e, p.k * e - p.gamma * i, p.gamma * i;
    return dx;
}

ControlledSystem seir_system(const SeirParams& p) {
    p.validate();
    return ControlledSystem{4, 1, [p](double, const VectorXd& x, const VectorXd& u) { return seir_rhs(x, u[0], p); }};
}

VectorXd seir_default_x0() {
    VectorXd x0(4);
    x0 << 0.996, 0.002, 0.002, 0.0;
    return x0;
}

VectorXd rk4_step(const ControlledSystem& sys, double t, const VectorXd& x, const VectorXd& u, double dt) {
    const double half = 0.5 * dt;
    const VectorXd k1 = sys.rhs(t, x, u);
    const VectorXd k2 = sys.rhs(t + half, x + half * k1, u);
    const VectorXd k3 = sys.rhs(t + half, x + half * k2, u);
    const VectorXd k4 = sys.rhs(t + dt, x + dt * k3, u);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Simulation simulate_steps(const StepFunction& step, const VectorXd& x0, const MatrixXd& input, double dt,
                          std::size_t n_steps, double t0, double divergence_bound) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ContractViolation("step size must be positive");
    }
    if (n_steps > 0 && static_cast<std::size_t>(input.rows()) < n_steps) {
        throw ContractViolation("input has " + std::to_string(input.rows()) + " samples, " +
                                std::to_string(n_steps) + " steps requested");
    }
    if (input.rows() == 0) {
        throw ContractViolation("input signal is empty");
    }
    const auto rows = static_cast<Eigen::Index>(n_steps) + 1;
    VectorXd   times(rows);
    MatrixXd   states(rows, x0.size());
    MatrixXd   inputs(rows, input.cols());

    auto input_row = [&](Eigen::Index k) { return input.row(std::min<Eigen::Index>(k, input.rows() - 1)); };

    times[0]      = t0;
    states.row(0) = x0.transpose();
    inputs.row(0) = input_row(0);

    VectorXd x = x0;
    for (Eigen::Index k = 0; k < rows - 1; ++k) {
        const double   t = t0 + static_cast<double>(k) * dt;
        const VectorXd u = input_row(k).transpose();
        x                = step(t, x, u, dt);
        const bool finite = x.allFinite();
        if (!finite || x.cwiseAbs().maxCoeff() > divergence_bound) {
            Simulation sim;
            sim.trajectory    = Trajectory(times.head(k + 1), states.topRows(k + 1), inputs.topRows(k + 1));
            sim.diverged_step = static_cast<std::size_t>(k);
            sim.diverged_time = t + dt;
            return sim;
        }
        times[k + 1]      = t0 + static_cast<double>(k + 1) * dt;
        states.row(k + 1) = x.transpose();
        inputs.row(k + 1) = input_row(k + 1);
    }
    return Simulation{Trajectory(std::move(times), std::move(states), std::move(inputs)), std::nullopt, 0.0};
}

Simulation try_integrate_rk4(const ControlledSystem& sys, const VectorXd& x0, const MatrixXd& input, double dt,
                             std::size_t n_steps, double t0, double divergence_bound) {
    if (x0.size() != sys.state_dim || input.cols() != sys.input_dim) {
        throw ContractViolation("integrate_rk4: x0/input dimensions do not match the system");
    }
    return simulate_steps([&sys](double t, const VectorXd& x, const VectorXd& u,
                                 double h) { return rk4_step(sys, t, x, u, h); },
                          x0, input, dt, n_steps, t0, divergence_bound);
}

Trajectory integrate_rk4(const ControlledSystem& sys, const VectorXd& x0, const MatrixXd& input, double dt,
                         std::size_t n_steps, double t0, double divergence_bound) {
    return try_integrate_rk4(sys, x0, input, dt, n_steps, t0, divergence_bound).value();
}

MatrixXd exact_derivatives(const ControlledSystem& sys, const Trajectory& traj) {
    if (traj.state_dim() != sys.state_dim || traj.input_dim() != sys.input_dim) {
        throw ContractViolation("exact_derivatives: trajectory does not conform to the system");
    }
    MatrixXd dx(traj.rows(), traj.state_dim());
    for (Eigen::Index i = 0; i < traj.rows(); ++i) {
        dx.row(i) = sys(traj.times()[i], traj.states().row(i).transpose(), traj.inputs().row(i).transpose())
                        .transpose();
    }
    return dx;
}

MatrixXd central_differences(const Trajectory& traj) {
    const auto m = traj.rows();
    if (m < 3) {
        throw InsufficientData("central differences need at least 3 samples, got " + std::to_string(m));
    }
    const double    h2 = 2.0 * traj.dt();
    const MatrixXd& x  = traj.states();
    MatrixXd        dx(m, x.cols());
    dx.row(0) = (-3.0 * x.row(0) + 4.0 * x.row(1) - x.row(2)) / h2;
    for (Eigen::Index i = 1; i + 1 < m; ++i) {
        dx.row(i) = (x.row(i + 1) - x.row(i - 1)) / h2;
    }
    dx.row(m - 1) = (3.0 * x.row(m - 1) - 4.0 * x.row(m - 2) + x.row(m - 3)) / h2;
    return dx;
}

} // namespace sindympc
