#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "sindympc/dynamics.hpp"
#include "sindympc/sysid.hpp"

namespace sindympc {

/**
 * @brief Common contract for every model the controller can use:
 * initial state + held input sequence -> trajectory.
 *
 * Implementations must be free of side effects so that concurrent calls are safe.
 */
class Predictor {
public:
    virtual ~Predictor() = default;

    [[nodiscard]] virtual Eigen::Index state_dim() const = 0;
    [[nodiscard]] virtual Eigen::Index input_dim() const = 0;
    [[nodiscard]] virtual std::string  name() const      = 0;

    /// `input` row k is held over step k. Divergence is reported, not thrown.
    [[nodiscard]] virtual Simulation simulate(const Eigen::VectorXd& x0, const Eigen::MatrixXd& input, double dt,
                                              std::size_t n_steps, double t0, double divergence_bound) const = 0;
};

/// Known dynamics integrated with RK4 (the oracle predictor).
class SystemPredictor final : public Predictor {
public:
    explicit SystemPredictor(ControlledSystem sys, std::string name = "system");

    [[nodiscard]] Eigen::Index state_dim() const override { return sys_.state_dim; }
    [[nodiscard]] Eigen::Index input_dim() const override { return sys_.input_dim; }
    [[nodiscard]] std::string  name() const override { return name_; }
    [[nodiscard]] Simulation   simulate(const Eigen::VectorXd& x0, const Eigen::MatrixXd& input, double dt,
                                        std::size_t n_steps, double t0, double divergence_bound) const override;

private:
    ControlledSystem sys_;
    std::string      name_;
};

class SparsePredictor final : public Predictor {
public:
    explicit SparsePredictor(sysid::SparseModel model);

    [[nodiscard]] Eigen::Index state_dim() const override { return model_.state_dim(); }
    [[nodiscard]] Eigen::Index input_dim() const override { return model_.input_dim(); }
    [[nodiscard]] std::string  name() const override { return "sindy"; }
    [[nodiscard]] Simulation   simulate(const Eigen::VectorXd& x0, const Eigen::MatrixXd& input, double dt,
                                        std::size_t n_steps, double t0, double divergence_bound) const override;

    [[nodiscard]] const sysid::SparseModel& model() const noexcept { return model_; }

private:
    sysid::SparseModel model_;
    ControlledSystem   compiled_; ///< continuous models only
};

/// Discrete model; the requested dt must equal the model's sample time.
class LinearPredictor final : public Predictor {
public:
    explicit LinearPredictor(sysid::LinearDiscreteModel model);

    [[nodiscard]] Eigen::Index state_dim() const override { return model_.a.rows(); }
    [[nodiscard]] Eigen::Index input_dim() const override { return model_.b.cols(); }
    [[nodiscard]] std::string  name() const override { return "dmdc"; }
    [[nodiscard]] Simulation   simulate(const Eigen::VectorXd& x0, const Eigen::MatrixXd& input, double dt,
                                        std::size_t n_steps, double t0, double divergence_bound) const override;

    [[nodiscard]] const sysid::LinearDiscreteModel& model() const noexcept { return model_; }

private:
    sysid::LinearDiscreteModel model_;
};

} // namespace sindympc
