#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sindympc/dynamics.hpp"
#include "sindympc/features.hpp"

namespace sindympc::sysid {

enum class TimeDomain { continuous, discrete };

/**
 * @brief Sparse regression model dx/dt = Theta(x, u) * xi (or x+ = Theta * xi).
 *
 * Column k of `xi` holds the coefficients of state k. Discrete-domain models
 * map a state to the next sample `dt` days later.
 */
struct SparseModel {
    features::FeatureLibrary library;
    Eigen::MatrixXd          xi;
    double                   lambda = 0.0;
    TimeDomain               domain = TimeDomain::continuous;
    double                   dt     = 0.0; ///< sample time for discrete models
    std::vector<std::string> names;        ///< one per library variable

    [[nodiscard]] Eigen::Index state_dim() const noexcept { return library.state_dim(); }
    [[nodiscard]] Eigen::Index input_dim() const noexcept { return library.input_dim(); }
    [[nodiscard]] Eigen::Index active_terms() const;
    /// Theta(x, u) * xi, restricted to the nonzero rows of xi.
    [[nodiscard]] Eigen::VectorXd rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    /// Throws ContractViolation when shapes disagree.
    void validate() const;
};

/// x+ = a x + b u, sampled every `dt` days.
struct LinearDiscreteModel {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    double          dt = 0.0;

    [[nodiscard]] double spectral_radius() const;
    void                 validate() const;
};

/// Singular values at or below this fraction of the largest are treated as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Minimum-norm least-squares solution of theta * c = target (SVD based).
[[nodiscard]] Eigen::MatrixXd least_squares(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& target);

struct StlsResult {
    Eigen::MatrixXd           xi;
    std::vector<Eigen::Index> empty_states; ///< states whose every coefficient was thresholded away
    std::vector<int>          sweeps;       ///< threshold-and-refit sweeps per state
    std::vector<int>          pruned;       ///< redundant columns removed per state
};

/**
 * @brief Sequentially thresholded least squares, one state column at a time.
 *
 * Each state column starts from the full library and repeats:
 *  1. minimum-norm least squares on the active columns;
 *  2. if those columns are linearly dependent, drop the dependent column with
 *     the smallest coefficient magnitude (this leaves the column span, and so the
 *     residual, unchanged) and go back to 1;
 *  3. otherwise zero every coefficient below `lambda`; stop when none was
 *     zeroed or after `max_iter` sweeps.
 *
 * Step 2 only runs when lambda > 0, so lambda == 0 reproduces least_squares().
 * Without it, exactly conserved quantities in the data (S+E+I+R = 1) make the
 * minimum-norm solution spread a single true term over its aliases. State
 * columns are solved in parallel (OpenMP).
 */
[[nodiscard]] StlsResult stls(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& xdot, double lambda,
                              int max_iter = 10);

/// Single-threaded reference for stls(); results are bit-identical.
[[nodiscard]] StlsResult stls_serial(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& xdot, double lambda,
                                     int max_iter = 10);

enum class DerivativeMode { exact, central_differences };

struct SindyFit {
    SparseModel              model;
    StlsResult               regression;
    std::vector<std::string> warnings;
};

/// build_library -> evaluate -> stls with caller-supplied derivatives.
[[nodiscard]] SindyFit fit_sindy(const Trajectory& traj, const Eigen::MatrixXd& derivatives, int order,
                                 double lambda, int max_iter = 10);

/// As above; derivatives from `sys` (exact) or from central differences of the states.
[[nodiscard]] SindyFit fit_sindy(const Trajectory& traj, const ControlledSystem& sys, DerivativeMode mode,
                                 int order, double lambda, int max_iter = 10);

/// Regresses x_{i+1} on Theta(x_i, u_i). With a linear library without constant and
/// lambda = 0 this is exactly DMD with control.
[[nodiscard]] SindyFit fit_sindy_discrete(const Trajectory& traj, int order, double lambda,
                                          bool include_constant = true, int max_iter = 10);

/// Least-squares fit of X' = A X + B U over consecutive snapshot pairs.
[[nodiscard]] LinearDiscreteModel fit_dmdc(const Trajectory& traj);

/// The continuous-domain model as an ordinary controlled system.
[[nodiscard]] ControlledSystem as_system(const SparseModel& model);

/// RK4 for continuous models; direct iteration for discrete ones (dt must match).
[[nodiscard]] Simulation try_simulate_sparse(const SparseModel& model, const Eigen::VectorXd& x0,
                                             const Eigen::MatrixXd& input, double dt, std::size_t n_steps,
                                             double t0 = 0.0,
                                             double divergence_bound = std::numeric_limits<double>::infinity());
[[nodiscard]] Trajectory simulate_sparse(const SparseModel& model, const Eigen::VectorXd& x0,
                                         const Eigen::MatrixXd& input, double dt, std::size_t n_steps,
                                         double t0 = 0.0,
                                         double divergence_bound = std::numeric_limits<double>::infinity());

/// Default magnitude at which linear predictions are declared diverged.
inline constexpr double kLinearDivergenceBound = 1e6;

[[nodiscard]] Simulation try_simulate_linear(const LinearDiscreteModel& model, const Eigen::VectorXd& x0,
                                             const Eigen::MatrixXd& input, std::size_t n_steps, double t0 = 0.0,
                                             double divergence_bound = kLinearDivergenceBound);
[[nodiscard]] Trajectory simulate_linear(const LinearDiscreteModel& model, const Eigen::VectorXd& x0,
                                         const Eigen::MatrixXd& input, std::size_t n_steps, double t0 = 0.0,
                                         double divergence_bound = kLinearDivergenceBound);

struct RmseReport {
    double      rmse      = 0.0;
    std::size_t samples   = 0;
    bool        saturated = false; ///< prediction stopped early or held non-finite values
};

/**
 * RMSE of one state component over the samples the prediction covers. The
 * prediction may be a prefix of the truth's grid (a diverged simulation);
 * missing or non-finite samples set `saturated` instead of poisoning the value.
 */
[[nodiscard]] RmseReport prediction_rmse(const Trajectory& predicted, const Trajectory& truth,
                                         Eigen::Index component);

} // namespace sindympc::sysid
