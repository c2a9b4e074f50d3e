#include "sindympc/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sindympc/errors.hpp"

namespace sindympc::sysid {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) {
        throw InvalidData(std::string(what) + " contains non-finite entries");
    }
}

/// Minimum-norm solve through an existing SVD; returns the numerical rank.
Eigen::Index svd_solve(const Eigen::BDCSVD<Eigen::MatrixXd>& svd, const Eigen::MatrixXd& rhs,
                       Eigen::MatrixXd& out) {
    const Eigen::VectorXd& s    = svd.singularValues();
    const double           smax = s.size() > 0 ? s[0] : 0.0;
    Eigen::Index           rank = 0;
    while (rank < s.size() && smax > 0.0 && s[rank] > kRankTolerance * smax) {
        ++rank;
    }
    const Eigen::MatrixXd& u = svd.matrixU();
    const Eigen::MatrixXd& v = svd.matrixV();
    Eigen::MatrixXd        projected = u.leftCols(rank).transpose() * rhs;
    for (Eigen::Index r = 0; r < rank; ++r) {
        projected.row(r) /= s[r];
    }
    out = v.leftCols(rank) * projected;
    return rank;
}

struct ColumnFit {
    Eigen::VectorXd xi;
    int             sweeps = 0;
    int             pruned = 0;
};

ColumnFit stls_column(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y, double lambda, int max_iter) {
    const Eigen::Index        p = theta.cols();
    std::vector<Eigen::Index> active(static_cast<std::size_t>(p));
    std::iota(active.begin(), active.end(), Eigen::Index{0});

    ColumnFit fit;
    fit.xi = Eigen::VectorXd::Zero(p);

    while (!active.empty()) {
        const auto      k = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd a(theta.rows(), k);
        for (Eigen::Index j = 0; j < k; ++j) {
            a.col(j) = theta.col(active[static_cast<std::size_t>(j)]);
        }
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
        Eigen::MatrixXd                c;
        const Eigen::Index             rank = svd_solve(svd, y, c);

        if (lambda > 0.0 && rank < k) {
            // Drop the weakest column that takes part in a linear dependency.
            const Eigen::MatrixXd& v      = svd.matrixV();
            Eigen::Index           drop   = -1;
            double                 weakest = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < k; ++j) {
                if (v.row(j).tail(k - rank).norm() <= 1e-8) {
                    continue;
                }
                const double mag = std::abs(c(j, 0));
                if (mag <= weakest) {
                    weakest = mag;
                    drop    = j;
                }
            }
            active.erase(active.begin() + drop);
            ++fit.pruned;
            continue;
        }

        ++fit.sweeps;
        std::vector<Eigen::Index> keep;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (std::abs(c(j, 0)) >= lambda) {
                keep.push_back(j);
            }
        }
        if (static_cast<Eigen::Index>(keep.size()) == k || fit.sweeps >= max_iter) {
            for (Eigen::Index j : keep) {
                fit.xi[active[static_cast<std::size_t>(j)]] = c(j, 0);
            }
            return fit;
        }
        std::vector<Eigen::Index> next;
        next.reserve(keep.size());
        for (Eigen::Index j : keep) {
            next.push_back(active[static_cast<std::size_t>(j)]);
        }
        active = std::move(next);
    }
    return fit;
}

void check_stls_args(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& xdot, double lambda, int max_iter) {
    if (theta.rows() != xdot.rows()) {
        throw ContractViolation("stls: theta and derivative row counts differ");
    }
    if (theta.rows() < 1 || theta.cols() < 1) {
        throw ContractViolation("stls: empty regression problem");
    }
    if (!(lambda >= 0.0) || max_iter < 1) {
        throw ContractViolation("stls: need lambda >= 0 and max_iter >= 1");
    }
    require_finite(theta, "library matrix");
    require_finite(xdot, "derivative matrix");
}

StlsResult assemble(std::vector<ColumnFit>& columns, Eigen::Index p) {
    StlsResult result;
    result.xi.resize(p, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        result.xi.col(static_cast<Eigen::Index>(k)) = columns[k].xi;
        result.sweeps.push_back(columns[k].sweeps);
        result.pruned.push_back(columns[k].pruned);
        if ((columns[k].xi.array() == 0.0).all()) {
            result.empty_states.push_back(static_cast<Eigen::Index>(k));
        }
    }
    return result;
}

// Active-term evaluator shared by as_system() and the discrete simulator.
class CompiledModel {
public:
    explicit CompiledModel(const SparseModel& model)
        : vars_(model.library.variable_count()), order_(model.library.max_order()), n_(model.state_dim()) {
        for (Eigen::Index j = 0; j < model.xi.rows(); ++j) {
            if ((model.xi.row(j).array() != 0.0).any()) {
                terms_.push_back(model.library.terms()[static_cast<std::size_t>(j)]);
                coefficients_.push_back(model.xi.row(j).transpose());
            }
        }
    }

    [[nodiscard]] Eigen::VectorXd operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
        double powers[64];
        std::vector<double> heap;
        double* table = powers;
        const int cells = vars_ * (order_ + 1);
        if (cells > 64) {
            heap.resize(static_cast<std::size_t>(cells));
            table = heap.data();
        }
        for (int v = 0; v < vars_; ++v) {
            const double z = v < n_ ? x[v] : u[v - n_];
            double*      p = table + v * (order_ + 1);
            p[0]           = 1.0;
            for (int e = 1; e <= order_; ++e) {
                p[e] = p[e - 1] * z;
            }
        }
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            double value = 1.0;
            for (int v = 0; v < vars_; ++v) {
                const int e = terms_[t][static_cast<std::size_t>(v)];
                if (e != 0) {
                    value *= table[v * (order_ + 1) + e];
                }
            }
            out += value * coefficients_[t];
        }
        return out;
    }

private:
    int                                 vars_;
    int                                 order_;
    int                                 n_;
    std::vector<features::Exponents>    terms_;
    std::vector<Eigen::VectorXd>        coefficients_;
};

SindyFit finish_fit(features::FeatureLibrary lib, StlsResult reg, double lambda, TimeDomain domain, double dt,
                    Eigen::Index rows) {
    SindyFit fit;
    fit.model.library = std::move(lib);
    fit.model.xi      = reg.xi;
    fit.model.lambda  = lambda;
    fit.model.domain  = domain;
    fit.model.dt      = dt;
    fit.model.names   = fit.model.library.state_dim() == 4 && fit.model.library.input_dim() == 1
                            ? features::seir_names()
                            : features::default_names(fit.model.library.state_dim(), fit.model.library.input_dim());
    if (rows < fit.model.library.size()) {
        fit.warnings.push_back("only " + std::to_string(rows) + " samples for " +
                               std::to_string(fit.model.library.size()) + " library terms");
    }
    for (Eigen::Index k : reg.empty_states) {
        fit.warnings.push_back("empty model for state " + fit.model.names[static_cast<std::size_t>(k)] +
                               ": every coefficient fell below lambda");
    }
    fit.regression = std::move(reg);
    return fit;
}

} // namespace

Eigen::Index SparseModel::active_terms() const { return (xi.array() != 0.0).count(); }

Eigen::VectorXd SparseModel::rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return CompiledModel(*this)(x, u);
}

void SparseModel::validate() const {
    if (xi.rows() != library.size() || xi.cols() != library.state_dim()) {
        throw ContractViolation("sparse model: xi must be (library terms) x (state dim)");
    }
    if (!names.empty() && static_cast<int>(names.size()) != library.variable_count()) {
        throw ContractViolation("sparse model: one name per library variable required");
    }
    if (domain == TimeDomain::discrete && !(dt > 0.0)) {
        throw ContractViolation("discrete sparse model needs dt > 0");
    }
}

double LinearDiscreteModel::spectral_radius() const {
    const Eigen::EigenSolver<Eigen::MatrixXd> eig(a, false);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

void LinearDiscreteModel::validate() const {
    if (a.rows() != a.cols() || b.rows() != a.rows() || !(dt > 0.0)) {
        throw ContractViolation("linear model: need square A, B with matching rows, dt > 0");
    }
}

Eigen::MatrixXd least_squares(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& target) {
    if (theta.rows() < 1 || theta.cols() < 1) {
        throw ContractViolation("least_squares: empty system");
    }
    if (theta.rows() != target.rows()) {
        throw ContractViolation("least_squares: row counts differ");
    }
    require_finite(theta, "least-squares matrix");
    require_finite(target, "least-squares target");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(theta, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd                out;
    svd_solve(svd, target, out);
    return out;
}

StlsResult stls_serial(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& xdot, double lambda, int max_iter) {
    check_stls_args(theta, xdot, lambda, max_iter);
    std::vector<ColumnFit> columns(static_cast<std::size_t>(xdot.cols()));
    for (Eigen::Index k = 0; k < xdot.cols(); ++k) {
        columns[static_cast<std::size_t>(k)] = stls_column(theta, xdot.col(k), lambda, max_iter);
    }
    return assemble(columns, theta.cols());
}

StlsResult stls(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& xdot, double lambda, int max_iter) {
    check_stls_args(theta, xdot, lambda, max_iter);
    std::vector<ColumnFit> columns(static_cast<std::size_t>(xdot.cols()));
    const Eigen::Index     n = xdot.cols();
#pragma omp parallel for schedule(dynamic, 1)
    for (Eigen::Index k = 0; k < n; ++k) {
        columns[static_cast<std::size_t>(k)] = stls_column(theta, xdot.col(k), lambda, max_iter);
    }
    return assemble(columns, theta.cols());
}

SindyFit fit_sindy(const Trajectory& traj, const Eigen::MatrixXd& derivatives, int order, double lambda,
                   int max_iter) {
    if (derivatives.rows() != traj.rows() || derivatives.cols() != traj.state_dim()) {
        throw ContractViolation("fit_sindy: derivative matrix does not match the trajectory");
    }
    auto lib   = features::build_library(static_cast<int>(traj.state_dim()), static_cast<int>(traj.input_dim()), order);
    auto theta = features::evaluate(lib, traj.states(), traj.inputs());
    auto reg   = stls(theta, derivatives, lambda, max_iter);
    return finish_fit(std::move(lib), std::move(reg), lambda, TimeDomain::continuous, 0.0, traj.rows());
}

SindyFit fit_sindy(const Trajectory& traj, const ControlledSystem& sys, DerivativeMode mode, int order,
                   double lambda, int max_iter) {
    const Eigen::MatrixXd dx =
        mode == DerivativeMode::exact ? exact_derivatives(sys, traj) : central_differences(traj);
    return fit_sindy(traj, dx, order, lambda, max_iter);
}

SindyFit fit_sindy_discrete(const Trajectory& traj, int order, double lambda, bool include_constant,
                            int max_iter) {
    const Eigen::Index m = traj.rows();
    if (m < 2) {
        throw InsufficientData("discrete SINDy needs at least 2 snapshots");
    }
    auto lib   = features::build_library(static_cast<int>(traj.state_dim()), static_cast<int>(traj.input_dim()),
                                         order, include_constant);
    auto theta = features::evaluate(lib, traj.states().topRows(m - 1), traj.inputs().topRows(m - 1));
    auto reg   = stls(theta, traj.states().bottomRows(m - 1), lambda, max_iter);
    return finish_fit(std::move(lib), std::move(reg), lambda, TimeDomain::discrete, traj.dt(), m - 1);
}

LinearDiscreteModel fit_dmdc(const Trajectory& traj) {
    const Eigen::Index m = traj.rows();
    if (m < 2) {
        throw InsufficientData("DMDc needs at least 2 snapshots, got " + std::to_string(m));
    }
    const Eigen::Index n = traj.state_dim();
    const Eigen::Index q = traj.input_dim();
    Eigen::MatrixXd    omega(m - 1, n + q);
    omega << traj.states().topRows(m - 1), traj.inputs().topRows(m - 1);
    const Eigen::MatrixXd g = least_squares(omega, traj.states().bottomRows(m - 1));
    LinearDiscreteModel   model;
    model.a  = g.topRows(n).transpose();
    model.b  = g.bottomRows(q).transpose();
    model.dt = traj.dt();
    return model;
}

ControlledSystem as_system(const SparseModel& model) {
    model.validate();
    if (model.domain != TimeDomain::continuous) {
        throw ContractViolation("as_system needs a continuous-time model");
    }
    auto compiled = std::make_shared<const CompiledModel>(model);
    return ControlledSystem{model.state_dim(), model.input_dim(),
                            [compiled](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
                                return (*compiled)(x, u);
                            }};
}

Simulation try_simulate_sparse(const SparseModel& model, const Eigen::VectorXd& x0, const Eigen::MatrixXd& input,
                               double dt, std::size_t n_steps, double t0, double divergence_bound) {
    model.validate();
    if (x0.size() != model.state_dim() || input.cols() != model.input_dim()) {
        throw ContractViolation("simulate_sparse: x0/input dimensions do not match the model");
    }
    if (model.domain == TimeDomain::continuous) {
        return try_integrate_rk4(as_system(model), x0, input, dt, n_steps, t0, divergence_bound);
    }
    if (std::abs(dt - model.dt) > 1e-12 * std::max(1.0, model.dt)) {
        throw ContractViolation("discrete model sampled at " + std::to_string(model.dt) + " days, asked for " +
                                std::to_string(dt));
    }
    auto compiled = std::make_shared<const CompiledModel>(model);
    return simulate_steps([compiled](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                     double) { return (*compiled)(x, u); },
                          x0, input, dt, n_steps, t0, divergence_bound);
}

Trajectory simulate_sparse(const SparseModel& model, const Eigen::VectorXd& x0, const Eigen::MatrixXd& input,
                           double dt, std::size_t n_steps, double t0, double divergence_bound) {
    return try_simulate_sparse(model, x0, input, dt, n_steps, t0, divergence_bound).value();
}

Simulation try_simulate_linear(const LinearDiscreteModel& model, const Eigen::VectorXd& x0,
                               const Eigen::MatrixXd& input, std::size_t n_steps, double t0,
                               double divergence_bound) {
    model.validate();
    if (x0.size() != model.a.rows() || input.cols() != model.b.cols()) {
        throw ContractViolation("simulate_linear: x0/input dimensions do not match the model");
    }
    return simulate_steps([&model](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                   double) -> Eigen::VectorXd { return model.a * x + model.b * u; },
                          x0, input, model.dt, n_steps, t0, divergence_bound);
}

Trajectory simulate_linear(const LinearDiscreteModel& model, const Eigen::VectorXd& x0, const Eigen::MatrixXd& input,
                           std::size_t n_steps, double t0, double divergence_bound) {
    return try_simulate_linear(model, x0, input, n_steps, t0, divergence_bound).value();
}

RmseReport prediction_rmse(const Trajectory& predicted, const Trajectory& truth, Eigen::Index component) {
    if (component < 0 || component >= truth.state_dim() || predicted.state_dim() != truth.state_dim()) {
        throw ContractViolation("prediction_rmse: component out of range");
    }
    if (predicted.rows() > truth.rows()) {
        throw ContractViolation("prediction_rmse: grid mismatch (prediction longer than truth)");
    }
    RmseReport report;
    report.saturated = predicted.rows() < truth.rows();
    double sum       = 0.0;
    for (Eigen::Index i = 0; i < predicted.rows(); ++i) {
        const double tp = predicted.times()[i];
        const double tt = truth.times()[i];
        if (std::abs(tp - tt) > 1e-9 * std::max(1.0, std::abs(tt))) {
            throw ContractViolation("prediction_rmse: grid mismatch at row " + std::to_string(i));
        }
        const double e = predicted.states()(i, component) - truth.states()(i, component);
        if (!std::isfinite(e)) {
            report.saturated = true;
            continue;
        }
        sum += e * e;
        ++report.samples;
    }
    report.rmse = report.samples > 0 ? std::sqrt(sum / static_cast<double>(report.samples)) : 0.0;
    return report;
}

} // namespace sindympc::sysid
