#include "sindympc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sindympc::opt {

Eigen::VectorXd Box::project(const Eigen::VectorXd& x) const {
    Eigen::VectorXd p(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        p[i] = std::clamp(x[i], lower[i], upper[i]);
    }
    return p;
}

namespace {

class CountedFunction {
public:
    CountedFunction(const std::function<double(const Eigen::VectorXd&)>& f, int budget) : f_(f), budget_(budget) {}

    double operator()(const Eigen::VectorXd& x) {
        ++count_;
        return f_(x);
    }
    [[nodiscard]] int  count() const { return count_; }
    [[nodiscard]] int  remaining() const { return budget_ - count_; }

private:
    const std::function<double(const Eigen::VectorXd&)>& f_;
    int                                                  budget_;
    int                                                  count_ = 0;
};

// Central differences; evaluation points may leave the box slightly.
bool gradient(CountedFunction& f, const Eigen::VectorXd& x, double rel_step, Eigen::VectorXd& g) {
    g.resize(x.size());
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = rel_step * std::max(1.0, std::abs(x[i]));
        probe[i]       = x[i] + h;
        const double fp = f(probe);
        probe[i]       = x[i] - h;
        const double fm = f(probe);
        probe[i]       = x[i];
        g[i]           = (fp - fm) / (2.0 * h);
    }
    return g.allFinite();
}

} // namespace

Result minimize_box(const std::function<double(const Eigen::VectorXd&)>& objective, const Eigen::VectorXd& x0,
                    const Box& box, int max_evaluations, const Options& options) {
    CountedFunction f(objective, max_evaluations);
    const auto      n = x0.size();

    Result result;
    Eigen::VectorXd x  = box.project(x0);
    double          fx = f(x);
    result.x           = x;
    result.value       = {fx, 0.0};
    if (!std::isfinite(fx)) {
        result.evaluations = f.count();
        return result;
    }

    Eigen::VectorXd g;
    if (!gradient(f, x, options.fd_step, g)) {
        result.evaluations = f.count();
        return result;
    }
    Eigen::MatrixXd h        = Eigen::MatrixXd::Identity(n, n);
    bool            identity = true;

    while (f.remaining() > 2 * n + 1) {
        // Variables pinned at a bound with the gradient pushing outward stay fixed.
        std::vector<bool> fixed(static_cast<std::size_t>(n));
        Eigen::VectorXd   pg = g;
        for (Eigen::Index i = 0; i < n; ++i) {
            fixed[static_cast<std::size_t>(i)] =
                (x[i] <= box.lower[i] && g[i] > 0.0) || (x[i] >= box.upper[i] && g[i] < 0.0);
            if (fixed[static_cast<std::size_t>(i)]) {
                pg[i] = 0.0;
            }
        }
        if (pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
            break;
        }
        Eigen::VectorXd d = -(h * pg);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (fixed[static_cast<std::size_t>(i)]) {
                d[i] = 0.0;
            }
        }
        if (d.dot(pg) >= 0.0) {
            d = -pg;
            h.setIdentity();
            identity = true;
        }

        double          alpha    = 1.0;
        bool            accepted = false;
        Eigen::VectorXd xn;
        double          fn = fx;
        while (f.remaining() > 2 * n) {
            xn = box.project(x + alpha * d);
            if ((xn - x).lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
                break;
            }
            fn = f(xn);
            if (fn <= fx + 1e-4 * g.dot(xn - x)) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (identity) {
                break;
            }
            h.setIdentity();
            identity = true;
            continue;
        }

        Eigen::VectorXd gn;
        if (!gradient(f, xn, options.fd_step, gn)) {
            x  = xn;
            fx = fn;
            break;
        }
        const Eigen::VectorXd s  = xn - x;
        const Eigen::VectorXd y  = gn - g;
        const double          sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm()) {
            if (identity) {
                h *= sy / y.squaredNorm();
            }
            const double          rho = 1.0 / sy;
            const Eigen::MatrixXd e   = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
            h                         = e * h * e.transpose() + rho * s * s.transpose();
            identity                  = false;
        }
        x  = xn;
        fx = fn;
        g  = gn;
    }

    result.x           = x;
    result.value       = {fx, 0.0};
    result.evaluations = f.count();
    return result;
}

Result minimize_augmented_lagrangian(const Problem& problem, const Eigen::VectorXd& x0, const Box& box,
                                     bool constrained, const Options& options) {
    Result result;
    result.x = box.project(x0);

    double multiplier = 0.0;
    double penalty    = options.initial_penalty;
    double last_violation = std::numeric_limits<double>::infinity();

    const int outer = constrained ? options.outer_iterations : 1;
    for (int k = 0; k < outer; ++k) {
        auto merit = [&](const Eigen::VectorXd& x) {
            const Evaluation e = problem(x);
            if (!constrained) {
                return e.objective;
            }
            if (!std::isfinite(e.objective) || !std::isfinite(e.violation)) {
                return std::numeric_limits<double>::infinity();
            }
            const double shifted = std::max(0.0, multiplier + penalty * e.violation);
            return e.objective + (shifted * shifted - multiplier * multiplier) / (2.0 * penalty);
        };
        const Result inner = minimize_box(merit, result.x, box, options.inner_evaluations, options);
        result.x           = inner.x;
        result.evaluations += inner.evaluations + 1;
        result.value = problem(result.x);
        result.outer_iterations = k + 1;
        if (!constrained) {
            break;
        }

        const double g = result.value.violation;
        if (!std::isfinite(g)) {
            break;
        }
        multiplier = std::max(0.0, multiplier + penalty * g);
        if (g > 0.0 && g > 0.25 * last_violation) {
            penalty *= options.penalty_growth;
        }
        last_violation = std::max(g, 0.0);
    }
    return result;
}

} // namespace sindympc::opt
