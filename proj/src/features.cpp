#include "sindympc/features.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "sindympc/errors.hpp"

namespace sindympc::features {

namespace {

// All exponent vectors of `vars` entries summing to exactly `degree`, in
// descending lexicographic order.
void enumerate_degree(int vars, int degree, std::vector<Exponents>& out) {
    Exponents current(static_cast<std::size_t>(vars), 0);
    std::function<void(int, int)> fill = [&](int index, int remaining) {
        if (index == vars - 1) {
            current[static_cast<std::size_t>(index)] = remaining;
            out.push_back(current);
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            current[static_cast<std::size_t>(index)] = e;
            fill(index + 1, remaining - e);
        }
    };
    fill(0, degree);
}

void check_inputs(const FeatureLibrary& lib, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u) {
    if (x.rows() != u.rows()) {
        throw ContractViolation("library evaluation: X and U row counts differ");
    }
    if (x.cols() != lib.state_dim() || u.cols() != lib.input_dim()) {
        throw ContractViolation("library evaluation: column counts do not match the library dimensions");
    }
}

// Θ row for z, using a per-variable power table so each monomial is a product
// of at most n+q table lookups.
template <typename RowOut>
void fill_row(const FeatureLibrary& lib, const double* z, double* powers, RowOut&& out) {
    const int vars  = lib.variable_count();
    const int order = lib.max_order();
    for (int v = 0; v < vars; ++v) {
        double* p = powers + v * (order + 1);
        p[0]      = 1.0;
        for (int e = 1; e <= order; ++e) {
            p[e] = p[e - 1] * z[v];
        }
    }
    const auto& terms = lib.terms();
    for (std::size_t j = 0; j < terms.size(); ++j) {
        double value = 1.0;
        for (int v = 0; v < vars; ++v) {
            const int e = terms[j][static_cast<std::size_t>(v)];
            if (e != 0) {
                value *= powers[v * (order + 1) + e];
            }
        }
        out(static_cast<Eigen::Index>(j), value);
    }
}

void evaluate_rows(const FeatureLibrary& lib, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u,
                   Eigen::Index begin, Eigen::Index end, Eigen::MatrixXd& theta) {
    const int           vars = lib.variable_count();
    std::vector<double> z(static_cast<std::size_t>(vars));
    std::vector<double> powers(static_cast<std::size_t>(vars * (lib.max_order() + 1)));
    for (Eigen::Index i = begin; i < end; ++i) {
        for (int v = 0; v < lib.state_dim(); ++v) {
            z[static_cast<std::size_t>(v)] = x(i, v);
        }
        for (int v = 0; v < lib.input_dim(); ++v) {
            z[static_cast<std::size_t>(lib.state_dim() + v)] = u(i, v);
        }
        fill_row(lib, z.data(), powers.data(), [&](Eigen::Index j, double value) { theta(i, j) = value; });
    }
}

} // namespace

FeatureLibrary::FeatureLibrary(int state_dim, int input_dim, int max_order, bool include_constant)
    : state_dim_(state_dim), input_dim_(input_dim), max_order_(max_order), include_constant_(include_constant) {
    if (state_dim < 1 || input_dim < 0 || max_order < 0) {
        throw ContractViolation("library needs state_dim >= 1, input_dim >= 0, order >= 0");
    }
    if (!include_constant && max_order < 1) {
        throw ContractViolation("library without constant needs order >= 1");
    }
    const int vars = state_dim + input_dim;
    for (int degree = include_constant ? 0 : 1; degree <= max_order; ++degree) {
        enumerate_degree(vars, degree, terms_);
    }
}

FeatureLibrary build_library(int state_dim, int input_dim, int order, bool include_constant) {
    return FeatureLibrary(state_dim, input_dim, order, include_constant);
}

std::size_t monomial_count(int variables, int order) {
    // C(variables + order, order), computed incrementally to stay exact.
    std::size_t c = 1;
    for (int i = 1; i <= order; ++i) {
        c = c * static_cast<std::size_t>(variables + i) / static_cast<std::size_t>(i);
    }
    return c;
}

Eigen::MatrixXd evaluate_serial(const FeatureLibrary& lib, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u) {
    check_inputs(lib, x, u);
    Eigen::MatrixXd theta(x.rows(), lib.size());
    evaluate_rows(lib, x, u, 0, x.rows(), theta);
    return theta;
}

Eigen::MatrixXd evaluate(const FeatureLibrary& lib, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u) {
    check_inputs(lib, x, u);
    const Eigen::Index m = x.rows();
    Eigen::MatrixXd    theta(m, lib.size());
    constexpr Eigen::Index kBlock = 64;
    const Eigen::Index     blocks = (m + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < blocks; ++b) {
        evaluate_rows(lib, x, u, b * kBlock, std::min(m, (b + 1) * kBlock), theta);
    }
    return theta;
}

Eigen::RowVectorXd evaluate_row(const FeatureLibrary& lib, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    if (x.size() != lib.state_dim() || u.size() != lib.input_dim()) {
        throw ContractViolation("library row evaluation: dimension mismatch");
    }
    Eigen::VectorXd z(lib.variable_count());
    z << x, u;
    std::vector<double> powers(static_cast<std::size_t>(lib.variable_count() * (lib.max_order() + 1)));
    Eigen::RowVectorXd  row(lib.size());
    fill_row(lib, z.data(), powers.data(), [&](Eigen::Index j, double value) { row[j] = value; });
    return row;
}

std::string term_name(const FeatureLibrary& lib, Eigen::Index j, const std::vector<std::string>& names) {
    if (j < 0 || j >= lib.size()) {
        throw ContractViolation("term index " + std::to_string(j) + " out of range");
    }
    if (static_cast<int>(names.size()) != lib.variable_count()) {
        throw ContractViolation("term_name needs one name per library variable");
    }
    const auto& e = lib.terms()[static_cast<std::size_t>(j)];
    std::string out;
    for (std::size_t v = 0; v < e.size(); ++v) {
        if (e[v] == 0) {
            continue;
        }
        if (!out.empty()) {
            out += '*';
        }
        out += names[v];
        if (e[v] > 1) {
            out += '^' + std::to_string(e[v]);
        }
    }
    return out.empty() ? "1" : out;
}

std::vector<std::string> default_names(int state_dim, int input_dim) {
    std::vector<std::string> names;
    for (int i = 1; i <= state_dim; ++i) {
        names.push_back("x" + std::to_string(i));
    }
    for (int i = 1; i <= input_dim; ++i) {
        names.push_back("u" + std::to_string(i));
    }
    return names;
}

std::vector<std::string> seir_names() { return {"S", "E", "I", "R", "u"}; }

} // namespace sindympc::features
