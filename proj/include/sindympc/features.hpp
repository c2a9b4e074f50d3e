#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sindympc::features {

using Exponents = std::vector<int>;

/**
 * @brief Polynomial candidate library over z = [x; u].
 *
 * Terms are the distinct monomials of total degree <= max_order, graded by
 * degree and, within a degree, in descending lexicographic order of the
 * exponent vector (state variables before inputs). For n=1, q=1, order 2 the
 * columns are {1, x, u, x^2, x*u, u^2}. A lower-order library is always a
 * prefix of a higher-order one.
 */
class FeatureLibrary {
public:
    FeatureLibrary() = default;
    FeatureLibrary(int state_dim, int input_dim, int max_order, bool include_constant = true);

    [[nodiscard]] int  state_dim() const noexcept { return state_dim_; }
    [[nodiscard]] int  input_dim() const noexcept { return input_dim_; }
    [[nodiscard]] int  max_order() const noexcept { return max_order_; }
    [[nodiscard]] bool include_constant() const noexcept { return include_constant_; }
    [[nodiscard]] int  variable_count() const noexcept { return state_dim_ + input_dim_; }

    [[nodiscard]] const std::vector<Exponents>& terms() const noexcept { return terms_; }
    [[nodiscard]] Eigen::Index                  size() const noexcept { return static_cast<Eigen::Index>(terms_.size()); }

    bool operator==(const FeatureLibrary&) const = default;

private:
    int                    state_dim_        = 0;
    int                    input_dim_        = 0;
    int                    max_order_        = 0;
    bool                   include_constant_ = true;
    std::vector<Exponents> terms_;
};

[[nodiscard]] FeatureLibrary build_library(int state_dim, int input_dim, int order, bool include_constant = true);

/// C(n + d, d): number of monomials of degree <= d in n variables.
[[nodiscard]] std::size_t monomial_count(int variables, int order);

/// Theta for the rows of [X U]. Rows are evaluated in parallel (OpenMP).
[[nodiscard]] Eigen::MatrixXd evaluate(const FeatureLibrary& lib, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u);

/// Single-threaded reference for evaluate(); results are bit-identical.
[[nodiscard]] Eigen::MatrixXd evaluate_serial(const FeatureLibrary& lib, const Eigen::MatrixXd& x,
                                              const Eigen::MatrixXd& u);

/// One library row for z = [x; u].
[[nodiscard]] Eigen::RowVectorXd evaluate_row(const FeatureLibrary& lib, const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& u);

/// "1", "S", "S*I*u", "E^2*u", ...
[[nodiscard]] std::string term_name(const FeatureLibrary& lib, Eigen::Index j, const std::vector<std::string>& names);

/// x1..xn, u1..uq
[[nodiscard]] std::vector<std::string> default_names(int state_dim, int input_dim);
/// S, E, I, R, u
[[nodiscard]] std::vector<std::string> seir_names();

} // namespace sindympc::features
