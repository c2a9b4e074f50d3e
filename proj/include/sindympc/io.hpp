#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sindympc/dynamics.hpp"
#include "sindympc/features.hpp"
#include "sindympc/mpc.hpp"
#include "sindympc/predictor.hpp"
#include "sindympc/sysid.hpp"

namespace sindympc::io {

/// Numeric CSV with a header row. Values are written with 17 significant
/// digits, so reading a file back reproduces every double exactly.
struct Table {
    std::vector<std::string> header;
    Eigen::MatrixXd          values;

    [[nodiscard]] Eigen::Index column(const std::string& name) const; ///< throws InvalidData if absent
};

[[nodiscard]] std::string format_double(double v);

void  write_table(std::ostream& out, const Table& table);
void  write_table(const std::filesystem::path& path, const Table& table);
[[nodiscard]] Table read_table(std::istream& in);
[[nodiscard]] Table read_table(const std::filesystem::path& path);

/// `t,S,E,I,R,u` for four states and one input, else `t,x1..xn,u1..uq`.
[[nodiscard]] std::vector<std::string> trajectory_header(Eigen::Index state_dim, Eigen::Index input_dim);
[[nodiscard]] Table      trajectory_table(const Trajectory& traj);
[[nodiscard]] Trajectory trajectory_from_table(const Table& table, Eigen::Index state_dim, Eigen::Index input_dim);
/// Infers dimensions from the header (state columns first, then inputs named u or u<k>).
[[nodiscard]] Trajectory trajectory_from_table(const Table& table);

/// `t,<names>`; used for derivative dumps.
[[nodiscard]] Table state_table(const Eigen::VectorXd& t, const Eigen::MatrixXd& values,
                                const std::vector<std::string>& names);
[[nodiscard]] Table signal_table(const Eigen::VectorXd& signal, double dt);

/// `index,name,exponents` with space-separated exponents.
void write_library_terms(std::ostream& out, const features::FeatureLibrary& lib, const std::vector<std::string>& names);

/// `state,index,name,coefficient` for every nonzero coefficient.
void write_sparse_report(std::ostream& out, const sysid::SparseModel& model);
/// `matrix,row,col,value` for A then B.
void write_linear_report(std::ostream& out, const sysid::LinearDiscreteModel& model);

/// Everything that can act as a predictor on disk. SeirParams is the oracle plant.
using ModelDocument = std::variant<sysid::SparseModel, sysid::LinearDiscreteModel, SeirParams>;

[[nodiscard]] std::string   model_to_json(const ModelDocument& model);
[[nodiscard]] ModelDocument model_from_json(const std::string& text);
void                        save_model(const std::filesystem::path& path, const ModelDocument& model);
[[nodiscard]] ModelDocument load_model(const std::filesystem::path& path);

[[nodiscard]] std::unique_ptr<Predictor> make_predictor(const ModelDocument& model);

/// `t,<states>,<inputs>,J_stage,violation`
[[nodiscard]] Table mpc_table(const mpc::MpcResult& result);
/// `step,outer_iters,inner_evals,max_violation,feasible`
[[nodiscard]] Table solver_stats_table(const mpc::MpcResult& result);

} // namespace sindympc::io
