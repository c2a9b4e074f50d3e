#include "sindympc/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sindympc/errors.hpp"

namespace sindympc::io {

using nlohmann::json;

namespace {

constexpr const char* kFormat  = "sindympc-model";
constexpr int         kVersion = 1;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string              cell;
    std::istringstream       ss(line);
    while (std::getline(ss, cell, sep)) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

double parse_double(const std::string& cell, std::size_t line) {
    const char* begin = cell.c_str();
    char*       end   = nullptr;
    errno             = 0;
    const double v    = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw InvalidData("line " + std::to_string(line) + ": not a number: '" + cell + "'");
    }
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InvalidData("cannot write " + path.string());
    }
    return out;
}

json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
        throw InvalidData(std::string(what) + ": expected " + std::to_string(rows) + " rows");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw InvalidData(std::string(what) + ": expected " + std::to_string(cols) + " columns");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

struct DocumentWriter {
    json operator()(const sysid::SparseModel& m) const {
        json terms = json::array();
        for (const auto& t : m.library.terms()) {
            terms.push_back(t);
        }
        return {{"kind", "sparse"},
                {"domain", m.domain == sysid::TimeDomain::continuous ? "continuous" : "discrete"},
                {"dt", m.dt},
                {"lambda", m.lambda},
                {"library",
                 {{"state_dim", m.library.state_dim()},
                  {"input_dim", m.library.input_dim()},
                  {"max_order", m.library.max_order()},
                  {"include_constant", m.library.include_constant()},
                  {"terms", terms}}},
                {"names", m.names},
                {"xi", to_json(m.xi)}};
    }
    json operator()(const sysid::LinearDiscreteModel& m) const {
        return {{"kind", "linear"}, {"dt", m.dt}, {"a", to_json(m.a)}, {"b", to_json(m.b)}};
    }
    json operator()(const SeirParams& p) const {
        return {{"kind", "seir"}, {"beta0", p.beta0}, {"gamma", p.gamma}, {"k", p.k}};
    }
};

} // namespace

Eigen::Index Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return static_cast<Eigen::Index>(i);
        }
    }
    throw InvalidData("missing CSV column '" + name + "'");
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_table(std::ostream& out, const Table& table) {
    if (static_cast<Eigen::Index>(table.header.size()) != table.values.cols()) {
        throw ContractViolation("CSV header and column count differ");
    }
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        out << (i ? "," : "") << table.header[i];
    }
    out << '\n';
    for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
            out << (c ? "," : "") << format_double(table.values(r, c));
        }
        out << '\n';
    }
}

void write_table(const std::filesystem::path& path, const Table& table) {
    auto out = open_out(path);
    write_table(out, table);
    if (!out) {
        throw InvalidData("failed writing " + path.string());
    }
}

Table read_table(std::istream& in) {
    Table       table;
    std::string line;
    if (!std::getline(in, line)) {
        throw InvalidData("empty CSV");
    }
    table.header = split(line, ',');
    const auto          cols = table.header.size();
    std::vector<double> data;
    std::size_t         number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != cols) {
            throw InvalidData("line " + std::to_string(number) + ": expected " + std::to_string(cols) + " fields");
        }
        for (const auto& cell : cells) {
            data.push_back(parse_double(cell, number));
        }
    }
    const auto rows = static_cast<Eigen::Index>(data.size() / cols);
    table.values    = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data.data(), rows, static_cast<Eigen::Index>(cols));
    return table;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidData("cannot read " + path.string());
    }
    return read_table(in);
}

std::vector<std::string> trajectory_header(Eigen::Index state_dim, Eigen::Index input_dim) {
    if (state_dim == 4 && input_dim == 1) {
        return {"t", "S", "E", "I", "R", "u"};
    }
    std::vector<std::string> h{"t"};
    for (Eigen::Index i = 1; i <= state_dim; ++i) {
        h.push_back("x" + std::to_string(i));
    }
    for (Eigen::Index i = 1; i <= input_dim; ++i) {
        h.push_back("u" + std::to_string(i));
    }
    return h;
}

Table trajectory_table(const Trajectory& traj) {
    Table t;
    t.header = trajectory_header(traj.state_dim(), traj.input_dim());
    t.values.resize(traj.rows(), 1 + traj.state_dim() + traj.input_dim());
    t.values << traj.times(), traj.states(), traj.inputs();
    return t;
}

Trajectory trajectory_from_table(const Table& table, Eigen::Index state_dim, Eigen::Index input_dim) {
    if (table.values.cols() != 1 + state_dim + input_dim) {
        throw InvalidData("trajectory CSV has " + std::to_string(table.values.cols()) + " columns, expected " +
                          std::to_string(1 + state_dim + input_dim));
    }
    return Trajectory(table.values.col(0), table.values.middleCols(1, state_dim),
                      table.values.middleCols(1 + state_dim, input_dim));
}

Trajectory trajectory_from_table(const Table& table) {
    if (table.header.empty() || table.header.front() != "t") {
        throw InvalidData("trajectory CSV must start with a 't' column");
    }
    Eigen::Index inputs = 0;
    for (auto it = table.header.rbegin(); it != table.header.rend() && !it->empty() && it->front() == 'u'; ++it) {
        ++inputs;
    }
    const auto states = static_cast<Eigen::Index>(table.header.size()) - 1 - inputs;
    if (states < 1 || inputs < 1) {
        throw InvalidData("trajectory CSV needs state and input columns");
    }
    return trajectory_from_table(table, states, inputs);
}

Table state_table(const Eigen::VectorXd& t, const Eigen::MatrixXd& values, const std::vector<std::string>& names) {
    if (t.size() != values.rows() || static_cast<Eigen::Index>(names.size()) != values.cols()) {
        throw ContractViolation("state table shape mismatch");
    }
    Table table;
    table.header = {"t"};
    table.header.insert(table.header.end(), names.begin(), names.end());
    table.values.resize(values.rows(), values.cols() + 1);
    table.values << t, values;
    return table;
}

Table signal_table(const Eigen::VectorXd& signal, double dt) {
    Table table;
    table.header = {"t", "u"};
    table.values.resize(signal.size(), 2);
    for (Eigen::Index i = 0; i < signal.size(); ++i) {
        table.values(i, 0) = static_cast<double>(i) * dt;
        table.values(i, 1) = signal[i];
    }
    return table;
}

void write_library_terms(std::ostream& out, const features::FeatureLibrary& lib,
                         const std::vector<std::string>& names) {
    out << "index,name,exponents\n";
    for (Eigen::Index j = 0; j < lib.size(); ++j) {
        out << j << ',' << features::term_name(lib, j, names) << ',';
        const auto& e = lib.terms()[static_cast<std::size_t>(j)];
        for (std::size_t i = 0; i < e.size(); ++i) {
            out << (i ? " " : "") << e[i];
        }
        out << '\n';
    }
}

void write_sparse_report(std::ostream& out, const sysid::SparseModel& model) {
    out << "state,index,name,coefficient\n";
    for (Eigen::Index k = 0; k < model.xi.cols(); ++k) {
        const std::string& state = model.names[static_cast<std::size_t>(k)];
        for (Eigen::Index j = 0; j < model.xi.rows(); ++j) {
            if (model.xi(j, k) != 0.0) {
                out << state << ',' << j << ',' << features::term_name(model.library, j, model.names) << ','
                    << format_double(model.xi(j, k)) << '\n';
            }
        }
    }
}

void write_linear_report(std::ostream& out, const sysid::LinearDiscreteModel& model) {
    out << "matrix,row,col,value\n";
    auto dump = [&](const char* name, const Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                out << name << ',' << i << ',' << j << ',' << format_double(m(i, j)) << '\n';
            }
        }
    };
    dump("A", model.a);
    dump("B", model.b);
}

std::string model_to_json(const ModelDocument& model) {
    json doc            = std::visit(DocumentWriter{}, model);
    doc["format"]       = kFormat;
    doc["version"]      = kVersion;
    return doc.dump(2) + "\n";
}

ModelDocument model_from_json(const std::string& text) {
    try {
        const json doc = json::parse(text);
        if (doc.value("format", "") != kFormat) {
            throw InvalidData("not a model file (missing format tag)");
        }
        if (doc.at("version").get<int>() != kVersion) {
            throw InvalidData("unsupported model file version " + doc.at("version").dump());
        }
        const auto kind = doc.at("kind").get<std::string>();
        if (kind == "seir") {
            SeirParams p{doc.at("beta0").get<double>(), doc.at("gamma").get<double>(), doc.at("k").get<double>()};
            p.validate();
            return p;
        }
        if (kind == "linear") {
            const auto& a = doc.at("a");
            const auto  n = static_cast<Eigen::Index>(a.size());
            const auto& b = doc.at("b");
            const auto  q = b.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(b.at(0).size());
            sysid::LinearDiscreteModel m{matrix_from_json(a, n, n, "a"), matrix_from_json(b, n, q, "b"),
                                         doc.at("dt").get<double>()};
            m.validate();
            return m;
        }
        if (kind == "sparse") {
            const json&              lib = doc.at("library");
            features::FeatureLibrary library(lib.at("state_dim").get<int>(), lib.at("input_dim").get<int>(),
                                             lib.at("max_order").get<int>(), lib.at("include_constant").get<bool>());
            if (lib.contains("terms") && lib.at("terms").get<std::vector<features::Exponents>>() != library.terms()) {
                throw InvalidData("model file term list does not match its library spec");
            }
            sysid::SparseModel m;
            m.xi      = matrix_from_json(doc.at("xi"), library.size(), library.state_dim(), "xi");
            m.library = std::move(library);
            m.lambda  = doc.at("lambda").get<double>();
            const auto domain = doc.at("domain").get<std::string>();
            if (domain != "continuous" && domain != "discrete") {
                throw InvalidData("unknown model domain '" + domain + "'");
            }
            m.domain = domain == "continuous" ? sysid::TimeDomain::continuous : sysid::TimeDomain::discrete;
            m.dt     = doc.at("dt").get<double>();
            m.names  = doc.at("names").get<std::vector<std::string>>();
            m.validate();
            return m;
        }
        throw InvalidData("unknown model kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw InvalidData(std::string("malformed model file: ") + e.what());
    } catch (const ContractViolation& e) {
        throw InvalidData(std::string("inconsistent model file: ") + e.what());
    } catch (const InvalidSpec& e) {
        throw InvalidData(std::string("invalid model parameters: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const ModelDocument& model) {
    auto out = open_out(path);
    out << model_to_json(model);
    if (!out) {
        throw InvalidData("failed writing " + path.string());
    }
}

ModelDocument load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidData("cannot read model file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

std::unique_ptr<Predictor> make_predictor(const ModelDocument& model) {
    struct Factory {
        std::unique_ptr<Predictor> operator()(const sysid::SparseModel& m) const {
            return std::make_unique<SparsePredictor>(m);
        }
        std::unique_ptr<Predictor> operator()(const sysid::LinearDiscreteModel& m) const {
            return std::make_unique<LinearPredictor>(m);
        }
        std::unique_ptr<Predictor> operator()(const SeirParams& p) const {
            return std::make_unique<SystemPredictor>(seir_system(p), "seir");
        }
    };
    return std::visit(Factory{}, model);
}

Table mpc_table(const mpc::MpcResult& result) {
    const Trajectory& cl = result.closed_loop;
    Table             table;
    table.header = trajectory_header(cl.state_dim(), cl.input_dim());
    table.header.emplace_back("J_stage");
    table.header.emplace_back("violation");
    table.values.resize(cl.rows(), 3 + cl.state_dim() + cl.input_dim());
    table.values << cl.times(), cl.states(), cl.inputs(), result.row_stage_cost, result.row_violation;
    return table;
}

Table solver_stats_table(const mpc::MpcResult& result) {
    Table table;
    table.header = {"step", "outer_iters", "inner_evals", "max_violation", "feasible"};
    table.values.resize(static_cast<Eigen::Index>(result.steps.size()), 5);
    for (std::size_t j = 0; j < result.steps.size(); ++j) {
        const auto& s = result.steps[j].solution;
        const auto  r = static_cast<Eigen::Index>(j);
        table.values(r, 0) = static_cast<double>(j);
        table.values(r, 1) = s.outer_iterations;
        table.values(r, 2) = s.evaluations;
        table.values(r, 3) = std::isinf(s.violation) && s.violation < 0 ? std::numeric_limits<double>::quiet_NaN()
                                                                         : s.violation;
        table.values(r, 4) = s.feasible ? 1.0 : 0.0;
    }
    return table;
}

} // namespace sindympc::io
