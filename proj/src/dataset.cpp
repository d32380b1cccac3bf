#include "dml/dataset.hpp"

#include "dml/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dml {

namespace {

Index find_column(const std::vector<std::string>& names, const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<Index>(i);
    throw Error(ErrorCode::UnknownColumn, "column '" + name + "' not found");
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ",";
        out += s;
    }
    return out;
}

}  // namespace

RoleConfig RoleConfig::load(const std::string& path) {
    const auto cfg = KeyValueConfig::load(path);
    RoleConfig roles;
    const auto y = cfg.get("y_col");
    if (!y || y->empty()) throw Error(ErrorCode::ConfigError, "role config needs y_col");
    roles.y_col = *y;
    roles.d_cols = cfg.get_list("d_cols");
    if (roles.d_cols.empty()) throw Error(ErrorCode::ConfigError, "role config needs d_cols");
    if (cfg.has("x_cols")) roles.x_cols = cfg.get_list("x_cols");
    if (cfg.has("z_cols")) {
        auto z = cfg.get_list("z_cols");
        if (!z.empty()) roles.z_cols = std::move(z);
    }
    return roles;
}

void RoleConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
    out << "y_col = " << y_col << "\n";
    out << "d_cols = " << join(d_cols) << "\n";
    if (x_cols) out << "x_cols = " << join(*x_cols) << "\n";
    if (z_cols) out << "z_cols = " << join(*z_cols) << "\n";
}

Dataset Dataset::from_matrix(const MatrixXd& values, const std::vector<std::string>& names,
                             const std::string& y_col, const std::vector<std::string>& d_cols,
                             const std::optional<std::vector<std::string>>& x_cols,
                             const std::optional<std::vector<std::string>>& z_cols) {
    if (static_cast<Index>(names.size()) != values.cols())
        throw Error(ErrorCode::LengthMismatch, "number of names differs from number of columns");
    {
        std::set<std::string> seen;
        for (const auto& n : names)
            if (!seen.insert(n).second) throw Error(ErrorCode::InvalidArgument, "duplicate column name '" + n + "'");
    }
    if (d_cols.empty()) throw Error(ErrorCode::InvalidArgument, "at least one treatment column is required");

    std::set<std::string> used;
    auto claim = [&](const std::string& name) {
        if (!used.insert(name).second)
            throw Error(ErrorCode::DuplicateRole, "column '" + name + "' is assigned more than one role");
        return find_column(names, name);
    };

    Dataset ds;
    const Index y_src = claim(y_col);
    std::vector<Index> d_src, x_src, z_src;
    for (const auto& c : d_cols) d_src.push_back(claim(c));
    if (z_cols)
        for (const auto& c : *z_cols) z_src.push_back(claim(c));
    if (x_cols) {
        for (const auto& c : *x_cols) x_src.push_back(claim(c));
    } else {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (!used.count(names[i])) x_src.push_back(static_cast<Index>(i));
    }

    std::vector<Index> order;
    order.push_back(y_src);
    ds.roles_.push_back(VariableRole::Outcome);
    for (Index c : d_src) order.push_back(c), ds.roles_.push_back(VariableRole::Treatment);
    for (Index c : x_src) order.push_back(c), ds.roles_.push_back(VariableRole::Covariate);
    for (Index c : z_src) order.push_back(c), ds.roles_.push_back(VariableRole::Instrument);

    ds.values_.resize(values.rows(), static_cast<Index>(order.size()));
    for (std::size_t k = 0; k < order.size(); ++k) {
        ds.values_.col(static_cast<Index>(k)) = values.col(order[k]);
        ds.names_.push_back(names[static_cast<std::size_t>(order[k])]);
    }
    for (Index j = 0; j < ds.values_.cols(); ++j)
        for (Index i = 0; i < ds.values_.rows(); ++i)
            if (!std::isfinite(ds.values_(i, j)))
                throw Error(ErrorCode::NonFiniteValue, "non-finite value in column '" +
                                                           ds.names_[static_cast<std::size_t>(j)] + "' row " +
                                                           std::to_string(i));

    Index k = 1;
    ds.y_idx_ = 0;
    for (std::size_t i = 0; i < d_src.size(); ++i) ds.d_idx_.push_back(k++);
    for (std::size_t i = 0; i < x_src.size(); ++i) ds.x_idx_.push_back(k++);
    for (std::size_t i = 0; i < z_src.size(); ++i) ds.z_idx_.push_back(k++);
    return ds;
}

Dataset Dataset::from_matrix(const MatrixXd& values, const std::vector<std::string>& names,
                             const RoleConfig& roles) {
    return from_matrix(values, names, roles.y_col, roles.d_cols, roles.x_cols, roles.z_cols);
}

Dataset Dataset::load_csv(const std::string& path, const RoleConfig& roles) {
    const CsvTable t = read_csv(path);
    return from_matrix(t.values, t.header, roles);
}

std::vector<std::string> Dataset::treatment_names() const {
    std::vector<std::string> out;
    for (Index i : d_idx_) out.push_back(names_[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<std::string> Dataset::covariate_names() const {
    std::vector<std::string> out;
    for (Index i : x_idx_) out.push_back(names_[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<std::string> Dataset::instrument_names() const {
    std::vector<std::string> out;
    for (Index i : z_idx_) out.push_back(names_[static_cast<std::size_t>(i)]);
    return out;
}

VectorXd Dataset::d(Index treatment) const {
    if (treatment < 0 || treatment >= n_treatments())
        throw Error(ErrorCode::IndexOutOfRange, "treatment index " + std::to_string(treatment));
    return values_.col(d_idx_[static_cast<std::size_t>(treatment)]);
}

MatrixXd Dataset::x() const { return values_(Eigen::all, x_idx_); }

MatrixXd Dataset::z() const { return values_(Eigen::all, z_idx_); }

TreatmentView Dataset::treatment_view(Index treatment_index) const {
    if (treatment_index < 0 || treatment_index >= n_treatments())
        throw Error(ErrorCode::IndexOutOfRange, "treatment index " + std::to_string(treatment_index) +
                                                    " with " + std::to_string(n_treatments()) + " treatments");
    TreatmentView view;
    view.y = values_.col(y_idx_);
    view.d = values_.col(d_idx_[static_cast<std::size_t>(treatment_index)]);
    std::vector<Index> cols = x_idx_;
    for (Index j = 0; j < n_treatments(); ++j)
        if (j != treatment_index) cols.push_back(d_idx_[static_cast<std::size_t>(j)]);
    view.x = values_(Eigen::all, cols);
    if (!z_idx_.empty()) view.z = z();
    view.treatment_name = names_[static_cast<std::size_t>(d_idx_[static_cast<std::size_t>(treatment_index)])];
    return view;
}

RoleConfig Dataset::role_config() const {
    RoleConfig r;
    r.y_col = outcome_name();
    r.d_cols = treatment_names();
    r.x_cols = covariate_names();
    if (!z_idx_.empty()) r.z_cols = instrument_names();
    return r;
}

void Dataset::write_csv(const std::string& path) const { dml::write_csv(path, names_, values_); }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, path + ": missing header row");
    t.header = split_list(line);
    for (auto& h : t.header) h = trim(h);
    const std::size_t ncol = t.header.size();
    std::vector<double> data;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            ++col;
            if (col > ncol) break;
            try {
                data.push_back(parse_double(cell));
            } catch (const Error&) {
                throw Error(ErrorCode::ParseError, path + ": bad numeric value '" + trim(cell) + "' at row " +
                                                       std::to_string(row) + ", column " + std::to_string(col));
            }
        }
        if (!line.empty() && line.back() == ',') ++col;
        if (col != ncol)
            throw Error(ErrorCode::ParseError, path + ": row " + std::to_string(row) + " has " + std::to_string(col) +
                                                   " fields, expected " + std::to_string(ncol));
    }
    t.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data.data(), static_cast<Index>(row), static_cast<Index>(ncol));
    return t;
}

std::size_t TextTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::UnknownColumn, "no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

TextTable read_text_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
    TextTable t;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, path + ": missing header row");
    for (auto& h : split_list(line)) t.header.push_back(trim(h));
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        for (auto& c : split_list(line)) cells.push_back(trim(c));
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != t.header.size())
            throw Error(ErrorCode::ParseError, path + ": row " + std::to_string(t.rows.size() + 1) + " has " +
                                                   std::to_string(cells.size()) + " fields, expected " +
                                                   std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const MatrixXd& values) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << "\n";
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
        out << "\n";
    }
}

}  // namespace dml
