#pragma once

#include "dml/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dml {

enum class VariableRole { Outcome, Treatment, Covariate, Instrument };

struct RoleConfig {
    std::string y_col;
    std::vector<std::string> d_cols;
    // Empty means "every column without another role".
    std::optional<std::vector<std::string>> x_cols;
    std::optional<std::vector<std::string>> z_cols;

    // Reads keys y_col, d_cols, x_cols, z_cols from a key = value file.
    static RoleConfig load(const std::string& path);
    void save(const std::string& path) const;
};

// Outcome, treatment(s), instrument(s) and covariates of one estimation
// problem with the active treatment pulled out as `d`.
struct TreatmentView {
    VectorXd y;
    VectorXd d;
    MatrixXd x;
    std::optional<MatrixXd> z;
    std::string treatment_name;
};

// Immutable observation matrix with a causal role for each used column.
// Columns that are named in no role set are dropped on construction.
class Dataset {
public:
    static Dataset from_matrix(const MatrixXd& values, const std::vector<std::string>& names,
                               const std::string& y_col, const std::vector<std::string>& d_cols,
                               const std::optional<std::vector<std::string>>& x_cols = std::nullopt,
                               const std::optional<std::vector<std::string>>& z_cols = std::nullopt);

    static Dataset from_matrix(const MatrixXd& values, const std::vector<std::string>& names,
                               const RoleConfig& roles);

    static Dataset load_csv(const std::string& path, const RoleConfig& roles);

    const MatrixXd& values() const { return values_; }
    const std::vector<std::string>& column_names() const { return names_; }
    const std::vector<VariableRole>& roles() const { return roles_; }

    Index n_obs() const { return values_.rows(); }
    Index n_treatments() const { return static_cast<Index>(d_idx_.size()); }
    Index n_covariates() const { return static_cast<Index>(x_idx_.size()); }
    Index n_instruments() const { return static_cast<Index>(z_idx_.size()); }

    std::vector<std::string> treatment_names() const;
    std::vector<std::string> covariate_names() const;
    std::vector<std::string> instrument_names() const;
    const std::string& outcome_name() const { return names_[static_cast<std::size_t>(y_idx_)]; }

    VectorXd y() const { return values_.col(y_idx_); }
    VectorXd d(Index treatment) const;
    MatrixXd x() const;
    MatrixXd z() const;

    // Active treatment as d; the other treatments appended after the
    // declared covariates in declaration order.
    TreatmentView treatment_view(Index treatment_index) const;

    RoleConfig role_config() const;

    // 17 significant digits, so load_csv reproduces the values bit-exactly.
    void write_csv(const std::string& path) const;

private:
    MatrixXd values_;
    std::vector<std::string> names_;
    std::vector<VariableRole> roles_;
    Index y_idx_ = 0;
    std::vector<Index> d_idx_;
    std::vector<Index> x_idx_;
    std::vector<Index> z_idx_;
};

struct CsvTable {
    std::vector<std::string> header;
    MatrixXd values;
};

// Rectangular numeric CSV with a mandatory header row.
CsvTable read_csv(const std::string& path);

// Cells kept as text, for result files with label columns.
struct TextTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
};

TextTable read_text_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header, const MatrixXd& values);
std::string format_double(double v);

}  // namespace dml
