#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dml {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::MatrixXd;
using Eigen::VectorXd;

using IndexList = std::vector<Index>;

enum class ErrorCode {
    InvalidArgument,
    DuplicateRole,
    UnknownColumn,
    NonFiniteValue,
    ParseError,
    IndexOutOfRange,
    InvalidFoldCount,
    NotAPartition,
    LengthMismatch,
    SingularDesign,
    NonConvergence,
    SeparationDetected,
    EmptyGrid,
    BadCustomReturn,
    PropensityOutOfRange,
    ZeroTreatedShare,
    DegenerateFold,
    DegenerateScore,
    InvalidLevel,
    BootstrapNotRun,
    FitNotRun,
    InvalidPValue,
    NonBinaryTreatment,
    NoInstrument,
    EmptyArm,
    ConfigError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Gathers rows of `m` at `ids` into a new matrix.
template <typename Derived>
MatrixX<typename Derived::Scalar> take_rows(const Eigen::MatrixBase<Derived>& m, const IndexList& ids) {
    MatrixX<typename Derived::Scalar> out(static_cast<Index>(ids.size()), m.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Index>(i)) = m.row(ids[i]);
    return out;
}

template <typename Derived>
VectorX<typename Derived::Scalar> take(const Eigen::MatrixBase<Derived>& v, const IndexList& ids) {
    VectorX<typename Derived::Scalar> out(static_cast<Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) out(static_cast<Index>(i)) = v(ids[i]);
    return out;
}

}  // namespace dml
