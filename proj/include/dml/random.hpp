#pragma once

#include "dml/core.hpp"

#include <initializer_list>
#include <random>

namespace dml {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed of an independent substream identified by a path of integers, e.g.
// (seed, rep, fold). Order matters.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = mix64(seed);
    for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
    return Rng(derive_seed(seed, path));
}

inline VectorXd standard_normal(Index n, Rng& rng) {
    std::normal_distribution<double> dist;
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

inline MatrixXd standard_normal(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> dist;
    MatrixXd m(rows, cols);
    // Row-major fill so a sample's draws stay contiguous in the stream.
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

// Correlation matrix with entries rho^|j-k|.
inline MatrixXd toeplitz_power(Index dim, double rho) {
    MatrixXd s(dim, dim);
    for (Index j = 0; j < dim; ++j)
        for (Index k = 0; k < dim; ++k) s(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
    return s;
}

// n draws from N(0, sigma) as rows.
inline MatrixXd multivariate_normal(Index n, const MatrixXd& sigma, Rng& rng) {
    Eigen::LLT<MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "covariance not positive definite");
    const MatrixXd z = standard_normal(n, sigma.rows(), rng);
    return z * llt.matrixL().transpose();
}

}  // namespace dml
