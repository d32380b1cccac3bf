#pragma once

// Multiplier bootstrap, simultaneous confidence bands and multiple-testing
// adjustments for a fitted DML model.

#include "dml/estimator.hpp"

#include <optional>
#include <string>

namespace dml {

enum class BootstrapMethod { Normal, Wild, Exponential };
enum class PAdjustMethod { RomanoWolf, Bonferroni, Holm };

BootstrapMethod parse_bootstrap_method(const std::string& name);
std::string to_string(BootstrapMethod method);
PAdjustMethod parse_p_adjust_method(const std::string& name);
std::string to_string(PAdjustMethod method);

/// B x n_obs multiplier weights with mean 0 and variance 1. Row b comes from
/// its own random substream.
MatrixXd draw_weights(BootstrapMethod method, Index n_obs, Index B, std::uint64_t seed);

struct BootstrapResult {
    MatrixXd boot_coefs;    // (B * n_rep) x n_treat, repetitions stacked
    MatrixXd boot_t_stats;  // boot_coefs / sigma_hat of the repetition
    BootstrapMethod method = BootstrapMethod::Normal;
    Index B = 0;  // draws per repetition
};

/// theta*_{j,b} = sum_i xi_i^b psi_j(W_i) / (sqrt(N) J0_j), shared weights
/// across treatments. With several repetitions each one contributes B draws
/// computed from its own scores.
BootstrapResult multiplier_bootstrap(const DmlFit& fit, BootstrapMethod method, Index B, std::uint64_t seed,
                                     unsigned workers = 1);

/// Same with caller-supplied weights, one B x N matrix per repetition.
BootstrapResult multiplier_bootstrap(const DmlFit& fit, const std::vector<MatrixXd>& weights,
                                     BootstrapMethod method = BootstrapMethod::Normal);

struct JointConfint {
    MatrixXd intervals;  // n_treat x 2
    double critical_value;
};

/// theta_j +- c * se_j with c the level-quantile of max_j |t*_j|.
JointConfint joint_confint(const DmlFit& fit, const std::optional<BootstrapResult>& boot, double level);

struct AdjustedPvals {
    VectorXd raw;
    VectorXd adjusted;
    PAdjustMethod method = PAdjustMethod::RomanoWolf;
};

AdjustedPvals p_adjust_romano_wolf(const DmlFit& fit, const std::optional<BootstrapResult>& boot);

/// Bonferroni or Holm on the given raw p-values.
AdjustedPvals p_adjust_classical(const VectorXd& raw, PAdjustMethod method);

}  // namespace dml
