#pragma once

// Simulated designs with known causal parameters and nuisance functions.

#include "dml/dataset.hpp"
#include "dml/scores.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dml {

struct DgpSample {
    std::string name;
    Dataset dataset;
    VectorXd theta_true;  // one entry per treatment
    // True nuisance values at the sample points, first treatment only.
    // PLR: l, m, g. PLIV: l, m, r, g. IRM: g0, g1, m, p. IIVM: g0, g1, m, r0, r1.
    NuisancePredictions oracle;
    // Average effect on the treated (IRM designs).
    std::optional<double> atte_true;
};

/// y = theta d + g0(x) + zeta, d = m0(x) + v with
/// m0(x) = x1 + exp(x3)/(1 + exp(x3)) / 4, g0(x) = exp(x1)/(1 + exp(x1)) + x3 / 4
/// and x ~ N(0, Sigma), Sigma_jk = 0.7^|j-k|.
DgpSample gen_plr_ccddhnr2018(double theta, Index n_obs, Index dim_x, std::uint64_t seed);

/// Partially linear IV design: z = Pi x + zeta, d = x'gamma + z'delta + u,
/// y = theta d + x'beta + eps, corr(eps, u) = 0.6, Var(zeta) = 0.25 I,
/// beta = gamma = (1/j^2), Sigma_jk = 0.5^|j-k|.
DgpSample gen_pliv_chs(double theta, Index n_obs, Index dim_x, Index dim_z, std::uint64_t seed, double delta = 1.0);

/// Binary treatment with logistic propensity; c_y and c_d calibrate the
/// outcome and treatment R^2.
DgpSample gen_irm_belloni(double theta, Index n_obs, Index dim_x, double r2_y, double r2_d, std::uint64_t seed);

/// Binary instrument Z ~ Bernoulli(0.5), d = 1{alpha_x Z + v > 0},
/// y = theta d + x'beta + u with corr(u, v) = 0.3.
DgpSample gen_iivm(double theta, Index n_obs, Index dim_x, double alpha_x, std::uint64_t seed);

/// X iid N(0, 1), y = X[:, 0..k) theta + N(0, 1). The first `n_treatments`
/// columns are declared treatments.
DgpSample gen_sparse_plr(Index n_obs, Index n_vars, const VectorXd& theta, std::uint64_t seed,
                         Index n_treatments = 10);

enum class CoefRule { AsPrinted, MaxVariant };

/// y = d'theta + eps, d ~ N(0, Sigma), Sigma_jk = 0.5^|j-k|, eps ~ N(0, sigma2).
/// theta_j = min{theta_max / j^a, theta_min} for j <= s (max{...} under
/// MaxVariant), zero otherwise. Every column of d is a treatment.
DgpSample gen_multi_treatment(Index n_obs, Index p1, Index s, double theta_max, double theta_min, double a,
                              double sigma2, std::uint64_t seed, CoefRule rule = CoefRule::AsPrinted);

VectorXd multi_treatment_coefs(Index p1, Index s, double theta_max, double theta_min, double a, CoefRule rule);

/// Registered names: plr_ccddhnr2018, pliv_chs, irm_belloni, iivm,
/// sparse_plr, multi_treatment.
std::vector<std::string> dgp_names();

/// Parameters of a named design with their defaults.
std::map<std::string, std::string> dgp_defaults(const std::string& name);

/// Generates a named design; `params` overrides defaults and may not contain
/// unknown keys.
DgpSample generate(const std::string& name, const std::map<std::string, std::string>& params, std::uint64_t seed);

/// Writes data.csv, roles.cfg and truth.json into `dir`.
void write_sample(const DgpSample& sample, const std::string& dir);

}  // namespace dml
