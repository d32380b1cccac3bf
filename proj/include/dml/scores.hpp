#pragma once

// Linear Neyman-orthogonal scores psi(W; theta, eta) = psi_a * theta + psi_b.
//
// Nuisance naming: l = E[Y|X], g = E[Y - D*theta|X] (PLR/PLIV IV-type) or
// E[Y|D,X] / E[Y|Z,X] (IRM/IIVM), m = E[D|X] (PLR), E[Z|X] (PLIV),
// P(D=1|X) (IRM) or P(Z=1|X) (IIVM), r = E[D|X] (PLIV) or P(D=1|Z,X) (IIVM).

#include "dml/core.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dml {

struct FoldPlan;

template <typename Scalar>
struct ScoreParts {
    VectorX<Scalar> psi_a;
    VectorX<Scalar> psi_b;

    // psi evaluated at theta.
    VectorX<Scalar> at(Scalar theta) const { return (psi_a.array() * theta + psi_b.array()).matrix(); }
};

template <typename Scalar>
using VecRef = Eigen::Ref<const VectorX<Scalar>>;

namespace detail {

template <typename Scalar>
void require_same_length(std::initializer_list<const VecRef<Scalar>*> vs) {
    const Index n = (*vs.begin())->size();
    for (auto* v : vs)
        if (v->size() != n) throw Error(ErrorCode::LengthMismatch, "score inputs differ in length");
}

template <typename Scalar>
void require_binary(const VecRef<Scalar>& v, const char* what) {
    for (Index i = 0; i < v.size(); ++i)
        if (v(i) != Scalar(0) && v(i) != Scalar(1))
            throw Error(ErrorCode::NonBinaryTreatment, std::string(what) + " must be binary (0/1)");
}

template <typename Scalar>
void require_open_unit(const VecRef<Scalar>& v, const char* what) {
    for (Index i = 0; i < v.size(); ++i)
        if (!(v(i) > Scalar(0) && v(i) < Scalar(1)))
            throw Error(ErrorCode::PropensityOutOfRange, std::string(what) + " must lie strictly inside (0, 1)");
}

}  // namespace detail

/// PLR, partialling out: (Y - l(X) - theta (D - m(X))) (D - m(X)).
template <typename Scalar = double>
ScoreParts<Scalar> plr_partialling_out(VecRef<Scalar> y, VecRef<Scalar> d, VecRef<Scalar> l_hat,
                                       VecRef<Scalar> m_hat) {
    detail::require_same_length<Scalar>({&y, &d, &l_hat, &m_hat});
    const auto v = (d - m_hat).array();
    return {(-(v * v)).matrix(), ((y - l_hat).array() * v).matrix()};
}

/// PLR, IV-type: (Y - D theta - g(X)) (D - m(X)).
template <typename Scalar = double>
ScoreParts<Scalar> plr_iv_type(VecRef<Scalar> y, VecRef<Scalar> d, VecRef<Scalar> g_hat, VecRef<Scalar> m_hat) {
    detail::require_same_length<Scalar>({&y, &d, &g_hat, &m_hat});
    const auto v = (d - m_hat).array();
    return {(-(d.array() * v)).matrix(), ((y - g_hat).array() * v).matrix()};
}

/// PLIV, partialling out: (Y - l(X) - theta (D - r(X))) (Z - m(X)).
template <typename Scalar = double>
ScoreParts<Scalar> pliv_partialling_out(VecRef<Scalar> y, VecRef<Scalar> d, VecRef<Scalar> z, VecRef<Scalar> l_hat,
                                        VecRef<Scalar> m_hat, VecRef<Scalar> r_hat) {
    detail::require_same_length<Scalar>({&y, &d, &z, &l_hat, &m_hat, &r_hat});
    const auto w = (z - m_hat).array();
    return {(-((d - r_hat).array() * w)).matrix(), ((y - l_hat).array() * w).matrix()};
}

/// PLIV, IV-type: (Y - D theta - g(X)) (Z - m(X)).
template <typename Scalar = double>
ScoreParts<Scalar> pliv_iv_type(VecRef<Scalar> y, VecRef<Scalar> d, VecRef<Scalar> z, VecRef<Scalar> g_hat,
                                VecRef<Scalar> m_hat) {
    detail::require_same_length<Scalar>({&y, &d, &z, &g_hat, &m_hat});
    const auto w = (z - m_hat).array();
    return {(-(d.array() * w)).matrix(), ((y - g_hat).array() * w).matrix()};
}

/// IRM, average treatment effect (augmented inverse probability weighting).
template <typename Scalar = double>
ScoreParts<Scalar> irm_ate(VecRef<Scalar> y, VecRef<Scalar> d, VecRef<Scalar> g0_hat, VecRef<Scalar> g1_hat,
                           VecRef<Scalar> m_hat) {
    detail::require_same_length<Scalar>({&y, &d, &g0_hat, &g1_hat, &m_hat});
    detail::require_binary<Scalar>(d, "treatment");
    detail::require_open_unit<Scalar>(m_hat, "propensity score");
    const auto da = d.array();
    const auto m = m_hat.array();
    VectorX<Scalar> psi_b = ((g1_hat - g0_hat).array() + da * (y - g1_hat).array() / m -
                             (Scalar(1) - da) * (y - g0_hat).array() / (Scalar(1) - m))
                                .matrix();
    return {VectorX<Scalar>::Constant(y.size(), Scalar(-1)), std::move(psi_b)};
}

/// IRM, average treatment effect on the treated; p_hat estimates P(D = 1).
template <typename Scalar = double>
ScoreParts<Scalar> irm_atte(VecRef<Scalar> y, VecRef<Scalar> d, VecRef<Scalar> g0_hat, VecRef<Scalar> m_hat,
                            Scalar p_hat) {
    detail::require_same_length<Scalar>({&y, &d, &g0_hat, &m_hat});
    detail::require_binary<Scalar>(d, "treatment");
    if (p_hat == Scalar(0) || d.sum() == Scalar(0))
        throw Error(ErrorCode::ZeroTreatedShare, "no treated observations");
    if (!(p_hat > Scalar(0) && p_hat < Scalar(1)))
        throw Error(ErrorCode::PropensityOutOfRange, "treated share must lie strictly inside (0, 1)");
    detail::require_open_unit<Scalar>(m_hat, "propensity score");
    const auto da = d.array();
    const auto m = m_hat.array();
    const auto u0 = (y - g0_hat).array();
    return {(-da / p_hat).matrix(), (da * u0 / p_hat - m * (Scalar(1) - da) * u0 / (p_hat * (Scalar(1) - m))).matrix()};
}

/// IIVM, local average treatment effect with a binary instrument.
template <typename Scalar = double>
ScoreParts<Scalar> iivm_late(VecRef<Scalar> y, VecRef<Scalar> d, VecRef<Scalar> z, VecRef<Scalar> g0_hat,
                             VecRef<Scalar> g1_hat, VecRef<Scalar> m_hat, VecRef<Scalar> r0_hat,
                             VecRef<Scalar> r1_hat) {
    detail::require_same_length<Scalar>({&y, &d, &z, &g0_hat, &g1_hat, &m_hat, &r0_hat, &r1_hat});
    detail::require_binary<Scalar>(d, "treatment");
    detail::require_binary<Scalar>(z, "instrument");
    detail::require_open_unit<Scalar>(m_hat, "instrument propensity");
    const auto za = z.array();
    const auto m = m_hat.array();
    VectorX<Scalar> psi_b = ((g1_hat - g0_hat).array() + za * (y - g1_hat).array() / m -
                             (Scalar(1) - za) * (y - g0_hat).array() / (Scalar(1) - m))
                                .matrix();
    VectorX<Scalar> psi_a = (-((r1_hat - r0_hat).array() + za * (d - r1_hat).array() / m -
                               (Scalar(1) - za) * (d - r0_hat).array() / (Scalar(1) - m)))
                                .matrix();
    return {std::move(psi_a), std::move(psi_b)};
}

// --- dispatch ---------------------------------------------------------------

enum class ScoreKind { PlrPartiallingOut, PlrIvType, PlivPartiallingOut, PlivIvType, IrmAte, IrmAtte, IivmLate, Custom };

/// Where a custom score is evaluated: repetition and treatment of the
/// current fit and the plan the predictions came from.
struct FoldContext {
    const FoldPlan* plan = nullptr;
    Index rep = 0;
    Index treatment = 0;
};

/// User score over the full cross-fitted predictions of one repetition.
/// Receives y, d, l_hat, m_hat, g_hat (empty when no ml_g is configured).
using CustomScoreFn = std::function<ScoreParts<double>(const VectorXd& y, const VectorXd& d, const VectorXd& l_hat,
                                                       const VectorXd& m_hat, const VectorXd& g_hat,
                                                       const FoldContext& ctx)>;

struct ScoreSpec {
    ScoreKind kind = ScoreKind::PlrPartiallingOut;
    CustomScoreFn custom;
    std::string custom_name = "custom";

    static ScoreSpec builtin(ScoreKind k) { return ScoreSpec{k, {}, {}}; }
    static ScoreSpec make_custom(CustomScoreFn fn, std::string name = "custom") {
        return ScoreSpec{ScoreKind::Custom, std::move(fn), std::move(name)};
    }
    std::string name() const;
};

/// Parses "partialling_out", "iv_type", "ate", "atte", "late" (also with
/// spaces or dashes) for the given model name.
ScoreKind parse_score(const std::string& model, const std::string& score);

/// Per-observation nuisance values consumed by the scores.
struct NuisancePredictions {
    std::optional<VectorXd> l_hat, m_hat, r_hat, g_hat;
    std::optional<VectorXd> g0_hat, g1_hat, r0_hat, r1_hat;
    std::optional<double> p_hat;
};

/// Nuisance components read by a score ("l", "m", "r", "g", "g0", "g1",
/// "r0", "r1", "p"); for Custom, "l", "m", "g".
std::vector<std::string> score_components(ScoreKind kind);

ScoreParts<double> evaluate_score(const ScoreSpec& score, const VectorXd& y, const VectorXd& d,
                                  const std::optional<VectorXd>& z, const NuisancePredictions& eta,
                                  const FoldContext& ctx = {});

/// Runs a custom routine and checks its return: both vectors of length n
/// and finite.
ScoreParts<double> evaluate_custom(const CustomScoreFn& fn, const VectorXd& y, const VectorXd& d,
                                   const VectorXd& l_hat, const VectorXd& m_hat, const VectorXd& g_hat,
                                   const FoldContext& ctx);

/// Non-orthogonal plug-in score (Y - D theta - g(X)) D, for comparisons.
ScoreSpec naive_plr_score();

// --- orthogonality ----------------------------------------------------------

enum class PerturbationDirection {
    Constant,  // Delta = 1
    Logistic,  // Delta = q (1 - q), keeps probabilities inside (0, 1)
    Automatic, // Logistic for probability-valued components, else Constant
};

/// Centered finite difference of the mean score at theta0 with respect to
/// one nuisance component:
///   [E_n psi(theta0, eta0 + h Delta) - E_n psi(theta0, eta0 - h Delta)] / (2h).
double gateaux_derivative(const ScoreSpec& score, const VectorXd& y, const VectorXd& d,
                          const std::optional<VectorXd>& z, const NuisancePredictions& truth, double theta0,
                          const std::string& component, double h,
                          PerturbationDirection direction = PerturbationDirection::Automatic);

/// Same with an explicit per-observation direction Delta (component other
/// than "p").
double gateaux_derivative(const ScoreSpec& score, const VectorXd& y, const VectorXd& d,
                          const std::optional<VectorXd>& z, const NuisancePredictions& truth, double theta0,
                          const std::string& component, double h, const VectorXd& direction);

struct OrthogonalityReport {
    std::vector<std::string> components;
    std::vector<double> derivatives;
    double max_abs() const;
};

/// gateaux_derivative for every component the score reads.
OrthogonalityReport check_orthogonality(const ScoreSpec& score, const VectorXd& y, const VectorXd& d,
                                        const std::optional<VectorXd>& z, const NuisancePredictions& truth,
                                        double theta0, double h,
                                        PerturbationDirection direction = PerturbationDirection::Automatic);

}  // namespace dml
