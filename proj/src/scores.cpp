#include "dml/scores.hpp"

#include <algorithm>
#include <cctype>

namespace dml {

std::string ScoreSpec::name() const {
    switch (kind) {
        case ScoreKind::PlrPartiallingOut: return "partialling_out";
        case ScoreKind::PlrIvType: return "iv_type";
        case ScoreKind::PlivPartiallingOut: return "partialling_out";
        case ScoreKind::PlivIvType: return "iv_type";
        case ScoreKind::IrmAte: return "ate";
        case ScoreKind::IrmAtte: return "atte";
        case ScoreKind::IivmLate: return "late";
        case ScoreKind::Custom: return custom_name;
    }
    return "unknown";
}

ScoreKind parse_score(const std::string& model, const std::string& score) {
    std::string s;
    for (char c : score) s += (c == ' ' || c == '-') ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (model == "plr") {
        if (s == "partialling_out") return ScoreKind::PlrPartiallingOut;
        if (s == "iv_type") return ScoreKind::PlrIvType;
    } else if (model == "pliv") {
        if (s == "partialling_out") return ScoreKind::PlivPartiallingOut;
        if (s == "iv_type") return ScoreKind::PlivIvType;
    } else if (model == "irm") {
        if (s == "ate") return ScoreKind::IrmAte;
        if (s == "atte") return ScoreKind::IrmAtte;
    } else if (model == "iivm") {
        if (s == "late") return ScoreKind::IivmLate;
    } else {
        throw Error(ErrorCode::ConfigError, "unknown model '" + model + "'");
    }
    throw Error(ErrorCode::ConfigError, "score '" + score + "' is not available for model '" + model + "'");
}

std::vector<std::string> score_components(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::PlrPartiallingOut: return {"l", "m"};
        case ScoreKind::PlrIvType: return {"g", "m"};
        case ScoreKind::PlivPartiallingOut: return {"l", "m", "r"};
        case ScoreKind::PlivIvType: return {"g", "m"};
        case ScoreKind::IrmAte: return {"g0", "g1", "m"};
        case ScoreKind::IrmAtte: return {"g0", "m", "p"};
        case ScoreKind::IivmLate: return {"g0", "g1", "m", "r0", "r1"};
        case ScoreKind::Custom: return {"l", "m", "g"};
    }
    return {};
}

namespace {

const VectorXd& need(const std::optional<VectorXd>& v, const char* name) {
    if (!v) throw Error(ErrorCode::InvalidArgument, std::string("score needs nuisance predictions '") + name + "'");
    return *v;
}

const VectorXd& need_z(const std::optional<VectorXd>& z) {
    if (!z) throw Error(ErrorCode::NoInstrument, "score needs an instrument");
    return *z;
}

}  // namespace

ScoreParts<double> evaluate_custom(const CustomScoreFn& fn, const VectorXd& y, const VectorXd& d,
                                   const VectorXd& l_hat, const VectorXd& m_hat, const VectorXd& g_hat,
                                   const FoldContext& ctx) {
    if (!fn) throw Error(ErrorCode::BadCustomReturn, "custom score routine is empty");
    ScoreParts<double> out = fn(y, d, l_hat, m_hat, g_hat, ctx);
    const Index n = y.size();
    if (out.psi_a.size() != n || out.psi_b.size() != n)
        throw Error(ErrorCode::BadCustomReturn, "custom score must return psi_a and psi_b of length " +
                                                    std::to_string(n) + ", got " + std::to_string(out.psi_a.size()) +
                                                    " and " + std::to_string(out.psi_b.size()));
    if (!out.psi_a.allFinite() || !out.psi_b.allFinite())
        throw Error(ErrorCode::BadCustomReturn, "custom score returned non-finite values");
    return out;
}

ScoreParts<double> evaluate_score(const ScoreSpec& score, const VectorXd& y, const VectorXd& d,
                                  const std::optional<VectorXd>& z, const NuisancePredictions& eta,
                                  const FoldContext& ctx) {
    switch (score.kind) {
        case ScoreKind::PlrPartiallingOut:
            return plr_partialling_out<double>(y, d, need(eta.l_hat, "l"), need(eta.m_hat, "m"));
        case ScoreKind::PlrIvType:
            return plr_iv_type<double>(y, d, need(eta.g_hat, "g"), need(eta.m_hat, "m"));
        case ScoreKind::PlivPartiallingOut:
            return pliv_partialling_out<double>(y, d, need_z(z), need(eta.l_hat, "l"), need(eta.m_hat, "m"),
                                                need(eta.r_hat, "r"));
        case ScoreKind::PlivIvType:
            return pliv_iv_type<double>(y, d, need_z(z), need(eta.g_hat, "g"), need(eta.m_hat, "m"));
        case ScoreKind::IrmAte:
            return irm_ate<double>(y, d, need(eta.g0_hat, "g0"), need(eta.g1_hat, "g1"), need(eta.m_hat, "m"));
        case ScoreKind::IrmAtte:
            if (!eta.p_hat) throw Error(ErrorCode::InvalidArgument, "ATTE score needs p_hat");
            return irm_atte<double>(y, d, need(eta.g0_hat, "g0"), need(eta.m_hat, "m"), *eta.p_hat);
        case ScoreKind::IivmLate:
            return iivm_late<double>(y, d, need_z(z), need(eta.g0_hat, "g0"), need(eta.g1_hat, "g1"),
                                     need(eta.m_hat, "m"), need(eta.r0_hat, "r0"), need(eta.r1_hat, "r1"));
        case ScoreKind::Custom: {
            const VectorXd empty;
            return evaluate_custom(score.custom, y, d, eta.l_hat ? *eta.l_hat : empty,
                                   eta.m_hat ? *eta.m_hat : empty, eta.g_hat ? *eta.g_hat : empty, ctx);
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown score");
}

ScoreSpec naive_plr_score() {
    return ScoreSpec::make_custom(
        [](const VectorXd& y, const VectorXd& d, const VectorXd&, const VectorXd&, const VectorXd& g_hat,
           const FoldContext&) {
            if (g_hat.size() != y.size())
                throw Error(ErrorCode::InvalidArgument, "naive score needs g_hat (configure ml_g)");
            return ScoreParts<double>{(-(d.array() * d.array())).matrix(), ((y - g_hat).array() * d.array()).matrix()};
        },
        "naive");
}

namespace {

// Works for const and mutable predictions alike.
template <typename Eta>
auto component_slot(Eta& eta, const std::string& c) -> decltype(&eta.l_hat) {
    if (c == "l") return &eta.l_hat;
    if (c == "m") return &eta.m_hat;
    if (c == "r") return &eta.r_hat;
    if (c == "g") return &eta.g_hat;
    if (c == "g0") return &eta.g0_hat;
    if (c == "g1") return &eta.g1_hat;
    if (c == "r0") return &eta.r0_hat;
    if (c == "r1") return &eta.r1_hat;
    return nullptr;
}

bool probability_valued(ScoreKind kind, const std::string& c) {
    if (c == "p") return true;
    if (kind == ScoreKind::IrmAte || kind == ScoreKind::IrmAtte) return c == "m";
    if (kind == ScoreKind::IivmLate) return c == "m" || c == "r0" || c == "r1";
    return false;
}

double mean_score(const ScoreSpec& score, const VectorXd& y, const VectorXd& d, const std::optional<VectorXd>& z,
                  const NuisancePredictions& eta, double theta0) {
    return evaluate_score(score, y, d, z, eta).at(theta0).mean();
}

}  // namespace

double gateaux_derivative(const ScoreSpec& score, const VectorXd& y, const VectorXd& d,
                          const std::optional<VectorXd>& z, const NuisancePredictions& truth, double theta0,
                          const std::string& component, double h, const VectorXd& direction) {
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "perturbation scale must be positive");
    NuisancePredictions up = truth;
    NuisancePredictions down = truth;
    auto* su = component_slot(up, component);
    auto* sd = component_slot(down, component);
    if (!su || !*su) throw Error(ErrorCode::InvalidArgument, "no nuisance component '" + component + "'");
    if (direction.size() != (*su)->size()) throw Error(ErrorCode::LengthMismatch, "direction has the wrong length");
    const VectorXd base = **su;
    *su = (base + h * direction).eval();
    *sd = (base - h * direction).eval();
    return (mean_score(score, y, d, z, up, theta0) - mean_score(score, y, d, z, down, theta0)) / (2.0 * h);
}

double gateaux_derivative(const ScoreSpec& score, const VectorXd& y, const VectorXd& d,
                          const std::optional<VectorXd>& z, const NuisancePredictions& truth, double theta0,
                          const std::string& component, double h, PerturbationDirection direction) {
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "perturbation scale must be positive");
    bool logistic = direction == PerturbationDirection::Logistic;
    if (direction == PerturbationDirection::Automatic) logistic = probability_valued(score.kind, component);

    if (component == "p") {
        if (!truth.p_hat) throw Error(ErrorCode::InvalidArgument, "no p component to perturb");
        NuisancePredictions up = truth;
        NuisancePredictions down = truth;
        const double p = *truth.p_hat;
        const double delta = logistic ? p * (1.0 - p) : 1.0;
        up.p_hat = p + h * delta;
        down.p_hat = p - h * delta;
        return (mean_score(score, y, d, z, up, theta0) - mean_score(score, y, d, z, down, theta0)) / (2.0 * h);
    }
    auto* slot = component_slot(truth, component);
    if (!slot || !*slot) throw Error(ErrorCode::InvalidArgument, "no nuisance component '" + component + "'");
    const VectorXd& base = **slot;
    const VectorXd delta =
        logistic ? (base.array() * (1.0 - base.array())).matrix() : VectorXd::Ones(base.size()).eval();
    return gateaux_derivative(score, y, d, z, truth, theta0, component, h, delta);
}

double OrthogonalityReport::max_abs() const {
    double m = 0.0;
    for (double v : derivatives) m = std::max(m, std::abs(v));
    return m;
}

OrthogonalityReport check_orthogonality(const ScoreSpec& score, const VectorXd& y, const VectorXd& d,
                                        const std::optional<VectorXd>& z, const NuisancePredictions& truth,
                                        double theta0, double h, PerturbationDirection direction) {
    OrthogonalityReport report;
    for (const auto& c : score_components(score.kind)) {
        if (c != "p" && !*component_slot(truth, c)) continue;
        report.components.push_back(c);
        report.derivatives.push_back(gateaux_derivative(score, y, d, z, truth, theta0, c, h, direction));
    }
    return report;
}

}  // namespace dml
