#include "dml/inference.hpp"

#include "dml/parallel.hpp"
#include "dml/random.hpp"
#include "dml/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace dml {

namespace {

std::string normalize(std::string s) {
    std::string out;
    for (char c : s)
        if (c != '_' && c != '-' && c != ' ') out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

const BootstrapResult& require_boot(const std::optional<BootstrapResult>& boot) {
    if (!boot || boot->boot_t_stats.rows() == 0)
        throw Error(ErrorCode::BootstrapNotRun, "run the multiplier bootstrap first");
    return *boot;
}

}  // namespace

BootstrapMethod parse_bootstrap_method(const std::string& name) {
    const auto s = normalize(name);
    if (s == "normal" || s == "gaussian") return BootstrapMethod::Normal;
    if (s == "wild") return BootstrapMethod::Wild;
    if (s == "exponential") return BootstrapMethod::Exponential;
    throw Error(ErrorCode::ConfigError, "unknown bootstrap method '" + name + "'");
}

std::string to_string(BootstrapMethod method) {
    switch (method) {
        case BootstrapMethod::Normal: return "normal";
        case BootstrapMethod::Wild: return "wild";
        case BootstrapMethod::Exponential: return "exponential";
    }
    return "";
}

PAdjustMethod parse_p_adjust_method(const std::string& name) {
    const auto s = normalize(name);
    if (s == "romanowolf" || s == "rw") return PAdjustMethod::RomanoWolf;
    if (s == "bonferroni") return PAdjustMethod::Bonferroni;
    if (s == "holm") return PAdjustMethod::Holm;
    throw Error(ErrorCode::ConfigError, "unknown p-value adjustment '" + name + "'");
}

std::string to_string(PAdjustMethod method) {
    switch (method) {
        case PAdjustMethod::RomanoWolf: return "romano-wolf";
        case PAdjustMethod::Bonferroni: return "bonferroni";
        case PAdjustMethod::Holm: return "holm";
    }
    return "";
}

MatrixXd draw_weights(BootstrapMethod method, Index n_obs, Index B, std::uint64_t seed) {
    if (B < 1) throw Error(ErrorCode::InvalidArgument, "number of bootstrap draws must be positive");
    MatrixXd w(B, n_obs);
    for (Index b = 0; b < B; ++b) {
        Rng rng = make_rng(seed, {static_cast<std::uint64_t>(b)});
        switch (method) {
            case BootstrapMethod::Normal: {
                std::normal_distribution<double> normal;
                for (Index i = 0; i < n_obs; ++i) w(b, i) = normal(rng);
                break;
            }
            case BootstrapMethod::Wild: {
                std::normal_distribution<double> normal;
                for (Index i = 0; i < n_obs; ++i) {
                    const double v = normal(rng);
                    const double u = normal(rng);
                    w(b, i) = v / std::sqrt(2.0) + (u * u - 1.0) / 2.0;
                }
                break;
            }
            case BootstrapMethod::Exponential: {
                std::exponential_distribution<double> expo(1.0);
                for (Index i = 0; i < n_obs; ++i) w(b, i) = expo(rng) - 1.0;
                break;
            }
        }
    }
    return w;
}

BootstrapResult multiplier_bootstrap(const DmlFit& fit, const std::vector<MatrixXd>& weights,
                                     BootstrapMethod method) {
    const Index n_rep = fit.panel.n_rep();
    const Index n_treat = fit.panel.n_treatments();
    if (n_rep == 0 || n_treat == 0) throw Error(ErrorCode::FitNotRun, "no fitted scores available");
    if (static_cast<Index>(weights.size()) != n_rep)
        throw Error(ErrorCode::LengthMismatch, "need one weight matrix per repetition");
    const Index n = fit.panel.n_eval();
    const Index B = weights.front().rows();

    BootstrapResult out;
    out.method = method;
    out.B = B;
    out.boot_coefs.resize(B * n_rep, n_treat);
    out.boot_t_stats.resize(B * n_rep, n_treat);
    const double root_n = std::sqrt(static_cast<double>(n));
    for (Index r = 0; r < n_rep; ++r) {
        const MatrixXd& w = weights[std::size_t(r)];
        if (w.rows() != B || w.cols() != n)
            throw Error(ErrorCode::LengthMismatch, "weight matrix must be B x N");
        MatrixXd psi(n, n_treat);
        for (Index j = 0; j < n_treat; ++j) psi.col(j) = fit.panel.psi(r, j, fit.per_rep_coefs(r, j));
        const MatrixXd sums = w * psi;
        for (Index j = 0; j < n_treat; ++j) {
            out.boot_coefs.block(r * B, j, B, 1) = sums.col(j) / (root_n * fit.j0_hat(r, j));
            out.boot_t_stats.block(r * B, j, B, 1) = out.boot_coefs.block(r * B, j, B, 1) / fit.sigma_hat(r, j);
        }
    }
    return out;
}

BootstrapResult multiplier_bootstrap(const DmlFit& fit, BootstrapMethod method, Index B, std::uint64_t seed,
                                     unsigned workers) {
    const Index n_rep = fit.panel.n_rep();
    if (n_rep == 0) throw Error(ErrorCode::FitNotRun, "no fitted scores available");
    std::vector<MatrixXd> weights(static_cast<std::size_t>(n_rep));
    parallel_for(std::size_t(n_rep), workers, [&](std::size_t r) {
        weights[r] = draw_weights(method, fit.panel.n_eval(), B, derive_seed(seed, {r}));
    });
    return multiplier_bootstrap(fit, weights, method);
}

JointConfint joint_confint(const DmlFit& fit, const std::optional<BootstrapResult>& boot_opt, double level) {
    const auto& boot = require_boot(boot_opt);
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidLevel, "level must lie in (0, 1)");
    if (boot.boot_t_stats.rows() < 100)
        throw Error(ErrorCode::InvalidArgument, "joint intervals need at least 100 bootstrap draws");
    const VectorXd max_abs = boot.boot_t_stats.cwiseAbs().rowwise().maxCoeff();
    const double c = quantile(max_abs, level);
    JointConfint out{MatrixXd(fit.coef.size(), 2), c};
    out.intervals.col(0) = fit.coef - c * fit.se;
    out.intervals.col(1) = fit.coef + c * fit.se;
    return out;
}

AdjustedPvals p_adjust_romano_wolf(const DmlFit& fit, const std::optional<BootstrapResult>& boot_opt) {
    const auto& boot = require_boot(boot_opt);
    const Index m = fit.t_stat.size();
    const Index n_draws = boot.boot_t_stats.rows();
    if (boot.boot_t_stats.cols() != m) throw Error(ErrorCode::LengthMismatch, "bootstrap does not match the fit");
    const MatrixXd abs_star = boot.boot_t_stats.cwiseAbs();
    const VectorXd abs_t = fit.t_stat.cwiseAbs();

    AdjustedPvals out;
    out.method = PAdjustMethod::RomanoWolf;
    out.raw.resize(m);
    for (Index j = 0; j < m; ++j)
        out.raw(j) = static_cast<double>((abs_star.col(j).array() >= abs_t(j)).count()) / double(n_draws);

    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return abs_t(a) > abs_t(b); });

    out.adjusted.resize(m);
    // Running max of |t*| over the hypotheses not yet stepped past, built
    // from the least significant end.
    MatrixXd tail_max(n_draws, m);
    VectorXd running = VectorXd::Constant(n_draws, -1.0);
    for (Index r = m - 1; r >= 0; --r) {
        running = running.cwiseMax(abs_star.col(order[std::size_t(r)]));
        tail_max.col(r) = running;
    }
    double previous = 0.0;
    for (Index r = 0; r < m; ++r) {
        const Index j = order[std::size_t(r)];
        const double p = static_cast<double>((tail_max.col(r).array() >= abs_t(j)).count()) / double(n_draws);
        previous = std::max(previous, p);
        out.adjusted(j) = previous;
    }
    return out;
}

AdjustedPvals p_adjust_classical(const VectorXd& raw, PAdjustMethod method) {
    for (Index i = 0; i < raw.size(); ++i)
        if (!(raw(i) >= 0.0 && raw(i) <= 1.0))
            throw Error(ErrorCode::InvalidPValue, "p-values must lie in [0, 1]");
    const Index m = raw.size();
    AdjustedPvals out{raw, VectorXd(m), method};
    switch (method) {
        case PAdjustMethod::Bonferroni:
            out.adjusted = (raw * double(m)).cwiseMin(1.0);
            break;
        case PAdjustMethod::Holm: {
            std::vector<Index> order(static_cast<std::size_t>(m));
            std::iota(order.begin(), order.end(), Index(0));
            std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return raw(a) < raw(b); });
            double running = 0.0;
            for (Index r = 0; r < m; ++r) {
                const Index j = order[std::size_t(r)];
                running = std::max(running, std::min(1.0, double(m - r) * raw(j)));
                out.adjusted(j) = running;
            }
            break;
        }
        case PAdjustMethod::RomanoWolf:
            throw Error(ErrorCode::InvalidArgument, "Romano-Wolf needs bootstrap draws");
    }
    return out;
}

}  // namespace dml
