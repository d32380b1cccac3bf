#include "dml/learners.hpp"
#include "dml/resampling.hpp"

#include "linear_stats.hpp"

#include <algorithm>
#include <cmath>

namespace dml {

namespace {

double sigmoid(double t) { return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

double log1p_exp(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

void require_binary(const VectorXd& y) {
    for (Index i = 0; i < y.size(); ++i)
        if (y(i) != 0.0 && y(i) != 1.0)
            throw Error(ErrorCode::InvalidArgument, "classification target must be 0/1, got " + std::to_string(y(i)));
}

// Columns of x centered and scaled by the population sd; zero-variance
// columns are flagged unusable and zeroed.
struct Standardizer {
    VectorXd mean;
    VectorXd sd;
    std::vector<char> usable;

    explicit Standardizer(const MatrixXd& x) {
        const double n = static_cast<double>(x.rows());
        mean = x.colwise().sum().transpose() / n;
        sd = VectorXd::Zero(x.cols());
        usable.assign(static_cast<std::size_t>(x.cols()), 0);
        for (Index j = 0; j < x.cols(); ++j) {
            const double var = (x.col(j).array() - mean(j)).square().sum() / n;
            const double scale = x.col(j).squaredNorm() / n;
            if (var > 1e-10 * scale && var > 0.0) {
                sd(j) = std::sqrt(var);
                usable[static_cast<std::size_t>(j)] = 1;
            }
        }
    }

    MatrixXd apply(const MatrixXd& x) const {
        MatrixXd out(x.rows(), x.cols());
        for (Index j = 0; j < x.cols(); ++j) {
            if (usable[static_cast<std::size_t>(j)])
                out.col(j) = (x.col(j).array() - mean(j)) / sd(j);
            else
                out.col(j).setZero();
        }
        return out;
    }

    void to_original(double b0_std, const VectorXd& beta_std, double& intercept, VectorXd& coef) const {
        coef = VectorXd::Zero(beta_std.size());
        for (Index j = 0; j < beta_std.size(); ++j)
            if (usable[static_cast<std::size_t>(j)]) coef(j) = beta_std(j) / sd(j);
        intercept = b0_std - mean.dot(coef);
    }
};

double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

}  // namespace

VectorXd LogisticPredictor::predict_unclipped(const MatrixXd& x) const {
    if (x.cols() != coef_.size()) throw Error(ErrorCode::LengthMismatch, "feature count differs from fitted model");
    VectorXd eta = (x * coef_).array() + intercept_;
    return eta.unaryExpr([](double t) { return sigmoid(t); });
}

VectorXd LogisticPredictor::predict(const MatrixXd& x) const {
    return predict_unclipped(x).unaryExpr([this](double p) { return clamp_prob(p, clip_eps_); });
}

std::shared_ptr<const LogisticPredictor> fit_logistic(const MatrixXd& x, const VectorXd& y, double l2_lambda,
                                                      double clip_eps) {
    if (x.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "x and y row counts differ");
    if (!(l2_lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "l2_lambda must be non-negative");
    require_binary(y);
    const double ybar = y.mean();
    if (ybar == 0.0 || ybar == 1.0)
        throw Error(ErrorCode::SeparationDetected, "all labels are identical; the intercept diverges");

    const Standardizer st(x);
    const MatrixXd xs = st.apply(x);
    const Index n = x.rows();
    const Index p = x.cols();
    MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = xs;
    VectorXd penalty = VectorXd::Constant(p + 1, l2_lambda);
    penalty(0) = 0.0;

    auto loss = [&](const VectorXd& theta) {
        const VectorXd eta = design * theta;
        double l = 0.0;
        for (Index i = 0; i < n; ++i) l += log1p_exp(eta(i)) - y(i) * eta(i);
        return l / static_cast<double>(n) + 0.5 * (penalty.array() * theta.array().square()).sum();
    };
    auto separates = [&](const VectorXd& theta) {
        const VectorXd eta = design * theta;
        for (Index i = 0; i < n; ++i)
            if ((2.0 * y(i) - 1.0) * eta(i) <= 0.0) return false;
        return true;
    };

    VectorXd theta = VectorXd::Zero(p + 1);
    theta(0) = std::log(ybar / (1.0 - ybar));
    double current = loss(theta);
    bool converged = false;
    for (int it = 0; it < 200 && !converged; ++it) {
        const VectorXd eta = design * theta;
        VectorXd prob(n), w(n);
        for (Index i = 0; i < n; ++i) {
            prob(i) = sigmoid(eta(i));
            w(i) = prob(i) * (1.0 - prob(i));
        }
        const VectorXd grad =
            design.transpose() * (prob - y) / static_cast<double>(n) + (penalty.array() * theta.array()).matrix();
        MatrixXd hess = design.transpose() * w.asDiagonal() * design / static_cast<double>(n);
        hess.diagonal() += penalty;
        hess.diagonal().array() += 1e-12;
        const VectorXd step = hess.ldlt().solve(grad);
        double scale = 1.0;
        VectorXd next = theta - step;
        double next_loss = loss(next);
        while (next_loss > current + 1e-14 && scale > 1e-10) {
            scale *= 0.5;
            next = theta - scale * step;
            next_loss = loss(next);
        }
        converged = (scale * step).cwiseAbs().maxCoeff() < 1e-9;
        theta = next;
        current = next_loss;
        if (l2_lambda == 0.0 && separates(theta))
            throw Error(ErrorCode::SeparationDetected,
                        "classes are perfectly separated; coefficients diverge (set l2_lambda > 0)");
    }
    if (!converged) {
        if (l2_lambda == 0.0 && theta.tail(p).cwiseAbs().maxCoeff() > 30.0)
            throw Error(ErrorCode::SeparationDetected,
                        "coefficients diverge, classes are (quasi-)separated (set l2_lambda > 0)");
        throw NonConvergenceError("logistic regression did not converge", theta(0), theta.tail(p));
    }
    double intercept = 0.0;
    VectorXd coef;
    st.to_original(theta(0), theta.tail(p), intercept, coef);
    return std::make_shared<LogisticPredictor>(intercept, coef, clip_eps);
}

namespace {

// L1 logistic path by iteratively reweighted least squares with weighted
// coordinate descent; visit(k, intercept, coef) on the original scale.
template <typename Visit>
void logistic_lasso_path(const MatrixXd& x, const VectorXd& y, const std::vector<double>& lambdas,
                         std::size_t stop, Visit&& visit) {
    const Index n = x.rows();
    const Index p = x.cols();
    const double nd = static_cast<double>(n);
    const double ybar = y.mean();
    if (ybar <= 0.0 || ybar >= 1.0) {
        const double q = clamp_prob(ybar, 1e-5);
        for (std::size_t k = 0; k <= stop && k < lambdas.size(); ++k)
            visit(k, std::log(q / (1.0 - q)), VectorXd::Zero(p));
        return;
    }
    const Standardizer st(x);
    const MatrixXd xs = st.apply(x);
    double b0 = std::log(ybar / (1.0 - ybar));
    VectorXd beta = VectorXd::Zero(p);
    VectorXd eta = VectorXd::Constant(n, b0);
    VectorXd w(n), r(n), xwx(p);

    for (std::size_t k = 0; k <= stop && k < lambdas.size(); ++k) {
        const double lambda = lambdas[k];
        for (int outer = 0; outer < 50; ++outer) {
            for (Index i = 0; i < n; ++i) {
                const double pr = sigmoid(eta(i));
                w(i) = std::max(pr * (1.0 - pr), 1e-5);
                r(i) = (y(i) - pr) / w(i);
            }
            for (Index j = 0; j < p; ++j) xwx(j) = (w.array() * xs.col(j).array().square()).sum() / nd;
            const double wsum = w.sum();
            double outer_change = 0.0;
            for (int sweep = 0; sweep < 1000; ++sweep) {
                double max_change = 0.0;
                const double d0 = w.dot(r) / wsum;
                b0 += d0;
                r.array() -= d0;
                max_change = std::max(max_change, std::abs(d0));
                for (Index j = 0; j < p; ++j) {
                    if (!st.usable[static_cast<std::size_t>(j)] || xwx(j) <= 0.0) continue;
                    const double g = (w.array() * xs.col(j).array() * r.array()).sum() / nd;
                    const double updated = detail::soft_threshold(g + xwx(j) * beta(j), lambda) / xwx(j);
                    const double delta = updated - beta(j);
                    if (delta != 0.0) {
                        beta(j) = updated;
                        r.noalias() -= xs.col(j) * delta;
                        max_change = std::max(max_change, std::sqrt(xwx(j)) * std::abs(delta));
                    }
                }
                outer_change = std::max(outer_change, max_change);
                if (max_change < 1e-7) break;
            }
            eta = (xs * beta).array() + b0;
            if (outer_change < 1e-6) break;
        }
        double intercept = 0.0;
        VectorXd coef;
        st.to_original(b0, beta, intercept, coef);
        visit(k, intercept, coef);
    }
}

}  // namespace

LogisticLassoCvResult fit_logistic_lasso_cv(const MatrixXd& x, const VectorXd& y,
                                            const std::vector<double>& lambda_grid, Index cv_folds,
                                            std::uint64_t seed, double clip_eps) {
    if (x.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "x and y row counts differ");
    require_binary(y);
    const Index n = x.rows();
    LogisticLassoCvResult result;
    const double ybar = y.mean();
    if (ybar == 0.0 || ybar == 1.0) {
        result.model = std::make_shared<ConstantPredictor>(clamp_prob(ybar, clip_eps));
        return result;
    }

    std::vector<double> lambdas = lambda_grid;
    if (lambdas.empty()) {
        const Standardizer st(x);
        const MatrixXd xs = st.apply(x);
        const double lambda_max = xs.cols() ? (xs.transpose() * (y.array() - ybar).matrix()).cwiseAbs().maxCoeff() /
                                                  static_cast<double>(n)
                                            : 0.0;
        const double top = lambda_max > 0.0 ? lambda_max : 1e-8;
        for (int i = 0; i < 100; ++i) lambdas.push_back(top * std::pow(1e-3, i / 99.0));
    }
    std::stable_sort(lambdas.begin(), lambdas.end(), std::greater<>());
    result.lambdas = lambdas;
    const std::size_t n_lambda = lambdas.size();
    if (n_lambda == 0) throw Error(ErrorCode::EmptyGrid, "lambda grid is empty");

    if (n_lambda > 1) {
        const FoldPlan folds = draw_folds(n, cv_folds, 1, seed);
        std::vector<double> dev(n_lambda, 0.0);
        for (const Split& s : folds.splits.front()) {
            const MatrixXd xt = take_rows(x, s.train);
            const VectorXd yt = take(y, s.train);
            const MatrixXd xv = take_rows(x, s.test);
            const VectorXd yv = take(y, s.test);
            logistic_lasso_path(xt, yt, lambdas, n_lambda - 1, [&](std::size_t k, double b0, const VectorXd& coef) {
                const VectorXd eta = (xv * coef).array() + b0;
                double d = 0.0;
                for (Index i = 0; i < yv.size(); ++i) {
                    const double pr = clamp_prob(sigmoid(eta(i)), 1e-5);
                    d -= 2.0 * (yv(i) * std::log(pr) + (1.0 - yv(i)) * std::log(1.0 - pr));
                }
                dev[k] += d;
            });
        }
        result.cv_deviance.resize(n_lambda);
        for (std::size_t k = 0; k < n_lambda; ++k) result.cv_deviance[k] = dev[k] / static_cast<double>(n);
        result.selected = static_cast<std::size_t>(
            std::min_element(result.cv_deviance.begin(), result.cv_deviance.end()) - result.cv_deviance.begin());
    }

    double intercept = 0.0;
    VectorXd coef;
    logistic_lasso_path(x, y, lambdas, result.selected, [&](std::size_t k, double b0, const VectorXd& c) {
        if (k == result.selected) intercept = b0, coef = c;
    });
    result.model = std::make_shared<LogisticPredictor>(intercept, coef, clip_eps);
    return result;
}

}  // namespace dml
