#include "dml/learners.hpp"
#include "dml/resampling.hpp"

#include "linear_stats.hpp"

#include <algorithm>
#include <cmath>

namespace dml {

VectorXd LinearPredictor::predict(const MatrixXd& x) const {
    if (x.cols() != coef_.size()) throw Error(ErrorCode::LengthMismatch, "feature count differs from fitted model");
    return (x * coef_).array() + intercept_;
}

namespace detail {

SufficientStats SufficientStats::of(const MatrixXd& xc, const VectorXd& yc) {
    SufficientStats s;
    s.n = static_cast<double>(xc.rows());
    s.sx = xc.colwise().sum().transpose();
    s.sxx = MatrixXd::Zero(xc.cols(), xc.cols());
    s.sxx.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
    s.sxx = s.sxx.selfadjointView<Eigen::Lower>();
    s.sy = yc.sum();
    s.sxy = xc.transpose() * yc;
    s.syy = yc.squaredNorm();
    return s;
}

SufficientStats SufficientStats::operator-(const SufficientStats& o) const {
    SufficientStats s;
    s.n = n - o.n;
    s.sx = sx - o.sx;
    s.sxx = sxx - o.sxx;
    s.sy = sy - o.sy;
    s.sxy = sxy - o.sxy;
    s.syy = syy - o.syy;
    return s;
}

StandardizedProblem standardize(const SufficientStats& s) {
    StandardizedProblem p;
    const Index d = s.sx.size();
    p.mean = s.sx / s.n;
    p.ybar = s.sy / s.n;
    p.sd = VectorXd::Zero(d);
    p.usable.assign(static_cast<std::size_t>(d), 0);
    for (Index j = 0; j < d; ++j) {
        const double second = s.sxx(j, j) / s.n;
        const double var = second - p.mean(j) * p.mean(j);
        if (var > 1e-10 * second && var > 0.0) {
            p.sd(j) = std::sqrt(var);
            p.usable[static_cast<std::size_t>(j)] = 1;
        }
    }
    p.gram = MatrixXd::Zero(d, d);
    p.corr = VectorXd::Zero(d);
    for (Index j = 0; j < d; ++j) {
        if (!p.usable[static_cast<std::size_t>(j)]) continue;
        for (Index k = 0; k < d; ++k) {
            if (!p.usable[static_cast<std::size_t>(k)]) continue;
            p.gram(j, k) = (s.sxx(j, k) / s.n - p.mean(j) * p.mean(k)) / (p.sd(j) * p.sd(k));
        }
        p.gram(j, j) = 1.0;
        p.corr(j) = (s.sxy(j) / s.n - p.mean(j) * p.ybar) / p.sd(j);
    }
    return p;
}

void to_original_scale(const StandardizedProblem& p, const VectorXd& beta_std, double& intercept, VectorXd& coef) {
    coef = VectorXd::Zero(beta_std.size());
    for (Index j = 0; j < beta_std.size(); ++j)
        if (p.usable[static_cast<std::size_t>(j)]) coef(j) = beta_std(j) / p.sd(j);
    intercept = p.ybar - p.mean.dot(coef);
}

double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

long coordinate_descent(const StandardizedProblem& p, double lambda, VectorXd& beta, VectorXd& grad,
                        const LassoOptions& opts) {
    const Index d = beta.size();
    for (long it = 1; it <= opts.max_iter; ++it) {
        double max_change = 0.0;
        for (Index j = 0; j < d; ++j) {
            if (!p.usable[static_cast<std::size_t>(j)]) continue;
            const double old = beta(j);
            const double updated = soft_threshold(grad(j) + old, lambda);
            const double delta = updated - old;
            if (delta != 0.0) {
                beta(j) = updated;
                grad.noalias() -= p.gram.col(j) * delta;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (max_change < opts.tol) return it;
    }
    return -1;
}

double validation_sse(const SufficientStats& v, double intercept, const VectorXd& coef) {
    return v.syy - 2.0 * intercept * v.sy - 2.0 * coef.dot(v.sxy) + v.n * intercept * intercept +
           2.0 * intercept * coef.dot(v.sx) + coef.dot(v.sxx * coef);
}

}  // namespace detail

using detail::StandardizedProblem;
using detail::SufficientStats;

std::shared_ptr<const LinearPredictor> fit_ols(const MatrixXd& x, const VectorXd& y) {
    if (x.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "x and y row counts differ");
    const Index n = x.rows();
    const Index p = x.cols();
    if (n < p + 1) throw Error(ErrorCode::SingularDesign, "fewer observations than parameters");
    MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = x;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    if (qr.rank() < p + 1) throw Error(ErrorCode::SingularDesign, "design matrix is rank deficient");
    const VectorXd beta = qr.solve(y);
    return std::make_shared<LinearPredictor>(beta(0), beta.tail(p));
}

std::shared_ptr<const LinearPredictor> fit_ridge(const MatrixXd& x, const VectorXd& y, double lambda) {
    if (x.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "x and y row counts differ");
    if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge lambda must be positive");
    const VectorXd shift = x.colwise().mean().transpose();
    const double yshift = y.mean();
    const MatrixXd xc = x.rowwise() - shift.transpose();
    const VectorXd yc = y.array() - yshift;
    const StandardizedProblem p = detail::standardize(SufficientStats::of(xc, yc));
    MatrixXd system = p.gram;
    system.diagonal().array() += lambda;
    const VectorXd beta = system.ldlt().solve(p.corr);
    double intercept = 0.0;
    VectorXd coef;
    detail::to_original_scale(p, beta, intercept, coef);
    return std::make_shared<LinearPredictor>(yshift + intercept - shift.dot(coef), coef);
}

double lasso_lambda_max(const MatrixXd& x, const VectorXd& y) {
    const VectorXd shift = x.colwise().mean().transpose();
    const MatrixXd xc = x.rowwise() - shift.transpose();
    const VectorXd yc = y.array() - y.mean();
    const StandardizedProblem p = detail::standardize(SufficientStats::of(xc, yc));
    return p.corr.size() ? p.corr.cwiseAbs().maxCoeff() : 0.0;
}

std::shared_ptr<const LinearPredictor> fit_lasso_cd(const MatrixXd& x, const VectorXd& y, double lambda,
                                                    const LassoOptions& opts) {
    if (x.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "x and y row counts differ");
    if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lasso lambda must be non-negative");
    const VectorXd shift = x.colwise().mean().transpose();
    const double yshift = y.mean();
    const MatrixXd xc = x.rowwise() - shift.transpose();
    const VectorXd yc = y.array() - yshift;
    const StandardizedProblem p = detail::standardize(SufficientStats::of(xc, yc));
    VectorXd beta = VectorXd::Zero(x.cols());
    VectorXd grad = p.corr;
    const long iters = detail::coordinate_descent(p, lambda, beta, grad, opts);
    double intercept = 0.0;
    VectorXd coef;
    detail::to_original_scale(p, beta, intercept, coef);
    intercept = yshift + intercept - shift.dot(coef);
    if (iters < 0)
        throw NonConvergenceError("coordinate descent did not converge in " + std::to_string(opts.max_iter) +
                                      " sweeps",
                                  intercept, coef);
    return std::make_shared<LinearPredictor>(intercept, coef);
}

namespace {

std::vector<double> descending_grid(const std::vector<double>& grid, double lambda_max) {
    std::vector<double> lambdas = grid;
    if (lambdas.empty()) {
        const int count = 100;
        const double top = lambda_max > 0.0 ? lambda_max : 1e-8;
        for (int i = 0; i < count; ++i)
            lambdas.push_back(top * std::pow(1e-3, static_cast<double>(i) / (count - 1)));
    }
    for (double l : lambdas)
        if (!(l >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda grid values must be non-negative");
    std::stable_sort(lambdas.begin(), lambdas.end(), std::greater<>());
    return lambdas;
}

// Solves along `lambdas` with warm starts; calls visit(k, intercept, coef)
// with the model on the shifted scale the stats were computed on.
template <typename Visit>
void lasso_path(const SufficientStats& stats, const std::vector<double>& lambdas, std::size_t stop,
                const LassoOptions& opts, Visit&& visit) {
    const StandardizedProblem p = detail::standardize(stats);
    VectorXd beta = VectorXd::Zero(p.corr.size());
    VectorXd grad = p.corr;
    for (std::size_t k = 0; k <= stop && k < lambdas.size(); ++k) {
        const long iters = detail::coordinate_descent(p, lambdas[k], beta, grad, opts);
        double intercept = 0.0;
        VectorXd coef;
        detail::to_original_scale(p, beta, intercept, coef);
        if (iters < 0)
            throw NonConvergenceError("coordinate descent did not converge at lambda = " +
                                          std::to_string(lambdas[k]),
                                      intercept, coef);
        visit(k, intercept, coef);
    }
}

}  // namespace

LassoCvResult fit_lasso_cv(const MatrixXd& x, const VectorXd& y, const std::vector<double>& lambda_grid,
                           Index cv_folds, std::uint64_t seed, const LassoOptions& opts) {
    if (x.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "x and y row counts differ");
    const Index n = x.rows();
    const VectorXd shift = x.colwise().mean().transpose();
    const double yshift = y.mean();
    const MatrixXd xc = x.rowwise() - shift.transpose();
    const VectorXd yc = y.array() - yshift;
    const SufficientStats total = SufficientStats::of(xc, yc);

    LassoCvResult result;
    {
        const StandardizedProblem p = detail::standardize(total);
        const double lambda_max = p.corr.size() ? p.corr.cwiseAbs().maxCoeff() : 0.0;
        result.lambdas = descending_grid(lambda_grid, lambda_max);
    }
    const std::size_t n_lambda = result.lambdas.size();
    if (n_lambda == 0) throw Error(ErrorCode::EmptyGrid, "lambda grid is empty");

    if (n_lambda > 1) {
        const FoldPlan folds = draw_folds(n, cv_folds, 1, seed);
        std::vector<double> sse(n_lambda, 0.0);
        for (const Split& s : folds.splits.front()) {
            const SufficientStats held = SufficientStats::of(take_rows(xc, s.test), take(yc, s.test));
            const SufficientStats train = total - held;
            lasso_path(train, result.lambdas, n_lambda - 1, opts,
                       [&](std::size_t k, double b0, const VectorXd& coef) {
                           sse[k] += detail::validation_sse(held, b0, coef);
                       });
        }
        result.cv_error.resize(n_lambda);
        for (std::size_t k = 0; k < n_lambda; ++k) result.cv_error[k] = sse[k] / static_cast<double>(n);
        result.selected = static_cast<std::size_t>(
            std::min_element(result.cv_error.begin(), result.cv_error.end()) - result.cv_error.begin());
    }

    double intercept = 0.0;
    VectorXd coef;
    lasso_path(total, result.lambdas, result.selected, opts, [&](std::size_t k, double b0, const VectorXd& c) {
        if (k == result.selected) intercept = b0, coef = c;
    });
    result.model = std::make_shared<LinearPredictor>(yshift + intercept - shift.dot(coef), coef);
    return result;
}

}  // namespace dml
