#pragma once

#include "dml/learners.hpp"

#include <vector>

namespace dml::detail {

// Sums over a set of rows of (shifted) data.
struct SufficientStats {
    double n = 0.0;
    VectorXd sx;
    MatrixXd sxx;
    double sy = 0.0;
    VectorXd sxy;
    double syy = 0.0;

    static SufficientStats of(const MatrixXd& xc, const VectorXd& yc);
    SufficientStats operator-(const SufficientStats& o) const;
};

// Correlation-scale problem: columns centered and divided by their
// population standard deviation, so gram has a unit diagonal.
struct StandardizedProblem {
    VectorXd mean;
    VectorXd sd;
    double ybar = 0.0;
    MatrixXd gram;
    VectorXd corr;
    std::vector<char> usable;  // zero-variance columns are 0
};

StandardizedProblem standardize(const SufficientStats& s);
void to_original_scale(const StandardizedProblem& p, const VectorXd& beta_std, double& intercept, VectorXd& coef);
double soft_threshold(double z, double lambda);

// Cyclic coordinate descent on the covariance form. `grad` must equal
// corr - gram * beta on entry and is kept in sync. Returns the number of
// sweeps or -1 if max_iter was reached.
long coordinate_descent(const StandardizedProblem& p, double lambda, VectorXd& beta, VectorXd& grad,
                        const LassoOptions& opts);

double validation_sse(const SufficientStats& v, double intercept, const VectorXd& coef);

}  // namespace dml::detail
