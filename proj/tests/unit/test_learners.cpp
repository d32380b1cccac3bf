#include "dml/learners.hpp"
#include "dml/random.hpp"

#include "helpers.hpp"

#include <cmath>

using namespace dml;
using testing::error_code_of;

namespace {

struct Standardized {
    MatrixXd z;
    VectorXd mean, sd;
};

// Centers columns and scales them to unit population standard deviation.
Standardized standardize(const MatrixXd& x) {
    Standardized s;
    s.mean = x.colwise().mean().transpose();
    s.z = x.rowwise() - s.mean.transpose();
    s.sd = (s.z.colwise().squaredNorm() / double(x.rows())).cwiseSqrt().transpose();
    for (Index j = 0; j < x.cols(); ++j) s.z.col(j) /= s.sd(j);
    return s;
}

double soft(double v, double t) { return v > t ? v - t : (v < -t ? v + t : 0.0); }

// Residual-updating coordinate descent run to a tight tolerance; returns
// slopes on the standardized scale.
VectorXd reference_lasso(const MatrixXd& z, const VectorXd& yc, double lambda) {
    const double n = double(z.rows());
    VectorXd beta = VectorXd::Zero(z.cols());
    VectorXd r = yc;
    for (int sweep = 0; sweep < 20000; ++sweep) {
        double change = 0.0;
        for (Index j = 0; j < z.cols(); ++j) {
            const double old = beta(j);
            beta(j) = soft(z.col(j).dot(r) / n + old, lambda);
            if (beta(j) != old) r -= (beta(j) - old) * z.col(j);
            change = std::max(change, std::abs(beta(j) - old));
        }
        if (change < 1e-13) break;
    }
    return beta;
}

VectorXd slopes_std(const LinearPredictor& p, const Standardized& s) { return p.coef().cwiseProduct(s.sd); }

}  // namespace

TEST_SUITE("learners") {

TEST_CASE("ols fits exact lines and rejects singular designs") {
    MatrixXd x(3, 1);
    x << 1, 2, 3;
    VectorXd y(3);
    y << 2, 4, 6;
    const auto line = fit_ols(x, y);
    CHECK((line->predict(x) - y).cwiseAbs().maxCoeff() < 1e-12);

    const auto flat = fit_ols(x, VectorXd::Constant(3, 7.0));
    CHECK(std::abs(flat->coef()(0)) < 1e-12);
    CHECK(flat->intercept() == doctest::Approx(7.0));

    MatrixXd dup = testing::gaussian(10, 2, 4);
    dup.col(1) = dup.col(0);
    CHECK(error_code_of([&] { fit_ols(dup, VectorXd::Ones(10)); }) == ErrorCode::SingularDesign);
}

TEST_CASE("ridge solves the standardized normal equations") {
    // One standardized predictor: beta = (x'y / n) / (1 + lambda).
    MatrixXd x(4, 1);
    x << -1, -1, 1, 1;
    VectorXd y(4);
    y << 0.5, -1.0, 2.0, 3.0;
    const auto one = fit_ridge(x, y, 1.0);
    const double xy_n = x.col(0).dot(y) / 4.0;
    CHECK(one->coef()(0) == doctest::Approx(xy_n / 2.0).epsilon(1e-12));

    const MatrixXd xs = testing::gaussian(60, 5, 5) * 3.0;
    const VectorXd ys = xs * VectorXd::LinSpaced(5, 1, 2) + testing::gaussian(60, 1, 6).col(0);
    const auto s = standardize(xs);
    const double lambda = 0.3;
    MatrixXd a = s.z.transpose() * s.z / 60.0;
    a.diagonal().array() += lambda;
    const VectorXd expect = a.ldlt().solve(s.z.transpose() * (ys.array() - ys.mean()).matrix() / 60.0);
    CHECK((slopes_std(*fit_ridge(xs, ys, lambda), s) - expect).cwiseAbs().maxCoeff() < 1e-10);

    double previous = INFINITY;
    for (double l : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        const double norm = fit_ridge(xs, ys, l)->coef().norm();
        CHECK(norm < previous);
        previous = norm;
    }
    const auto tiny = fit_ridge(xs, ys, 1e-10);
    CHECK((tiny->coef() - fit_ols(xs, ys)->coef()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lasso with one standardized predictor is a soft threshold") {
    MatrixXd x(4, 1);
    x << -1, -1, 1, 1;
    VectorXd y(4);
    y << 0.0, -1.0, 2.0, 3.0;
    const double xy_n = x.col(0).dot(y) / 4.0;  // 1.5
    for (double lambda : {0.0, 0.5, 1.2, 1.5, 2.0})
        CHECK(fit_lasso_cd(x, y, lambda)->coef()(0) == doctest::Approx(soft(xy_n, lambda)).epsilon(1e-12));
}

TEST_CASE("lasso agrees with a residual-updating reference and satisfies KKT") {
    const Index n = 120, p = 8;
    const MatrixXd x = testing::gaussian(n, p, 7) * 2.0 + MatrixXd::Constant(n, p, 1.0);
    VectorXd beta(p);
    beta << 2, -1, 0.5, 0, 0, 0, 0.25, 0;
    const VectorXd y = x * beta + testing::gaussian(n, 1, 8).col(0);
    const auto s = standardize(x);
    const VectorXd yc = (y.array() - y.mean()).matrix();

    for (double lambda : {0.02, 0.1, 0.5}) {
        const auto fit = fit_lasso_cd(x, y, lambda);
        const VectorXd b = slopes_std(*fit, s);
        CHECK((b - reference_lasso(s.z, yc, lambda)).cwiseAbs().maxCoeff() < 1e-6);
        const VectorXd grad = s.z.transpose() * (y - fit->predict(x)) / double(n);
        for (Index j = 0; j < p; ++j) {
            if (b(j) == 0.0)
                CHECK(std::abs(grad(j)) <= lambda + 1e-6);
            else
                CHECK(grad(j) == doctest::Approx(lambda * (b(j) > 0 ? 1.0 : -1.0)).epsilon(1e-5));
        }
    }

    const double lmax = lasso_lambda_max(x, y);
    CHECK(lmax == doctest::Approx((s.z.transpose() * yc / double(n)).cwiseAbs().maxCoeff()).epsilon(1e-12));
    CHECK(fit_lasso_cd(x, y, lmax)->coef().cwiseAbs().maxCoeff() == 0.0);
    CHECK(fit_lasso_cd(x, y, 0.999 * lmax)->coef().cwiseAbs().maxCoeff() > 0.0);
    CHECK((fit_lasso_cd(x, y, 0.0)->coef() - fit_ols(x, y)->coef()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lasso reports non-convergence with the last iterate") {
    const MatrixXd x = testing::gaussian(50, 6, 9);
    const VectorXd y = x.rowwise().sum();
    try {
        fit_lasso_cd(x, y, 1e-4, LassoOptions{1e-15, 1});
        FAIL("expected NonConvergence");
    } catch (const NonConvergenceError& e) {
        CHECK(e.code() == ErrorCode::NonConvergence);
        CHECK(e.coef.size() == 6);
    }
}

TEST_CASE("cross-validated lasso") {
    const MatrixXd x = testing::gaussian(200, 10, 10);
    const VectorXd y = 1.5 * x.col(3) + 0.5 * testing::gaussian(200, 1, 11).col(0);

    const auto single = fit_lasso_cv(x, y, {0.05}, 5, 1);
    CHECK(single.model->coef() == fit_lasso_cd(x, y, 0.05)->coef());
    CHECK(single.model->intercept() == fit_lasso_cd(x, y, 0.05)->intercept());

    const auto cv = fit_lasso_cv(x, y, {}, 5, 1);
    CHECK(cv.lambdas.size() == 100);
    CHECK(cv.lambdas.front() == doctest::Approx(lasso_lambda_max(x, y)));
    CHECK(cv.lambdas.back() == doctest::Approx(0.001 * lasso_lambda_max(x, y)));
    CHECK(cv.model->coef()(3) > 1.0);
    CHECK(cv.cv_error[cv.selected] == *std::min_element(cv.cv_error.begin(), cv.cv_error.end()));

    // Pure noise: lambda.min keeps every slope below 0.05 in at least 95 of
    // 100 samples of size 2000.
    int quiet = 0;
    for (unsigned s = 0; s < 100; ++s) {
        const MatrixXd xn = testing::gaussian(2000, 10, 100 + s);
        const VectorXd yn = testing::gaussian(2000, 1, 200 + s).col(0);
        if (fit_lasso_cv(xn, yn, {}, 5, s).model->coef().cwiseAbs().maxCoeff() < 0.05) ++quiet;
    }
    CHECK(quiet >= 95);
}

TEST_CASE("logistic regression") {
    Rng rng = make_rng(12);
    const Index n = 10000;
    const MatrixXd x = standard_normal(n, 1, rng);
    std::uniform_real_distribution<double> u;
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) y(i) = u(rng) < 1.0 / (1.0 + std::exp(-(0.5 + 1.5 * x(i, 0)))) ? 1.0 : 0.0;
    const auto fit = fit_logistic(x, y, 0.0);
    CHECK(std::abs(fit->intercept() - 0.5) < 0.1);
    CHECK(std::abs(fit->coef()(0) - 1.5) < 0.1);
    const VectorXd p = fit->predict(x);
    CHECK(p.minCoeff() >= 0.01);
    CHECK(p.maxCoeff() <= 0.99);

    VectorXd balanced(n);
    for (Index i = 0; i < n; ++i) balanced(i) = double(i % 2);
    // The intercept's score equation makes the fitted probabilities average
    // to the label mean exactly.
    const auto flat = fit_logistic(x, balanced, 0.0);
    CHECK(flat->predict_unclipped(x).mean() == doctest::Approx(balanced.mean()).epsilon(1e-8));
    CHECK(std::abs(flat->coef()(0)) < 0.05);

    MatrixXd sx(6, 1);
    sx << -3, -2, -1, 1, 2, 3;
    VectorXd sy(6);
    sy << 0, 0, 0, 1, 1, 1;
    CHECK(error_code_of([&] { fit_logistic(sx, sy, 0.0); }) == ErrorCode::SeparationDetected);
    CHECK_NOTHROW(fit_logistic(sx, sy, 0.1));
}

TEST_CASE("cross-validated logistic lasso keeps the signal and clips") {
    Rng rng = make_rng(13);
    const Index n = 800;
    const MatrixXd x = standard_normal(n, 6, rng);
    std::uniform_real_distribution<double> u;
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) y(i) = u(rng) < 1.0 / (1.0 + std::exp(-2.0 * x(i, 0))) ? 1.0 : 0.0;
    const auto cv = fit_logistic_lasso_cv(x, y, {}, 5, 3, 0.05);
    const auto* model = dynamic_cast<const LogisticPredictor*>(cv.model.get());
    REQUIRE(model != nullptr);
    CHECK(model->coef()(0) > 1.0);
    const VectorXd p = cv.model->predict(x);
    CHECK(p.minCoeff() >= 0.05);
    CHECK(p.maxCoeff() <= 0.95);
}

TEST_CASE("random forest") {
    MatrixXd x(8, 1);
    x << 0, 0, 0, 0, 1, 1, 1, 1;
    VectorXd y(8);
    y << 1, 2, 1, 2, 5, 6, 5, 6;
    // A single stump on all rows with a deterministic bootstrap would still
    // resample; use many trees of depth one and check the group means.
    RandomForestSpec stump;
    stump.num_trees = 1;
    stump.max_depth = 1;
    stump.min_node_size = 1;
    const auto one = fit_random_forest(x, y, stump, 3);
    const VectorXd p1 = one->predict(x);
    CHECK(p1(0) < p1(7));
    CHECK(p1.head(4).isConstant(p1(0)));
    CHECK(p1.tail(4).isConstant(p1(7)));

    RandomForestSpec forest;
    forest.num_trees = 200;
    forest.max_depth = 1;
    forest.min_node_size = 1;
    const VectorXd pf = fit_random_forest(x, y, forest, 4)->predict(x);
    CHECK(pf(0) == doctest::Approx(1.5).epsilon(0.1));
    CHECK(pf(7) == doctest::Approx(5.5).epsilon(0.05));

    CHECK(fit_random_forest(x, VectorXd::Constant(8, 3.25), forest, 1)->predict(x) == VectorXd::Constant(8, 3.25));

    const MatrixXd xs = testing::gaussian(300, 5, 14);
    const VectorXd ys = xs.col(0).array().sin() + xs.col(1).array().square();
    RandomForestSpec deep;
    deep.num_trees = 20;
    deep.mtry = 2;
    deep.max_depth = 8;
    const VectorXd a = fit_random_forest(xs, ys, deep, 42)->predict(xs);
    CHECK(a == fit_random_forest(xs, ys, deep, 42)->predict(xs));
    CHECK(a != fit_random_forest(xs, ys, deep, 43)->predict(xs));
    CHECK(a.minCoeff() >= ys.minCoeff());
    CHECK(a.maxCoeff() <= ys.maxCoeff());

    RandomForestSpec cls = deep;
    cls.task = ForestTask::Classification;
    const VectorXd labels = (xs.col(0).array() > 0).cast<double>().matrix();
    const VectorXd probs = fit_random_forest(xs, labels, cls, 1, 0.02)->predict(xs);
    CHECK(probs.minCoeff() >= 0.02);
    CHECK(probs.maxCoeff() <= 0.98);
    CHECK(probs(0) == doctest::Approx(labels(0)).epsilon(0.1));
}

TEST_CASE("learner specs validate and dispatch") {
    LearnerSpec bad{RandomForestSpec{0, 0, 2, 5, ForestTask::Regression}};
    CHECK(error_code_of([&] { bad.validate(3); }) == ErrorCode::InvalidArgument);
    LearnerSpec wide{RandomForestSpec{10, 4, 2, 5, ForestTask::Regression}};
    CHECK(error_code_of([&] { wide.validate(3); }) == ErrorCode::InvalidArgument);

    const auto cfg = KeyValueConfig::parse("kind = random_forest\nnum_trees = 7\nmtry = 2\ntask = classification\n");
    const auto spec = LearnerSpec::from_config(cfg);
    REQUIRE(std::holds_alternative<RandomForestSpec>(spec.kind));
    CHECK(std::get<RandomForestSpec>(spec.kind).num_trees == 7);
    CHECK(spec.is_classifier());

    LearnerSpec logit{LogisticSpec{}};
    logit.clip_eps = 0.01;
    const auto constant = fit_learner(logit, testing::gaussian(5, 2, 1), VectorXd::Ones(5));
    CHECK(constant->predict(testing::gaussian(3, 2, 2)) == VectorXd::Constant(3, 0.99));
}

TEST_CASE("grid search tuning") {
    const MatrixXd x = testing::gaussian(150, 6, 15);
    const VectorXd y = x.col(0) + 0.3 * testing::gaussian(150, 1, 16).col(0);
    TuneSettings settings;
    settings.grid = {{"lambda", linspace(0.05, 0.1, 11)}};
    settings.cv_folds = 5;
    const auto result = tune_grid_search(LearnerSpec{LassoSpec{}}, settings, x, y, 1);
    CHECK(result.candidates.size() == 11);
    CHECK(result.scores.size() == 11);
    const auto best = std::min_element(result.scores.begin(), result.scores.end()) - result.scores.begin();
    CHECK(std::get<LassoSpec>(result.best.kind).lambda == std::get<LassoSpec>(result.candidates[std::size_t(best)].kind).lambda);

    settings.grid = {{"lambda", {0.07}}};
    CHECK(std::get<LassoSpec>(tune_grid_search(LearnerSpec{LassoSpec{}}, settings, x, y, 1).best.kind).lambda == 0.07);

    // Both penalties exceed lambda_max, so the candidates tie exactly.
    settings.grid = {{"lambda", {50.0, 60.0}}};
    const auto tie = tune_grid_search(LearnerSpec{LassoSpec{}}, settings, x, y, 1);
    CHECK(tie.scores[0] == tie.scores[1]);
    CHECK(std::get<LassoSpec>(tie.best.kind).lambda == 50.0);

    settings.grid = {{"num_trees", {5, 10}}, {"max_depth", {2, 3, 4}}};
    const auto product = tune_grid_search(LearnerSpec{RandomForestSpec{}}, settings, x, y, 1);
    REQUIRE(product.candidates.size() == 6);
    CHECK(std::get<RandomForestSpec>(product.candidates[1].kind).max_depth == 3);
    CHECK(std::get<RandomForestSpec>(product.candidates[3].kind).num_trees == 10);

    settings.grid.clear();
    CHECK(error_code_of([&] { tune_grid_search(LearnerSpec{LassoSpec{}}, settings, x, y, 1); }) == ErrorCode::EmptyGrid);
}

}
