#pragma once

#include "dml/config.hpp"
#include "dml/core.hpp"

#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dml {

/// Fitted nuisance model. Immutable and shareable once built.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual VectorXd predict(const MatrixXd& x) const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

class ConstantPredictor final : public Predictor {
public:
    explicit ConstantPredictor(double value) : value_(value) {}
    VectorXd predict(const MatrixXd& x) const override { return VectorXd::Constant(x.rows(), value_); }
    double value() const { return value_; }

private:
    double value_;
};

/// intercept + x * coef, coefficients on the original feature scale.
class LinearPredictor final : public Predictor {
public:
    LinearPredictor(double intercept, VectorXd coef) : intercept_(intercept), coef_(std::move(coef)) {}
    VectorXd predict(const MatrixXd& x) const override;
    double intercept() const { return intercept_; }
    const VectorXd& coef() const { return coef_; }

private:
    double intercept_;
    VectorXd coef_;
};

/// Logistic link on a linear index; probabilities clipped to
/// [clip_eps, 1 - clip_eps] at prediction time.
class LogisticPredictor final : public Predictor {
public:
    LogisticPredictor(double intercept, VectorXd coef, double clip_eps)
        : intercept_(intercept), coef_(std::move(coef)), clip_eps_(clip_eps) {}
    VectorXd predict(const MatrixXd& x) const override;
    VectorXd predict_unclipped(const MatrixXd& x) const;
    double intercept() const { return intercept_; }
    const VectorXd& coef() const { return coef_; }

private:
    double intercept_;
    VectorXd coef_;
    double clip_eps_;
};

// --- specifications -------------------------------------------------------

struct OlsSpec {};
struct RidgeSpec {
    double lambda = 1.0;
};
struct LassoSpec {
    double lambda = 0.1;
};
/// Cross-validated lasso, lambda.min rule. An empty grid means 100
/// log-spaced values from lambda_max down to 0.001 * lambda_max.
struct LassoCvSpec {
    std::vector<double> lambda_grid;
    Index cv_folds = 5;
};
struct LogisticSpec {
    double l2_lambda = 0.0;
};
/// L1-penalized logistic regression with cross-validated penalty
/// (binomial deviance).
struct LogisticLassoCvSpec {
    std::vector<double> lambda_grid;
    Index cv_folds = 5;
};
enum class ForestTask { Regression, Classification };
struct RandomForestSpec {
    int num_trees = 100;
    Index mtry = 0;  // 0: all features
    int min_node_size = 2;
    int max_depth = 5;
    ForestTask task = ForestTask::Regression;
};

using LearnerKind =
    std::variant<OlsSpec, RidgeSpec, LassoSpec, LassoCvSpec, LogisticSpec, LogisticLassoCvSpec, RandomForestSpec>;

struct LearnerSpec {
    LearnerKind kind = LassoCvSpec{};
    std::uint64_t seed = 0;
    double clip_eps = 0.01;

    bool is_classifier() const;
    // Throws InvalidArgument when a parameter is out of range for p features.
    void validate(Index n_features) const;
    std::string describe() const;

    // kind = ols | ridge | lasso | lasso_cv | logistic | logistic_lasso_cv |
    //        random_forest (+ task = regression | classification)
    static LearnerSpec from_config(const KeyValueConfig& section);
};

// --- fitting --------------------------------------------------------------

struct LassoOptions {
    double tol = 1e-7;
    long max_iter = 100000;
};

/// Lasso iterate returned when coordinate descent hits max_iter.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double intercept, VectorXd coef)
        : Error(ErrorCode::NonConvergence, what), intercept(intercept), coef(std::move(coef)) {}
    double intercept;
    VectorXd coef;
};

std::shared_ptr<const LinearPredictor> fit_ols(const MatrixXd& x, const VectorXd& y);
std::shared_ptr<const LinearPredictor> fit_ridge(const MatrixXd& x, const VectorXd& y, double lambda);
std::shared_ptr<const LinearPredictor> fit_lasso_cd(const MatrixXd& x, const VectorXd& y, double lambda,
                                                    const LassoOptions& opts = {});

struct LassoCvResult {
    std::shared_ptr<const LinearPredictor> model;
    std::vector<double> lambdas;  // descending
    std::vector<double> cv_error;
    std::size_t selected = 0;
};

LassoCvResult fit_lasso_cv(const MatrixXd& x, const VectorXd& y, const std::vector<double>& lambda_grid,
                           Index cv_folds, std::uint64_t seed, const LassoOptions& opts = {});

/// Largest penalty for which some slope is nonzero: max_j |x_j' (y - ybar)| / n
/// on standardized columns.
double lasso_lambda_max(const MatrixXd& x, const VectorXd& y);

std::shared_ptr<const LogisticPredictor> fit_logistic(const MatrixXd& x, const VectorXd& y, double l2_lambda,
                                                      double clip_eps = 0.01);

struct LogisticLassoCvResult {
    PredictorPtr model;
    std::vector<double> lambdas;
    std::vector<double> cv_deviance;
    std::size_t selected = 0;
};

LogisticLassoCvResult fit_logistic_lasso_cv(const MatrixXd& x, const VectorXd& y,
                                            const std::vector<double>& lambda_grid, Index cv_folds,
                                            std::uint64_t seed, double clip_eps = 0.01);

PredictorPtr fit_random_forest(const MatrixXd& x, const VectorXd& y, const RandomForestSpec& spec,
                               std::uint64_t seed, double clip_eps = 0.01);

/// Dispatches on spec.kind.
PredictorPtr fit_learner(const LearnerSpec& spec, const MatrixXd& x, const VectorXd& y);

// --- tuning ---------------------------------------------------------------

enum class TuneMeasure { MSE, ClassificationError };

struct TuneSettings {
    // Parameter name -> candidate values. Candidates are the cartesian
    // product in declaration order, last parameter varying fastest.
    std::vector<std::pair<std::string, std::vector<double>>> grid;
    Index cv_folds = 5;
    TuneMeasure measure = TuneMeasure::MSE;
    bool tune_on_folds = false;
};

struct TuneResult {
    LearnerSpec best;
    std::vector<LearnerSpec> candidates;
    std::vector<double> scores;
};

/// `resolution` evenly spaced values from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, int resolution);

LearnerSpec with_parameter(const LearnerSpec& spec, const std::string& name, double value);

TuneResult tune_grid_search(const LearnerSpec& spec_template, const TuneSettings& settings, const MatrixXd& x,
                            const VectorXd& y, std::uint64_t seed);

}  // namespace dml
