#include "dml/learners.hpp"
#include "dml/random.hpp"
#include "dml/resampling.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dml {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_constant_binary(const VectorXd& y, double& value) {
    if (y.size() == 0) return false;
    value = y(0);
    if (value != 0.0 && value != 1.0) return false;
    for (Index i = 1; i < y.size(); ++i)
        if (y(i) != value) return false;
    return true;
}

}  // namespace

bool LearnerSpec::is_classifier() const {
    return std::visit(overloaded{
                          [](const LogisticSpec&) { return true; },
                          [](const LogisticLassoCvSpec&) { return true; },
                          [](const RandomForestSpec& s) { return s.task == ForestTask::Classification; },
                          [](const auto&) { return false; },
                      },
                      kind);
}

void LearnerSpec::validate(Index n_features) const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
    if (!(clip_eps >= 0.0 && clip_eps < 0.5)) fail("clip_eps must lie in [0, 0.5)");
    std::visit(overloaded{
                   [](const OlsSpec&) {},
                   [&](const RidgeSpec& s) {
                       if (!(s.lambda > 0.0)) fail("ridge lambda must be positive");
                   },
                   [&](const LassoSpec& s) {
                       if (!(s.lambda >= 0.0)) fail("lasso lambda must be non-negative");
                   },
                   [&](const LassoCvSpec& s) {
                       if (s.cv_folds < 2) fail("cv_folds must be at least 2");
                       for (double l : s.lambda_grid)
                           if (!(l >= 0.0)) fail("lambda grid values must be non-negative");
                   },
                   [&](const LogisticSpec& s) {
                       if (!(s.l2_lambda >= 0.0)) fail("l2_lambda must be non-negative");
                   },
                   [&](const LogisticLassoCvSpec& s) {
                       if (s.cv_folds < 2) fail("cv_folds must be at least 2");
                   },
                   [&](const RandomForestSpec& s) {
                       if (s.num_trees < 1) fail("num_trees must be at least 1");
                       if (s.min_node_size < 1) fail("min_node_size must be at least 1");
                       if (s.max_depth < 1) fail("max_depth must be at least 1");
                       if (s.mtry < 0 || s.mtry > n_features)
                           fail("mtry must lie in [1, " + std::to_string(n_features) + "]");
                   },
               },
               kind);
}

std::string LearnerSpec::describe() const {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const OlsSpec&) { os << "ols"; },
                   [&](const RidgeSpec& s) { os << "ridge(lambda=" << s.lambda << ")"; },
                   [&](const LassoSpec& s) { os << "lasso(lambda=" << s.lambda << ")"; },
                   [&](const LassoCvSpec& s) { os << "lasso_cv(folds=" << s.cv_folds << ")"; },
                   [&](const LogisticSpec& s) { os << "logistic(l2_lambda=" << s.l2_lambda << ")"; },
                   [&](const LogisticLassoCvSpec& s) { os << "logistic_lasso_cv(folds=" << s.cv_folds << ")"; },
                   [&](const RandomForestSpec& s) {
                       os << "random_forest(" << (s.task == ForestTask::Classification ? "classif" : "regr")
                          << ", trees=" << s.num_trees << ", mtry=" << s.mtry << ", min_node=" << s.min_node_size
                          << ", depth=" << s.max_depth << ")";
                   },
               },
               kind);
    return os.str();
}

LearnerSpec LearnerSpec::from_config(const KeyValueConfig& c) {
    LearnerSpec spec;
    const std::string kind = c.get_or("kind", "lasso_cv");
    spec.seed = static_cast<std::uint64_t>(c.get_int("seed", 0));
    spec.clip_eps = c.get_double("clip_eps", 0.01);
    if (kind == "ols") {
        spec.kind = OlsSpec{};
    } else if (kind == "ridge") {
        spec.kind = RidgeSpec{c.get_double("lambda", 1.0)};
    } else if (kind == "lasso") {
        spec.kind = LassoSpec{c.get_double("lambda", 0.1)};
    } else if (kind == "lasso_cv") {
        spec.kind = LassoCvSpec{c.get_double_list("lambda_grid"), static_cast<Index>(c.get_int("cv_folds", 5))};
    } else if (kind == "logistic") {
        spec.kind = LogisticSpec{c.get_double("l2_lambda", 0.0)};
    } else if (kind == "logistic_lasso_cv") {
        spec.kind =
            LogisticLassoCvSpec{c.get_double_list("lambda_grid"), static_cast<Index>(c.get_int("cv_folds", 5))};
    } else if (kind == "random_forest") {
        RandomForestSpec rf;
        rf.num_trees = static_cast<int>(c.get_int("num_trees", 100));
        rf.mtry = static_cast<Index>(c.get_int("mtry", 0));
        rf.min_node_size = static_cast<int>(c.get_int("min_node_size", 2));
        rf.max_depth = static_cast<int>(c.get_int("max_depth", 5));
        const std::string task = c.get_or("task", "regression");
        if (task == "regression")
            rf.task = ForestTask::Regression;
        else if (task == "classification")
            rf.task = ForestTask::Classification;
        else
            throw Error(ErrorCode::ConfigError, "unknown forest task '" + task + "'");
        spec.kind = rf;
    } else {
        throw Error(ErrorCode::ConfigError, "unknown learner kind '" + kind + "'");
    }
    return spec;
}

PredictorPtr fit_learner(const LearnerSpec& spec, const MatrixXd& x, const VectorXd& y) {
    spec.validate(x.cols());
    double constant = 0.0;
    if (spec.is_classifier() && is_constant_binary(y, constant))
        return std::make_shared<ConstantPredictor>(std::clamp(constant, spec.clip_eps, 1.0 - spec.clip_eps));
    return std::visit(overloaded{
                          [&](const OlsSpec&) -> PredictorPtr { return fit_ols(x, y); },
                          [&](const RidgeSpec& s) -> PredictorPtr { return fit_ridge(x, y, s.lambda); },
                          [&](const LassoSpec& s) -> PredictorPtr { return fit_lasso_cd(x, y, s.lambda); },
                          [&](const LassoCvSpec& s) -> PredictorPtr {
                              return fit_lasso_cv(x, y, s.lambda_grid, s.cv_folds, spec.seed).model;
                          },
                          [&](const LogisticSpec& s) -> PredictorPtr {
                              return fit_logistic(x, y, s.l2_lambda, spec.clip_eps);
                          },
                          [&](const LogisticLassoCvSpec& s) -> PredictorPtr {
                              return fit_logistic_lasso_cv(x, y, s.lambda_grid, s.cv_folds, spec.seed, spec.clip_eps)
                                  .model;
                          },
                          [&](const RandomForestSpec& s) -> PredictorPtr {
                              return fit_random_forest(x, y, s, spec.seed, spec.clip_eps);
                          },
                      },
                      spec.kind);
}

std::vector<double> linspace(double lo, double hi, int resolution) {
    if (resolution < 1) throw Error(ErrorCode::InvalidArgument, "resolution must be positive");
    if (resolution == 1) return {lo};
    std::vector<double> out;
    for (int i = 0; i < resolution; ++i) out.push_back(lo + (hi - lo) * i / (resolution - 1));
    return out;
}

LearnerSpec with_parameter(const LearnerSpec& spec, const std::string& name, double value) {
    LearnerSpec out = spec;
    bool known = false;
    std::visit(overloaded{
                   [&](RidgeSpec& s) {
                       if (name == "lambda") s.lambda = value, known = true;
                   },
                   [&](LassoSpec& s) {
                       if (name == "lambda") s.lambda = value, known = true;
                   },
                   [&](LogisticSpec& s) {
                       if (name == "l2_lambda") s.l2_lambda = value, known = true;
                   },
                   [&](RandomForestSpec& s) {
                       const int v = static_cast<int>(std::lround(value));
                       if (name == "num_trees") s.num_trees = v, known = true;
                       if (name == "mtry") s.mtry = v, known = true;
                       if (name == "min_node_size") s.min_node_size = v, known = true;
                       if (name == "max_depth") s.max_depth = v, known = true;
                   },
                   [](auto&) {},
               },
               out.kind);
    if (!known)
        throw Error(ErrorCode::InvalidArgument, "parameter '" + name + "' is not tunable for " + spec.describe());
    return out;
}

TuneResult tune_grid_search(const LearnerSpec& spec_template, const TuneSettings& settings, const MatrixXd& x,
                            const VectorXd& y, std::uint64_t seed) {
    if (settings.grid.empty()) throw Error(ErrorCode::EmptyGrid, "tuning grid is empty");
    for (const auto& [name, values] : settings.grid)
        if (values.empty()) throw Error(ErrorCode::EmptyGrid, "no candidate values for '" + name + "'");
    if (settings.cv_folds < 2) throw Error(ErrorCode::InvalidFoldCount, "cv_folds must be at least 2");

    TuneResult result;
    std::size_t total = 1;
    for (const auto& entry : settings.grid) total *= entry.second.size();
    for (std::size_t c = 0; c < total; ++c) {
        LearnerSpec cand = spec_template;
        std::size_t rest = c;
        for (std::size_t g = settings.grid.size(); g-- > 0;) {
            const auto& values = settings.grid[g].second;
            cand = with_parameter(cand, settings.grid[g].first, values[rest % values.size()]);
            rest /= values.size();
        }
        result.candidates.push_back(cand);
    }

    const FoldPlan folds = draw_folds(x.rows(), settings.cv_folds, 1, seed);
    double best = std::numeric_limits<double>::infinity();
    for (const LearnerSpec& cand : result.candidates) {
        double loss = 0.0;
        for (const Split& s : folds.splits.front()) {
            const PredictorPtr model = fit_learner(cand, take_rows(x, s.train), take(y, s.train));
            const VectorXd pred = model->predict(take_rows(x, s.test));
            const VectorXd truth = take(y, s.test);
            if (settings.measure == TuneMeasure::MSE) {
                loss += (pred - truth).squaredNorm();
            } else {
                for (Index i = 0; i < pred.size(); ++i) loss += ((pred(i) > 0.5 ? 1.0 : 0.0) != truth(i)) ? 1.0 : 0.0;
            }
        }
        loss /= static_cast<double>(x.rows());
        result.scores.push_back(loss);
        if (loss < best) {
            best = loss;
            result.best = cand;
        }
    }
    return result;
}

}  // namespace dml
