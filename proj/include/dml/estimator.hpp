#pragma once

// Cross-fitted double machine learning: nuisance estimation, DML1/DML2
// solving, variance estimation and aggregation over repeated splits.

#include "dml/dataset.hpp"
#include "dml/learners.hpp"
#include "dml/resampling.hpp"
#include "dml/scores.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dml {

enum class Model { PLR, PLIV, IRM, IIVM };
enum class DmlProcedure { DML1, DML2 };

Model parse_model(const std::string& name);
std::string to_string(Model model);
DmlProcedure parse_procedure(const std::string& name);
std::string to_string(DmlProcedure procedure);

struct DmlConfig {
    Model model = Model::PLR;
    ScoreSpec score = ScoreSpec::builtin(ScoreKind::PlrPartiallingOut);
    DmlProcedure dml_procedure = DmlProcedure::DML2;
    Index n_folds = 5;
    Index n_rep = 1;
    // CrossFit, NoCrossFit (nuisances on one half, score on the other) or
    // NoSplit (everything in-sample).
    SplitMode split_mode = SplitMode::CrossFit;
    double clip_eps = 0.01;

    std::optional<LearnerSpec> ml_l, ml_m, ml_g, ml_r;
    // Keyed by learner slot: "ml_l", "ml_m", "ml_g", "ml_r".
    std::map<std::string, TuneSettings> tuning;

    std::uint64_t seed = 0;
    unsigned workers = 1;
    // Replaces the drawn sample splits when set.
    std::optional<FoldPlan> external_plan;

    // Learner slots the model/score pair reads.
    std::vector<std::string> required_slots() const;
    void validate(const Dataset& ds) const;
};

/// psi_a, psi_b of every (repetition, treatment). Row i of repetition r
/// belongs to observation rows[r][i].
struct ScorePanel {
    std::vector<IndexList> rows;
    std::vector<MatrixXd> psi_a;  // [treatment], n_eval x n_rep
    std::vector<MatrixXd> psi_b;

    Index n_eval() const { return psi_a.empty() ? 0 : psi_a.front().rows(); }
    Index n_rep() const { return psi_a.empty() ? 0 : psi_a.front().cols(); }
    Index n_treatments() const { return static_cast<Index>(psi_a.size()); }

    // psi_a * theta + psi_b for one (repetition, treatment).
    VectorXd psi(Index rep, Index treatment, double theta) const;
};

struct DmlFit {
    std::vector<std::string> treatment_names;
    VectorXd coef, se, t_stat, p_value;
    MatrixXd per_rep_coefs, per_rep_ses;  // n_rep x n_treat
    MatrixXd j0_hat, sigma_hat;           // n_rep x n_treat, sigma_hat = se * sqrt(N)
    ScorePanel panel;
    FoldPlan plan;
    // Out-of-sample predictions per [rep][treatment], indexed like panel rows.
    std::vector<std::vector<NuisancePredictions>> predictions;

    Index n_eval() const { return panel.n_eval(); }
    Index n_treatments() const { return static_cast<Index>(treatment_names.size()); }
};

DmlFit fit(const Dataset& ds, const DmlConfig& cfg);

/// Fits the nuisance learners on `train_ids` and predicts on `test_ids`.
/// `seed` selects the learner substreams; `specs` overrides cfg learner slots
/// (used after tuning).
NuisancePredictions prepare_nuisances(const TreatmentView& view, const DmlConfig& cfg, const IndexList& train_ids,
                                      const IndexList& test_ids, std::uint64_t seed,
                                      const std::map<std::string, LearnerSpec>& specs = {});

/// Learner specs chosen by cfg.tuning for one treatment, tuned on the rows
/// in `ids`. Slots without tuning settings keep the configured spec.
std::map<std::string, LearnerSpec> tune_learners(const TreatmentView& view, const DmlConfig& cfg,
                                                 const IndexList& ids, std::uint64_t seed);

double solve_dml1(const ScorePanel& panel, const FoldPlan& plan, Index rep, Index treatment);
double solve_dml2(const ScorePanel& panel, Index rep, Index treatment);

struct VarianceEstimate {
    double sigma2_hat;
    double j0_hat;
};

VarianceEstimate estimate_variance(const ScorePanel& panel, double theta, Index rep, Index treatment);

/// Median aggregation over repetitions.
std::pair<double, double> aggregate_reps(const VectorXd& coefs, const VectorXd& ses, Index n_obs);

/// n_treat x 2 matrix of [lower, upper].
MatrixXd confint(const DmlFit& fit, double level);

}  // namespace dml
