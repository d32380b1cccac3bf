#pragma once

// Command-line front end: estimation on CSV files, Monte Carlo campaigns over
// the simulated designs, and sample generation.

#include "dml/config.hpp"
#include "dml/estimator.hpp"
#include "dml/inference.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dml::cli {

/// Runs `dml <subcommand> ...`; args excludes the program name. Returns 0 on
/// success, 1 when estimation fails and 2 on usage or configuration errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Settings merged from a config file and command-line overrides. Recognized
/// keys: model, score, dml_procedure, n_folds, n_rep, seed, clip_eps,
/// apply_cross_fitting, workers, level, bootstrap (method:B), p_adjust,
/// learner.<slot> = {kind = ..., ...} and tune.<slot>.{grid.<param>, cv_folds,
/// measure, on_folds}. A grid is a list of values or lo:hi:n.
struct RunSettings {
    DmlConfig cfg;
    double level = 0.95;
    std::optional<BootstrapMethod> bootstrap;
    Index n_boot = 500;
    std::vector<PAdjustMethod> p_adjust;
};

RunSettings resolve_settings(const KeyValueConfig& settings, const std::string& default_model);

enum class Variant { Orthogonal, Naive, NoSplit, NoCrossFit };

Variant parse_variant(const std::string& name);
std::string to_string(Variant variant);

struct SimSettings {
    std::string dgp;
    std::map<std::string, std::string> dgp_params;
    Index reps = 100;
    RunSettings run;  // run.cfg.seed is replaced per replication
    Variant variant = Variant::Orthogonal;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

/// Per-replication results, one column per treatment.
struct SimReport {
    std::vector<std::string> treatments;
    VectorXd theta_true;
    double level = 0.95;
    MatrixXd estimate, se;
    // Rejection indicators (reps x treatments) per testing method, in order
    // unadjusted, joint_ci, then the requested adjustments.
    std::vector<std::pair<std::string, MatrixXd>> rejections;

    Index reps() const { return estimate.rows(); }
    MatrixXd studentized() const;
    MatrixXd covered() const;
    double fwer(const std::string& method) const;
    double mean_correct_rejections(const std::string& method) const;
};

/// Model implied by a simulated design.
std::string default_model(const std::string& dgp);

SimReport run_simulation(const SimSettings& settings);

/// report.csv (metric, scope, value), draws.csv and hist.csv.
void write_report(const SimReport& report, const std::string& dir);

/// Counts over `bins` equal cells on [lo, hi]; values outside land in the end cells.
std::vector<Index> histogram(const VectorXd& values, int bins = 30, double lo = -4.0, double hi = 4.0);

}  // namespace dml::cli
