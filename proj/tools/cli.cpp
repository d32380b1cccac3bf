#include "cli.hpp"

#include "dml/dataset.hpp"
#include "dml/dgp.hpp"
#include "dml/parallel.hpp"
#include "dml/random.hpp"
#include "dml/stats.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace dml::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kBootstrapStream = 0xb0075;

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool parse_flag(const std::string& key, const std::string& value) {
    const auto v = lower(trim(value));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error(ErrorCode::ConfigError, "key '" + key + "' expects true or false, got '" + value + "'");
}

ScoreSpec default_score(Model model) {
    switch (model) {
        case Model::PLR: return ScoreSpec::builtin(ScoreKind::PlrPartiallingOut);
        case Model::PLIV: return ScoreSpec::builtin(ScoreKind::PlivPartiallingOut);
        case Model::IRM: return ScoreSpec::builtin(ScoreKind::IrmAte);
        case Model::IIVM: return ScoreSpec::builtin(ScoreKind::IivmLate);
    }
    return {};
}

bool is_probability_slot(Model model, const std::string& slot) {
    if (model == Model::IRM) return slot == "ml_m";
    if (model == Model::IIVM) return slot == "ml_m" || slot == "ml_r";
    return false;
}

std::optional<LearnerSpec>& slot_ref(DmlConfig& cfg, const std::string& slot) {
    if (slot == "ml_l") return cfg.ml_l;
    if (slot == "ml_m") return cfg.ml_m;
    if (slot == "ml_g") return cfg.ml_g;
    return cfg.ml_r;
}

std::vector<double> parse_grid(const KeyValueConfig& grid, const std::string& key) {
    const std::string text = *grid.get(key);
    const auto parts = split_list(text, ':');
    if (parts.size() == 3) {
        const long long n = parse_int(parts[2]);
        if (n < 1) throw Error(ErrorCode::ConfigError, "grid '" + key + "' needs a positive resolution");
        return linspace(parse_double(parts[0]), parse_double(parts[1]), static_cast<int>(n));
    }
    return grid.get_double_list(key);
}

TuneSettings parse_tuning(const KeyValueConfig& sec) {
    TuneSettings ts;
    const KeyValueConfig grid = sec.section("grid");
    for (const auto& name : grid.keys()) ts.grid.emplace_back(name, parse_grid(grid, name));
    ts.cv_folds = static_cast<Index>(sec.get_int("cv_folds", 5));
    const auto measure = lower(sec.get_or("measure", "mse"));
    if (measure == "mse")
        ts.measure = TuneMeasure::MSE;
    else if (measure == "classification_error" || measure == "ce")
        ts.measure = TuneMeasure::ClassificationError;
    else
        throw Error(ErrorCode::ConfigError, "unknown tuning measure '" + measure + "'");
    if (sec.has("on_folds")) ts.tune_on_folds = parse_flag("on_folds", *sec.get("on_folds"));
    return ts;
}

std::string fmt(double v) { return format_double(v); }

std::string join_csv(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
    return line + "\n";
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    return out;
}

std::map<std::string, std::string> parse_params(const std::vector<std::string>& items) {
    std::map<std::string, std::string> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigError, "dgp parameter '" + item + "' must look like key=value");
        out[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
    return out;
}

std::string pvalue_text(double p) {
    char buf[32];
    if (p < 2e-16) return "<2e-16";
    std::snprintf(buf, sizeof buf, "%.3g", p);
    return buf;
}

void print_summary(std::ostream& out, const DmlFit& f) {
    std::size_t width = 0;
    for (const auto& n : f.treatment_names) width = std::max(width, n.size());
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s %10s %11s %8s %9s\n", int(width), "", "Estimate.", "Std. Error", "t value",
                  "Pr(>|t|)");
    out << buf;
    for (Index j = 0; j < f.coef.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%-*s %10.5f %11.5f %8.3f %9s\n", int(width),
                      f.treatment_names[std::size_t(j)].c_str(), f.coef(j), f.se(j), f.t_stat(j),
                      pvalue_text(f.p_value(j)).c_str());
        out << buf;
    }
}

double sample_sd(const VectorXd& v) {
    if (v.size() < 2) return 0.0;
    return std::sqrt((v.array() - v.mean()).square().sum() / double(v.size() - 1));
}

const MatrixXd& rejections_of(const SimReport& r, const std::string& method) {
    for (const auto& [name, m] : r.rejections)
        if (name == method) return m;
    throw Error(ErrorCode::InvalidArgument, "no rejections recorded for '" + method + "'");
}

DmlConfig apply_variant(DmlConfig cfg, Variant v) {
    switch (v) {
        case Variant::Orthogonal: break;
        case Variant::Naive:
            if (cfg.model != Model::PLR) throw Error(ErrorCode::ConfigError, "the naive variant needs model plr");
            cfg.score = naive_plr_score();
            if (!cfg.ml_g) cfg.ml_g = cfg.ml_l;
            break;
        case Variant::NoSplit: cfg.split_mode = SplitMode::NoSplit; break;
        case Variant::NoCrossFit: cfg.split_mode = SplitMode::NoCrossFit; break;
    }
    return cfg;
}

// --- subcommands -------------------------------------------------------------

struct SharedFlags {
    std::string learner_config;
    std::map<std::string, std::string> values;  // settings key -> flag value
    std::vector<std::pair<std::string, CLI::Option*>> options;

    void add_to(CLI::App* app) {
        app->add_option("--learner-config", learner_config, "settings file with learner specs and tuning grids");
        const std::vector<std::tuple<std::string, std::string, std::string>> flags{
            {"--model", "model", "plr | pliv | irm | iivm"},
            {"--score", "score", "score name for the model"},
            {"--dml-procedure", "dml_procedure", "dml1 | dml2"},
            {"--n-folds", "n_folds", "number of cross-fitting folds"},
            {"--n-rep", "n_rep", "repetitions of the sample splitting"},
            {"--seed", "seed", "master seed"},
            {"--level", "level", "confidence level"},
            {"--clip-eps", "clip_eps", "probability clipping bound"},
            {"--bootstrap", "bootstrap", "method:B, method = normal | wild | exponential"},
            {"--p-adjust", "p_adjust", "romano-wolf | bonferroni | holm | all"},
            {"--workers", "workers", "worker threads"},
        };
        for (const auto& [flag, key, help] : flags) options.emplace_back(key, app->add_option(flag, values[key], help));
    }

    KeyValueConfig merged() const {
        KeyValueConfig cfg = learner_config.empty() ? KeyValueConfig{} : KeyValueConfig::load(learner_config);
        for (const auto& [key, opt] : options)
            if (opt->count() > 0) cfg.set(key, values.at(key));
        return cfg;
    }
};

// Errors raised while fitting are estimation failures unless they report a
// configuration problem.
int estimation_exit_code(const Error& e) {
    switch (e.code()) {
        case ErrorCode::ConfigError:
        case ErrorCode::InvalidFoldCount:
        case ErrorCode::InvalidLevel: return 2;
        default: return 1;
    }
}

int cmd_estimate(const SharedFlags& flags, const std::string& data, const std::string& roles,
                 const std::string& split_plan, const std::string& out_dir, std::ostream& out, int& phase_code) {
    const Dataset ds = Dataset::load_csv(data, RoleConfig::load(roles));
    RunSettings rs = resolve_settings(flags.merged(), "plr");
    if (!split_plan.empty()) rs.cfg.external_plan = FoldPlan::load(split_plan);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    phase_code = 1;
    {
        const DmlFit f = fit(ds, rs.cfg);
        const MatrixXd ci = confint(f, rs.level);
        auto summary = open_out(dir / "summary.csv");
        summary << "treatment,estimate,se,t,p,ci_low,ci_high\n";
        for (Index j = 0; j < f.coef.size(); ++j)
            summary << join_csv({f.treatment_names[std::size_t(j)], fmt(f.coef(j)), fmt(f.se(j)), fmt(f.t_stat(j)),
                                 fmt(f.p_value(j)), fmt(ci(j, 0)), fmt(ci(j, 1))});
        print_summary(out, f);

        std::optional<BootstrapResult> boot;
        if (rs.bootstrap) {
            boot = multiplier_bootstrap(f, *rs.bootstrap, rs.n_boot, derive_seed(rs.cfg.seed, {kBootstrapStream}),
                                        rs.cfg.workers);
            const JointConfint joint = joint_confint(f, boot, rs.level);
            auto jf = open_out(dir / "joint_ci.csv");
            jf << "treatment,ci_low,ci_high,critical_value\n";
            for (Index j = 0; j < f.coef.size(); ++j)
                jf << join_csv({f.treatment_names[std::size_t(j)], fmt(joint.intervals(j, 0)),
                                fmt(joint.intervals(j, 1)), fmt(joint.critical_value)});
            out << "\nJoint " << rs.level << " intervals use critical value " << joint.critical_value << "\n";
        }
        if (!rs.p_adjust.empty()) {
            auto pf = open_out(dir / "p_adjusted.csv");
            pf << "treatment,method,raw,adjusted\n";
            for (PAdjustMethod m : rs.p_adjust) {
                const AdjustedPvals adj =
                    m == PAdjustMethod::RomanoWolf ? p_adjust_romano_wolf(f, boot) : p_adjust_classical(f.p_value, m);
                for (Index j = 0; j < f.coef.size(); ++j)
                    pf << join_csv({f.treatment_names[std::size_t(j)], to_string(m), fmt(adj.raw(j)),
                                    fmt(adj.adjusted(j))});
            }
        }
    }
    return 0;
}

void print_report(std::ostream& out, const SimReport& r) {
    const MatrixXd stud = r.studentized();
    const MatrixXd cov = r.covered();
    out << "replications: " << r.reps() << "\n";
    const Index shown = std::min<Index>(r.theta_true.size(), 10);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-12s %10s %10s %10s %10s %10s\n", "treatment", "truth", "mean est", "mean se",
                  "coverage", "mean t");
    out << buf;
    for (Index j = 0; j < shown; ++j) {
        std::snprintf(buf, sizeof buf, "%-12s %10.4f %10.4f %10.4f %10.3f %10.3f\n",
                      r.treatments[std::size_t(j)].c_str(), r.theta_true(j), r.estimate.col(j).mean(),
                      r.se.col(j).mean(), cov.col(j).mean(), stud.col(j).mean());
        out << buf;
    }
    if (shown < r.theta_true.size())
        out << "(" << r.theta_true.size() - shown << " more treatments in report.csv; mean coverage "
            << cov.mean() << ")\n";
    if (r.rejections.size() > 1 || r.theta_true.size() > 1) {
        for (const auto& [name, m] : r.rejections)
            out << name << ": FWER " << r.fwer(name) << ", mean correct rejections "
                << r.mean_correct_rejections(name) << "\n";
    }
}

}  // namespace

// --- settings ----------------------------------------------------------------

RunSettings resolve_settings(const KeyValueConfig& s, const std::string& default_model) {
    RunSettings rs;
    DmlConfig& cfg = rs.cfg;
    const std::string model_name = lower(s.get_or("model", default_model));
    cfg.model = parse_model(model_name);
    cfg.score = default_score(cfg.model);
    if (s.has("score")) {
        const std::string score = lower(*s.get("score"));
        if (score == "naive") {
            if (cfg.model != Model::PLR) throw Error(ErrorCode::ConfigError, "the naive score needs model plr");
            cfg.score = naive_plr_score();
        } else {
            cfg.score = ScoreSpec::builtin(parse_score(model_name, score));
        }
    }
    cfg.dml_procedure = parse_procedure(s.get_or("dml_procedure", "dml2"));
    cfg.n_folds = static_cast<Index>(s.get_int("n_folds", 5));
    cfg.n_rep = static_cast<Index>(s.get_int("n_rep", 1));
    cfg.seed = static_cast<std::uint64_t>(s.get_int("seed", 0));
    cfg.clip_eps = s.get_double("clip_eps", 0.01);
    if (s.has("apply_cross_fitting") && !parse_flag("apply_cross_fitting", *s.get("apply_cross_fitting")))
        cfg.split_mode = SplitMode::NoCrossFit;
    const long long workers = s.get_int("workers", 1);
    if (workers < 1) throw Error(ErrorCode::ConfigError, "workers must be positive");
    cfg.workers = static_cast<unsigned>(workers);

    for (const std::string slot : {"ml_l", "ml_m", "ml_g", "ml_r"}) {
        const KeyValueConfig sec = s.section("learner." + slot);
        if (s.has("learner." + slot)) {
            KeyValueConfig shorthand;
            shorthand.set("kind", *s.get("learner." + slot));
            slot_ref(cfg, slot) = LearnerSpec::from_config(shorthand);
        } else if (!sec.keys().empty()) {
            slot_ref(cfg, slot) = LearnerSpec::from_config(sec);
        }
        const KeyValueConfig tune = s.section("tune." + slot);
        if (!tune.keys().empty()) cfg.tuning[slot] = parse_tuning(tune);
    }
    for (const auto& slot : cfg.required_slots()) {
        auto& spec = slot_ref(cfg, slot);
        if (!spec)
            spec = is_probability_slot(cfg.model, slot) ? LearnerSpec{LogisticLassoCvSpec{}} : LearnerSpec{LassoCvSpec{}};
    }
    if (cfg.score.kind == ScoreKind::Custom && !cfg.ml_g) cfg.ml_g = cfg.ml_l;

    rs.level = s.get_double("level", 0.95);
    if (!(rs.level > 0.0 && rs.level < 1.0)) throw Error(ErrorCode::ConfigError, "level must lie in (0, 1)");

    const std::string boot = trim(s.get_or("bootstrap", ""));
    if (!boot.empty() && lower(boot) != "none") {
        const auto colon = boot.find(':');
        rs.bootstrap = parse_bootstrap_method(boot.substr(0, colon));
        if (colon != std::string::npos) rs.n_boot = static_cast<Index>(parse_int(boot.substr(colon + 1)));
        if (rs.n_boot < 1) throw Error(ErrorCode::ConfigError, "bootstrap draws must be positive");
    }
    for (const auto& item : split_list(s.get_or("p_adjust", ""))) {
        const auto name = lower(trim(item));
        if (name.empty() || name == "none") continue;
        if (name == "all") {
            rs.p_adjust = {PAdjustMethod::RomanoWolf, PAdjustMethod::Bonferroni, PAdjustMethod::Holm};
            continue;
        }
        const PAdjustMethod m = parse_p_adjust_method(name);
        if (std::find(rs.p_adjust.begin(), rs.p_adjust.end(), m) == rs.p_adjust.end()) rs.p_adjust.push_back(m);
    }
    const bool wants_rw =
        std::find(rs.p_adjust.begin(), rs.p_adjust.end(), PAdjustMethod::RomanoWolf) != rs.p_adjust.end();
    if (wants_rw && !rs.bootstrap)
        throw Error(ErrorCode::ConfigError, "romano-wolf adjustment needs --bootstrap method:B");
    return rs;
}

Variant parse_variant(const std::string& name) {
    const auto v = lower(name);
    if (v == "orthogonal") return Variant::Orthogonal;
    if (v == "naive") return Variant::Naive;
    if (v == "nosplit" || v == "no-split") return Variant::NoSplit;
    if (v == "no-crossfit" || v == "nocrossfit") return Variant::NoCrossFit;
    throw Error(ErrorCode::ConfigError, "unknown variant '" + name + "'");
}

std::string to_string(Variant variant) {
    switch (variant) {
        case Variant::Orthogonal: return "orthogonal";
        case Variant::Naive: return "naive";
        case Variant::NoSplit: return "nosplit";
        case Variant::NoCrossFit: return "no-crossfit";
    }
    return "";
}

// --- simulation --------------------------------------------------------------

MatrixXd SimReport::studentized() const {
    MatrixXd out(estimate.rows(), estimate.cols());
    for (Index j = 0; j < estimate.cols(); ++j)
        out.col(j) = ((estimate.col(j).array() - theta_true(j)) / se.col(j).array()).matrix();
    return out;
}

MatrixXd SimReport::covered() const {
    const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    return (studentized().array().abs() <= z).cast<double>().matrix();
}

double SimReport::fwer(const std::string& method) const {
    const MatrixXd& rej = rejections_of(*this, method);
    Index any = 0;
    for (Index r = 0; r < rej.rows(); ++r) {
        bool hit = false;
        for (Index j = 0; j < rej.cols(); ++j) hit = hit || (theta_true(j) == 0.0 && rej(r, j) != 0.0);
        any += hit;
    }
    return rej.rows() ? double(any) / double(rej.rows()) : 0.0;
}

double SimReport::mean_correct_rejections(const std::string& method) const {
    const MatrixXd& rej = rejections_of(*this, method);
    double total = 0.0;
    for (Index j = 0; j < rej.cols(); ++j)
        if (theta_true(j) != 0.0) total += rej.col(j).sum();
    return rej.rows() ? total / double(rej.rows()) : 0.0;
}

std::string default_model(const std::string& dgp) {
    if (dgp == "pliv_chs") return "pliv";
    if (dgp == "irm_belloni") return "irm";
    if (dgp == "iivm") return "iivm";
    return "plr";
}

SimReport run_simulation(const SimSettings& s) {
    if (s.reps < 1) throw Error(ErrorCode::ConfigError, "reps must be positive");
    const DmlConfig base = apply_variant(s.run.cfg, s.variant);
    const double alpha = 1.0 - s.run.level;

    std::vector<std::string> methods{"unadjusted"};
    if (s.run.bootstrap) methods.emplace_back("joint_ci");
    for (PAdjustMethod m : s.run.p_adjust) methods.push_back(to_string(m));

    struct Rep {
        std::vector<std::string> names;
        VectorXd truth, estimate, se;
        std::vector<VectorXd> reject;
    };
    std::vector<Rep> reps(static_cast<std::size_t>(s.reps));
    parallel_for(reps.size(), s.workers, [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(s.seed, {r});
        const DgpSample sample = generate(s.dgp, s.dgp_params, derive_seed(rep_seed, {0}));
        DmlConfig cfg = base;
        cfg.seed = derive_seed(rep_seed, {1});
        cfg.workers = 1;
        const DmlFit f = fit(sample.dataset, cfg);

        Rep& out = reps[r];
        out.names = f.treatment_names;
        out.truth = sample.theta_true;
        if (cfg.score.kind == ScoreKind::IrmAtte && sample.atte_true) out.truth(0) = *sample.atte_true;
        out.estimate = f.coef;
        out.se = f.se;
        out.reject.push_back((f.p_value.array() < alpha).cast<double>().matrix());
        std::optional<BootstrapResult> boot;
        if (s.run.bootstrap) {
            boot = multiplier_bootstrap(f, *s.run.bootstrap, s.run.n_boot, derive_seed(rep_seed, {2}));
            const JointConfint joint = joint_confint(f, boot, s.run.level);
            out.reject.push_back(
                ((joint.intervals.col(0).array() > 0.0) || (joint.intervals.col(1).array() < 0.0)).cast<double>().matrix());
        }
        for (PAdjustMethod m : s.run.p_adjust) {
            const AdjustedPvals adj =
                m == PAdjustMethod::RomanoWolf ? p_adjust_romano_wolf(f, boot) : p_adjust_classical(f.p_value, m);
            out.reject.push_back((adj.adjusted.array() < alpha).cast<double>().matrix());
        }
    });

    SimReport report;
    report.treatments = reps.front().names;
    report.theta_true = reps.front().truth;
    report.level = s.run.level;
    const Index k = report.theta_true.size();
    report.estimate.resize(s.reps, k);
    report.se.resize(s.reps, k);
    for (const auto& name : methods) report.rejections.emplace_back(name, MatrixXd(s.reps, k));
    for (Index r = 0; r < s.reps; ++r) {
        const Rep& rep = reps[std::size_t(r)];
        report.estimate.row(r) = rep.estimate.transpose();
        report.se.row(r) = rep.se.transpose();
        for (std::size_t m = 0; m < methods.size(); ++m) report.rejections[m].second.row(r) = rep.reject[m].transpose();
    }
    return report;
}

std::vector<Index> histogram(const VectorXd& values, int bins, double lo, double hi) {
    std::vector<Index> counts(static_cast<std::size_t>(bins), 0);
    for (Index i = 0; i < values.size(); ++i) {
        const double pos = std::floor((values(i) - lo) / (hi - lo) * bins);
        const int b = std::isnan(pos) ? 0 : static_cast<int>(std::clamp(pos, 0.0, double(bins - 1)));
        ++counts[std::size_t(b)];
    }
    return counts;
}

void write_report(const SimReport& r, const std::string& dir_name) {
    fs::create_directories(dir_name);
    const fs::path dir(dir_name);
    const MatrixXd stud = r.studentized();
    const MatrixXd cov = r.covered();
    const double z = normal_quantile(1.0 - (1.0 - r.level) / 2.0);

    auto rep = open_out(dir / "report.csv");
    rep << "metric,scope,value\n";
    rep << join_csv({"reps", "all", std::to_string(r.reps())});
    rep << join_csv({"level", "all", fmt(r.level)});
    for (Index j = 0; j < r.theta_true.size(); ++j) {
        const std::string& name = r.treatments[std::size_t(j)];
        const VectorXd est = r.estimate.col(j);
        rep << join_csv({"theta_true", name, fmt(r.theta_true(j))});
        rep << join_csv({"mean_estimate", name, fmt(est.mean())});
        rep << join_csv({"bias", name, fmt(est.mean() - r.theta_true(j))});
        rep << join_csv({"sd_estimate", name, fmt(sample_sd(est))});
        rep << join_csv({"mean_se", name, fmt(r.se.col(j).mean())});
        rep << join_csv({"coverage", name, fmt(cov.col(j).mean())});
        rep << join_csv({"mean_studentized", name, fmt(stud.col(j).mean())});
        rep << join_csv({"sd_studentized", name, fmt(sample_sd(stud.col(j)))});
    }
    for (const auto& [name, m] : r.rejections) {
        rep << join_csv({"fwer", name, fmt(r.fwer(name))});
        rep << join_csv({"mean_correct_rejections", name, fmt(r.mean_correct_rejections(name))});
    }

    auto draws = open_out(dir / "draws.csv");
    std::vector<std::string> header{"rep", "treatment", "theta_true", "estimate", "se", "ci_low", "ci_high",
                                    "covered", "studentized"};
    for (const auto& entry : r.rejections) header.push_back("reject_" + entry.first);
    draws << join_csv(header);
    for (Index i = 0; i < r.reps(); ++i) {
        for (Index j = 0; j < r.theta_true.size(); ++j) {
            std::vector<std::string> row{std::to_string(i),          r.treatments[std::size_t(j)],
                                         fmt(r.theta_true(j)),       fmt(r.estimate(i, j)),
                                         fmt(r.se(i, j)),            fmt(r.estimate(i, j) - z * r.se(i, j)),
                                         fmt(r.estimate(i, j) + z * r.se(i, j)), fmt(cov(i, j)),
                                         fmt(stud(i, j))};
            for (const auto& entry : r.rejections) row.push_back(fmt(entry.second(i, j)));
            draws << join_csv(row);
        }
    }

    auto hist = open_out(dir / "hist.csv");
    hist << "treatment,bin,bin_low,bin_high,count\n";
    constexpr int bins = 30;
    for (Index j = 0; j < r.theta_true.size(); ++j) {
        const auto counts = histogram(stud.col(j), bins);
        for (int b = 0; b < bins; ++b)
            hist << join_csv({r.treatments[std::size_t(j)], std::to_string(b), fmt(-4.0 + 8.0 * b / bins),
                              fmt(-4.0 + 8.0 * (b + 1) / bins), std::to_string(counts[std::size_t(b)])});
    }
}

// --- entry point -------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Double machine learning: estimation, simulation and sample generation", "dml"};
    app.require_subcommand(1);

    SharedFlags est_flags, sim_flags;
    std::string data, roles, split_plan, est_out;
    auto* est = app.add_subcommand("estimate", "estimate causal parameters on a CSV file");
    est->add_option("--data", data, "CSV file with a header row")->required();
    est->add_option("--roles", roles, "variable roles (y, d, x, z)")->required();
    est->add_option("--split-plan", split_plan, "JSON sample-splitting plan to use instead of drawing one");
    est->add_option("--out", est_out, "output directory")->required();
    est_flags.add_to(est);

    std::string dgp, variant = "orthogonal", sim_out;
    std::vector<std::string> dgp_params;
    long long reps = 100;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo replications on a simulated design");
    sim->add_option("--dgp", dgp, "design name")->required();
    sim->add_option("--dgp-param", dgp_params, "design parameter key=value (repeatable)");
    sim->add_option("--reps", reps, "replications");
    sim->add_option("--variant", variant, "orthogonal | naive | nosplit | no-crossfit");
    sim->add_option("--out", sim_out, "output directory")->required();
    sim_flags.add_to(sim);

    std::string gen_dgp, gen_out;
    std::vector<std::string> gen_params;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen", "write a simulated sample with its roles and true parameters");
    gen->add_option("--dgp", gen_dgp, "design name")->required();
    gen->add_option("--dgp-param", gen_params, "design parameter key=value (repeatable)");
    gen->add_option("--seed", gen_seed, "seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    std::vector<const char*> argv{"dml"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    int setup_code = 2;
    try {
        if (*est) {
            return cmd_estimate(est_flags, data, roles, split_plan, est_out, out, setup_code);
        }
        if (*sim) {
            SimSettings s;
            s.dgp = dgp;
            s.dgp_params = parse_params(dgp_params);
            dgp_defaults(dgp);
            s.reps = static_cast<Index>(reps);
            s.variant = parse_variant(variant);
            const KeyValueConfig merged = sim_flags.merged();
            s.run = resolve_settings(merged, default_model(dgp));
            s.seed = s.run.cfg.seed;
            s.workers = s.run.cfg.workers;
            if (s.reps < 1) throw Error(ErrorCode::ConfigError, "reps must be positive");
            if (s.variant == Variant::Naive && s.run.cfg.model != Model::PLR)
                throw Error(ErrorCode::ConfigError, "the naive variant needs model plr");
            setup_code = 1;
            const SimReport report = run_simulation(s);
            write_report(report, sim_out);
            print_report(out, report);
            return 0;
        }
        const DgpSample sample = generate(gen_dgp, parse_params(gen_params), gen_seed);
        write_sample(sample, gen_out);
        out << "wrote " << sample.dataset.n_obs() << " rows to " << gen_out << "\n";
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return setup_code == 2 ? 2 : estimation_exit_code(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return setup_code;
    }
}

}  // namespace dml::cli
