#include "dml/estimator.hpp"

#include "dml/parallel.hpp"
#include "dml/random.hpp"
#include "dml/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace dml {

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool is_binary(const VectorXd& v) {
    return (v.array() == 0.0 || v.array() == 1.0).all();
}

std::uint64_t slot_code(const std::string& slot) {
    if (slot == "ml_l") return 1;
    if (slot == "ml_m") return 2;
    if (slot == "ml_g") return 3;
    return 4;
}

const std::optional<LearnerSpec>& configured(const DmlConfig& cfg, const std::string& slot) {
    if (slot == "ml_l") return cfg.ml_l;
    if (slot == "ml_m") return cfg.ml_m;
    if (slot == "ml_g") return cfg.ml_g;
    return cfg.ml_r;
}

bool needs_g(const DmlConfig& cfg) {
    return cfg.score.kind == ScoreKind::PlrIvType || cfg.score.kind == ScoreKind::PlivIvType ||
           (cfg.score.kind == ScoreKind::Custom && cfg.ml_g.has_value());
}

VectorXd clip(const VectorXd& p, double eps) { return p.cwiseMax(eps).cwiseMin(1.0 - eps); }

// Observations of `ids` whose `v` value equals `level`.
IndexList arm(const IndexList& ids, const VectorXd& v, double level) {
    IndexList out;
    for (Index i : ids)
        if (v(i) == level) out.push_back(i);
    return out;
}

// Fits and predicts one nuisance regression; seeds derive from the slot and
// the sub-model so every component draws from its own stream.
class NuisanceFitter {
public:
    NuisanceFitter(const DmlConfig& cfg, const std::map<std::string, LearnerSpec>& overrides, std::uint64_t seed)
        : cfg_(cfg), overrides_(overrides), seed_(seed) {}

    LearnerSpec spec(const std::string& slot, std::uint64_t sub) const {
        auto it = overrides_.find(slot);
        LearnerSpec s;
        if (it != overrides_.end()) {
            s = it->second;
        } else {
            const auto& c = configured(cfg_, slot);
            if (!c) throw Error(ErrorCode::ConfigError, "learner slot " + slot + " is not configured");
            s = *c;
        }
        s.seed = derive_seed(s.seed, {seed_, slot_code(slot), sub});
        s.clip_eps = cfg_.clip_eps;
        return s;
    }

    PredictorPtr fit(const std::string& slot, std::uint64_t sub, const MatrixXd& x, const VectorXd& target) const {
        return fit_learner(spec(slot, sub), x, target);
    }

private:
    const DmlConfig& cfg_;
    const std::map<std::string, LearnerSpec>& overrides_;
    std::uint64_t seed_;
};

// DML2 partialling-out estimate cross-fitted within the rows of x.
double preliminary_theta(const NuisanceFitter& learners, const MatrixXd& x, const VectorXd& y, const VectorXd& d,
                         const VectorXd& m_target, bool iv, Index n_folds, std::uint64_t seed) {
    const Index n = x.rows();
    const FoldPlan inner = draw_folds(n, std::max<Index>(2, n_folds), 1, derive_seed(seed, {0x9e7a}));
    VectorXd y_res(n), d_res(n), w(n);
    std::uint64_t sub = 100;
    for (const Split& s : inner.splits.front()) {
        const MatrixXd x_train = take_rows(x, s.train);
        const MatrixXd x_test = take_rows(x, s.test);
        const VectorXd l_hat = learners.fit("ml_l", sub, x_train, take(y, s.train))->predict(x_test);
        const VectorXd m_hat = learners.fit("ml_m", sub, x_train, take(m_target, s.train))->predict(x_test);
        const VectorXd r_hat = iv ? learners.fit("ml_r", sub, x_train, take(d, s.train))->predict(x_test) : m_hat;
        for (std::size_t i = 0; i < s.test.size(); ++i) {
            const Index row = s.test[i];
            const auto k = static_cast<Index>(i);
            y_res(row) = y(row) - l_hat(k);
            w(row) = m_target(row) - m_hat(k);
            d_res(row) = d(row) - r_hat(k);
        }
        ++sub;
    }
    const double den = d_res.dot(w);
    if (std::abs(den) < 1e-12 * static_cast<double>(n))
        throw Error(ErrorCode::DegenerateScore, "preliminary estimate for the g target is not identified");
    return y_res.dot(w) / den;
}

void scatter(std::optional<VectorXd>& dst, const std::optional<VectorXd>& src, const IndexList& pos, Index n) {
    if (!src) return;
    if (!dst) dst = VectorXd::Zero(n);
    for (std::size_t i = 0; i < pos.size(); ++i) (*dst)(pos[i]) = (*src)(static_cast<Index>(i));
}

void check_finite_panel(const ScoreParts<double>& parts) {
    if (!parts.psi_a.allFinite() || !parts.psi_b.allFinite())
        throw Error(ErrorCode::NonFiniteValue, "score contains non-finite values");
}

}  // namespace

Model parse_model(const std::string& name) {
    const auto s = lower(name);
    if (s == "plr") return Model::PLR;
    if (s == "pliv") return Model::PLIV;
    if (s == "irm") return Model::IRM;
    if (s == "iivm") return Model::IIVM;
    throw Error(ErrorCode::ConfigError, "unknown model '" + name + "'");
}

std::string to_string(Model model) {
    switch (model) {
        case Model::PLR: return "plr";
        case Model::PLIV: return "pliv";
        case Model::IRM: return "irm";
        case Model::IIVM: return "iivm";
    }
    return "";
}

DmlProcedure parse_procedure(const std::string& name) {
    const auto s = lower(name);
    if (s == "dml1") return DmlProcedure::DML1;
    if (s == "dml2") return DmlProcedure::DML2;
    throw Error(ErrorCode::ConfigError, "unknown dml procedure '" + name + "'");
}

std::string to_string(DmlProcedure procedure) { return procedure == DmlProcedure::DML1 ? "dml1" : "dml2"; }

std::vector<std::string> DmlConfig::required_slots() const {
    switch (model) {
        case Model::PLR:
            if (score.kind == ScoreKind::PlrIvType) return {"ml_l", "ml_m", "ml_g"};
            return {"ml_l", "ml_m"};
        case Model::PLIV:
            if (score.kind == ScoreKind::PlivIvType) return {"ml_l", "ml_m", "ml_r", "ml_g"};
            return {"ml_l", "ml_m", "ml_r"};
        case Model::IRM: return {"ml_g", "ml_m"};
        case Model::IIVM: return {"ml_g", "ml_m", "ml_r"};
    }
    return {};
}

void DmlConfig::validate(const Dataset& ds) const {
    const bool score_fits = [&] {
        switch (score.kind) {
            case ScoreKind::PlrPartiallingOut:
            case ScoreKind::PlrIvType:
            case ScoreKind::Custom: return model == Model::PLR;
            case ScoreKind::PlivPartiallingOut:
            case ScoreKind::PlivIvType: return model == Model::PLIV;
            case ScoreKind::IrmAte:
            case ScoreKind::IrmAtte: return model == Model::IRM;
            case ScoreKind::IivmLate: return model == Model::IIVM;
        }
        return false;
    }();
    if (!score_fits)
        throw Error(ErrorCode::ConfigError, "score '" + score.name() + "' does not belong to model " + to_string(model));
    for (const auto& slot : required_slots())
        if (!configured(*this, slot)) throw Error(ErrorCode::ConfigError, "learner slot " + slot + " is required");
    if (score.kind == ScoreKind::Custom && !score.custom)
        throw Error(ErrorCode::BadCustomReturn, "custom score has no routine");
    if (n_rep < 1) throw Error(ErrorCode::ConfigError, "n_rep must be at least 1");
    if (split_mode == SplitMode::CrossFit && !external_plan && n_folds < 2)
        throw Error(ErrorCode::InvalidFoldCount, "cross-fitting needs at least 2 folds");
    if (!(clip_eps > 0.0 && clip_eps < 0.5)) throw Error(ErrorCode::ConfigError, "clip_eps must lie in (0, 0.5)");
    for (const auto& [slot, settings] : tuning) {
        (void)settings;
        if (slot != "ml_l" && slot != "ml_m" && slot != "ml_g" && slot != "ml_r")
            throw Error(ErrorCode::ConfigError, "unknown tuning slot '" + slot + "'");
    }
    if (external_plan && external_plan->n_obs != ds.n_obs())
        throw Error(ErrorCode::LengthMismatch, "external sample splitting covers " +
                                                   std::to_string(external_plan->n_obs) + " observations, data has " +
                                                   std::to_string(ds.n_obs()));

    if (model == Model::PLIV || model == Model::IIVM) {
        if (ds.n_instruments() == 0) throw Error(ErrorCode::NoInstrument, to_string(model) + " needs an instrument");
        if (ds.n_instruments() > 1)
            throw Error(ErrorCode::ConfigError, to_string(model) + " supports exactly one instrument");
    }
    if (model == Model::IRM || model == Model::IIVM) {
        for (Index j = 0; j < ds.n_treatments(); ++j)
            if (!is_binary(ds.d(j)))
                throw Error(ErrorCode::NonBinaryTreatment, "treatment '" + ds.treatment_names()[std::size_t(j)] +
                                                               "' must be binary for " + to_string(model));
    }
    if (model == Model::IIVM && !is_binary(ds.z().col(0)))
        throw Error(ErrorCode::NonBinaryTreatment, "instrument must be binary for iivm");
}

VectorXd ScorePanel::psi(Index rep, Index treatment, double theta) const {
    const auto t = static_cast<std::size_t>(treatment);
    return (psi_a[t].col(rep).array() * theta + psi_b[t].col(rep).array()).matrix();
}

NuisancePredictions prepare_nuisances(const TreatmentView& view, const DmlConfig& cfg, const IndexList& train_ids,
                                      const IndexList& test_ids, std::uint64_t seed,
                                      const std::map<std::string, LearnerSpec>& specs) {
    const NuisanceFitter learners(cfg, specs, seed);
    const MatrixXd x_test = take_rows(view.x, test_ids);
    NuisancePredictions eta;

    if (cfg.model == Model::PLR || cfg.model == Model::PLIV) {
        const MatrixXd x_train = take_rows(view.x, train_ids);
        const VectorXd y_train = take(view.y, train_ids);
        const VectorXd d_train = take(view.d, train_ids);
        const bool iv = cfg.model == Model::PLIV;
        if (iv && !view.z) throw Error(ErrorCode::NoInstrument, "pliv needs an instrument");
        const VectorXd m_target = iv ? take(view.z->col(0), train_ids) : d_train;

        const auto l = learners.fit("ml_l", 0, x_train, y_train);
        const auto m = learners.fit("ml_m", 0, x_train, m_target);
        eta.l_hat = l->predict(x_test);
        eta.m_hat = m->predict(x_test);
        PredictorPtr r;
        if (iv) {
            r = learners.fit("ml_r", 0, x_train, d_train);
            eta.r_hat = r->predict(x_test);
        }
        if (needs_g(cfg)) {
            const double theta =
                preliminary_theta(learners, x_train, y_train, d_train, m_target, iv, cfg.n_folds, seed);
            eta.g_hat = learners.fit("ml_g", 0, x_train, y_train - theta * d_train)->predict(x_test);
        }
        return eta;
    }

    // IRM splits the regressions by treatment arm, IIVM by instrument arm.
    const bool iivm = cfg.model == Model::IIVM;
    if (iivm && !view.z) throw Error(ErrorCode::NoInstrument, "iivm needs an instrument");
    const VectorXd& split_by = iivm ? VectorXd(view.z->col(0)) : view.d;
    const char* arm_name = iivm ? "instrument" : "treatment";
    const IndexList arm0 = arm(train_ids, split_by, 0.0);
    const IndexList arm1 = arm(train_ids, split_by, 1.0);
    if (arm0.empty() || arm1.empty())
        throw Error(ErrorCode::EmptyArm, std::string("a training fold has no observations with ") + arm_name + " = " +
                                             (arm0.empty() ? "0" : "1"));

    const MatrixXd x_train = take_rows(view.x, train_ids);
    eta.m_hat = clip(learners.fit("ml_m", 0, x_train, take(split_by, train_ids))->predict(x_test), cfg.clip_eps);

    const MatrixXd x0 = take_rows(view.x, arm0);
    eta.g0_hat = learners.fit("ml_g", 0, x0, take(view.y, arm0))->predict(x_test);
    if (cfg.score.kind != ScoreKind::IrmAtte) {
        const MatrixXd x1 = take_rows(view.x, arm1);
        eta.g1_hat = learners.fit("ml_g", 1, x1, take(view.y, arm1))->predict(x_test);
    } else {
        eta.p_hat = view.d.mean();
    }
    if (iivm) {
        const MatrixXd x1 = take_rows(view.x, arm1);
        eta.r0_hat = clip(learners.fit("ml_r", 0, x0, take(view.d, arm0))->predict(x_test), cfg.clip_eps);
        eta.r1_hat = clip(learners.fit("ml_r", 1, x1, take(view.d, arm1))->predict(x_test), cfg.clip_eps);
    }
    return eta;
}

std::map<std::string, LearnerSpec> tune_learners(const TreatmentView& view, const DmlConfig& cfg,
                                                 const IndexList& ids, std::uint64_t seed) {
    std::map<std::string, LearnerSpec> out;
    const MatrixXd x = take_rows(view.x, ids);
    const VectorXd y = take(view.y, ids);
    const VectorXd d = take(view.d, ids);
    const bool has_z = view.z.has_value();
    const VectorXd z = has_z ? take(view.z->col(0), ids) : VectorXd();

    auto tune = [&](const std::string& slot, const MatrixXd& xs, const VectorXd& target) {
        auto it = cfg.tuning.find(slot);
        if (it == cfg.tuning.end()) return;
        const auto& base = configured(cfg, slot);
        if (!base) return;
        LearnerSpec tmpl = *base;
        tmpl.clip_eps = cfg.clip_eps;
        out[slot] = tune_grid_search(tmpl, it->second, xs, target, derive_seed(seed, {slot_code(slot)})).best;
    };

    switch (cfg.model) {
        case Model::PLR:
        case Model::PLIV: {
            const bool iv = cfg.model == Model::PLIV;
            const VectorXd m_target = iv ? z : d;
            tune("ml_l", x, y);
            tune("ml_m", x, m_target);
            if (iv) tune("ml_r", x, d);
            if (needs_g(cfg) && cfg.tuning.count("ml_g")) {
                const NuisanceFitter learners(cfg, out, seed);
                tune("ml_g", x, y - preliminary_theta(learners, x, y, d, m_target, iv, cfg.n_folds, seed) * d);
            }
            break;
        }
        case Model::IRM:
        case Model::IIVM: {
            const VectorXd& split_by = cfg.model == Model::IIVM ? z : d;
            IndexList all(static_cast<std::size_t>(ids.size()));
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
            const IndexList arm0 = arm(all, split_by, 0.0);
            // One spec serves both outcome arms; it is tuned on arm 0.
            tune("ml_g", take_rows(x, arm0), take(y, arm0));
            tune("ml_m", x, split_by);
            if (cfg.model == Model::IIVM) tune("ml_r", take_rows(x, arm0), take(d, arm0));
            break;
        }
    }
    return out;
}

double solve_dml1(const ScorePanel& panel, const FoldPlan& plan, Index rep, Index treatment) {
    const auto& rows = panel.rows[static_cast<std::size_t>(rep)];
    std::vector<Index> pos(static_cast<std::size_t>(plan.n_obs), -1);
    for (std::size_t i = 0; i < rows.size(); ++i) pos[static_cast<std::size_t>(rows[i])] = static_cast<Index>(i);
    const auto& a = panel.psi_a[static_cast<std::size_t>(treatment)];
    const auto& b = panel.psi_b[static_cast<std::size_t>(treatment)];

    const auto& splits = plan.splits[static_cast<std::size_t>(rep)];
    double total = 0.0;
    for (std::size_t k = 0; k < splits.size(); ++k) {
        double sa = 0.0, sb = 0.0;
        for (Index i : splits[k].test) {
            const Index r = pos[static_cast<std::size_t>(i)];
            sa += a(r, rep);
            sb += b(r, rep);
        }
        if (std::abs(sa) < 1e-12 * static_cast<double>(splits[k].test.size()))
            throw Error(ErrorCode::DegenerateFold, "sum of psi_a vanishes in fold " + std::to_string(k + 1));
        total += -sb / sa;
    }
    return total / static_cast<double>(splits.size());
}

double solve_dml2(const ScorePanel& panel, Index rep, Index treatment) {
    const auto t = static_cast<std::size_t>(treatment);
    const double sa = panel.psi_a[t].col(rep).sum();
    const double sb = panel.psi_b[t].col(rep).sum();
    if (std::abs(sa) < 1e-12 * static_cast<double>(panel.n_eval()))
        throw Error(ErrorCode::DegenerateScore, "sum of psi_a vanishes");
    return -sb / sa;
}

VarianceEstimate estimate_variance(const ScorePanel& panel, double theta, Index rep, Index treatment) {
    const double j0 = panel.psi_a[static_cast<std::size_t>(treatment)].col(rep).mean();
    if (std::abs(j0) < 1e-12) throw Error(ErrorCode::DegenerateScore, "Jacobian estimate J0 vanishes");
    const VectorXd psi = panel.psi(rep, treatment, theta);
    return {psi.squaredNorm() / static_cast<double>(psi.size()) / (j0 * j0), j0};
}

std::pair<double, double> aggregate_reps(const VectorXd& coefs, const VectorXd& ses, Index n_obs) {
    if (coefs.size() == 1) return {coefs(0), ses(0)};
    const double n = static_cast<double>(n_obs);
    const double coef = median(coefs);
    const VectorXd spread = (ses.array().square() * n + (coefs.array() - coef).square()).matrix();
    return {coef, std::sqrt(median(spread) / n)};
}

MatrixXd confint(const DmlFit& fit, double level) {
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidLevel, "level must lie in (0, 1)");
    const double q = normal_quantile(1.0 - (1.0 - level) / 2.0);
    MatrixXd ci(fit.coef.size(), 2);
    ci.col(0) = fit.coef - q * fit.se;
    ci.col(1) = fit.coef + q * fit.se;
    return ci;
}

DmlFit fit(const Dataset& ds, const DmlConfig& cfg) {
    cfg.validate(ds);
    const Index n = ds.n_obs();
    const Index n_treat = ds.n_treatments();

    FoldPlan plan;
    if (cfg.external_plan) {
        plan = *cfg.external_plan;
    } else {
        switch (cfg.split_mode) {
            case SplitMode::CrossFit: plan = draw_folds(n, cfg.n_folds, cfg.n_rep, cfg.seed); break;
            case SplitMode::NoCrossFit: plan = draw_no_crossfit(n, cfg.seed, cfg.n_rep); break;
            case SplitMode::NoSplit: plan = no_split_plan(n, cfg.n_rep); break;
        }
    }
    const Index n_rep = plan.n_rep;

    std::vector<TreatmentView> views;
    for (Index j = 0; j < n_treat; ++j) views.push_back(ds.treatment_view(j));

    IndexList all_ids(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) all_ids[static_cast<std::size_t>(i)] = i;
    const bool tune_per_fold = std::any_of(cfg.tuning.begin(), cfg.tuning.end(),
                                           [](const auto& kv) { return kv.second.tune_on_folds; });
    std::vector<std::map<std::string, LearnerSpec>> tuned(static_cast<std::size_t>(n_treat));
    if (!cfg.tuning.empty() && !tune_per_fold)
        parallel_for(static_cast<std::size_t>(n_treat), cfg.workers, [&](std::size_t j) {
            tuned[j] = tune_learners(views[j], cfg, all_ids, derive_seed(cfg.seed, {0x70e, j}));
        });

    // One task per (repetition, treatment, fold).
    struct Task {
        Index rep, treatment, fold;
    };
    std::vector<Task> tasks;
    for (Index r = 0; r < n_rep; ++r)
        for (Index j = 0; j < n_treat; ++j)
            for (Index k = 0; k < static_cast<Index>(plan.splits[std::size_t(r)].size()); ++k) tasks.push_back({r, j, k});
    std::vector<NuisancePredictions> fold_preds(tasks.size());
    parallel_for(tasks.size(), cfg.workers, [&](std::size_t t) {
        const auto [r, j, k] = tasks[t];
        const auto& split = plan.splits[std::size_t(r)][std::size_t(k)];
        const auto& view = views[std::size_t(j)];
        const std::uint64_t seed = derive_seed(cfg.seed, {std::uint64_t(r), std::uint64_t(k), std::uint64_t(j)});
        if (tune_per_fold) {
            const auto specs = tune_learners(view, cfg, split.train, derive_seed(seed, {0x70e}));
            fold_preds[t] = prepare_nuisances(view, cfg, split.train, split.test, seed, specs);
        } else {
            fold_preds[t] = prepare_nuisances(view, cfg, split.train, split.test, seed, tuned[std::size_t(j)]);
        }
    });

    DmlFit out;
    out.treatment_names = ds.treatment_names();
    out.plan = plan;
    ScorePanel& panel = out.panel;
    panel.rows.resize(std::size_t(n_rep));
    for (Index r = 0; r < n_rep; ++r) panel.rows[std::size_t(r)] = plan.evaluation_ids(r);
    const Index n_eval = static_cast<Index>(panel.rows.front().size());
    for (const auto& rows : panel.rows)
        if (static_cast<Index>(rows.size()) != n_eval)
            throw Error(ErrorCode::NotAPartition, "repetitions evaluate different numbers of observations");
    panel.psi_a.assign(std::size_t(n_treat), MatrixXd(n_eval, n_rep));
    panel.psi_b.assign(std::size_t(n_treat), MatrixXd(n_eval, n_rep));
    out.predictions.assign(std::size_t(n_rep), std::vector<NuisancePredictions>(std::size_t(n_treat)));

    std::size_t t = 0;
    for (Index r = 0; r < n_rep; ++r) {
        const auto& rows = panel.rows[std::size_t(r)];
        std::vector<Index> pos(std::size_t(n), -1);
        for (std::size_t i = 0; i < rows.size(); ++i) pos[std::size_t(rows[i])] = Index(i);
        for (Index j = 0; j < n_treat; ++j) {
            NuisancePredictions& eta = out.predictions[std::size_t(r)][std::size_t(j)];
            for (const auto& split : plan.splits[std::size_t(r)]) {
                const auto& part = fold_preds[t++];
                IndexList p(split.test.size());
                for (std::size_t i = 0; i < p.size(); ++i) p[i] = pos[std::size_t(split.test[i])];
                for (auto member : {&NuisancePredictions::l_hat, &NuisancePredictions::m_hat,
                                    &NuisancePredictions::r_hat, &NuisancePredictions::g_hat,
                                    &NuisancePredictions::g0_hat, &NuisancePredictions::g1_hat,
                                    &NuisancePredictions::r0_hat, &NuisancePredictions::r1_hat})
                    scatter(eta.*member, part.*member, p, n_eval);
                if (part.p_hat) eta.p_hat = part.p_hat;
            }
            const auto& view = views[std::size_t(j)];
            std::optional<VectorXd> z;
            if (view.z) z = take(view.z->col(0), rows);
            const FoldContext ctx{&out.plan, r, j};
            const ScoreParts<double> parts = evaluate_score(cfg.score, take(view.y, rows), take(view.d, rows), z, eta, ctx);
            check_finite_panel(parts);
            panel.psi_a[std::size_t(j)].col(r) = parts.psi_a;
            panel.psi_b[std::size_t(j)].col(r) = parts.psi_b;
        }
    }

    out.per_rep_coefs.resize(n_rep, n_treat);
    out.per_rep_ses.resize(n_rep, n_treat);
    out.j0_hat.resize(n_rep, n_treat);
    out.sigma_hat.resize(n_rep, n_treat);
    for (Index r = 0; r < n_rep; ++r)
        for (Index j = 0; j < n_treat; ++j) {
            const double theta = cfg.dml_procedure == DmlProcedure::DML1 ? solve_dml1(panel, plan, r, j)
                                                                         : solve_dml2(panel, r, j);
            const auto var = estimate_variance(panel, theta, r, j);
            out.per_rep_coefs(r, j) = theta;
            out.sigma_hat(r, j) = std::sqrt(var.sigma2_hat);
            out.per_rep_ses(r, j) = out.sigma_hat(r, j) / std::sqrt(static_cast<double>(n_eval));
            out.j0_hat(r, j) = var.j0_hat;
        }

    out.coef.resize(n_treat);
    out.se.resize(n_treat);
    out.t_stat.resize(n_treat);
    out.p_value.resize(n_treat);
    for (Index j = 0; j < n_treat; ++j) {
        const auto [coef, se] = aggregate_reps(out.per_rep_coefs.col(j), out.per_rep_ses.col(j), n_eval);
        out.coef(j) = coef;
        out.se(j) = se;
        out.t_stat(j) = coef / se;
        out.p_value(j) = two_sided_pvalue(out.t_stat(j));
    }
    return out;
}

}  // namespace dml
