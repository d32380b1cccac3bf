#include "cli.hpp"

#include "dml/dataset.hpp"
#include "dml/dgp.hpp"

#include "helpers.hpp"

#include <numeric>
#include <sstream>

using namespace dml;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string collapse_spaces(const std::string& s) {
    std::string out;
    for (char c : s)
        if (!(c == ' ' && !out.empty() && out.back() == ' ')) out += c;
    return out;
}

std::string cell(const TextTable& t, std::size_t row, const std::string& col) { return t.rows.at(row).at(t.column(col)); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen then estimate matches the in-process pipeline") {
    const auto dir = testing::scratch_dir("cli_roundtrip");
    const std::string sample = (dir / "sample").string();
    REQUIRE(run({"gen", "--dgp", "plr_ccddhnr2018", "--dgp-param", "n_obs=100", "--dgp-param", "dim_x=5", "--seed",
                 "4", "--out", sample})
                .code == 0);
    const auto data = read_csv(sample + "/data.csv");
    CHECK(data.values.rows() == 100);

    const auto res = run({"estimate", "--data", sample + "/data.csv", "--roles", sample + "/roles.cfg", "--seed", "9",
                          "--out", (dir / "est").string()});
    REQUIRE(res.code == 0);
    CHECK(collapse_spaces(res.out).find("Estimate. Std. Error t value Pr(>|t|)") != std::string::npos);

    const auto s = generate("plr_ccddhnr2018", {{"n_obs", "100"}, {"dim_x", "5"}}, 4);
    DmlConfig cfg;
    cfg.ml_l = LearnerSpec{LassoCvSpec{}};
    cfg.ml_m = LearnerSpec{LassoCvSpec{}};
    cfg.seed = 9;
    const DmlFit f = fit(s.dataset, cfg);
    const MatrixXd ci = confint(f, 0.95);
    const auto summary = read_text_csv((dir / "est" / "summary.csv").string());
    REQUIRE(summary.rows.size() == 1);
    CHECK(summary.header == std::vector<std::string>{"treatment", "estimate", "se", "t", "p", "ci_low", "ci_high"});
    CHECK(cell(summary, 0, "treatment") == "d");
    CHECK(cell(summary, 0, "estimate") == format_double(f.coef(0)));
    CHECK(cell(summary, 0, "se") == format_double(f.se(0)));
    CHECK(cell(summary, 0, "ci_high") == format_double(ci(0, 1)));
    CHECK(parse_double(cell(summary, 0, "estimate")) == f.coef(0));

    // The same plan passed back in gives the same output.
    cfg.n_folds = 5;
    draw_folds(100, 5, 1, 9).save((dir / "plan.json").string());
    REQUIRE(run({"estimate", "--data", sample + "/data.csv", "--roles", sample + "/roles.cfg", "--seed", "9",
                 "--split-plan", (dir / "plan.json").string(), "--out", (dir / "est_plan").string()})
                .code == 0);
    CHECK(testing::read_file(dir / "est_plan" / "summary.csv") == testing::read_file(dir / "est" / "summary.csv"));
}

TEST_CASE("gen is reproducible") {
    const auto dir = testing::scratch_dir("cli_gen");
    for (const char* name : {"a", "b"})
        REQUIRE(run({"gen", "--dgp", "iivm", "--dgp-param", "n_obs=60", "--seed", "2", "--out", (dir / name).string()})
                    .code == 0);
    for (const char* file : {"data.csv", "roles.cfg", "truth.json"})
        CHECK(testing::read_file(dir / "a" / file) == testing::read_file(dir / "b" / file));
    CHECK(run({"gen", "--dgp", "unknown", "--out", (dir / "c").string()}).code == 2);
    CHECK(run({"gen", "--dgp", "iivm", "--dgp-param", "n_obs", "--out", (dir / "c").string()}).code == 2);
    CHECK(run({"gen", "--dgp", "iivm", "--dgp-param", "width=3", "--out", (dir / "c").string()}).code == 2);
}

TEST_CASE("exit codes") {
    const auto dir = testing::scratch_dir("cli_codes");
    const std::string sample = (dir / "s").string();
    REQUIRE(run({"gen", "--dgp", "plr_ccddhnr2018", "--dgp-param", "n_obs=80", "--out", sample}).code == 0);
    const std::vector<std::string> base{"estimate", "--data", sample + "/data.csv", "--roles", sample + "/roles.cfg",
                                        "--out", (dir / "o").string()};
    auto with = [&](std::vector<std::string> extra) {
        auto args = base;
        args.insert(args.end(), extra.begin(), extra.end());
        return run(args);
    };
    const auto irm = with({"--model", "irm"});
    CHECK(irm.code == 1);
    CHECK(irm.err.find("NonBinaryTreatment") != std::string::npos);
    CHECK(with({"--p-adjust", "romano-wolf"}).code == 2);
    CHECK(with({"--model", "probit"}).code == 2);
    CHECK(with({"--score", "late"}).code == 2);
    CHECK(with({"--level", "1.5"}).code == 2);
    CHECK(with({"--bootstrap", "bayes:100"}).code == 2);
    CHECK(with({"--n-folds", "1"}).code == 2);
    CHECK(with({"--unknown-flag"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"estimate", "--data", "/nonexistent.csv", "--roles", sample + "/roles.cfg", "--out",
               (dir / "o").string()})
              .code == 2);
    CHECK(run({"simulate", "--dgp", "plr_ccddhnr2018", "--variant", "sideways", "--out", (dir / "x").string()}).code ==
          2);
    CHECK(run({"simulate", "--dgp", "nowhere", "--out", (dir / "x").string()}).code == 2);
    CHECK(run({"simulate", "--dgp", "irm_belloni", "--variant", "naive", "--out", (dir / "x").string()}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("bootstrap outputs") {
    const auto dir = testing::scratch_dir("cli_boot");
    const std::string sample = (dir / "s").string();
    REQUIRE(run({"gen", "--dgp", "sparse_plr", "--dgp-param", "n_obs=150", "--dgp-param", "n_vars=20", "--out",
                 sample})
                .code == 0);
    const std::string out = (dir / "o").string();
    REQUIRE(run({"estimate", "--data", sample + "/data.csv", "--roles", sample + "/roles.cfg", "--bootstrap",
                 "wild:200", "--p-adjust", "all", "--out", out})
                .code == 0);
    const auto summary = read_text_csv(out + "/summary.csv");
    CHECK(summary.rows.size() == 10);
    const auto joint = read_text_csv(out + "/joint_ci.csv");
    CHECK(joint.rows.size() == 10);
    const double c = parse_double(cell(joint, 0, "critical_value"));
    CHECK(c > 1.96);
    const auto padj = read_text_csv(out + "/p_adjusted.csv");
    CHECK(padj.rows.size() == 30);
    for (std::size_t i = 0; i < padj.rows.size(); ++i)
        CHECK(parse_double(cell(padj, i, "adjusted")) >= parse_double(cell(padj, i, "raw")));

    // Classical adjustments work from the normal p-values alone.
    const std::string plain = (dir / "plain").string();
    REQUIRE(run({"estimate", "--data", sample + "/data.csv", "--roles", sample + "/roles.cfg", "--p-adjust", "holm",
                 "--out", plain})
                .code == 0);
    CHECK(fs::exists(plain + "/p_adjusted.csv"));
    CHECK_FALSE(fs::exists(plain + "/joint_ci.csv"));
}

TEST_CASE("settings file with flag overrides") {
    const auto dir = testing::scratch_dir("cli_settings");
    testing::write_file(dir / "run.cfg", R"(model = irm
n_folds = 3
seed = 12
[learner]
ml_g = { kind = "random_forest", num_trees = 10, max_depth = 3 }
ml_l = ols
[tune.ml_l]
cv_folds = 4
on_folds = true
grid.lambda = 0.1:0.5:5
)");
    KeyValueConfig kv = KeyValueConfig::load((dir / "run.cfg").string());
    auto rs = cli::resolve_settings(kv, "plr");
    CHECK(rs.cfg.model == Model::IRM);
    CHECK(rs.cfg.score.kind == ScoreKind::IrmAte);
    CHECK(rs.cfg.n_folds == 3);
    CHECK(rs.cfg.seed == 12);
    CHECK(std::get<RandomForestSpec>(rs.cfg.ml_g->kind).num_trees == 10);
    CHECK(std::holds_alternative<LogisticLassoCvSpec>(rs.cfg.ml_m->kind));
    CHECK(std::holds_alternative<OlsSpec>(rs.cfg.ml_l->kind));
    const auto& tune = rs.cfg.tuning.at("ml_l");
    CHECK(tune.cv_folds == 4);
    CHECK(tune.tune_on_folds);
    REQUIRE(tune.grid.size() == 1);
    CHECK(tune.grid[0].second.size() == 5);
    CHECK(tune.grid[0].second[1] == doctest::Approx(0.2));

    kv.set("n_folds", "4");
    kv.set("score", "atte");
    kv.set("bootstrap", "exponential:300");
    kv.set("p_adjust", "bonferroni, holm");
    rs = cli::resolve_settings(kv, "plr");
    CHECK(rs.cfg.n_folds == 4);
    CHECK(rs.cfg.score.kind == ScoreKind::IrmAtte);
    CHECK(rs.bootstrap == BootstrapMethod::Exponential);
    CHECK(rs.n_boot == 300);
    CHECK(rs.p_adjust == std::vector<PAdjustMethod>{PAdjustMethod::Bonferroni, PAdjustMethod::Holm});
}

TEST_CASE("simulation reports") {
    const auto dir = testing::scratch_dir("cli_sim");
    const std::vector<std::string> args{"simulate", "--dgp", "plr_ccddhnr2018", "--dgp-param", "n_obs=200",
                                        "--dgp-param", "dim_x=5", "--reps", "12", "--seed", "3"};
    auto serial = args;
    serial.insert(serial.end(), {"--out", (dir / "w1").string()});
    auto threaded = args;
    threaded.insert(threaded.end(), {"--workers", "3", "--out", (dir / "w3").string()});
    REQUIRE(run(serial).code == 0);
    REQUIRE(run(threaded).code == 0);
    for (const char* file : {"report.csv", "draws.csv", "hist.csv"})
        CHECK(testing::read_file(dir / "w1" / file) == testing::read_file(dir / "w3" / file));

    const auto hist = read_text_csv((dir / "w1" / "hist.csv").string());
    CHECK(hist.rows.size() == 30);
    long total = 0;
    for (std::size_t i = 0; i < hist.rows.size(); ++i) total += parse_int(cell(hist, i, "count"));
    CHECK(total == 12);
    CHECK(parse_double(cell(hist, 0, "bin_low")) == -4.0);
    CHECK(parse_double(cell(hist, 29, "bin_high")) == 4.0);

    const auto report = read_text_csv((dir / "w1" / "report.csv").string());
    double coverage = -1.0;
    for (std::size_t i = 0; i < report.rows.size(); ++i)
        if (cell(report, i, "metric") == "coverage") coverage = parse_double(cell(report, i, "value"));
    CHECK(coverage >= 0.0);
    CHECK(coverage <= 1.0);
    const auto draws = read_text_csv((dir / "w1" / "draws.csv").string());
    CHECK(draws.rows.size() == 12);
}

TEST_CASE("simulation API and multiple testing summaries") {
    cli::SimSettings s;
    s.dgp = "multi_treatment";
    s.dgp_params = {{"n_obs", "200"}, {"p1", "6"}, {"s", "2"}};
    s.reps = 4;
    KeyValueConfig kv;
    kv.set("level", "0.9");
    kv.set("bootstrap", "normal:200");
    kv.set("p_adjust", "all");
    s.run = cli::resolve_settings(kv, "plr");
    const auto r = cli::run_simulation(s);
    CHECK(r.reps() == 4);
    CHECK(r.treatments.size() == 6);
    CHECK(r.rejections.size() == 5);
    CHECK(r.rejections[0].first == "unadjusted");
    CHECK(r.rejections[1].first == "joint_ci");
    // Independent count for Bonferroni.
    const MatrixXd& bonf = r.rejections[3].second;
    double any = 0;
    for (Index i = 0; i < 4; ++i) any += bonf.row(i).tail(4).maxCoeff();
    CHECK(r.fwer("bonferroni") == any / 4.0);
    CHECK(r.mean_correct_rejections("bonferroni") == bonf.leftCols(2).sum() / 4.0);
}

TEST_CASE("histogram uses the end bins for overflow") {
    VectorXd v(5);
    v << -10.0, -4.0, 0.0, 3.99, 12.0;
    const auto h = cli::histogram(v);
    CHECK(h.size() == 30);
    CHECK(h[0] == 2);
    CHECK(h[15] == 1);
    CHECK(h[29] == 2);
    CHECK(std::accumulate(h.begin(), h.end(), Index(0)) == 5);
}

}
