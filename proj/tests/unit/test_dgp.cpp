#include "dml/dgp.hpp"
#include "dml/stats.hpp"

#include "helpers.hpp"

#include <json.hpp>

#include <cmath>

using namespace dml;
using testing::error_code_of;

namespace {

double corr(const VectorXd& a, const VectorXd& b) {
    const VectorXd ca = (a.array() - a.mean()).matrix();
    const VectorXd cb = (b.array() - b.mean()).matrix();
    return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

double var(const VectorXd& a) { return (a.array() - a.mean()).square().mean(); }

}  // namespace

TEST_SUITE("dgp") {

TEST_CASE("partially linear design") {
    const auto s = gen_plr_ccddhnr2018(0.5, 200000, 20, 1);
    const auto& ds = s.dataset;
    CHECK(ds.n_obs() == 200000);
    CHECK(ds.covariate_names().size() == 20);
    const VectorXd v = ds.d(0) - *s.oracle.m_hat;
    const VectorXd zeta = ds.y() - 0.5 * ds.d(0) - *s.oracle.g_hat;
    CHECK(std::abs(v.mean()) < 0.01);
    CHECK(std::abs(var(v) - 1.0) < 0.015);
    CHECK(std::abs(var(zeta) - 1.0) < 0.015);
    CHECK(std::abs(corr(v, zeta)) < 0.01);
    const MatrixXd x = ds.x();
    CHECK(std::abs(corr(x.col(0), x.col(1)) - 0.7) < 0.01);
    CHECK(std::abs(corr(x.col(0), x.col(2)) - 0.49) < 0.01);
    CHECK(std::abs(var(x.col(5)) - 1.0) < 0.015);
    // m0 evaluated independently at the sample covariates.
    const double x1 = x(7, 0), x3 = x(7, 2);
    CHECK((*s.oracle.m_hat)(7) == doctest::Approx(x1 + 0.25 / (1.0 + std::exp(-x3))));
    CHECK((*s.oracle.l_hat)(7) == doctest::Approx(0.5 * (*s.oracle.m_hat)(7) + (*s.oracle.g_hat)(7)));
}

TEST_CASE("partially linear IV design") {
    const auto s = gen_pliv_chs(0.5, 200000, 10, 1, 2);
    const auto& ds = s.dataset;
    REQUIRE(ds.instrument_names().size() == 1);
    const VectorXd z = ds.z().col(0);
    const VectorXd x1 = ds.x().col(0);
    CHECK(std::abs(var(z - x1) - 0.25) < 0.005);
    const VectorXd eps = ds.y() - 0.5 * ds.d(0) - *s.oracle.g_hat;
    const VectorXd u = ds.d(0) - *s.oracle.r_hat - (z - x1);
    CHECK(std::abs(corr(eps, u) - 0.6) < 0.01);
    CHECK(std::abs(var(u) - 1.0) < 0.015);
    CHECK(std::abs(corr(z - x1, eps)) < 0.01);
}

TEST_CASE("interactive design") {
    const auto s = gen_irm_belloni(0.5, 200000, 20, 0.5, 0.5, 3);
    const auto& ds = s.dataset;
    const VectorXd d = ds.d(0);
    CHECK(((d.array() == 0.0) || (d.array() == 1.0)).all());
    CHECK(std::abs(d.mean() - 0.5) < 0.01);
    CHECK(std::abs((d - *s.oracle.m_hat).mean()) < 0.005);
    // The propensity index has R^2 = r2_d on the latent logistic scale.
    const VectorXd index = (s.oracle.m_hat->array() / (1.0 - s.oracle.m_hat->array())).log().matrix();
    const double r2 = var(index) / (var(index) + M_PI * M_PI / 3.0);
    CHECK(std::abs(r2 - 0.5) < 0.01);
    // Effect on the treated by Monte Carlo over the sample.
    double acc = 0.0;
    for (Index i = 0; i < d.size(); ++i) acc += d(i) * ((*s.oracle.g1_hat)(i) - (*s.oracle.g0_hat)(i));
    REQUIRE(s.atte_true.has_value());
    CHECK(std::abs(acc / d.sum() - *s.atte_true) < 0.02);
    CHECK(std::abs(*s.atte_true - 1.0813) < 5e-4);
}

TEST_CASE("binary instrument design") {
    const auto s = gen_iivm(0.5, 200000, 10, 1.0, 4);
    const auto& ds = s.dataset;
    const VectorXd z = ds.z().col(0);
    const VectorXd d = ds.d(0);
    double d1 = 0, n1 = 0, d0 = 0, n0 = 0;
    for (Index i = 0; i < z.size(); ++i) {
        if (z(i) == 1.0) { d1 += d(i); ++n1; } else { d0 += d(i); ++n0; }
    }
    CHECK(std::abs(n1 / z.size() - 0.5) < 0.01);
    CHECK(std::abs(d1 / n1 - normal_cdf(1.0)) < 0.01);
    CHECK(std::abs(d0 / n0 - 0.5) < 0.01);
    const VectorXd g = ((*s.oracle.g1_hat).array() * z.array() + (*s.oracle.g0_hat).array() * (1.0 - z.array())).matrix();
    CHECK(std::abs((ds.y() - g).mean()) < 0.01);
}

TEST_CASE("sparse and multi-treatment designs") {
    VectorXd theta(3);
    theta << 3, 3, 3;
    const auto sp = gen_sparse_plr(100, 100, theta, 5);
    CHECK(sp.dataset.treatment_names().size() == 10);
    CHECK(sp.dataset.treatment_names()[0] == "X1");
    CHECK(sp.theta_true.size() == 10);
    CHECK(sp.theta_true.head(3) == theta);
    CHECK(sp.theta_true.tail(7).isZero(0.0));

    const VectorXd printed = multi_treatment_coefs(42, 12, 9.0, 0.75, 0.99, CoefRule::AsPrinted);
    CHECK(printed.head(12).isApproxToConstant(0.75));
    CHECK(printed.tail(30).isZero(0.0));
    const VectorXd variant = multi_treatment_coefs(42, 12, 9.0, 0.75, 0.99, CoefRule::MaxVariant);
    CHECK(variant(0) == 9.0);
    CHECK(variant(11) == doctest::Approx(9.0 / std::pow(12.0, 0.99)));

    const auto mt = gen_multi_treatment(100000, 6, 2, 9.0, 0.75, 0.99, 3.0, 6);
    const MatrixXd d = mt.dataset.values().middleCols(1, 6);
    CHECK(std::abs(corr(d.col(0), d.col(1)) - 0.5) < 0.01);
    const VectorXd eps = mt.dataset.y() - d * mt.theta_true;
    CHECK(std::abs(var(eps) - 3.0) < 0.05);
}

TEST_CASE("registry and sample files") {
    CHECK(dgp_names().size() == 6);
    for (const auto& name : dgp_names()) {
        std::map<std::string, std::string> small;
        if (name != "sparse_plr") small["n_obs"] = "50";
        const auto a = generate(name, small, 9);
        const auto b = generate(name, small, 9);
        CHECK(a.dataset.values() == b.dataset.values());
        CHECK(a.dataset.values() != generate(name, small, 10).dataset.values());
    }
    CHECK(generate("plr_ccddhnr2018", {{"theta", "2"}, {"n_obs", "30"}}, 1).theta_true(0) == 2.0);
    CHECK(error_code_of([] { generate("nope", {}, 1); }) == ErrorCode::ConfigError);
    CHECK(error_code_of([] { generate("iivm", {{"gamma", "1"}}, 1); }) == ErrorCode::ConfigError);

    const auto s = gen_irm_belloni(0.5, 40, 5, 0.5, 0.5, 11);
    const auto dir = testing::scratch_dir("dgp_files");
    write_sample(s, dir.string());
    const auto roles = RoleConfig::load((dir / "roles.cfg").string());
    const auto back = Dataset::load_csv((dir / "data.csv").string(), roles);
    CHECK(back.values() == s.dataset.values());
    CHECK(back.treatment_names() == s.dataset.treatment_names());
    const auto truth = nlohmann::json::parse(testing::read_file((dir / "truth.json").string()));
    CHECK(truth["dgp"] == "irm_belloni");
    CHECK(truth["theta_true"][0].get<double>() == 0.5);
    CHECK(truth["atte_true"].get<double>() == *s.atte_true);
}

}
