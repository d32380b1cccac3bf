#include "dml/dgp.hpp"
#include "dml/scores.hpp"

#include "helpers.hpp"

#include <cmath>

using namespace dml;
using testing::error_code_of;

namespace {

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

double implied(const ScoreParts<double>& s) { return -s.psi_b.sum() / s.psi_a.sum(); }

}  // namespace

TEST_SUITE("scores") {

TEST_CASE("hand-evaluated scores") {
    auto plr = plr_partialling_out<double>(vec({2}), vec({1}), vec({0}), vec({0}));
    CHECK(plr.psi_a(0) == -1.0);
    CHECK(plr.psi_b(0) == 2.0);
    CHECK(implied(plr) == 2.0);

    auto iv = plr_iv_type<double>(vec({3}), vec({2}), vec({1}), vec({1}));
    CHECK(iv.psi_a(0) == -2.0);
    CHECK(iv.psi_b(0) == 2.0);

    auto pliv = pliv_partialling_out<double>(vec({4}), vec({2}), vec({1}), vec({0}), vec({0}), vec({0}));
    CHECK(pliv.psi_a(0) == -2.0);
    CHECK(pliv.psi_b(0) == 4.0);

    auto pliv_iv = pliv_iv_type<double>(vec({3}), vec({2}), vec({1}), vec({1}), vec({0}));
    CHECK(pliv_iv.psi_a(0) == -2.0);
    CHECK(pliv_iv.psi_b(0) == 2.0);

    auto ate = irm_ate<double>(vec({2}), vec({1}), vec({0}), vec({1}), vec({0.5}));
    CHECK(ate.psi_a(0) == -1.0);
    CHECK(ate.psi_b(0) == 3.0);

    auto atte = irm_atte<double>(vec({2}), vec({1}), vec({1}), vec({0.3}), 0.5);
    CHECK(atte.psi_a(0) == -2.0);
    CHECK(atte.psi_b(0) == 2.0);
    auto control = irm_atte<double>(vec({1, 5}), vec({0, 1}), vec({1, 0}), vec({0.3, 0.3}), 0.5);
    CHECK(control.psi_b(0) == 0.0);

    auto late = iivm_late<double>(vec({2}), vec({1}), vec({1}), vec({0}), vec({1}), vec({0.5}), vec({0.2}), vec({0.8}));
    CHECK(late.psi_b(0) == doctest::Approx(3.0));
    // -[(r1 - r0) + z (d - r1) / m] = -(0.6 + 0.2 / 0.5)
    CHECK(late.psi_a(0) == doctest::Approx(-1.0));
}

TEST_CASE("zero residuals give zero scores") {
    const VectorXd y = testing::gaussian(10, 1, 1).col(0);
    const VectorXd d = testing::gaussian(10, 1, 2).col(0);
    const auto s = plr_partialling_out<double>(y, d, y, d);
    CHECK(s.psi_a.isZero());
    CHECK(s.psi_b.isZero());
    const auto z = pliv_partialling_out<double>(y, d, d, y, d, VectorXd::Zero(10));
    CHECK(z.psi_a.isZero());
    CHECK(z.psi_b.isZero());
    const auto pure = irm_ate<double>(vec({1, 2}), vec({1, 0}), vec({0, 2}), vec({1, 5}), vec({0.3, 0.6}));
    CHECK(pure.psi_b == vec({1, 3}));
}

TEST_CASE("input validation") {
    CHECK(error_code_of([] { plr_partialling_out<double>(vec({1, 2}), vec({1}), vec({1}), vec({1})); }) ==
          ErrorCode::LengthMismatch);
    CHECK(error_code_of([] { irm_ate<double>(vec({1}), vec({1}), vec({0}), vec({0}), vec({1.0})); }) ==
          ErrorCode::PropensityOutOfRange);
    CHECK(error_code_of([] { irm_ate<double>(vec({1}), vec({0.5}), vec({0}), vec({0}), vec({0.5})); }) ==
          ErrorCode::NonBinaryTreatment);
    CHECK(error_code_of([] { irm_atte<double>(vec({1, 2}), vec({0, 0}), vec({0, 0}), vec({0.5, 0.5}), 0.0); }) ==
          ErrorCode::ZeroTreatedShare);
}

TEST_CASE("linearity, sign and scale properties") {
    const Index n = 50;
    const VectorXd y = testing::gaussian(n, 1, 3).col(0);
    const VectorXd d = testing::gaussian(n, 1, 4).col(0);
    const VectorXd l = testing::gaussian(n, 1, 5).col(0);
    const VectorXd m = testing::gaussian(n, 1, 6).col(0);
    const auto s = plr_partialling_out<double>(y, d, l, m);
    CHECK((s.psi_a.array() <= 0.0).all());
    const double theta = 0.37;
    const VectorXd direct = ((y - l - theta * (d - m)).array() * (d - m).array()).matrix();
    CHECK((s.at(theta) - direct).cwiseAbs().maxCoeff() < 1e-14);

    // Scaling D - m by c scales psi_a by c^2, psi_b by c.
    const double c = 3.0;
    const auto scaled = plr_partialling_out<double>(y, (m + c * (d - m)).eval(), l, m);
    CHECK(implied(scaled) == doctest::Approx(implied(s) / c).epsilon(1e-12));

    // Shifting l by a constant moves the estimate by -c sum(v) / sum(v^2).
    const auto shifted = plr_partialling_out<double>(y, d, (l.array() + c).matrix(), m);
    const VectorXd v = d - m;
    CHECK(implied(shifted) - implied(s) == doctest::Approx(-c * v.sum() / v.squaredNorm()).epsilon(1e-10));

    VectorXd db(n);
    for (Index i = 0; i < n; ++i) db(i) = i % 3 == 0 ? 1.0 : 0.0;
    const VectorXd p = VectorXd::Constant(n, 0.4);
    CHECK((irm_ate<double>(y, db, l, m, p).psi_a.array() == -1.0).all());
}

TEST_CASE("collapse identities hold bit for bit") {
    const Index n = 40;
    const VectorXd y = testing::gaussian(n, 1, 7).col(0);
    const VectorXd d = testing::gaussian(n, 1, 8).col(0);
    const VectorXd l = testing::gaussian(n, 1, 9).col(0);
    const VectorXd m = testing::gaussian(n, 1, 10).col(0);
    const auto plr = plr_partialling_out<double>(y, d, l, m);
    const auto pliv = pliv_partialling_out<double>(y, d, d, l, m, m);
    CHECK(plr.psi_a == pliv.psi_a);
    CHECK(plr.psi_b == pliv.psi_b);
    CHECK(plr_iv_type<double>(y, d, l, m).psi_a == pliv_iv_type<double>(y, d, d, l, m).psi_a);
    CHECK(plr_iv_type<double>(y, d, l, m).psi_b == pliv_iv_type<double>(y, d, d, l, m).psi_b);

    VectorXd z(n);
    for (Index i = 0; i < n; ++i) z(i) = i % 2;
    const VectorXd prop = (0.2 + 0.6 * (m.array() > 0).cast<double>()).matrix();
    const auto ate = irm_ate<double>(y, z, l, m, prop);
    const auto late = iivm_late<double>(y, z, z, l, m, prop, VectorXd::Zero(n), VectorXd::Ones(n));
    CHECK(late.psi_b == ate.psi_b);
    CHECK((late.psi_a.array() == -1.0).all());
}

TEST_CASE("custom scores") {
    const Index n = 30;
    const VectorXd y = testing::gaussian(n, 1, 11).col(0);
    const VectorXd d = testing::gaussian(n, 1, 12).col(0);
    const VectorXd l = testing::gaussian(n, 1, 13).col(0);
    const VectorXd m = testing::gaussian(n, 1, 14).col(0);
    const CustomScoreFn manual = [](const VectorXd& y, const VectorXd& d, const VectorXd& l_hat,
                                    const VectorXd& m_hat, const VectorXd&, const FoldContext&) {
        const VectorXd u_hat = y - l_hat;
        const VectorXd v_hat = d - m_hat;
        return ScoreParts<double>{(-(v_hat.array() * v_hat.array())).matrix(), (u_hat.array() * v_hat.array()).matrix()};
    };
    NuisancePredictions eta;
    eta.l_hat = l;
    eta.m_hat = m;
    const auto builtin = evaluate_score(ScoreSpec::builtin(ScoreKind::PlrPartiallingOut), y, d, std::nullopt, eta);
    const auto custom = evaluate_score(ScoreSpec::make_custom(manual), y, d, std::nullopt, eta);
    CHECK(builtin.psi_a == custom.psi_a);
    CHECK(builtin.psi_b == custom.psi_b);

    const CustomScoreFn short_fn = [](const VectorXd& y, const VectorXd&, const VectorXd&, const VectorXd&,
                                      const VectorXd&, const FoldContext&) {
        return ScoreParts<double>{VectorXd::Ones(y.size() - 1), VectorXd::Ones(y.size() - 1)};
    };
    CHECK(error_code_of([&] { evaluate_custom(short_fn, y, d, l, m, VectorXd(), {}); }) == ErrorCode::BadCustomReturn);

    const CustomScoreFn mean_fn = [](const VectorXd& y, const VectorXd&, const VectorXd&, const VectorXd&,
                                     const VectorXd&, const FoldContext&) {
        return ScoreParts<double>{VectorXd::Constant(y.size(), -1.0), y};
    };
    CHECK(implied(evaluate_custom(mean_fn, y, d, l, m, VectorXd(), {})) == doctest::Approx(y.mean()).epsilon(1e-12));
}

TEST_CASE("parse and component lists") {
    CHECK(parse_score("plr", "partialling out") == ScoreKind::PlrPartiallingOut);
    CHECK(parse_score("pliv", "IV-type") == ScoreKind::PlivIvType);
    CHECK(parse_score("irm", "atte") == ScoreKind::IrmAtte);
    CHECK(error_code_of([] { parse_score("irm", "late"); }) == ErrorCode::ConfigError);
    CHECK(score_components(ScoreKind::IivmLate).size() == 5);
}

TEST_CASE("orthogonality on the partially linear design") {
    const auto sample = gen_plr_ccddhnr2018(0.5, 20000, 20, 5);
    const auto& ds = sample.dataset;
    const auto po = ScoreSpec::builtin(ScoreKind::PlrPartiallingOut);
    const double tol = 5.0 / std::sqrt(20000.0);
    const auto report = check_orthogonality(po, ds.y(), ds.d(0), std::nullopt, sample.oracle, 0.5, 0.05);
    CHECK(report.components == std::vector<std::string>{"l", "m"});
    CHECK(report.max_abs() < tol);

    // The naive score's derivative in g along Delta is -E_n[D Delta].
    const auto naive = naive_plr_score();
    const double flat = gateaux_derivative(naive, ds.y(), ds.d(0), std::nullopt, sample.oracle, 0.5, "g", 0.05,
                                           PerturbationDirection::Constant);
    CHECK(flat == doctest::Approx(-ds.d(0).mean()).epsilon(1e-9));
    const VectorXd sign_m = sample.oracle.m_hat->unaryExpr([](double v) { return v > 0 ? 1.0 : -1.0; });
    const double worst = gateaux_derivative(naive, ds.y(), ds.d(0), std::nullopt, sample.oracle, 0.5, "g", 0.05, sign_m);
    CHECK(worst == doctest::Approx(-ds.d(0).dot(sign_m) / 20000.0).epsilon(1e-9));
    CHECK(worst < -0.5);
    CHECK(std::abs(gateaux_derivative(po, ds.y(), ds.d(0), std::nullopt, sample.oracle, 0.5, "l", 0.05, sign_m)) < tol);

    // Finite differences are exact for scores linear in each component, so
    // the estimate does not move with h.
    for (double h : {0.1, 0.05, 0.025})
        CHECK(gateaux_derivative(po, ds.y(), ds.d(0), std::nullopt, sample.oracle, 0.5, "l", h) ==
              doctest::Approx(report.derivatives[0]).epsilon(1e-9));
}

}
