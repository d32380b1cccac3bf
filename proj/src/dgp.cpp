#include "dml/dgp.hpp"

#include "dml/config.hpp"
#include "dml/random.hpp"
#include "dml/stats.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace dml {

namespace {

VectorXd inverse_square_weights(Index p) {
    VectorXd beta(p);
    for (Index j = 0; j < p; ++j) beta(j) = 1.0 / double((j + 1) * (j + 1));
    return beta;
}

VectorXd logistic(const VectorXd& t) { return (1.0 / (1.0 + (-t.array()).exp())).matrix(); }

std::vector<std::string> numbered(const std::string& prefix, Index count) {
    std::vector<std::string> names;
    for (Index j = 1; j <= count; ++j) names.push_back(prefix + std::to_string(j));
    return names;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

// E[s * logistic(c s)] for s ~ N(0, var), by the trapezoid rule on +-12 sd.
double mean_s_logistic(double var, double c) {
    const double sd = std::sqrt(var);
    const int steps = 24000;
    const double lo = -12.0 * sd;
    const double h = 24.0 * sd / steps;
    double acc = 0.0;
    for (int k = 0; k <= steps; ++k) {
        const double s = lo + h * k;
        const double density = std::exp(-0.5 * s * s / var) / (sd * std::sqrt(2.0 * std::numbers::pi));
        const double f = s * density / (1.0 + std::exp(-c * s));
        acc += (k == 0 || k == steps) ? 0.5 * f : f;
    }
    return acc * h;
}

}  // namespace

DgpSample gen_plr_ccddhnr2018(double theta, Index n_obs, Index dim_x, std::uint64_t seed) {
    require(n_obs >= 1, "n_obs must be positive");
    require(dim_x >= 3, "dim_x must be at least 3");
    Rng rng = make_rng(seed, {0x91a});
    const MatrixXd x = multivariate_normal(n_obs, toeplitz_power(dim_x, 0.7), rng);
    const VectorXd v = standard_normal(n_obs, rng);
    const VectorXd zeta = standard_normal(n_obs, rng);

    const auto x1 = x.col(0).array();
    const auto x3 = x.col(2).array();
    const VectorXd m0 = (x1 + 0.25 * x3.exp() / (1.0 + x3.exp())).matrix();
    const VectorXd g0 = (x1.exp() / (1.0 + x1.exp()) + 0.25 * x3).matrix();
    const VectorXd d = m0 + v;
    const VectorXd y = theta * d + g0 + zeta;

    MatrixXd values(n_obs, dim_x + 2);
    values << y, d, x;
    std::vector<std::string> names{"y", "d"};
    for (auto& n : numbered("X", dim_x)) names.push_back(n);

    DgpSample s{"plr_ccddhnr2018", Dataset::from_matrix(values, names, "y", {"d"}), VectorXd::Constant(1, theta), {}, {}};
    s.oracle.m_hat = m0;
    s.oracle.g_hat = g0;
    s.oracle.l_hat = (theta * m0 + g0).eval();
    return s;
}

DgpSample gen_pliv_chs(double theta, Index n_obs, Index dim_x, Index dim_z, std::uint64_t seed, double delta) {
    require(n_obs >= 1, "n_obs must be positive");
    require(dim_z >= 1 && dim_z <= dim_x, "need 1 <= dim_z <= dim_x");
    Rng rng = make_rng(seed, {0x911f});
    const MatrixXd x = multivariate_normal(n_obs, toeplitz_power(dim_x, 0.5), rng);
    const VectorXd e1 = standard_normal(n_obs, rng);
    const VectorXd e2 = standard_normal(n_obs, rng);
    const MatrixXd zeta = 0.5 * standard_normal(n_obs, dim_z, rng);

    const VectorXd eps = e1;
    const VectorXd u = 0.6 * e1 + 0.8 * e2;
    const VectorXd beta = inverse_square_weights(dim_x);
    const MatrixXd z = x.leftCols(dim_z) + zeta;
    const VectorXd xb = x * beta;
    const VectorXd d = xb + delta * z.rowwise().sum() + u;
    const VectorXd y = theta * d + xb + eps;

    MatrixXd values(n_obs, 2 + dim_x + dim_z);
    values << y, d, x, z;
    std::vector<std::string> names{"y", "d"};
    for (auto& n : numbered("X", dim_x)) names.push_back(n);
    const auto z_names = numbered("Z", dim_z);
    for (auto& n : z_names) names.push_back(n);
    std::vector<std::string> x_names = numbered("X", dim_x);

    DgpSample s{"pliv_chs", Dataset::from_matrix(values, names, "y", {"d"}, x_names, z_names),
                VectorXd::Constant(1, theta), {}, {}};
    const VectorXd r0 = xb + delta * x.leftCols(dim_z).rowwise().sum();
    s.oracle.m_hat = VectorXd(x.col(0));
    s.oracle.r_hat = r0;
    s.oracle.l_hat = (theta * r0 + xb).eval();
    s.oracle.g_hat = xb;
    return s;
}

DgpSample gen_irm_belloni(double theta, Index n_obs, Index dim_x, double r2_y, double r2_d, std::uint64_t seed) {
    require(n_obs >= 1, "n_obs must be positive");
    require(r2_y > 0 && r2_y < 1 && r2_d > 0 && r2_d < 1, "R^2 values must lie in (0, 1)");
    Rng rng = make_rng(seed, {0x1e3});
    const MatrixXd sigma = toeplitz_power(dim_x, 0.5);
    const MatrixXd x = multivariate_normal(n_obs, sigma, rng);
    const VectorXd beta = inverse_square_weights(dim_x);
    const double b_sigma_b = beta.dot(sigma * beta);
    const double c_y = std::sqrt(r2_y / ((1.0 - r2_y) * b_sigma_b));
    const double c_d = std::sqrt(std::numbers::pi * std::numbers::pi / 3.0 * r2_d / ((1.0 - r2_d) * b_sigma_b));

    const VectorXd xb = x * beta;
    const VectorXd m0 = logistic(c_d * xb);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    VectorXd d(n_obs);
    for (Index i = 0; i < n_obs; ++i) d(i) = m0(i) > unif(rng) ? 1.0 : 0.0;
    const VectorXd zeta = standard_normal(n_obs, rng);
    const VectorXd g1 = (theta + c_y * xb.array()).matrix();
    const VectorXd y = (d.array() * g1.array()).matrix() + zeta;

    MatrixXd values(n_obs, dim_x + 2);
    values << y, d, x;
    std::vector<std::string> names{"y", "d"};
    for (auto& n : numbered("X", dim_x)) names.push_back(n);

    DgpSample s{"irm_belloni", Dataset::from_matrix(values, names, "y", {"d"}), VectorXd::Constant(1, theta), {}, {}};
    s.oracle.g0_hat = VectorXd::Zero(n_obs);
    s.oracle.g1_hat = g1;
    s.oracle.m_hat = m0;
    s.oracle.p_hat = 0.5;
    // x'beta is centered normal, so P(D = 1) = 1/2 and
    // ATTE = theta + c_y E[x'beta * m0(x)] / P(D = 1).
    s.atte_true = theta + c_y * mean_s_logistic(b_sigma_b, c_d) / 0.5;
    return s;
}

DgpSample gen_iivm(double theta, Index n_obs, Index dim_x, double alpha_x, std::uint64_t seed) {
    require(n_obs >= 1, "n_obs must be positive");
    Rng rng = make_rng(seed, {0x11f});
    const MatrixXd x = multivariate_normal(n_obs, toeplitz_power(dim_x, 0.5), rng);
    const VectorXd e1 = standard_normal(n_obs, rng);
    const VectorXd e2 = standard_normal(n_obs, rng);
    std::bernoulli_distribution coin(0.5);
    VectorXd z(n_obs);
    for (Index i = 0; i < n_obs; ++i) z(i) = coin(rng) ? 1.0 : 0.0;

    const VectorXd u = e1;
    const VectorXd v = 0.3 * e1 + std::sqrt(1.0 - 0.09) * e2;
    const VectorXd d = ((alpha_x * z + v).array() > 0.0).cast<double>().matrix();
    const VectorXd xb = x * inverse_square_weights(dim_x);
    const VectorXd y = theta * d + xb + u;

    MatrixXd values(n_obs, dim_x + 3);
    values << y, d, x, z;
    std::vector<std::string> names{"y", "d"};
    const auto x_names = numbered("X", dim_x);
    for (auto& n : x_names) names.push_back(n);
    names.push_back("Z1");

    DgpSample s{"iivm", Dataset::from_matrix(values, names, "y", {"d"}, x_names, std::vector<std::string>{"Z1"}),
                VectorXd::Constant(1, theta), {}, {}};
    const double r1 = normal_cdf(alpha_x);
    s.oracle.m_hat = VectorXd::Constant(n_obs, 0.5);
    s.oracle.r0_hat = VectorXd::Constant(n_obs, 0.5);
    s.oracle.r1_hat = VectorXd::Constant(n_obs, r1);
    s.oracle.g0_hat = (xb.array() + theta * 0.5).matrix();
    s.oracle.g1_hat = (xb.array() + theta * r1).matrix();
    return s;
}

DgpSample gen_sparse_plr(Index n_obs, Index n_vars, const VectorXd& theta, std::uint64_t seed, Index n_treatments) {
    require(n_obs >= 1, "n_obs must be positive");
    require(theta.size() <= n_vars, "more coefficients than variables");
    require(n_treatments >= 1 && n_treatments <= n_vars, "need 1 <= n_treatments <= n_vars");
    Rng rng = make_rng(seed, {0x5a9});
    const MatrixXd x = standard_normal(n_obs, n_vars, rng);
    const VectorXd y = x.leftCols(theta.size()) * theta + standard_normal(n_obs, rng);

    MatrixXd values(n_obs, n_vars + 1);
    values << y, x;
    std::vector<std::string> names{"y"};
    const auto x_names = numbered("X", n_vars);
    for (auto& n : x_names) names.push_back(n);
    const std::vector<std::string> d_names(x_names.begin(), x_names.begin() + n_treatments);

    VectorXd truth = VectorXd::Zero(n_treatments);
    const Index k = std::min(n_treatments, theta.size());
    truth.head(k) = theta.head(k);
    return {"sparse_plr", Dataset::from_matrix(values, names, "y", d_names), truth, {}, {}};
}

VectorXd multi_treatment_coefs(Index p1, Index s, double theta_max, double theta_min, double a, CoefRule rule) {
    require(s >= 0 && s <= p1, "need s <= p1");
    VectorXd theta = VectorXd::Zero(p1);
    for (Index j = 0; j < s; ++j) {
        const double decay = theta_max / std::pow(double(j + 1), a);
        theta(j) = rule == CoefRule::AsPrinted ? std::min(decay, theta_min) : std::max(decay, theta_min);
    }
    return theta;
}

DgpSample gen_multi_treatment(Index n_obs, Index p1, Index s, double theta_max, double theta_min, double a,
                              double sigma2, std::uint64_t seed, CoefRule rule) {
    require(n_obs >= 1, "n_obs must be positive");
    require(sigma2 > 0, "sigma2 must be positive");
    const VectorXd theta = multi_treatment_coefs(p1, s, theta_max, theta_min, a, rule);
    Rng rng = make_rng(seed, {0x3417});
    const MatrixXd d = multivariate_normal(n_obs, toeplitz_power(p1, 0.5), rng);
    const VectorXd y = d * theta + std::sqrt(sigma2) * standard_normal(n_obs, rng);

    MatrixXd values(n_obs, p1 + 1);
    values << y, d;
    std::vector<std::string> names{"y"};
    const auto d_names = numbered("d", p1);
    for (auto& n : d_names) names.push_back(n);
    return {"multi_treatment", Dataset::from_matrix(values, names, "y", d_names), theta, {}, {}};
}

std::vector<std::string> dgp_names() {
    return {"plr_ccddhnr2018", "pliv_chs", "irm_belloni", "iivm", "sparse_plr", "multi_treatment"};
}

std::map<std::string, std::string> dgp_defaults(const std::string& name) {
    if (name == "plr_ccddhnr2018") return {{"theta", "0.5"}, {"n_obs", "500"}, {"dim_x", "20"}};
    if (name == "pliv_chs")
        return {{"theta", "0.5"}, {"n_obs", "500"}, {"dim_x", "20"}, {"dim_z", "1"}, {"delta", "1"}};
    if (name == "irm_belloni")
        return {{"theta", "0.5"}, {"n_obs", "1000"}, {"dim_x", "20"}, {"r2_y", "0.5"}, {"r2_d", "0.5"}};
    if (name == "iivm") return {{"theta", "0.5"}, {"n_obs", "1000"}, {"dim_x", "20"}, {"alpha_x", "1"}};
    if (name == "sparse_plr")
        return {{"n_obs", "500"}, {"n_vars", "100"}, {"theta", "3,3,3"}, {"n_treatments", "10"}};
    if (name == "multi_treatment")
        return {{"n_obs", "1000"}, {"p1", "42"},       {"s", "12"},      {"theta_max", "9"},
                {"theta_min", "0.75"}, {"a", "0.99"}, {"sigma2", "3"}, {"coef_rule", "as_printed"}};
    throw Error(ErrorCode::ConfigError, "unknown dgp '" + name + "'");
}

DgpSample generate(const std::string& name, const std::map<std::string, std::string>& params, std::uint64_t seed) {
    auto p = dgp_defaults(name);
    for (const auto& [k, v] : params) {
        if (!p.count(k)) throw Error(ErrorCode::ConfigError, "dgp '" + name + "' has no parameter '" + k + "'");
        p[k] = v;
    }
    auto num = [&](const char* k) { return parse_double(p.at(k)); };
    auto count = [&](const char* k) { return static_cast<Index>(parse_int(p.at(k))); };

    if (name == "plr_ccddhnr2018") return gen_plr_ccddhnr2018(num("theta"), count("n_obs"), count("dim_x"), seed);
    if (name == "pliv_chs")
        return gen_pliv_chs(num("theta"), count("n_obs"), count("dim_x"), count("dim_z"), seed, num("delta"));
    if (name == "irm_belloni")
        return gen_irm_belloni(num("theta"), count("n_obs"), count("dim_x"), num("r2_y"), num("r2_d"), seed);
    if (name == "iivm") return gen_iivm(num("theta"), count("n_obs"), count("dim_x"), num("alpha_x"), seed);
    if (name == "sparse_plr") {
        const auto parts = split_list(p.at("theta"));
        VectorXd theta(static_cast<Index>(parts.size()));
        for (std::size_t i = 0; i < parts.size(); ++i) theta(Index(i)) = parse_double(parts[i]);
        return gen_sparse_plr(count("n_obs"), count("n_vars"), theta, seed, count("n_treatments"));
    }
    const auto& rule_name = p.at("coef_rule");
    if (rule_name != "as_printed" && rule_name != "max_variant")
        throw Error(ErrorCode::ConfigError, "coef_rule must be as_printed or max_variant");
    return gen_multi_treatment(count("n_obs"), count("p1"), count("s"), num("theta_max"), num("theta_min"), num("a"),
                               num("sigma2"), seed,
                               rule_name == "as_printed" ? CoefRule::AsPrinted : CoefRule::MaxVariant);
}

void write_sample(const DgpSample& sample, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);
    sample.dataset.write_csv((base / "data.csv").string());
    sample.dataset.role_config().save((base / "roles.cfg").string());

    nlohmann::json truth;
    truth["dgp"] = sample.name;
    truth["treatments"] = sample.dataset.treatment_names();
    truth["theta_true"] = std::vector<double>(sample.theta_true.data(), sample.theta_true.data() + sample.theta_true.size());
    if (sample.atte_true) truth["atte_true"] = *sample.atte_true;
    std::ofstream out(base / "truth.json");
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + (base / "truth.json").string());
    out << truth.dump(2) << '\n';
}

}  // namespace dml
