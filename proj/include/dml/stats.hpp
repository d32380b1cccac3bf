#pragma once

#include "dml/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dml {

template <typename Scalar>
Scalar normal_cdf(Scalar x) {
    using std::erfc;
    using std::sqrt;
    return Scalar(0.5) * erfc(-x / sqrt(Scalar(2)));
}

// Acklam's rational approximation followed by one Halley step; accurate to
// roughly machine precision on (0, 1).
template <typename Scalar>
Scalar normal_quantile(Scalar p) {
    if (!(p > Scalar(0) && p < Scalar(1))) {
        throw Error(ErrorCode::InvalidArgument, "normal_quantile requires 0 < p < 1");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01, -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    const double pd = static_cast<double>(p);
    double x;
    if (pd < p_low) {
        const double q = std::sqrt(-2.0 * std::log(pd));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (pd <= 1.0 - p_low) {
        const double q = pd - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-pd));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    Scalar xs = static_cast<Scalar>(x);
    const Scalar e = normal_cdf(xs) - p;
    const Scalar u = e * std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>) * std::exp(xs * xs / Scalar(2));
    xs = xs - u / (Scalar(1) + xs * u / Scalar(2));
    return xs;
}

// Two-sided normal p-value 2 * (1 - Phi(|t|)).
template <typename Scalar>
Scalar two_sided_pvalue(Scalar t) {
    using std::abs;
    using std::erfc;
    using std::sqrt;
    return erfc(abs(t) / sqrt(Scalar(2)));
}

template <typename Derived>
typename Derived::Scalar median(const Eigen::DenseBase<Derived>& values) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> tmp = values.derived();
    std::vector<Scalar> v(tmp.data(), tmp.data() + tmp.size());
    if (v.empty()) throw Error(ErrorCode::InvalidArgument, "median of empty range");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / Scalar(2);
}

// Empirical quantile with linear interpolation between order statistics
// (the "type 7" convention).
template <typename Derived>
typename Derived::Scalar quantile(const Eigen::DenseBase<Derived>& values, typename Derived::Scalar prob) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> tmp = values.derived();
    std::vector<Scalar> v(tmp.data(), tmp.data() + tmp.size());
    if (v.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty range");
    std::sort(v.begin(), v.end());
    const Scalar h = (static_cast<Scalar>(v.size()) - 1) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<Scalar>(lo)) * (v[hi] - v[lo]);
}

}  // namespace dml
