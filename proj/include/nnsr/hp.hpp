#pragma once

#include <limits>
#include <string>
#include <vector>

#include <boost/multiprecision/mpfr.hpp>

namespace nnsr {

// 300 significant decimal digits. Certificate coefficients reach 1e100 and
// beyond for narrow windows while the checks are absolute at 1e-8.
using HighPrecision =
    boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<300>, boost::multiprecision::et_off>;

constexpr int kHighPrecisionDigits = 300;

inline HighPrecision hp_gauss(const HighPrecision& t, const HighPrecision& sigma2, int order = 0) {
    const HighPrecision g = exp(-(t * t) / sigma2);
    if (order == 0) return g;
    return -(2 * t / sigma2) * g;
}

inline double to_double(const HighPrecision& x) { return x.convert_to<double>(); }

// log10 |x|, -inf for zero
inline double hp_log10_abs(const HighPrecision& x) {
    if (x == 0) return -std::numeric_limits<double>::infinity();
    return log10(abs(x)).convert_to<double>();
}

// Evaluates sum_j c_j g(t_n - s_j) on the uniform grid t_n = n / (count - 1)
// with a two-term multiplicative recurrence per sample instead of one exp per point.
std::vector<HighPrecision> hp_eval_uniform(const std::vector<HighPrecision>& coeffs,
                                           const std::vector<double>& samples, double sigma, std::size_t count);

HighPrecision hp_eval_point(const std::vector<HighPrecision>& coeffs, const std::vector<double>& samples,
                            double sigma, double t, int order = 0);

}  // namespace nnsr
