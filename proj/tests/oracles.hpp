#ifndef FG_TESTS_ORACLES_HPP
#define FG_TESTS_ORACLES_HPP

// Reference computations used by the tests. Everything here is written
// from first principles and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

/// Adaptive Gauss-Kronrod integral; infinite limits allowed.
inline double integrate(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
}

/// Integral over the real line split at a point (the mode) for accuracy.
inline double integrate_line(const std::function<double(double)>& f, double split) {
    return integrate(f, -kInf, split) + integrate(f, split, kInf);
}

/// Plain two-component density written directly from the definition.
inline double fg_density(double x, double theta, double s1, double s2, double w) {
    const double z1 = (x - theta) / s1;
    const double z2 = (x - theta) / s2;
    return w / s1 * std::exp(-z1 - std::exp(-z1)) + (1.0 - w) / s2 * std::exp(z2 - std::exp(z2));
}

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Two-sided one-sample KS distance to a continuous cdf.
inline double ks_distance(std::vector<double> v, const std::function<double(double)>& cdf) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = cdf(v[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

/// 1% critical value of the one-sample KS statistic (asymptotic).
inline double ks_critical_01(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

struct GumbelFit {
    double mu;
    double sigma;
    double loglik;
};

/// Maximum likelihood for a single Gumbel-max law via the profile equation
/// sigma = mean(y) - sum(y e^{-y/sigma}) / sum(e^{-y/sigma}), solved by
/// bisection, then mu = -sigma log(mean e^{-y/sigma}).
inline GumbelFit gumbel_max_mle(const std::vector<double>& y) {
    const double m = mean(y);
    const double shift = *std::min_element(y.begin(), y.end());
    auto g = [&](double s) {
        double num = 0.0, den = 0.0;
        for (double v : y) {
            const double e = std::exp(-(v - shift) / s);
            num += v * e;
            den += e;
        }
        return s - m + num / den;
    };
    double lo = 1e-6 * sd(y), hi = 10.0 * sd(y);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? hi : lo) = mid;
    }
    const double s = 0.5 * (lo + hi);
    double acc = 0.0;
    for (double v : y) acc += std::exp(-(v - shift) / s);
    const double mu = shift - s * std::log(acc / static_cast<double>(y.size()));
    double ll = 0.0;
    for (double v : y) {
        const double z = (v - mu) / s;
        ll += -std::log(s) - z - std::exp(-z);
    }
    return {mu, s, ll};
}

}  // namespace oracle

#endif
