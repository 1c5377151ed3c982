#include "fg/fg_core.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "fg/rng.hpp"

namespace fg {

namespace {

void check_scale(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw DomainError("Gumbel scale must be positive and finite, got " + std::to_string(sigma));
}

double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

FgParams::FgParams(double theta, double sigma1, double sigma2, double w)
    : theta_(theta), sigma1_(sigma1), sigma2_(sigma2), w_(w) {
    if (!std::isfinite(theta)) throw DomainError("FG mode must be finite");
    if (!(sigma1 > 0.0) || !std::isfinite(sigma1))
        throw DomainError("FG sigma1 must be positive and finite, got " + std::to_string(sigma1));
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw DomainError("FG sigma2 must be positive and finite, got " + std::to_string(sigma2));
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("FG weight must lie in [0, 1], got " + std::to_string(w));
}

std::string to_string(const FgParams& p) {
    std::ostringstream os;
    os.precision(6);
    os << "FG(theta=" << p.theta() << ", sigma1=" << p.sigma1() << ", sigma2=" << p.sigma2()
       << ", w=" << p.w() << ")";
    return os.str();
}

double gumbel_max_logpdf(double x, double theta, double sigma) {
    check_scale(sigma);
    const double z = (x - theta) / sigma;
    return -std::log(sigma) - z - std::exp(-z);
}

double gumbel_max_pdf(double x, double theta, double sigma) {
    return std::exp(gumbel_max_logpdf(x, theta, sigma));
}

double gumbel_max_cdf(double x, double theta, double sigma) {
    check_scale(sigma);
    return std::exp(-std::exp(-(x - theta) / sigma));
}

double gumbel_min_logpdf(double x, double theta, double sigma) {
    check_scale(sigma);
    const double z = (x - theta) / sigma;
    return -std::log(sigma) + z - std::exp(z);
}

double gumbel_min_pdf(double x, double theta, double sigma) {
    return std::exp(gumbel_min_logpdf(x, theta, sigma));
}

double gumbel_min_cdf(double x, double theta, double sigma) {
    check_scale(sigma);
    return -std::expm1(-std::exp((x - theta) / sigma));
}

double fg_logpdf(double x, const FgParams& p) {
    const double ninf = -std::numeric_limits<double>::infinity();
    const double a = p.w() > 0.0 ? std::log(p.w()) + gumbel_max_logpdf(x, p.theta(), p.sigma1()) : ninf;
    const double b = p.w() < 1.0 ? std::log1p(-p.w()) + gumbel_min_logpdf(x, p.theta(), p.sigma2()) : ninf;
    return log_sum_exp(a, b);
}

double fg_pdf(double x, const FgParams& p) {
    return std::exp(fg_logpdf(x, p));
}

double fg_cdf(double x, const FgParams& p) {
    if (p.w() == 1.0) return gumbel_max_cdf(x, p.theta(), p.sigma1());
    if (p.w() == 0.0) return gumbel_min_cdf(x, p.theta(), p.sigma2());
    return p.w() * gumbel_max_cdf(x, p.theta(), p.sigma1()) +
           (1.0 - p.w()) * gumbel_min_cdf(x, p.theta(), p.sigma2());
}

double fg_loglik(const std::vector<double>& y, const FgParams& p) {
    double s = 0.0;
    for (double v : y) s += fg_logpdf(v, p);
    return s;
}

double fg_quantile(double q, const FgParams& p) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile level must lie in (0, 1), got " + std::to_string(q));
    if (p.w() == 1.0) return p.theta() - p.sigma1() * std::log(-std::log(q));
    if (p.w() == 0.0) return p.theta() + p.sigma2() * std::log(-std::log1p(-q));

    const double scale = std::max(p.sigma1(), p.sigma2());
    double lo = p.theta() - scale;
    double hi = p.theta() + scale;
    double width = scale;
    while (fg_cdf(lo, p) > q) {
        width *= 2.0;
        lo = p.theta() - width;
        if (!std::isfinite(lo)) throw DomainError("quantile bracket diverged");
    }
    width = scale;
    while (fg_cdf(hi, p) < q) {
        width *= 2.0;
        hi = p.theta() + width;
        if (!std::isfinite(hi)) throw DomainError("quantile bracket diverged");
    }

    auto residual = [&](double x) { return fg_cdf(x, p) - q; };
    auto tol = [](double a, double b) {
        return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a));
    };
    std::uintmax_t max_iter = 200;
    const double flo = residual(lo);
    const double fhi = residual(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    auto [a, b] = boost::math::tools::toms748_solve(residual, lo, hi, flo, fhi, tol, max_iter);
    return std::abs(residual(a)) <= std::abs(residual(b)) ? a : b;
}

double fg_median(const FgParams& p) {
    return fg_quantile(0.5, p);
}

MomentSummary fg_moments(const FgParams& p) {
    using constants::apery;
    using constants::euler_gamma;
    using constants::pi;
    const double w = p.w();
    const double s1 = p.sigma1();
    const double s2 = p.sigma2();

    // Component means and central moments of order 0..4. The Gumbel fourth
    // central moment is (3/20) pi^4 sigma^4 (kurtosis 5.4).
    const double mu1 = p.theta() + s1 * euler_gamma;
    const double mu2 = p.theta() - s2 * euler_gamma;
    const double pi2 = pi * pi;
    const std::array<double, 5> c1{1.0, 0.0, s1 * s1 * pi2 / 6.0, 2.0 * apery * s1 * s1 * s1,
                                   0.15 * pi2 * pi2 * s1 * s1 * s1 * s1};
    const std::array<double, 5> c2{1.0, 0.0, s2 * s2 * pi2 / 6.0, -2.0 * apery * s2 * s2 * s2,
                                   0.15 * pi2 * pi2 * s2 * s2 * s2 * s2};
    const double mean = w * mu1 + (1.0 - w) * mu2;
    const double d1 = mu1 - mean;
    const double d2 = mu2 - mean;

    constexpr std::array<std::array<double, 5>, 5> binom{{{1, 0, 0, 0, 0},
                                                          {1, 1, 0, 0, 0},
                                                          {1, 2, 1, 0, 0},
                                                          {1, 3, 3, 1, 0},
                                                          {1, 4, 6, 4, 1}}};
    auto central = [&](int j) {
        double s = 0.0;
        for (int k = 0; k <= j; ++k) {
            s += binom[j][k] * (w * c1[k] * std::pow(d1, j - k) + (1.0 - w) * c2[k] * std::pow(d2, j - k));
        }
        return s;
    };

    MomentSummary m{};
    m.mean = mean;
    m.variance = central(2);
    m.third_central = central(3);
    m.fourth_central = central(4);
    m.skewness = m.third_central / std::pow(m.variance, 1.5);
    m.kurtosis = m.fourth_central / (m.variance * m.variance);
    return m;
}

DataSample fg_sample(const FgParams& p, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("sample size must be at least 1");
    Rng rng(seed);
    DataSample out;
    out.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.values.push_back(fg_draw(p, rng));
    out.provenance = "fg_sample " + to_string(p) + " seed=" + std::to_string(seed);
    return out;
}

}  // namespace fg
