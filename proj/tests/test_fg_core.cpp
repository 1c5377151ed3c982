#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "fg/fg_core.hpp"
#include "fg/rng.hpp"
#include "oracles.hpp"

using fg::FgParams;

namespace {

std::vector<FgParams> parameter_grid() {
    return {FgParams(0.0, 1.0, 1.0, 0.5),    FgParams(1.0, 1.0, 1.0, 0.4),   FgParams(0.0, 1.0, 5.0, 0.5),
            FgParams(-0.795, 5.186, 6.237, 0.698), FgParams(3.0, 0.2, 7.0, 0.05), FgParams(-2.0, 4.0, 0.3, 0.95),
            FgParams(0.0, 2.0, 2.0, 1.0),    FgParams(0.0, 2.0, 3.0, 0.0)};
}

std::vector<FgParams> random_params(int count, std::uint64_t seed) {
    fg::Rng rng(seed);
    std::uniform_real_distribution<double> loc(-5.0, 5.0), logs(std::log(0.2), std::log(8.0)), w(0.0, 1.0);
    std::vector<FgParams> out;
    for (int i = 0; i < count; ++i) out.emplace_back(loc(rng), std::exp(logs(rng)), std::exp(logs(rng)), w(rng));
    return out;
}

}  // namespace

TEST_CASE("parameters are validated on construction") {
    CHECK_THROWS_AS(FgParams(0.0, 0.0, 1.0, 0.5), fg::DomainError);
    CHECK_THROWS_AS(FgParams(0.0, 1.0, -1.0, 0.5), fg::DomainError);
    CHECK_THROWS_AS(FgParams(0.0, 1.0, 1.0, 1.5), fg::DomainError);
    CHECK_THROWS_AS(FgParams(0.0, 1.0, 1.0, -0.1), fg::DomainError);
    CHECK_THROWS_AS(FgParams(NAN, 1.0, 1.0, 0.5), fg::DomainError);
    CHECK_THROWS_AS(FgParams(0.0, INFINITY, 1.0, 0.5), fg::DomainError);
    CHECK_NOTHROW(FgParams(0.0, 1.0, 1.0, 0.0));
    CHECK_NOTHROW(FgParams(0.0, 1.0, 1.0, 1.0));
}

TEST_CASE("density matches the two-component definition") {
    for (const auto& p : parameter_grid()) {
        for (double x = -30.0; x <= 30.0; x += 0.37) {
            const double ref = oracle::fg_density(x, p.theta(), p.sigma1(), p.sigma2(), p.w());
            CHECK(fg::fg_pdf(x, p) == doctest::Approx(ref).epsilon(1e-12));
            if (ref > 0.0) CHECK(fg::fg_logpdf(x, p) == doctest::Approx(std::log(ref)).epsilon(1e-12));
        }
    }
}

TEST_CASE("density at the mode for equal scales and weights") {
    CHECK(fg::fg_pdf(0.0, FgParams(0.0, 1.0, 1.0, 0.5)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("log density stays finite far in the tails") {
    const FgParams p(0.0, 1.0, 2.0, 0.5);
    for (double x : {-500.0, -200.0, 200.0, 500.0}) {
        const double lp = fg::fg_logpdf(x, p);
        CHECK(std::isfinite(lp));
        CHECK(lp < -50.0);
    }
}

TEST_CASE("density integrates to one") {
    for (const auto& p : parameter_grid()) {
        const double total = oracle::integrate_line([&](double x) { return fg::fg_pdf(x, p); }, p.theta());
        CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    }
    for (const auto& p : random_params(40, 11)) {
        const double total = oracle::integrate_line([&](double x) { return fg::fg_pdf(x, p); }, p.theta());
        CHECK(total == doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_CASE("cdf derivative equals the density") {
    for (const auto& p : parameter_grid()) {
        for (double x = p.theta() - 10.0; x <= p.theta() + 10.0; x += 0.73) {
            const double h = 1e-5 * std::max(1.0, std::abs(x));
            const double fd = (fg::fg_cdf(x + h, p) - fg::fg_cdf(x - h, p)) / (2.0 * h);
            CHECK(std::abs(fd - fg::fg_pdf(x, p)) <= 1e-6 * fg::fg_pdf(x, p) + 1e-10);
        }
    }
}

TEST_CASE("cdf equals the integrated density") {
    for (const auto& p : parameter_grid()) {
        for (double x : {p.theta() - 3.0, p.theta(), p.theta() + 2.5}) {
            const double ref = oracle::integrate([&](double t) { return fg::fg_pdf(t, p); }, -oracle::kInf, x);
            CHECK(fg::fg_cdf(x, p) == doctest::Approx(ref).epsilon(1e-9));
        }
    }
}

TEST_CASE("cdf limits and monotonicity") {
    for (const auto& p : random_params(30, 3)) {
        CHECK(fg::fg_cdf(-1e6, p) == doctest::Approx(0.0));
        CHECK(fg::fg_cdf(1e6, p) == doctest::Approx(1.0));
        double prev = 0.0;
        for (double x = p.theta() - 60.0; x <= p.theta() + 60.0; x += 0.25) {
            const double c = fg::fg_cdf(x, p);
            CHECK(c >= prev);
            CHECK(c <= 1.0);
            prev = c;
        }
    }
}

TEST_CASE("density is unimodal with mode theta") {
    for (const auto& p : random_params(60, 5)) {
        double prev = 0.0;
        for (double x = p.theta() - 40.0; x <= p.theta(); x += 0.05) {
            const double f = fg::fg_pdf(x, p);
            CHECK(f >= prev);
            prev = f;
        }
        prev = fg::fg_pdf(p.theta(), p);
        for (double x = p.theta() + 0.05; x <= p.theta() + 40.0; x += 0.05) {
            const double f = fg::fg_pdf(x, p);
            CHECK(f <= prev);
            prev = f;
        }
    }
}

TEST_CASE("reflection maps Y to -Y") {
    for (const auto& p : random_params(30, 9)) {
        const FgParams r = p.reflected();
        CHECK(r.reflected().theta() == p.theta());
        CHECK(r.reflected().w() == doctest::Approx(p.w()).epsilon(1e-15));
        for (double x = -20.0; x <= 20.0; x += 0.9) {
            CHECK(fg::fg_pdf(x, p) == doctest::Approx(fg::fg_pdf(-x, r)).epsilon(1e-12));
            CHECK(std::abs(fg::fg_cdf(x, p) + fg::fg_cdf(-x, r) - 1.0) < 1e-13);
        }
        const auto m = fg::fg_moments(p);
        const auto mr = fg::fg_moments(r);
        CHECK(mr.mean == doctest::Approx(-m.mean).epsilon(1e-12));
        CHECK(mr.skewness == doctest::Approx(-m.skewness).epsilon(1e-10));
        CHECK(mr.kurtosis == doctest::Approx(m.kurtosis).epsilon(1e-12));
    }
}

TEST_CASE("components are linearly independent, so the weight is identified") {
    // Two density values determine the weight through a 2x2 system whose
    // determinant is non-zero for every admissible parameter vector.
    for (const auto& p : random_params(50, 21)) {
        const double a = p.theta() - 0.7 * p.sigma2();
        const double b = p.theta() + 0.9 * p.sigma1();
        const double m11 = fg::gumbel_max_pdf(a, p.theta(), p.sigma1());
        const double m12 = fg::gumbel_min_pdf(a, p.theta(), p.sigma2());
        const double m21 = fg::gumbel_max_pdf(b, p.theta(), p.sigma1());
        const double m22 = fg::gumbel_min_pdf(b, p.theta(), p.sigma2());
        const double det = m11 * m22 - m12 * m21;
        CHECK(std::abs(det) > 1e-12);
        const double fa = fg::fg_pdf(a, p);
        const double fb = fg::fg_pdf(b, p);
        const double w = (fa * m22 - m12 * fb) / det;
        const double one_minus_w = (m11 * fb - fa * m21) / det;
        CHECK(w == doctest::Approx(p.w()).epsilon(1e-8));
        CHECK(one_minus_w == doctest::Approx(1.0 - p.w()).epsilon(1e-8));
    }
}

TEST_CASE("a one-component Gumbel is not reproduced by a different FG") {
    // Gumbel-max(0, 2) and FG members with w < 1 differ in the left tail.
    const FgParams gumbel(0.0, 2.0, 1.0, 1.0);
    const FgParams other(0.0, 2.0, 1.0, 0.99);
    CHECK(fg::fg_logpdf(-15.0, other) - fg::fg_logpdf(-15.0, gumbel) > 10.0);
}

TEST_CASE("degenerate weights reduce to single components") {
    const FgParams max_only(1.0, 2.0, 3.0, 1.0);
    const FgParams min_only(1.0, 2.0, 3.0, 0.0);
    for (double x = -10.0; x <= 10.0; x += 0.5) {
        CHECK(fg::fg_pdf(x, max_only) == doctest::Approx(fg::gumbel_max_pdf(x, 1.0, 2.0)).epsilon(1e-14));
        CHECK(fg::fg_pdf(x, min_only) == doctest::Approx(fg::gumbel_min_pdf(x, 1.0, 3.0)).epsilon(1e-14));
        CHECK(fg::fg_cdf(x, max_only) == doctest::Approx(std::exp(-std::exp(-(x - 1.0) / 2.0))).epsilon(1e-14));
    }
    CHECK(fg::fg_quantile(0.3, max_only) == doctest::Approx(1.0 - 2.0 * std::log(-std::log(0.3))).epsilon(1e-12));
    CHECK(fg::fg_quantile(0.3, min_only) == doctest::Approx(1.0 + 3.0 * std::log(-std::log(0.7))).epsilon(1e-12));
    CHECK(fg::fg_moments(max_only).kurtosis == doctest::Approx(5.4).epsilon(1e-12));
    CHECK(fg::fg_moments(max_only).skewness == doctest::Approx(1.1395470994046486).epsilon(1e-10));
    CHECK(fg::fg_moments(min_only).skewness == doctest::Approx(-1.1395470994046486).epsilon(1e-10));
}

TEST_CASE("quantile round trip") {
    for (const auto& p : random_params(40, 31)) {
        for (double q : {1e-10, 1e-4, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1 - 1e-6}) {
            const double x = fg::fg_quantile(q, p);
            CHECK(fg::fg_cdf(x, p) == doctest::Approx(q).epsilon(1e-9));
        }
        for (double x = p.theta() - 8.0; x <= p.theta() + 8.0; x += 1.3) {
            const double q = fg::fg_cdf(x, p);
            // Error in q of a few ulps moves x by roughly ulps / pdf(x).
            if (q > 1e-12 && q < 1.0 - 1e-12)
                CHECK(std::abs(fg::fg_quantile(q, p) - x) < 1e-14 / fg::fg_pdf(x, p) + 1e-9 * std::abs(x) + 1e-12);
        }
    }
    CHECK_THROWS_AS(fg::fg_quantile(0.0, FgParams(0, 1, 1, 0.5)), fg::DomainError);
    CHECK_THROWS_AS(fg::fg_quantile(1.0, FgParams(0, 1, 1, 0.5)), fg::DomainError);
}

TEST_CASE("median solves cdf = 1/2") {
    for (const auto& p : random_params(40, 41)) CHECK(fg::fg_cdf(fg::fg_median(p), p) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fg::fg_median(FgParams(0.0, 1.0, 1.0, 0.5)) == doctest::Approx(0.0));
}

TEST_CASE("moments agree with numerical integration") {
    for (const auto& p : parameter_grid()) {
        const auto m = fg::fg_moments(p);
        const double mean = oracle::integrate_line([&](double x) { return x * fg::fg_pdf(x, p); }, p.theta());
        auto central = [&](int k) {
            return oracle::integrate_line([&](double x) { return std::pow(x - mean, k) * fg::fg_pdf(x, p); }, p.theta());
        };
        const double scale = std::max(p.sigma1(), p.sigma2());
        CHECK(m.mean == doctest::Approx(mean).epsilon(1e-8).scale(scale));
        CHECK(m.variance == doctest::Approx(central(2)).epsilon(1e-7));
        CHECK(m.third_central == doctest::Approx(central(3)).epsilon(1e-6).scale(std::pow(scale, 3)));
        CHECK(m.fourth_central == doctest::Approx(central(4)).epsilon(1e-6));
        CHECK(m.skewness == doctest::Approx(m.third_central / std::pow(m.variance, 1.5)).epsilon(1e-12));
        CHECK(m.kurtosis == doctest::Approx(m.fourth_central / (m.variance * m.variance)).epsilon(1e-12));
    }
}

TEST_CASE("moments at the lake fit estimates") {
    const auto freq = fg::fg_moments(FgParams(-0.795, 5.186, 6.237, 0.698));
    CHECK(std::abs(freq.skewness - (-0.102)) <= 0.005);
    CHECK(std::abs(freq.kurtosis - 6.384) <= 0.01);
    const auto bayes = fg::fg_moments(FgParams(-0.485, 5.400, 5.733, 0.629));
    CHECK(std::abs(bayes.skewness - 0.058) <= 0.005);
    CHECK(std::abs(bayes.kurtosis - 6.074) <= 0.01);
}

TEST_CASE("sampler follows the cdf") {
    for (const auto& p : parameter_grid()) {
        const auto s = fg::fg_sample(p, 20000, 1234);
        const double d = oracle::ks_distance(s.values, [&](double x) { return fg::fg_cdf(x, p); });
        CHECK(d < oracle::ks_critical_01(s.size()));
    }
}

TEST_CASE("sample moments converge to the closed form") {
    const FgParams p(0.0, 1.0, 5.0, 0.5);
    const auto s = fg::fg_sample(p, 400000, 99);
    const auto m = fg::fg_moments(p);
    CHECK(oracle::mean(s.values) == doctest::Approx(m.mean).scale(1).epsilon(0.03));
    CHECK(oracle::sd(s.values) == doctest::Approx(std::sqrt(m.variance)).epsilon(0.01));
}

TEST_CASE("sampler is deterministic in the seed") {
    const FgParams p(0.0, 1.0, 5.0, 0.5);
    CHECK(fg::fg_sample(p, 100, 7).values == fg::fg_sample(p, 100, 7).values);
    CHECK(fg::fg_sample(p, 100, 7).values != fg::fg_sample(p, 100, 8).values);
    CHECK_THROWS_AS(fg::fg_sample(p, 0, 7), fg::DomainError);
}

TEST_CASE("log-likelihood is the sum of log densities") {
    const FgParams p(0.5, 1.5, 2.5, 0.3);
    const auto s = fg::fg_sample(p, 50, 5);
    double ref = 0.0;
    for (double v : s.values) ref += std::log(oracle::fg_density(v, 0.5, 1.5, 2.5, 0.3));
    CHECK(fg::fg_loglik(s.values, p) == doctest::Approx(ref).epsilon(1e-12));
}
