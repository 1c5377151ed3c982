#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "fg/modal_reg.hpp"
#include "oracles.hpp"

using fg::FgParams;

namespace {

// Design with an intercept and two uniform covariates, FG errors with mode 0.
fg::RegressionSpec simulate(const std::vector<double>& beta, const FgParams& err, int n, std::uint64_t seed) {
    fg::Rng rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const auto e = fg::fg_sample(err, n, seed + 1000).values;
    std::vector<double> y(n);
    std::vector<std::vector<double>> cov(beta.size() - 1, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
        y[i] = beta[0] + e[i];
        for (std::size_t j = 1; j < beta.size(); ++j) {
            cov[j - 1][i] = u(rng);
            y[i] += beta[j] * cov[j - 1][i];
        }
    }
    std::vector<std::string> names;
    for (std::size_t j = 1; j < beta.size(); ++j) names.push_back("x" + std::to_string(j));
    return fg::RegressionSpec::from_columns(y, cov, names);
}

fg::EcmConfig ecm_config() {
    fg::EcmConfig c;
    c.seed = 3;
    return c;
}

// Solves a small dense system by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(A[i][k]) > std::abs(A[piv][k])) piv = i;
        std::swap(A[k], A[piv]);
        std::swap(b[k], b[piv]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = A[i][k] / A[k][k];
            for (std::size_t j = k; j < n; ++j) A[i][j] -= f * A[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= A[k][j] * x[j];
        x[k] = s / A[k][k];
    }
    return x;
}

}  // namespace

TEST_CASE("intercept-only regression reduces to the distribution fit") {
    const auto y = fg::fg_sample(FgParams(1.0, 1.0, 2.0, 0.4), 150, 5);
    const auto spec = fg::RegressionSpec::from_columns(y.values, {}, {});
    const auto reg = fg::fit_modal_ecm(spec, ecm_config());
    const auto dist = fg::fit_ecm(y, ecm_config());
    CHECK(reg.beta(0) == doctest::Approx(dist.params.theta()).epsilon(1e-6));
    CHECK(reg.sigma1 == doctest::Approx(dist.params.sigma1()).epsilon(1e-6));
    CHECK(reg.sigma2 == doctest::Approx(dist.params.sigma2()).epsilon(1e-6));
    CHECK(reg.w == doctest::Approx(dist.params.w()).epsilon(1e-6));
    CHECK(reg.loglik == doctest::Approx(dist.loglik).epsilon(1e-10));
    CHECK(reg.aic == doctest::Approx(dist.aic).epsilon(1e-10));
    REQUIRE(dist.vcov_ok);
    for (int k = 0; k < 4; ++k) CHECK(reg.std_errors(k) == doctest::Approx(dist.std_errors()(k)).epsilon(1e-3));
    CHECK(reg.names == std::vector<std::string>{"(Intercept)", "sigma1", "sigma2", "w"});
}

TEST_CASE("coefficients shift with the response and scales do not") {
    const auto spec = simulate({1.0, 2.0, -1.0}, FgParams(0.0, 1.0, 3.0, 0.5), 300, 7);
    const auto base = fg::fit_modal_ecm(spec, ecm_config());
    const Eigen::Vector3d c(0.5, -1.5, 2.0);
    auto moved = spec;
    moved.response += spec.design * c;
    const auto m = fg::fit_modal_ecm(moved, ecm_config());
    for (int j = 0; j < 3; ++j) CHECK(m.beta(j) == doctest::Approx(base.beta(j) + c(j)).epsilon(1e-5));
    CHECK(m.sigma1 == doctest::Approx(base.sigma1).epsilon(1e-5));
    CHECK(m.sigma2 == doctest::Approx(base.sigma2).epsilon(1e-5));
    CHECK(m.w == doctest::Approx(base.w).epsilon(1e-5));
    CHECK(m.loglik == doctest::Approx(base.loglik).epsilon(1e-9));
}

TEST_CASE("modal regression recovers coefficients with calibrated intervals") {
    const std::vector<double> beta = {1.0, 2.0, -1.0};
    const auto spec = simulate(beta, FgParams(0.0, 1.0, 3.0, 0.5), 2000, 11);
    const auto fit = fg::fit_modal_ecm(spec, ecm_config());
    CHECK(fit.converged);
    REQUIRE(fit.vcov_error.empty());
    const double truth[6] = {1.0, 2.0, -1.0, 1.0, 3.0, 0.5};
    for (int k = 0; k < 6; ++k) {
        INFO(fit.names[k] << " estimate " << fit.estimates(k) << " se " << fit.std_errors(k));
        CHECK(std::abs(fit.estimates(k) - truth[k]) < 4.0 * fit.std_errors(k));
        CHECK(fit.intervals[k].lower == doctest::Approx(fit.estimates(k) - 1.959963984540054 * fit.std_errors(k)));
        CHECK(fit.intervals[k].upper == doctest::Approx(fit.estimates(k) + 1.959963984540054 * fit.std_errors(k)));
    }
    CHECK(fit.aic == doctest::Approx(-2 * fit.loglik + 2 * 6));
    CHECK(fit.bic == doctest::Approx(-2 * fit.loglik + 6 * std::log(2000.0)));
    REQUIRE(fit.log_scale_intervals.size() == 2);
    CHECK(fit.log_scale_intervals[0].lower > 0.0);
    CHECK(fit.log_scale_intervals[0].lower < fit.sigma1);
    CHECK(fit.log_scale_intervals[1].upper > fit.sigma2);
}

TEST_CASE("modal log-likelihood equals the summed log density") {
    const auto spec = simulate({0.5, 1.0}, FgParams(0.0, 1.0, 2.0, 0.3), 50, 2);
    const Eigen::Vector2d b(0.4, 1.1);
    double s = 0.0;
    for (Eigen::Index i = 0; i < spec.response.size(); ++i)
        s += std::log(oracle::fg_density(spec.response(i), spec.design.row(i).dot(b), 0.9, 2.2, 0.35));
    CHECK(fg::modal_loglik(spec, b, 0.9, 2.2, 0.35) == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("least squares solves the normal equations") {
    const auto spec = simulate({1.0, 2.0, -1.0}, FgParams(0.0, 1.0, 3.0, 0.5), 80, 13);
    const auto fit = fg::fit_mean_normal(spec);
    const auto& X = spec.design;
    const auto& y = spec.response;
    const int n = static_cast<int>(X.rows()), p = static_cast<int>(X.cols());
    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < p; ++a) {
            xty[a] += X(i, a) * y(i);
            for (int b = 0; b < p; ++b) xtx[a][b] += X(i, a) * X(i, b);
        }
    const auto bhat = solve(xtx, xty);
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = y(i);
        for (int a = 0; a < p; ++a) r -= X(i, a) * bhat[a];
        rss += r * r;
    }
    const double s2 = rss / (n - p);
    const double tq = boost::math::quantile(boost::math::students_t(n - p), 0.975);
    for (int a = 0; a < p; ++a) {
        std::vector<double> e(p, 0.0);
        e[a] = 1.0;
        const double var = s2 * solve(xtx, e)[a];
        CHECK(fit.beta(a) == doctest::Approx(bhat[a]).epsilon(1e-10));
        CHECK(fit.std_errors(a) == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
        CHECK(fit.intervals[a].upper == doctest::Approx(bhat[a] + tq * std::sqrt(var)).epsilon(1e-9));
    }
    CHECK(fit.sigma1 == doctest::Approx(std::sqrt(rss / n)).epsilon(1e-10));
    CHECK(fit.loglik == doctest::Approx(-0.5 * n * (std::log(2 * oracle::kPi * rss / n) + 1)).epsilon(1e-12));
    CHECK(fit.aic == doctest::Approx(-2 * fit.loglik + 2 * (p + 1)));
    CHECK(fit.names.back() == "sigma");
}

TEST_CASE("design validation") {
    const auto y = fg::fg_sample(FgParams(0.0, 1.0, 1.0, 0.5), 30, 1).values;
    std::vector<double> a(30), b(30);
    for (int i = 0; i < 30; ++i) {
        a[i] = i * 0.1;
        b[i] = 2.0 * a[i] - 1.0;
    }

    SUBCASE("collinear columns are named") {
        const auto spec = fg::RegressionSpec::from_columns(y, {a, b}, {"depth", "twice_depth"});
        try {
            spec.validate();
            FAIL("expected a rank error");
        } catch (const fg::DomainError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("twice_depth") != std::string::npos);
        }
        CHECK_THROWS_AS(fg::fit_modal_ecm(spec, ecm_config()), fg::DomainError);
        CHECK_THROWS_AS(fg::fit_mean_normal(spec), fg::DomainError);
    }
    SUBCASE("too few observations for the parameters") {
        const std::vector<double> small(y.begin(), y.begin() + 6);
        const std::vector<double> c1(a.begin(), a.begin() + 6);
        std::vector<double> c2 = {1.0, 0.0, 3.0, 2.0, 5.0, 1.0};
        CHECK_THROWS_AS(fg::RegressionSpec::from_columns(small, {c1, c2}, {"a", "b"}).validate(), fg::DomainError);
    }
    SUBCASE("first column must be the intercept") {
        auto spec = fg::RegressionSpec::from_columns(y, {a}, {"a"});
        spec.design(3, 0) = 2.0;
        CHECK_THROWS_AS(spec.validate(), fg::DomainError);
    }
    SUBCASE("non-finite values are rejected") {
        auto spec = fg::RegressionSpec::from_columns(y, {a}, {"a"});
        spec.response(4) = std::nan("");
        CHECK_THROWS_AS(spec.validate(), fg::DomainError);
    }
    SUBCASE("column lengths must agree") {
        CHECK_THROWS_AS(fg::RegressionSpec::from_columns(y, {std::vector<double>(10, 1.0)}, {"a"}), fg::DomainError);
    }
}

TEST_CASE("Bayesian modal regression agrees with the likelihood fit") {
    const auto spec = simulate({1.0, 2.0}, FgParams(0.0, 1.0, 3.0, 0.5), 400, 21);
    fg::McmcConfig cfg;
    cfg.n_iter = 3000;
    cfg.burn_in = 1000;
    cfg.n_chains = 2;
    cfg.seed = 4;
    const auto bayes = fg::fit_modal_bayes(spec, fg::PriorSpec{}, cfg);
    const auto ecm = fg::fit_modal_ecm(spec, ecm_config());
    const auto& f = bayes.fit;
    REQUIRE(f.estimates.size() == 5);
    CHECK(f.names == std::vector<std::string>{"(Intercept)", "x1", "sigma1", "sigma2", "w"});
    for (int k = 0; k < 5; ++k) {
        INFO(f.names[k] << " posterior median " << f.estimates(k) << " mle " << ecm.estimates(k));
        CHECK(std::abs(f.estimates(k) - ecm.estimates(k)) < 3.0 * f.std_errors(k));
        CHECK(f.intervals[k].lower < f.estimates(k));
        CHECK(f.intervals[k].upper > f.estimates(k));
    }
    CHECK(f.converged == (bayes.draws.max_rhat() < 1.05));
    CHECK(f.loglik == doctest::Approx(fg::modal_loglik(spec, f.beta, f.sigma1, f.sigma2, f.w)));
    CHECK(fg::to_string(f.method) == "bayes");
}
