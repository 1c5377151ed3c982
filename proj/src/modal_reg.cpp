#include "fg/modal_reg.hpp"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "ecm_engine.hpp"
#include "mwg_engine.hpp"

namespace fg {

namespace {

constexpr double kZ975 = 1.959963984540054;

Eigen::Index matrix_rank(const Eigen::MatrixXd& m) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(1e-10);
    return qr.rank();
}

}  // namespace

std::string to_string(RegressionMethod m) {
    switch (m) {
    case RegressionMethod::ecm: return "ecm";
    case RegressionMethod::bayes: return "bayes";
    case RegressionMethod::ols: return "ols";
    }
    return "unknown";
}

void RegressionSpec::validate() const {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (response.size() != n) throw DomainError("response length differs from the number of design rows");
    if (static_cast<Eigen::Index>(coef_names.size()) != p)
        throw DomainError("one coefficient name is required per design column");
    if (p < 1) throw DomainError("design needs at least the intercept column");
    if (n <= p + 3)
        throw DomainError("need more than p + 3 = " + std::to_string(p + 3) + " observations, got " +
                          std::to_string(n));
    if (!(design.col(0).array() == 1.0).all()) throw DomainError("first design column must be the all-ones intercept");
    if (!design.allFinite() || !response.allFinite()) throw DomainError("design or response has non-finite entries");

    if (matrix_rank(design) < p) {
        std::string bad;
        for (Eigen::Index j = 1; j < p; ++j) {
            if (matrix_rank(design.leftCols(j + 1)) <= matrix_rank(design.leftCols(j))) {
                if (!bad.empty()) bad += ", ";
                bad += coef_names[static_cast<std::size_t>(j)];
            }
        }
        throw DomainError("design is rank deficient; collinear column(s): " + bad);
    }
}

RegressionSpec RegressionSpec::from_columns(const std::vector<double>& response,
                                            const std::vector<std::vector<double>>& covariates,
                                            const std::vector<std::string>& covariate_names) {
    if (covariates.size() != covariate_names.size()) throw DomainError("covariate names and columns differ in count");
    RegressionSpec s;
    const auto n = static_cast<Eigen::Index>(response.size());
    const auto p = static_cast<Eigen::Index>(covariates.size()) + 1;
    s.design.resize(n, p);
    s.design.col(0).setOnes();
    for (Eigen::Index j = 1; j < p; ++j) {
        const auto& col = covariates[static_cast<std::size_t>(j - 1)];
        if (static_cast<Eigen::Index>(col.size()) != n) throw DomainError("covariate column length differs from response");
        s.design.col(j) = Eigen::Map<const Eigen::VectorXd>(col.data(), n);
    }
    s.response = Eigen::Map<const Eigen::VectorXd>(response.data(), n);
    s.coef_names.push_back("(Intercept)");
    s.coef_names.insert(s.coef_names.end(), covariate_names.begin(), covariate_names.end());
    return s;
}

double modal_loglik(const RegressionSpec& spec, const Eigen::VectorXd& beta, double sigma1, double sigma2,
                    double w) {
    return detail::observed_loglik(spec.response, spec.design * beta, sigma1, sigma2, w);
}

RegressionFit fit_modal_ecm(const RegressionSpec& spec, const EcmConfig& cfg) {
    spec.validate();
    cfg.validate();
    const Eigen::Index n = spec.design.rows();
    const Eigen::Index p = spec.design.cols();
    const detail::MultiStartResult ms = detail::multistart(spec.response, spec.design, cfg);
    const detail::EcmState& s = ms.best.end;

    RegressionFit f;
    f.method = RegressionMethod::ecm;
    f.beta = s.beta;
    f.sigma1 = s.sigma1;
    f.sigma2 = s.sigma2;
    f.w = s.w;
    f.names = spec.coef_names;
    f.names.insert(f.names.end(), {"sigma1", "sigma2", "w"});
    f.estimates.resize(p + 3);
    f.estimates << s.beta, s.sigma1, s.sigma2, s.w;
    f.loglik = ms.best.loglik;
    f.aic = aic(f.loglik, static_cast<int>(p + 3));
    f.bic = bic(f.loglik, static_cast<int>(p + 3), static_cast<std::size_t>(n));
    f.converged = ms.best.converged;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        f.vcov = detail::sandwich(spec.response, spec.design, s);
        f.std_errors = f.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
    } catch (const SandwichError& e) {
        f.vcov = Eigen::MatrixXd::Constant(p + 3, p + 3, nan);
        f.std_errors = Eigen::VectorXd::Constant(p + 3, nan);
        f.vcov_error = e.what();
    }
    for (Eigen::Index k = 0; k < p + 3; ++k) {
        const double est = f.estimates[k];
        const double se = f.std_errors[k];
        f.intervals.push_back({est - kZ975 * se, est + kZ975 * se});
    }
    for (Eigen::Index k = p; k < p + 2; ++k) {
        const double rel = f.std_errors[k] / f.estimates[k];
        f.log_scale_intervals.push_back({f.estimates[k] * std::exp(-kZ975 * rel), f.estimates[k] * std::exp(kZ975 * rel)});
    }
    return f;
}

BayesRegression fit_modal_bayes(const RegressionSpec& spec, const PriorSpec& prior, const McmcConfig& cfg) {
    spec.validate();
    const Eigen::Index n = spec.design.rows();
    const Eigen::Index p = spec.design.cols();
    BayesRegression out;
    out.draws = detail::run_mwg(spec.response, spec.design, spec.coef_names, prior, cfg);

    RegressionFit& f = out.fit;
    f.method = RegressionMethod::bayes;
    f.names = out.draws.names;
    f.estimates.resize(p + 3);
    f.std_errors.resize(p + 3);
    for (Eigen::Index k = 0; k < p + 3; ++k) {
        const ParamSummary& s = out.draws.summaries[static_cast<std::size_t>(k)];
        f.estimates[k] = s.median;
        f.std_errors[k] = s.sd;
        f.intervals.push_back({s.q025, s.q975});
        if (s.sd > 0.5 * std::abs(s.median)) f.weakly_identified.push_back(s.name);
    }
    f.beta = f.estimates.head(p);
    f.sigma1 = f.estimates[p];
    f.sigma2 = f.estimates[p + 1];
    f.w = f.estimates[p + 2];
    const Eigen::MatrixXd centered = out.draws.draws.rowwise() - out.draws.draws.colwise().mean();
    f.vcov = centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(out.draws.draws.rows() - 1));
    f.loglik = modal_loglik(spec, f.beta, f.sigma1, f.sigma2, f.w);
    f.aic = aic(f.loglik, static_cast<int>(p + 3));
    f.bic = bic(f.loglik, static_cast<int>(p + 3), static_cast<std::size_t>(n));
    f.converged = out.draws.max_rhat() < 1.05;
    return out;
}

RegressionFit fit_mean_normal(const RegressionSpec& spec) {
    spec.validate();
    const Eigen::Index n = spec.design.rows();
    const Eigen::Index p = spec.design.cols();
    const Eigen::MatrixXd& X = spec.design;
    const Eigen::VectorXd& y = spec.response;

    RegressionFit f;
    f.method = RegressionMethod::ols;
    f.beta = X.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd resid = y - X * f.beta;
    const double rss = resid.squaredNorm();
    const double df = static_cast<double>(n - p);
    const double s2 = rss / df;
    const Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();

    f.sigma1 = std::sqrt(rss / static_cast<double>(n));
    f.names = spec.coef_names;
    f.names.push_back("sigma");
    f.estimates.resize(p + 1);
    f.estimates << f.beta, f.sigma1;
    f.vcov = Eigen::MatrixXd::Zero(p + 1, p + 1);
    f.vcov.topLeftCorner(p, p) = s2 * xtx_inv;
    // Asymptotic variance of the MLE of sigma.
    f.vcov(p, p) = f.sigma1 * f.sigma1 / (2.0 * static_cast<double>(n));
    f.std_errors = f.vcov.diagonal().cwiseSqrt();

    const double tq = boost::math::quantile(boost::math::students_t_distribution<double>(df), 0.975);
    for (Eigen::Index k = 0; k < p; ++k)
        f.intervals.push_back({f.beta[k] - tq * f.std_errors[k], f.beta[k] + tq * f.std_errors[k]});
    f.intervals.push_back({f.sigma1 - kZ975 * f.std_errors[p], f.sigma1 + kZ975 * f.std_errors[p]});

    const double nn = static_cast<double>(n);
    f.loglik = -0.5 * nn * (std::log(2.0 * constants::pi * rss / nn) + 1.0);
    f.aic = aic(f.loglik, static_cast<int>(p + 1));
    f.bic = bic(f.loglik, static_cast<int>(p + 1), static_cast<std::size_t>(n));
    return f;
}

}  // namespace fg
