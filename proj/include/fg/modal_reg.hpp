#ifndef FG_MODAL_REG_HPP
#define FG_MODAL_REG_HPP

// Modal linear regression with FG errors: Y_i ~ FG(x_i' beta, sigma1,
// sigma2, w), so x_i' beta is the conditional mode. Ordinary least squares
// is provided as the mean-regression baseline.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fg/ecm.hpp"
#include "fg/gibbs.hpp"

namespace fg {

struct RegressionSpec {
    Eigen::MatrixXd design;  // n x p, first column all ones
    Eigen::VectorXd response;
    std::vector<std::string> coef_names;

    /// Throws DomainError on a malformed or rank-deficient design; the
    /// message names the collinear columns.
    void validate() const;

    /// Intercept plus the given covariate columns.
    static RegressionSpec from_columns(const std::vector<double>& response,
                                       const std::vector<std::vector<double>>& covariates,
                                       const std::vector<std::string>& covariate_names);
};

enum class RegressionMethod { ecm, bayes, ols };

std::string to_string(RegressionMethod m);

struct Interval {
    double lower;
    double upper;
};

struct RegressionFit {
    RegressionMethod method = RegressionMethod::ecm;
    Eigen::VectorXd beta;
    double sigma1 = 0.0;  // OLS: residual sd (MLE)
    double sigma2 = 0.0;
    double w = 0.0;
    /// Every parameter in reporting order: coefficients, then sigma1,
    /// sigma2, w (OLS: coefficients, then sigma).
    std::vector<std::string> names;
    Eigen::VectorXd estimates;
    Eigen::VectorXd std_errors;
    Eigen::MatrixXd vcov;
    std::vector<Interval> intervals;
    /// Wald intervals built on log(sigma), ECM only.
    std::vector<Interval> log_scale_intervals;
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    bool converged = true;
    std::string vcov_error;
    /// Bayes: parameters whose posterior sd exceeds half the median.
    std::vector<std::string> weakly_identified;
};

RegressionFit fit_modal_ecm(const RegressionSpec& spec, const EcmConfig& cfg);

struct BayesRegression {
    RegressionFit fit;
    PosteriorDraws draws;
};

BayesRegression fit_modal_bayes(const RegressionSpec& spec, const PriorSpec& prior, const McmcConfig& cfg);

RegressionFit fit_mean_normal(const RegressionSpec& spec);

/// Log-likelihood of FG modal regression parameters.
double modal_loglik(const RegressionSpec& spec, const Eigen::VectorXd& beta, double sigma1, double sigma2,
                    double w);

}  // namespace fg

#endif
