#ifndef FG_ECM_HPP
#define FG_ECM_HPP

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fg/fg_core.hpp"

namespace fg {

struct EcmConfig {
    int max_iter = 1000;
    double tol = 1e-8;  // relative change in observed-data log-likelihood
    int n_starts = 10;
    double inner_tol = 1e-10;
    std::uint64_t seed = 20240101;

    void validate() const;
};

/// Thrown when the sandwich variance cannot be formed at an estimate.
class SandwichError : public std::runtime_error {
public:
    SandwichError(const std::string& what, double condition_number)
        : std::runtime_error(what), condition_number_(condition_number) {}
    double condition_number() const { return condition_number_; }

private:
    double condition_number_;
};

/// End point of a single ECM chain, kept for multi-start reporting and to
/// seed MCMC chains.
struct StartOutcome {
    FgParams start;
    FgParams end;
    double loglik;
    bool converged;
};

struct FitResult {
    FgParams params{0.0, 1.0, 1.0, 0.5};
    /// Sandwich covariance in (theta, sigma1, sigma2, w) order. NaN-filled
    /// when vcov_ok is false; vcov_error says why.
    Eigen::Matrix4d vcov = Eigen::Matrix4d::Constant(std::numeric_limits<double>::quiet_NaN());
    bool vcov_ok = false;
    std::string vcov_error;
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    bool converged = false;
    int n_iter = 0;
    bool scale_clamped = false;
    std::vector<double> loglik_trace;
    std::vector<double> responsibilities;
    std::vector<StartOutcome> starts;

    /// Standard errors from the diagonal of vcov.
    Eigen::Vector4d std_errors() const { return vcov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Posterior component probabilities T_i of the Gumbel-max component.
std::vector<double> e_step(const std::vector<double>& y, const FgParams& current);

/// Expected complete-data log-likelihood Q(candidate | T).
double q_function(const std::vector<double>& y, const std::vector<double>& T, const FgParams& candidate);

struct CmStepResult {
    FgParams params;
    bool scale_clamped;
};

/// One conditional-maximization sweep: w, then theta, then sigma1, then
/// sigma2, each maximizing Q with the others held at their latest values.
CmStepResult cm_step(const std::vector<double>& y, const std::vector<double>& T, const FgParams& current,
                     double inner_tol = 1e-10);

/// Multi-start ECM maximum-likelihood fit with sandwich covariance.
/// Requires at least 5 finite observations.
FitResult fit_ecm(const DataSample& y, const EcmConfig& cfg);

/// Sandwich covariance A^-1 B A^-T / n at an interior estimate, derivatives
/// by central differences.
Eigen::Matrix4d sandwich_vcov(const std::vector<double>& y, const FgParams& mle);

double aic(double loglik, int k);
double bic(double loglik, int k, std::size_t n);

}  // namespace fg

#endif
