#include "fg/ecm.hpp"

#include <cmath>

#include "ecm_engine.hpp"

namespace fg {

namespace {

Eigen::VectorXd as_vector(const std::vector<double>& y) {
    return Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
}

Eigen::MatrixXd intercept_design(std::size_t n) {
    return Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
}

detail::EcmState to_state(const FgParams& p) {
    return {Eigen::VectorXd::Constant(1, p.theta()), p.sigma1(), p.sigma2(), p.w()};
}

FgParams to_params(const detail::EcmState& s) {
    return {s.beta[0], s.sigma1, s.sigma2, s.w};
}

}  // namespace

void EcmConfig::validate() const {
    if (max_iter < 1) throw DomainError("max_iter must be at least 1");
    if (!(tol > 0.0)) throw DomainError("tol must be positive");
    if (n_starts < 1) throw DomainError("n_starts must be at least 1");
    if (!(inner_tol > 0.0)) throw DomainError("inner_tol must be positive");
}

double aic(double loglik, int k) {
    return -2.0 * loglik + 2.0 * k;
}

double bic(double loglik, int k, std::size_t n) {
    return -2.0 * loglik + k * std::log(static_cast<double>(n));
}

std::vector<double> e_step(const std::vector<double>& y, const FgParams& current) {
    if (y.empty()) throw DomainError("e_step needs at least one observation");
    const Eigen::VectorXd yy = as_vector(y);
    const Eigen::VectorXd theta = Eigen::VectorXd::Constant(yy.size(), current.theta());
    std::vector<double> T;
    detail::responsibilities(yy, theta, current.sigma1(), current.sigma2(), current.w(), T);
    return T;
}

double q_function(const std::vector<double>& y, const std::vector<double>& T, const FgParams& candidate) {
    if (T.size() != y.size()) throw DomainError("responsibility vector length differs from sample size");
    const Eigen::VectorXd yy = as_vector(y);
    const Eigen::VectorXd theta = Eigen::VectorXd::Constant(yy.size(), candidate.theta());
    return detail::q_value(yy, theta, T, candidate.sigma1(), candidate.sigma2(), candidate.w());
}

CmStepResult cm_step(const std::vector<double>& y, const std::vector<double>& T, const FgParams& current,
                     double inner_tol) {
    if (T.size() != y.size()) throw DomainError("responsibility vector length differs from sample size");
    const Eigen::VectorXd yy = as_vector(y);
    detail::EcmState s = to_state(current);
    const bool clamped = detail::cm_sweep(yy, intercept_design(y.size()), T, s, inner_tol);
    return {to_params(s), clamped};
}

Eigen::Matrix4d sandwich_vcov(const std::vector<double>& y, const FgParams& mle) {
    return detail::sandwich(as_vector(y), intercept_design(y.size()), to_state(mle));
}

FitResult fit_ecm(const DataSample& sample, const EcmConfig& cfg) {
    cfg.validate();
    const auto& y = sample.values;
    if (y.size() < 5) throw DomainError("ECM needs at least 5 observations, got " + std::to_string(y.size()));
    for (double v : y)
        if (!std::isfinite(v)) throw DomainError("ECM input contains a non-finite observation");

    const Eigen::VectorXd yy = as_vector(y);
    const Eigen::MatrixXd X = intercept_design(y.size());
    const detail::MultiStartResult ms = detail::multistart(yy, X, cfg);

    FitResult r;
    r.params = to_params(ms.best.end);
    r.loglik = ms.best.loglik;
    r.aic = aic(r.loglik, 4);
    r.bic = bic(r.loglik, 4, y.size());
    r.converged = ms.best.converged;
    r.n_iter = ms.best.n_iter;
    r.scale_clamped = ms.best.scale_clamped;
    r.loglik_trace = ms.best.trace;
    r.responsibilities = ms.best.last_T.empty() ? e_step(y, r.params) : ms.best.last_T;
    for (const auto& c : ms.chains) {
        if (!std::isfinite(c.loglik)) continue;
        r.starts.push_back({to_params(c.start), to_params(c.end), c.loglik, c.converged});
    }
    try {
        r.vcov = sandwich_vcov(y, r.params);
        r.vcov_ok = true;
    } catch (const SandwichError& e) {
        r.vcov_error = e.what();
    }
    return r;
}

}  // namespace fg
