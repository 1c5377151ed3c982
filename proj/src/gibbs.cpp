#include "fg/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecm_engine.hpp"
#include "mwg_engine.hpp"

namespace fg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

FgParams with_scale(const FgParams& p, int j, double sigma) {
    return j == 1 ? FgParams(p.theta(), sigma, p.sigma2(), p.w()) : FgParams(p.theta(), p.sigma1(), sigma, p.w());
}

MhOutcome metropolis(double current, double proposal, double log_ratio, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
    const bool acc = std::log(unif(rng)) < log_ratio;
    return {acc ? proposal : current, acc, prob};
}

}  // namespace

void PriorSpec::validate() const {
    if (!(location_variance > 0.0)) throw DomainError("prior location variance must be positive");
    if (!(scale_shape > 0.0) || !(scale_scale > 0.0))
        throw DomainError("inverse-gamma hyperparameters must be positive");
}

double PriorSpec::log_location(double v) const {
    const double d = v - location_mean;
    return -0.5 * d * d / location_variance - 0.5 * std::log(2.0 * constants::pi * location_variance);
}

double PriorSpec::log_scale(double sigma) const {
    if (!(sigma > 0.0)) return kNegInf;
    return scale_shape * std::log(scale_scale) - std::lgamma(scale_shape) - (scale_shape + 1.0) * std::log(sigma) -
           scale_scale / sigma;
}

void McmcConfig::validate() const {
    if (n_iter < 1) throw DomainError("n_iter must be positive");
    if (burn_in < 0 || burn_in >= n_iter) throw DomainError("burn_in must lie in [0, n_iter)");
    if (thin < 1) throw DomainError("thin must be at least 1");
    if (n_chains < 1) throw DomainError("n_chains must be at least 1");
    if (tau0 < 0.0 || tau1 < 0.0 || tau2 < 0.0) throw DomainError("proposal sds must be positive (0 = automatic)");
    if (!(target_accept > 0.0 && target_accept < 1.0)) throw DomainError("target_accept must lie in (0, 1)");
    if ((n_iter - burn_in) / thin < 1) throw DomainError("no draws retained after burn-in and thinning");
}

Eigen::Index PosteriorDraws::column(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw DomainError("no posterior column named " + name);
    return static_cast<Eigen::Index>(it - names.begin());
}

std::vector<std::vector<double>> PosteriorDraws::chains_of(Eigen::Index col) const {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n_chains));
    for (int c = 0; c < n_chains; ++c) {
        const auto seg = draws.col(col).segment(static_cast<Eigen::Index>(c) * draws_per_chain, draws_per_chain);
        out[static_cast<std::size_t>(c)].assign(seg.data(), seg.data() + seg.size());
    }
    return out;
}

double PosteriorDraws::max_rhat() const {
    double m = 0.0;
    for (double r : rhat) m = std::max(m, r);
    return m;
}

std::vector<int> gibbs_z_update(const std::vector<double>& y, const FgParams& p, Rng& rng) {
    std::vector<int> z(y.size());
    if (y.empty()) return z;
    const std::vector<double> T = e_step(y, p);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < y.size(); ++i) z[i] = unif(rng) < T[i] ? 1 : 0;
    return z;
}

double gibbs_w_update(const std::vector<int>& z, Rng& rng) {
    int s = 0;
    for (int v : z) {
        if (v != 0 && v != 1) throw DomainError("latent labels must be 0 or 1");
        s += v;
    }
    std::gamma_distribution<double> ga(1.0 + s, 1.0);
    std::gamma_distribution<double> gb(static_cast<double>(z.size()) + 1.0 - s, 1.0);
    const double a = ga(rng);
    const double b = gb(rng);
    return a / (a + b);
}

double log_accept_location(const std::vector<double>& y, const FgParams& current, double theta_new,
                           const PriorSpec& prior) {
    const FgParams prop(theta_new, current.sigma1(), current.sigma2(), current.w());
    const double ratio = fg_loglik(y, prop) - fg_loglik(y, current) + prior.log_location(theta_new) -
                         prior.log_location(current.theta());
    return std::isnan(ratio) ? kNegInf : ratio;
}

double log_accept_scale(const std::vector<double>& y, const FgParams& current, int j, double sigma_new,
                        const PriorSpec& prior) {
    if (j != 1 && j != 2) throw DomainError("scale index must be 1 or 2");
    if (!(sigma_new > 0.0)) return kNegInf;
    const double old = j == 1 ? current.sigma1() : current.sigma2();
    const double ratio = fg_loglik(y, with_scale(current, j, sigma_new)) - fg_loglik(y, current) +
                         prior.log_scale(sigma_new) - prior.log_scale(old);
    return std::isnan(ratio) ? kNegInf : ratio;
}

MhOutcome mh_location_update(const std::vector<double>& y, const FgParams& current, double tau0,
                             const PriorSpec& prior, Rng& rng) {
    if (!(tau0 > 0.0)) throw DomainError("tau0 must be positive");
    std::normal_distribution<double> step(0.0, tau0);
    const double prop = current.theta() + step(rng);
    return metropolis(current.theta(), prop, log_accept_location(y, current, prop, prior), rng);
}

MhOutcome mh_scale_update(const std::vector<double>& y, const FgParams& current, int j, double tau_j,
                          const PriorSpec& prior, Rng& rng) {
    if (!(tau_j > 0.0)) throw DomainError("scale proposal sd must be positive");
    std::normal_distribution<double> step(0.0, tau_j);
    const double old = j == 1 ? current.sigma1() : current.sigma2();
    const double prop = old + step(rng);
    return metropolis(old, prop, log_accept_scale(y, current, j, prop, prior), rng);
}

PosteriorDraws run_mcmc(const DataSample& y, const PriorSpec& prior, const McmcConfig& cfg) {
    const Eigen::VectorXd yy =
        Eigen::Map<const Eigen::VectorXd>(y.values.data(), static_cast<Eigen::Index>(y.values.size()));
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(yy.size(), 1);
    return detail::run_mwg(yy, X, {"theta"}, prior, cfg);
}

FgParams posterior_median_params(const PosteriorDraws& d) {
    auto med = [&](const char* name) { return d.summaries[static_cast<std::size_t>(d.column(name))].median; };
    return {med("theta"), med("sigma1"), med("sigma2"), med("w")};
}

}  // namespace fg
