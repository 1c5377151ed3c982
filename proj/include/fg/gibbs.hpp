#ifndef FG_GIBBS_HPP
#define FG_GIBBS_HPP

// Data-augmented Metropolis-within-Gibbs sampler for the FG distribution.
// One scan: latent labels z | rest, w | z (conjugate Beta), then random-walk
// Metropolis moves on the mode and on each scale. The mode and scale moves
// target the FG likelihood with z integrated out.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fg/fg_core.hpp"
#include "fg/rng.hpp"

namespace fg {

/// Independent priors: location ~ N(mean, variance), each scale ~
/// inverse-gamma(shape, scale), w ~ Uniform(0, 1).
struct PriorSpec {
    double location_mean = 0.0;
    double location_variance = 1e4;
    double scale_shape = 1.0;
    double scale_scale = 1.0;

    void validate() const;
    double log_location(double v) const;
    /// -inf for sigma <= 0.
    double log_scale(double sigma) const;
};

struct McmcConfig {
    int n_iter = 20000;  // total iterations per chain, burn-in included
    int burn_in = 5000;
    int thin = 1;
    int n_chains = 4;
    // Random-walk proposal standard deviations. Zero selects a data-based
    // default of 2.4 * (rough posterior sd); adaptation then refines it.
    double tau0 = 0.0;
    double tau1 = 0.0;
    double tau2 = 0.0;
    bool adapt = true;  // Robbins-Monro on log tau, burn-in only
    double target_accept = 0.23;
    std::uint64_t seed = 20240101;

    void validate() const;
};

class McmcError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ParamSummary {
    std::string name;
    double mean;
    double se_mean;
    double sd;
    double median;
    double q025;
    double q05;
    double q25;
    double q75;
    double q95;
    double q975;
    double rhat;
    double ess_bulk;
};

struct PosteriorDraws {
    std::vector<std::string> names;
    /// Retained draws, chain after chain; one column per parameter.
    Eigen::MatrixXd draws;
    int n_chains = 0;
    int draws_per_chain = 0;
    /// Post-burn-in acceptance rate of each Metropolis move (location
    /// coefficients, then sigma1, sigma2).
    std::vector<double> accept_rates;
    /// Proposal sds in force after burn-in, same order as accept_rates.
    std::vector<double> proposal_sd;
    std::vector<double> rhat;
    std::vector<double> ess_bulk;
    std::vector<ParamSummary> summaries;

    Eigen::Index column(const std::string& name) const;
    /// Draws of one parameter split by chain.
    std::vector<std::vector<double>> chains_of(Eigen::Index col) const;
    double max_rhat() const;
};

/// Step 1: z_i ~ Bernoulli(T_i), T_i the E-step responsibility.
std::vector<int> gibbs_z_update(const std::vector<double>& y, const FgParams& p, Rng& rng);

/// Step 2: w ~ Beta(1 + sum z, n + 1 - sum z).
double gibbs_w_update(const std::vector<int>& z, Rng& rng);

/// Log Metropolis ratio for moving the mode to theta_new.
double log_accept_location(const std::vector<double>& y, const FgParams& current, double theta_new,
                           const PriorSpec& prior);

/// Log Metropolis ratio for moving sigma_j (j = 1 or 2) to sigma_new;
/// -inf when sigma_new <= 0.
double log_accept_scale(const std::vector<double>& y, const FgParams& current, int j, double sigma_new,
                        const PriorSpec& prior);

struct MhOutcome {
    double value;
    bool accepted;
    double accept_prob;
};

/// Step 3: theta proposal from N(theta, tau0^2), accepted with probability
/// min(1, ratio).
MhOutcome mh_location_update(const std::vector<double>& y, const FgParams& current, double tau0,
                             const PriorSpec& prior, Rng& rng);

/// Step 4 for component j: sigma_j proposal from N(sigma_j, tau_j^2).
MhOutcome mh_scale_update(const std::vector<double>& y, const FgParams& current, int j, double tau_j,
                          const PriorSpec& prior, Rng& rng);

/// Runs cfg.n_chains chains and computes summaries and diagnostics. Columns
/// are theta, sigma1, sigma2, w. An empty sample gives prior draws.
PosteriorDraws run_mcmc(const DataSample& y, const PriorSpec& prior, const McmcConfig& cfg);

/// Posterior-median parameters of a run_mcmc result.
FgParams posterior_median_params(const PosteriorDraws& d);

}  // namespace fg

#endif
