#ifndef FG_SRC_MWG_ENGINE_HPP
#define FG_SRC_MWG_ENGINE_HPP

// Metropolis-within-Gibbs over (beta, sigma1, sigma2, w) with mode
// theta_i = X_i . beta. The distribution sampler is the one-column case.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fg/gibbs.hpp"

namespace fg::detail {

struct MwgStart {
    Eigen::VectorXd beta;
    double sigma1;
    double sigma2;
    double w;
};

/// Starting points and initial proposal sds (beta..., sigma1, sigma2)
/// derived from a multi-start ECM fit, or from the prior when the sample is
/// too small to fit.
struct MwgSetup {
    std::vector<MwgStart> starts;
    Eigen::VectorXd tau;
};

MwgSetup mwg_setup(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const PriorSpec& prior,
                   const McmcConfig& cfg);

PosteriorDraws run_mwg(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, std::vector<std::string> beta_names,
                       const PriorSpec& prior, const McmcConfig& cfg);

/// Fills summaries, rhat and ess_bulk from draws.
void summarize(PosteriorDraws& d);

}  // namespace fg::detail

#endif
