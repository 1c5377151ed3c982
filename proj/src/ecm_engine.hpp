#ifndef FG_SRC_ECM_ENGINE_HPP
#define FG_SRC_ECM_ENGINE_HPP

// ECM machinery shared by the distribution fit and modal regression. The
// mode of observation i is theta_i = X_i . beta; the distribution fit is the
// special case of a single all-ones column.

#include <vector>

#include <Eigen/Dense>

#include "fg/ecm.hpp"

namespace fg::detail {

inline constexpr double kMinScale = 1e-8;

struct EcmState {
    Eigen::VectorXd beta;
    double sigma1;
    double sigma2;
    double w;
};

struct ChainResult {
    EcmState start;
    EcmState end;
    double loglik = 0.0;
    bool converged = false;
    int n_iter = 0;
    bool scale_clamped = false;
    std::vector<double> trace;
    std::vector<double> last_T;  // responsibilities behind the final CM sweep
};

struct MultiStartResult {
    ChainResult best;
    std::vector<ChainResult> chains;
};

Eigen::VectorXd locations(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta);

double observed_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& theta, double sigma1, double sigma2,
                       double w);

void responsibilities(const Eigen::VectorXd& y, const Eigen::VectorXd& theta, double sigma1, double sigma2,
                      double w, std::vector<double>& T);

double q_value(const Eigen::VectorXd& y, const Eigen::VectorXd& theta, const std::vector<double>& T,
               double sigma1, double sigma2, double w);

/// One CM sweep (w, beta, sigma1, sigma2) in place. Returns true when a
/// scale hit its lower bound.
bool cm_sweep(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const std::vector<double>& T, EcmState& s,
              double inner_tol);

ChainResult run_chain(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const EcmState& start,
                      const EcmConfig& cfg);

/// Continues CM sweeps from an already converged chain until the largest
/// relative parameter change drops below 1e-10 or max_iter more sweeps.
void polish(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, ChainResult& c, const EcmConfig& cfg);

/// Dispersed starting points: a grid over residual quantiles and weights,
/// jittered extras, then the two boundary weights.
std::vector<EcmState> initial_states(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const EcmConfig& cfg);

MultiStartResult multistart(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const EcmConfig& cfg);

/// Sandwich covariance over (beta..., sigma1, sigma2, w). Throws
/// SandwichError at the boundary or for a singular information matrix.
Eigen::MatrixXd sandwich(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const EcmState& s);

/// Sample quantile, linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Midpoint of the shortest interval holding half the sample.
double shorth_mode(std::vector<double> v);

}  // namespace fg::detail

#endif
