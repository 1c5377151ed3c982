#ifndef FG_BASELINES_HPP
#define FG_BASELINES_HPP

// Competing models and goodness-of-fit tools: a two-component normal
// mixture fitted by EM, empirical Kullback-Leibler divergence, a parametric
// bootstrap Kolmogorov-Smirnov test, and the reference generators used in
// the misspecification experiments.

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "fg/ecm.hpp"
#include "fg/fg_core.hpp"
#include "fg/rng.hpp"

namespace fg {

struct NormalMixParams {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double s1 = 1.0;
    double s2 = 1.0;
    double w = 0.5;  // weight of the (mu1, s1) component

    void validate() const;
    /// Swaps labels so that (mu1, s1) <= (mu2, s2) lexicographically.
    NormalMixParams canonical() const;
};

double normal_mix_logpdf(double x, const NormalMixParams& p);
double normal_mix_cdf(double x, const NormalMixParams& p);
double normal_mix_loglik(const std::vector<double>& y, const NormalMixParams& p);
double normal_mix_draw(const NormalMixParams& p, Rng& rng);

struct NormalMixFit {
    NormalMixParams params;
    bool converged = false;
    bool degenerate = false;
    int n_iter = 0;
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    std::vector<double> loglik_trace;
};

/// EM with random starting values in the style of mixtools::normalmixEM.
/// Stops when the log-likelihood gain falls below cfg.tol (absolute) and
/// reports non-convergence after cfg.max_iter iterations or when a
/// component sd collapses below 1e-6 times the sample sd.
NormalMixFit fit_normal_mixture_em(const DataSample& y, const EcmConfig& cfg);

using LogDensity = std::function<double(double)>;

struct KlResult {
    double d_kl = 0.0;
    std::size_t n_eval = 0;
    std::string model_tag;
    std::string diagnostic;  // set when the fitted density vanishes somewhere
};

KlResult empirical_kl(const LogDensity& true_logpdf, const LogDensity& fitted_logpdf,
                      const std::vector<double>& oracle_sample, const std::string& model_tag = "");

using FittedModel = std::variant<FgParams, NormalMixParams>;

double model_cdf(double x, const FittedModel& m);
double model_logpdf(double x, const FittedModel& m);

/// sup |F_n - F| over the sample.
double ks_statistic(std::vector<double> y, const std::function<double(double)>& cdf);

struct KsConfig {
    int n_boot = 999;
    bool refit = true;
    std::uint64_t seed = 20240101;
    EcmConfig fit;

    void validate() const;
};

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int n_boot = 0;
    int n_dropped = 0;
    std::string warning;
};

KsResult ks_test_mc(const DataSample& y, const FittedModel& fitted, const KsConfig& cfg);

struct ReferenceDensity {
    std::string tag;
    LogDensity logpdf;
    std::function<double(Rng&)> draw;

    std::vector<double> sample(std::size_t n, std::uint64_t seed) const;
};

/// Accepts "laplace(0,2)", "gumbelmax_mix(0;2,6;0.5)", "student_t(5)" or the
/// scenario names E2, E3, E4.
ReferenceDensity reference_density(const std::string& tag);

}  // namespace fg

#endif
