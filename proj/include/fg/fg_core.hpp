#ifndef FG_FG_CORE_HPP
#define FG_FG_CORE_HPP

// Flexible Gumbel (FG) distribution: a w : (1 - w) mixture of a Gumbel
// distribution for the maximum and a Gumbel distribution for the minimum
// that share the mode theta.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fg {

/// Raised for any argument outside a function's domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace constants {
inline constexpr double euler_gamma = 0.57721566490153286061;
inline constexpr double apery = 1.20205690315959428540;  // zeta(3)
inline constexpr double pi = 3.14159265358979323846;
}  // namespace constants

/// Parameters (theta, sigma1, sigma2, w) of an FG distribution.
///
/// theta is the mode, sigma1 the scale of the Gumbel-max component,
/// sigma2 the scale of the Gumbel-min component and w the weight on the
/// Gumbel-max component. The constructor validates; a constructed
/// FgParams is always valid.
class FgParams {
public:
    FgParams(double theta, double sigma1, double sigma2, double w);

    double theta() const { return theta_; }
    double sigma1() const { return sigma1_; }
    double sigma2() const { return sigma2_; }
    double w() const { return w_; }

    /// Parameters of the distribution of -Y.
    FgParams reflected() const { return {-theta_, sigma2_, sigma1_, 1.0 - w_}; }

    bool operator==(const FgParams&) const = default;

private:
    double theta_;
    double sigma1_;
    double sigma2_;
    double w_;
};

std::string to_string(const FgParams& p);

/// An ordered set of observations with a free-form provenance label.
struct DataSample {
    std::vector<double> values;
    std::string provenance;

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
};

struct MomentSummary {
    double mean;
    double variance;
    double third_central;
    double fourth_central;
    double skewness;
    double kurtosis;  // non-excess; 5.4 for a single Gumbel component
};

// Single-component Gumbel densities and distribution functions.
double gumbel_max_logpdf(double x, double theta, double sigma);
double gumbel_max_pdf(double x, double theta, double sigma);
double gumbel_max_cdf(double x, double theta, double sigma);
double gumbel_min_logpdf(double x, double theta, double sigma);
double gumbel_min_pdf(double x, double theta, double sigma);
double gumbel_min_cdf(double x, double theta, double sigma);

double fg_logpdf(double x, const FgParams& p);
double fg_pdf(double x, const FgParams& p);
double fg_cdf(double x, const FgParams& p);

/// Sum of fg_logpdf over a sample.
double fg_loglik(const std::vector<double>& y, const FgParams& p);

/// Inverse CDF; q must lie in the open interval (0, 1).
double fg_quantile(double q, const FgParams& p);
double fg_median(const FgParams& p);

MomentSummary fg_moments(const FgParams& p);

/// One FG draw by composition: Bernoulli(w) selects the component, then
/// the component is sampled by inversion.
template <class Rng>
double fg_draw(const FgParams& p, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double pick = unif(rng);
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    const double g = std::log(-std::log(u));
    return pick < p.w() ? p.theta() - p.sigma1() * g : p.theta() + p.sigma2() * g;
}

/// n draws, deterministic in seed.
DataSample fg_sample(const FgParams& p, std::size_t n, std::uint64_t seed);

}  // namespace fg

#endif
