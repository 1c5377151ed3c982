#include "fg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include "fg/parallel.hpp"

namespace fg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_logpdf(double x, double mu, double s) {
    const double z = (x - mu) / s;
    return -0.5 * z * z - std::log(s) - kLogSqrt2Pi;
}

double log_sum_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

double sample_sd(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0));
}

double mean_of(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
    return std::accumulate(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi), 0.0) /
           static_cast<double>(hi - lo);
}

double sd_of(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
    return sample_sd(std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(lo),
                                         x.begin() + static_cast<std::ptrdiff_t>(hi)));
}

NormalMixParams random_start(const std::vector<double>& y, Rng& rng) {
    std::vector<double> x = y;
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    // Lower and upper halves sharing the middle order statistic.
    const std::size_t hi1 = static_cast<std::size_t>(std::ceil(static_cast<double>(n) / 2.0));
    const std::size_t lo2 = std::max<std::size_t>(1, n / 2) - 1;
    const double sd_hyp[2] = {sd_of(x, 0, hi1), sd_of(x, lo2, n)};
    const double mu_hyp[2] = {mean_of(x, 0, hi1), mean_of(x, lo2, n)};

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double lam[2] = {unif(rng), unif(rng)};
    double s[2];
    double mu[2];
    for (int j = 0; j < 2; ++j) {
        std::exponential_distribution<double> ex(std::max(sd_hyp[j], 1e-12));
        s[j] = 1.0 / ex(rng);
    }
    for (int j = 0; j < 2; ++j) {
        std::normal_distribution<double> nd(mu_hyp[j], s[j]);
        mu[j] = nd(rng);
    }
    NormalMixParams p;
    p.mu1 = mu[0];
    p.mu2 = mu[1];
    p.s1 = s[0];
    p.s2 = s[1];
    p.w = lam[0] / (lam[0] + lam[1]);
    return p;
}

double fg_refit_statistic(const std::vector<double>& sample, const EcmConfig& cfg, bool& ok) {
    const FitResult fit = fit_ecm(DataSample{sample, "bootstrap"}, cfg);
    ok = fit.converged;
    return ks_statistic(sample, [&](double x) { return fg_cdf(x, fit.params); });
}

double nm_refit_statistic(const std::vector<double>& sample, const EcmConfig& cfg, bool& ok) {
    const NormalMixFit fit = fit_normal_mixture_em(DataSample{sample, "bootstrap"}, cfg);
    ok = fit.converged;
    return ks_statistic(sample, [&](double x) { return normal_mix_cdf(x, fit.params); });
}

}  // namespace

void NormalMixParams::validate() const {
    if (!std::isfinite(mu1) || !std::isfinite(mu2)) throw DomainError("normal mixture means must be finite");
    if (!(s1 > 0.0) || !(s2 > 0.0) || !std::isfinite(s1) || !std::isfinite(s2))
        throw DomainError("normal mixture sds must be positive and finite");
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("normal mixture weight must lie in [0, 1]");
}

NormalMixParams NormalMixParams::canonical() const {
    if (std::tie(mu1, s1) <= std::tie(mu2, s2)) return *this;
    return {mu2, mu1, s2, s1, 1.0 - w};
}

double normal_mix_logpdf(double x, const NormalMixParams& p) {
    const double a = p.w > 0.0 ? std::log(p.w) + normal_logpdf(x, p.mu1, p.s1) : -kInf;
    const double b = p.w < 1.0 ? std::log1p(-p.w) + normal_logpdf(x, p.mu2, p.s2) : -kInf;
    return log_sum_exp(a, b);
}

double normal_mix_cdf(double x, const NormalMixParams& p) {
    auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    return p.w * phi((x - p.mu1) / p.s1) + (1.0 - p.w) * phi((x - p.mu2) / p.s2);
}

double normal_mix_loglik(const std::vector<double>& y, const NormalMixParams& p) {
    double ll = 0.0;
    for (double v : y) ll += normal_mix_logpdf(v, p);
    return ll;
}

double normal_mix_draw(const NormalMixParams& p, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1.0);
    const bool first = unif(rng) < p.w;
    const double z = nd(rng);
    return first ? p.mu1 + p.s1 * z : p.mu2 + p.s2 * z;
}

NormalMixFit fit_normal_mixture_em(const DataSample& y, const EcmConfig& cfg) {
    cfg.validate();
    const std::vector<double>& x = y.values;
    const std::size_t n = x.size();
    if (n < 5) throw DomainError("normal mixture EM needs at least 5 observations, got " + std::to_string(n));
    for (double v : x)
        if (!std::isfinite(v)) throw DomainError("normal mixture EM requires finite observations");
    const double floor_sd = 1e-6 * sample_sd(x);

    Rng rng(derive_seed(cfg.seed, {hash_tag("normal-mixture-init")}));
    NormalMixParams p = random_start(x, rng);

    NormalMixFit out;
    std::vector<double> post(n);
    double ll = normal_mix_loglik(x, p);
    out.loglik_trace.push_back(ll);
    double diff = kInf;
    int iter = 0;
    while (diff > cfg.tol && iter < cfg.max_iter) {
        const double lw1 = std::log(p.w);
        const double lw2 = std::log1p(-p.w);
        double sum_t = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = lw1 + normal_logpdf(x[i], p.mu1, p.s1);
            const double b = lw2 + normal_logpdf(x[i], p.mu2, p.s2);
            post[i] = 1.0 / (1.0 + std::exp(b - a));
            sum_t += post[i];
        }
        const double sum_u = static_cast<double>(n) - sum_t;
        double m1 = 0.0;
        double m2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            m1 += post[i] * x[i];
            m2 += (1.0 - post[i]) * x[i];
        }
        m1 /= sum_t;
        m2 /= sum_u;
        double v1 = 0.0;
        double v2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v1 += post[i] * (x[i] - m1) * (x[i] - m1);
            v2 += (1.0 - post[i]) * (x[i] - m2) * (x[i] - m2);
        }
        const double s1 = std::sqrt(v1 / sum_t);
        const double s2 = std::sqrt(v2 / sum_u);
        ++iter;
        if (!(sum_t > 0.0) || !(sum_u > 0.0) || !(s1 >= floor_sd) || !(s2 >= floor_sd) || !std::isfinite(m1) ||
            !std::isfinite(m2)) {
            out.degenerate = true;
            break;
        }
        p = {m1, m2, s1, s2, sum_t / static_cast<double>(n)};
        const double next = normal_mix_loglik(x, p);
        if (!std::isfinite(next)) {
            out.degenerate = true;
            break;
        }
        diff = next - ll;
        ll = next;
        out.loglik_trace.push_back(ll);
    }
    out.n_iter = iter;
    out.converged = !out.degenerate && diff <= cfg.tol;
    out.params = p.canonical();
    out.loglik = ll;
    out.aic = aic(ll, 5);
    out.bic = bic(ll, 5, n);
    return out;
}

KlResult empirical_kl(const LogDensity& true_logpdf, const LogDensity& fitted_logpdf,
                      const std::vector<double>& oracle_sample, const std::string& model_tag) {
    if (oracle_sample.empty()) throw DomainError("empirical KL needs a non-empty oracle sample");
    KlResult r;
    r.model_tag = model_tag;
    r.n_eval = oracle_sample.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < oracle_sample.size(); ++i) {
        const double x = oracle_sample[i];
        const double lp = true_logpdf(x);
        const double lq = fitted_logpdf(x);
        if (!std::isfinite(lp)) throw DomainError("true density is not positive at an oracle point");
        if (lq == -kInf || std::isnan(lq)) {
            std::ostringstream msg;
            msg << "fitted density vanishes at oracle point " << i << " (x = " << x << ")";
            r.d_kl = kInf;
            r.diagnostic = msg.str();
            return r;
        }
        sum += lp - lq;
    }
    r.d_kl = sum / static_cast<double>(oracle_sample.size());
    return r;
}

double model_cdf(double x, const FittedModel& m) {
    return std::visit(
        [x](const auto& p) {
            if constexpr (std::is_same_v<std::decay_t<decltype(p)>, FgParams>)
                return fg_cdf(x, p);
            else
                return normal_mix_cdf(x, p);
        },
        m);
}

double model_logpdf(double x, const FittedModel& m) {
    return std::visit(
        [x](const auto& p) {
            if constexpr (std::is_same_v<std::decay_t<decltype(p)>, FgParams>)
                return fg_logpdf(x, p);
            else
                return normal_mix_logpdf(x, p);
        },
        m);
}

double ks_statistic(std::vector<double> y, const std::function<double(double)>& cdf) {
    if (y.empty()) throw DomainError("KS statistic needs at least one observation");
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(y.size());
    double d = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double f = cdf(y[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return std::clamp(d, 0.0, 1.0);
}

void KsConfig::validate() const {
    if (n_boot < 999) throw DomainError("n_boot must be at least 999");
    fit.validate();
}

KsResult ks_test_mc(const DataSample& y, const FittedModel& fitted, const KsConfig& cfg) {
    cfg.validate();
    const std::size_t n = y.values.size();
    if (n < 5) throw DomainError("KS test needs at least 5 observations");
    if (const auto* nm = std::get_if<NormalMixParams>(&fitted)) nm->validate();
    const bool is_fg = std::holds_alternative<FgParams>(fitted);

    KsResult r;
    r.n_boot = cfg.n_boot;
    r.statistic = ks_statistic(y.values, [&](double x) { return model_cdf(x, fitted); });

    std::vector<double> stats(static_cast<std::size_t>(cfg.n_boot));
    std::vector<char> ok(stats.size(), 1);
    parallel_for(stats.size(), [&](std::size_t b) {
        Rng rng(derive_seed(cfg.seed, {hash_tag("ks-bootstrap"), b}));
        std::vector<double> sample(n);
        for (double& v : sample)
            v = is_fg ? fg_draw(std::get<FgParams>(fitted), rng) : normal_mix_draw(std::get<NormalMixParams>(fitted), rng);
        if (!cfg.refit) {
            stats[b] = ks_statistic(sample, [&](double x) { return model_cdf(x, fitted); });
            return;
        }
        EcmConfig fc = cfg.fit;
        fc.seed = derive_seed(cfg.seed, {hash_tag("ks-refit"), b});
        bool good = false;
        try {
            stats[b] = is_fg ? fg_refit_statistic(sample, fc, good) : nm_refit_statistic(sample, fc, good);
        } catch (const std::exception&) {
            good = false;
        }
        ok[b] = good ? 1 : 0;
    });

    int exceed = 0;
    int used = 0;
    for (std::size_t b = 0; b < stats.size(); ++b) {
        if (!ok[b]) {
            ++r.n_dropped;
            continue;
        }
        ++used;
        if (stats[b] >= r.statistic) ++exceed;
    }
    r.p_value = (1.0 + exceed) / (1.0 + used);
    if (r.n_dropped * 10 > cfg.n_boot) {
        r.warning = std::to_string(r.n_dropped) + " of " + std::to_string(cfg.n_boot) +
                    " bootstrap refits failed and were dropped";
    }
    return r;
}

std::vector<double> ReferenceDensity::sample(std::size_t n, std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<double> out(n);
    for (double& v : out) v = draw(rng);
    return out;
}

ReferenceDensity reference_density(const std::string& tag) {
    std::string t;
    for (char c : tag)
        if (c != ' ') t += c;
    if (t == "E2" || t == "laplace(0,2)") {
        const double b = 2.0;
        return {"laplace(0,2)", [b](double x) { return -std::log(2.0 * b) - std::abs(x) / b; },
                [b](Rng& rng) {
                    std::exponential_distribution<double> ex(1.0 / b);
                    return ex(rng) - ex(rng);
                }};
    }
    if (t == "E3" || t == "gumbelmax_mix(0;2,6;0.5)") {
        return {"gumbelmax_mix(0;2,6;0.5)",
                [](double x) {
                    return std::log(0.5) + log_sum_exp(gumbel_max_logpdf(x, 0.0, 2.0), gumbel_max_logpdf(x, 0.0, 6.0));
                },
                [](Rng& rng) {
                    std::uniform_real_distribution<double> unif(0.0, 1.0);
                    const double s = unif(rng) < 0.5 ? 2.0 : 6.0;
                    double u = unif(rng);
                    while (u <= 0.0) u = unif(rng);
                    return -s * std::log(-std::log(u));
                }};
    }
    if (t == "E4" || t == "student_t(5)") {
        const double nu = 5.0;
        const double c = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) - 0.5 * std::log(nu * constants::pi);
        return {"student_t(5)", [nu, c](double x) { return c - 0.5 * (nu + 1.0) * std::log1p(x * x / nu); },
                [nu](Rng& rng) {
                    std::student_t_distribution<double> st(nu);
                    return st(rng);
                }};
    }
    throw DomainError("unknown reference density tag: " + tag);
}

}  // namespace fg
