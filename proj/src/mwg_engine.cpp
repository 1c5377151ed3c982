#include "mwg_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecm_engine.hpp"
#include "fg/diagnostics.hpp"
#include "fg/parallel.hpp"

namespace fg::detail {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ChainOutput {
    Eigen::MatrixXd draws;
    Eigen::VectorXd accepted;
    Eigen::VectorXd tau;
};

double beta_draw(double a, double b, Rng& rng) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

ChainOutput run_chain(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const PriorSpec& prior,
                      const McmcConfig& cfg, const MwgStart& start, Eigen::VectorXd tau, Rng& rng, int chain) {
    const Eigen::Index n = y.size();
    const Eigen::Index p = X.cols();
    const Eigen::Index n_moves = p + 2;

    Eigen::VectorXd beta = start.beta;
    double s1 = start.sigma1;
    double s2 = start.sigma2;
    double w = start.w;
    Eigen::VectorXd theta = X * beta;
    Eigen::VectorXd theta_prop(n);

    const int kept = (cfg.n_iter - cfg.burn_in) / cfg.thin;
    ChainOutput out;
    out.draws.resize(kept, p + 3);
    out.accepted = Eigen::VectorXd::Zero(n_moves);
    Eigen::VectorXd log_tau = tau.array().log();

    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> T;

    auto loglik = [&](const Eigen::VectorXd& th, double a, double b, double ww) {
        return n == 0 ? 0.0 : observed_loglik(y, th, a, b, ww);
    };

    double ll = loglik(theta, s1, s2, w);
    if (!std::isfinite(ll))
        throw McmcError("chain " + std::to_string(chain) + ": non-finite log posterior at the starting point");

    int row = 0;
    for (int t = 1; t <= cfg.n_iter; ++t) {
        // Step 1 and 2: latent labels, then the conjugate weight draw.
        int successes = 0;
        if (n > 0) {
            responsibilities(y, theta, s1, s2, w, T);
            for (double ti : T) successes += unif(rng) < ti ? 1 : 0;
        }
        w = beta_draw(1.0 + successes, static_cast<double>(n) + 1.0 - successes, rng);
        ll = loglik(theta, s1, s2, w);

        const bool adapting = cfg.adapt && t <= cfg.burn_in;
        const double gain = std::pow(static_cast<double>(t), -0.6);
        auto finish_move = [&](Eigen::Index k, double log_ratio, bool acc) {
            if (adapting) {
                const double prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
                log_tau[k] = std::clamp(log_tau[k] + gain * (prob - cfg.target_accept), -30.0, 30.0);
            }
            if (t > cfg.burn_in && acc) out.accepted[k] += 1.0;
        };

        // Step 3: location coefficients, one at a time.
        for (Eigen::Index j = 0; j < p; ++j) {
            const double step = std::exp(log_tau[j]) * stdnorm(rng);
            const double prop = beta[j] + step;
            theta_prop = theta + step * X.col(j);
            const double ll_prop = loglik(theta_prop, s1, s2, w);
            double log_ratio = ll_prop - ll + prior.log_location(prop) - prior.log_location(beta[j]);
            if (!std::isfinite(ll_prop)) log_ratio = kNegInf;
            const bool acc = std::log(unif(rng)) < log_ratio;
            if (acc) {
                beta[j] = prop;
                theta.swap(theta_prop);
                ll = ll_prop;
            }
            finish_move(j, log_ratio, acc);
        }

        // Step 4: scales. Non-positive proposals have zero prior density.
        for (int c = 0; c < 2; ++c) {
            double& sc = c == 0 ? s1 : s2;
            const Eigen::Index k = p + c;
            const double prop = sc + std::exp(log_tau[k]) * stdnorm(rng);
            double log_ratio = kNegInf;
            double ll_prop = kNegInf;
            if (prop > 0.0) {
                ll_prop = c == 0 ? loglik(theta, prop, s2, w) : loglik(theta, s1, prop, w);
                if (std::isfinite(ll_prop))
                    log_ratio = ll_prop - ll + prior.log_scale(prop) - prior.log_scale(sc);
            }
            const bool acc = std::log(unif(rng)) < log_ratio;
            if (acc) {
                sc = prop;
                ll = ll_prop;
            }
            finish_move(k, log_ratio, acc);
        }

        if (!std::isfinite(ll))
            throw McmcError("chain " + std::to_string(chain) + ": non-finite log posterior at iteration " +
                            std::to_string(t));

        if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 && row < kept) {
            out.draws.row(row).head(p) = beta;
            out.draws(row, p) = s1;
            out.draws(row, p + 1) = s2;
            out.draws(row, p + 2) = w;
            ++row;
        }
    }
    out.tau = log_tau.array().exp();
    return out;
}

}  // namespace

MwgSetup mwg_setup(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const PriorSpec& prior,
                   const McmcConfig& cfg) {
    const Eigen::Index n = y.size();
    const Eigen::Index p = X.cols();
    MwgSetup setup;
    setup.tau = Eigen::VectorXd::Ones(p + 2);
    Rng rng(derive_seed(cfg.seed, {0xfeedULL}));
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    bool fitted = false;
    if (n >= p + 5) {
        try {
            EcmConfig ecfg;
            ecfg.seed = cfg.seed;
            const MultiStartResult ms = multistart(y, X, ecfg);
            const EcmState& best = ms.best.end;
            Eigen::VectorXd se(p + 2);
            try {
                const Eigen::MatrixXd V = sandwich(y, X, best);
                se = V.diagonal().head(p + 2).cwiseMax(0.0).cwiseSqrt();
            } catch (const SandwichError&) {
                se.setZero();
            }
            const double fallback = std::max(best.sigma1, best.sigma2) / std::sqrt(static_cast<double>(n));
            for (Eigen::Index k = 0; k < p + 2; ++k)
                if (!(se[k] > 0.0) || !std::isfinite(se[k])) se[k] = fallback;
            // A single-coordinate move has a narrower conditional than the
            // marginal sd; start from the marginal and let adaptation shrink.
            setup.tau = 2.4 * se;
            for (int c = 0; c < cfg.n_chains; ++c) {
                if (c == 0) {
                    setup.starts.push_back({best.beta, best.sigma1, best.sigma2, std::clamp(best.w, 0.05, 0.95)});
                    continue;
                }
                MwgStart s{best.beta, best.sigma1, best.sigma2, 0.2 + 0.6 * unif(rng)};
                for (Eigen::Index j = 0; j < p; ++j) s.beta[j] += 2.0 * se[j] * stdnorm(rng);
                s.sigma1 *= std::exp(0.3 * stdnorm(rng));
                s.sigma2 *= std::exp(0.3 * stdnorm(rng));
                setup.starts.push_back(s);
            }
            fitted = true;
        } catch (const std::exception&) {
            fitted = false;
        }
    }
    if (!fitted) {
        // Prior draws; the location is started near the data when there is any.
        std::gamma_distribution<double> ga(prior.scale_shape, 1.0);
        const double prior_sd = std::sqrt(prior.location_variance);
        for (int c = 0; c < cfg.n_chains; ++c) {
            MwgStart s{Eigen::VectorXd::Zero(p), 0.0, 0.0, unif(rng)};
            for (Eigen::Index j = 0; j < p; ++j) s.beta[j] = prior.location_mean + prior_sd * stdnorm(rng);
            if (n > 0) s.beta = X.colPivHouseholderQr().solve(y);
            s.sigma1 = prior.scale_scale / ga(rng);
            s.sigma2 = prior.scale_scale / ga(rng);
            setup.starts.push_back(s);
        }
        setup.tau.head(p).setConstant(n > 0 ? 1.0 : 2.4 * prior_sd);
        setup.tau.tail(2).setConstant(1.0);
    }
    if (cfg.tau0 > 0.0) setup.tau.head(p).setConstant(cfg.tau0);
    if (cfg.tau1 > 0.0) setup.tau[p] = cfg.tau1;
    if (cfg.tau2 > 0.0) setup.tau[p + 1] = cfg.tau2;
    return setup;
}

void summarize(PosteriorDraws& d) {
    const Eigen::Index cols = d.draws.cols();
    d.rhat.assign(static_cast<std::size_t>(cols), std::numeric_limits<double>::quiet_NaN());
    d.ess_bulk.assign(static_cast<std::size_t>(cols), std::numeric_limits<double>::quiet_NaN());
    d.summaries.clear();
    for (Eigen::Index c = 0; c < cols; ++c) {
        std::vector<double> pooled(d.draws.col(c).data(), d.draws.col(c).data() + d.draws.rows());
        std::sort(pooled.begin(), pooled.end());
        const double n = static_cast<double>(pooled.size());
        ParamSummary s{};
        s.name = d.names[static_cast<std::size_t>(c)];
        s.mean = d.draws.col(c).mean();
        s.sd = std::sqrt((d.draws.col(c).array() - s.mean).square().sum() / std::max(1.0, n - 1.0));
        s.median = quantile_sorted(pooled, 0.5);
        s.q025 = quantile_sorted(pooled, 0.025);
        s.q05 = quantile_sorted(pooled, 0.05);
        s.q25 = quantile_sorted(pooled, 0.25);
        s.q75 = quantile_sorted(pooled, 0.75);
        s.q95 = quantile_sorted(pooled, 0.95);
        s.q975 = quantile_sorted(pooled, 0.975);
        s.rhat = std::numeric_limits<double>::quiet_NaN();
        s.ess_bulk = std::numeric_limits<double>::quiet_NaN();
        s.se_mean = std::numeric_limits<double>::quiet_NaN();
        if (d.draws_per_chain >= 4) {
            const auto chains = d.chains_of(c);
            s.rhat = split_rhat(chains);
            s.ess_bulk = ess_bulk(chains);
            s.se_mean = s.sd / std::sqrt(ess_basic(chains));
        }
        d.rhat[static_cast<std::size_t>(c)] = s.rhat;
        d.ess_bulk[static_cast<std::size_t>(c)] = s.ess_bulk;
        d.summaries.push_back(s);
    }
}

PosteriorDraws run_mwg(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, std::vector<std::string> beta_names,
                       const PriorSpec& prior, const McmcConfig& cfg) {
    prior.validate();
    cfg.validate();
    const Eigen::Index p = X.cols();
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (!std::isfinite(y[i])) throw DomainError("MCMC input contains a non-finite observation");

    const MwgSetup setup = mwg_setup(y, X, prior, cfg);
    std::vector<ChainOutput> outputs(static_cast<std::size_t>(cfg.n_chains));
    parallel_for(outputs.size(), [&](std::size_t c) {
        Rng rng(derive_seed(cfg.seed, {0xc4a1ULL, static_cast<std::uint64_t>(c)}));
        outputs[c] = run_chain(y, X, prior, cfg, setup.starts[c], setup.tau, rng, static_cast<int>(c));
    });

    PosteriorDraws d;
    d.names = std::move(beta_names);
    d.names.insert(d.names.end(), {"sigma1", "sigma2", "w"});
    d.n_chains = cfg.n_chains;
    d.draws_per_chain = static_cast<int>(outputs.front().draws.rows());
    d.draws.resize(static_cast<Eigen::Index>(d.n_chains) * d.draws_per_chain, p + 3);
    Eigen::VectorXd accepted = Eigen::VectorXd::Zero(p + 2);
    Eigen::VectorXd tau = Eigen::VectorXd::Zero(p + 2);
    for (int c = 0; c < d.n_chains; ++c) {
        const auto& o = outputs[static_cast<std::size_t>(c)];
        d.draws.middleRows(static_cast<Eigen::Index>(c) * d.draws_per_chain, d.draws_per_chain) = o.draws;
        accepted += o.accepted;
        tau += o.tau;
    }
    const double post = static_cast<double>(cfg.n_iter - cfg.burn_in) * d.n_chains;
    for (Eigen::Index k = 0; k < p + 2; ++k) {
        d.accept_rates.push_back(accepted[k] / post);
        d.proposal_sd.push_back(tau[k] / d.n_chains);
    }
    summarize(d);
    return d;
}

}  // namespace fg::detail
