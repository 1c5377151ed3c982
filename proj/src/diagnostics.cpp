#include "fg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace fg {

namespace {

void check_shape(const Chains& chains) {
    if (chains.empty() || chains.front().size() < 4)
        throw std::invalid_argument("diagnostics need at least one chain with 4 draws");
    for (const auto& c : chains)
        if (c.size() != chains.front().size()) throw std::invalid_argument("chains differ in length");
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

Chains split(const Chains& chains) {
    Chains out;
    const std::size_t n = chains.front().size();
    const std::size_t half = n / 2;
    for (const auto& c : chains) {
        out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
        out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
    }
    return out;
}

double rhat_of(const Chains& chains) {
    const std::size_t m = chains.size();
    const double n = static_cast<double>(chains.front().size());
    std::vector<double> means, vars;
    for (const auto& c : chains) {
        means.push_back(mean(c));
        vars.push_back(sample_var(c));
    }
    const double W = mean(vars);
    const double B = m > 1 ? n * sample_var(means) : 0.0;
    if (W <= 0.0) return B > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    const double var_plus = (n - 1.0) / n * W + B / n;
    return std::sqrt(var_plus / W);
}

// Geyer initial-monotone-sequence ESS, following the multi-chain estimator
// used by Stan.
double ess_of(const Chains& chains) {
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    std::vector<double> means(m), var_chain(m);
    std::vector<std::vector<double>> centered(m);
    for (std::size_t c = 0; c < m; ++c) {
        means[c] = mean(chains[c]);
        centered[c].resize(n);
        for (std::size_t i = 0; i < n; ++i) centered[c][i] = chains[c][i] - means[c];
        double s = 0.0;
        for (double x : centered[c]) s += x * x;
        var_chain[c] = s / static_cast<double>(n - 1);
    }
    const double mean_var = mean(var_chain);
    double var_plus = mean_var * (static_cast<double>(n) - 1.0) / static_cast<double>(n);
    if (m > 1) var_plus += sample_var(means);
    if (!(var_plus > 0.0)) return static_cast<double>(m * n);

    // Mean over chains of the (biased) autocovariance at lag t.
    auto acov = [&](std::size_t t) {
        double total = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            double s = 0.0;
            const auto& x = centered[c];
            for (std::size_t i = 0; i + t < n; ++i) s += x[i] * x[i + t];
            total += s / static_cast<double>(n);
        }
        return total / static_cast<double>(m);
    };
    auto rho = [&](std::size_t t) { return 1.0 - (mean_var - acov(t)) / var_plus; };

    std::vector<double> rho_hat{1.0};
    std::size_t t = 1;
    double even = 1.0;
    double odd = rho(1);
    rho_hat.push_back(odd);
    while (t + 4 < n && even + odd > 0.0) {
        t += 2;
        even = rho(t);
        odd = t + 1 < n ? rho(t + 1) : 0.0;
        if (even + odd < 0.0) break;
        rho_hat.push_back(even);
        rho_hat.push_back(odd);
    }
    // Initial monotone sequence on the pair sums.
    const std::size_t pairs = rho_hat.size() / 2;
    std::vector<double> pair_sum(pairs);
    for (std::size_t k = 0; k < pairs; ++k) pair_sum[k] = rho_hat[2 * k] + rho_hat[2 * k + 1];
    for (std::size_t k = 1; k < pairs; ++k) pair_sum[k] = std::min(pair_sum[k], pair_sum[k - 1]);
    double tau = -1.0;
    for (double s : pair_sum) tau += 2.0 * std::max(0.0, s);
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
    return static_cast<double>(m * n) / tau;
}

}  // namespace

Chains rank_normalize(const Chains& chains) {
    check_shape(chains);
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    std::vector<std::pair<double, std::size_t>> pooled;
    pooled.reserve(m * n);
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t i = 0; i < n; ++i) pooled.emplace_back(chains[c][i], c * n + i);
    std::sort(pooled.begin(), pooled.end());

    const double S = static_cast<double>(pooled.size());
    std::vector<double> ranks(pooled.size());
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j + 1 < pooled.size() && pooled[j + 1].first == pooled[i].first) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // average 1-based rank for ties
        for (std::size_t k = i; k <= j; ++k) ranks[pooled[k].second] = avg;
        i = j + 1;
    }
    const boost::math::normal_distribution<double> stdnorm;
    Chains out(m, std::vector<double>(n));
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t i = 0; i < n; ++i)
            out[c][i] = boost::math::quantile(stdnorm, (ranks[c * n + i] - 0.375) / (S + 0.25));
    return out;
}

double split_rhat_classic(const Chains& chains) {
    check_shape(chains);
    return rhat_of(split(chains));
}

double split_rhat(const Chains& chains) {
    check_shape(chains);
    const double bulk = rhat_of(split(rank_normalize(chains)));

    // Tail: rank-normalized absolute deviation from the pooled median.
    std::vector<double> pooled;
    for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
    std::nth_element(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(pooled.size() / 2), pooled.end());
    const double med = pooled[pooled.size() / 2];
    Chains folded = chains;
    for (auto& c : folded)
        for (auto& x : c) x = std::abs(x - med);
    const double tail = rhat_of(split(rank_normalize(folded)));
    return std::max(bulk, tail);
}

double ess_basic(const Chains& chains) {
    check_shape(chains);
    return ess_of(chains);
}

double ess_bulk(const Chains& chains) {
    check_shape(chains);
    return ess_of(split(rank_normalize(chains)));
}

}  // namespace fg
