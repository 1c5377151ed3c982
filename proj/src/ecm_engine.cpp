#include "ecm_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fg/rng.hpp"

namespace fg::detail {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_max_comp(double y, double theta, double sigma, double log_sigma) {
    const double z = (y - theta) / sigma;
    return -log_sigma - z - std::exp(-z);
}

inline double log_min_comp(double y, double theta, double sigma, double log_sigma) {
    const double u = (y - theta) / sigma;
    return -log_sigma + u - std::exp(u);
}

inline double lse(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_or_ninf(double x) {
    return x > 0.0 ? std::log(x) : kNegInf;
}

struct Eval1d {
    double value;
    double grad;
    double hess;
};

// Golden-section search for a maximum of f on [a, b].
template <class F>
double golden_max(F&& f, double a, double b, double tol) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a);
    double d = a + r * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < 200 && std::abs(b - a) > tol * (1.0 + std::abs(a)); ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? c : d;
}

// Safeguarded Newton-Raphson ascent on [lo, hi]. Every accepted move
// increases (or keeps) the objective. Non-concave points fall back to a
// golden-section search over a window around the iterate. Sets at_lower if
// the iterate ends on lo.
template <class F>
double newton_max_1d(F&& f, double x, double tol, double lo, double hi, double max_step, bool& at_lower) {
    Eval1d e = f(x);
    for (int it = 0; it < 100; ++it) {
        double xn = x;
        Eval1d en = e;
        bool moved = false;
        if (e.hess < 0.0) {
            double step = -e.grad / e.hess;
            step = std::clamp(step, -max_step, max_step);
            for (int k = 0; k < 60; ++k) {
                const double cand = std::clamp(x + step, lo, hi);
                const Eval1d ec = f(cand);
                if (ec.value >= e.value) {
                    xn = cand;
                    en = ec;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
        } else {
            const double a = std::max(lo, x - max_step);
            const double b = std::min(hi, x + max_step);
            const double cand = golden_max([&](double t) { return f(t).value; }, a, b, tol);
            const Eval1d ec = f(cand);
            if (ec.value >= e.value) {
                xn = cand;
                en = ec;
                moved = true;
            }
        }
        if (!moved) break;
        const double dx = std::abs(xn - x);
        x = xn;
        e = en;
        if (dx <= tol * (1.0 + std::abs(x))) break;
    }
    at_lower = x <= lo;
    return x;
}

}  // namespace

Eigen::VectorXd locations(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta) {
    return X * beta;
}

double observed_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& theta, double sigma1, double sigma2,
                       double w) {
    const double lw = log_or_ninf(w);
    const double lw1 = log_or_ninf(1.0 - w);
    const double ls1 = std::log(sigma1);
    const double ls2 = std::log(sigma2);
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double a = lw == kNegInf ? kNegInf : lw + log_max_comp(y[i], theta[i], sigma1, ls1);
        const double b = lw1 == kNegInf ? kNegInf : lw1 + log_min_comp(y[i], theta[i], sigma2, ls2);
        s += lse(a, b);
    }
    return s;
}

void responsibilities(const Eigen::VectorXd& y, const Eigen::VectorXd& theta, double sigma1, double sigma2,
                      double w, std::vector<double>& T) {
    T.resize(static_cast<std::size_t>(y.size()));
    if (w >= 1.0) {
        std::fill(T.begin(), T.end(), 1.0);
        return;
    }
    if (w <= 0.0) {
        std::fill(T.begin(), T.end(), 0.0);
        return;
    }
    const double lw = std::log(w);
    const double lw1 = std::log1p(-w);
    const double ls1 = std::log(sigma1);
    const double ls2 = std::log(sigma2);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double a = lw + log_max_comp(y[i], theta[i], sigma1, ls1);
        const double b = lw1 + log_min_comp(y[i], theta[i], sigma2, ls2);
        if (a == kNegInf && b == kNegInf)
            throw std::logic_error("e-step: both component densities vanish at observation " + std::to_string(i));
        T[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(b - a));
    }
}

double q_value(const Eigen::VectorXd& y, const Eigen::VectorXd& theta, const std::vector<double>& T,
               double sigma1, double sigma2, double w) {
    const double lw = log_or_ninf(w);
    const double lw1 = log_or_ninf(1.0 - w);
    const double ls1 = std::log(sigma1);
    const double ls2 = std::log(sigma2);
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double t = T[static_cast<std::size_t>(i)];
        if (t > 0.0) s += t * (lw + log_max_comp(y[i], theta[i], sigma1, ls1));
        if (t < 1.0) s += (1.0 - t) * (lw1 + log_min_comp(y[i], theta[i], sigma2, ls2));
    }
    return s;
}

namespace {

// Location block of Q for fixed scales: sum_i T_i log f1 + (1 - T_i) log f2.
double location_objective(const Eigen::VectorXd& y, const Eigen::VectorXd& theta, const std::vector<double>& T,
                          double s1, double s2) {
    const double ls1 = std::log(s1);
    const double ls2 = std::log(s2);
    double v = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double t = T[static_cast<std::size_t>(i)];
        if (t > 0.0) v += t * log_max_comp(y[i], theta[i], s1, ls1);
        if (t < 1.0) v += (1.0 - t) * log_min_comp(y[i], theta[i], s2, ls2);
    }
    return std::isnan(v) ? kNegInf : v;
}

// Newton ascent on the location coefficients. The objective is concave in
// each theta_i, hence in beta for a full-rank design.
void update_beta(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const std::vector<double>& T, EcmState& s,
                 double tol) {
    const Eigen::Index n = y.size();
    const Eigen::Index p = X.cols();
    Eigen::VectorXd theta = X * s.beta;
    double value = location_objective(y, theta, T, s.sigma1, s.sigma2);
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
        Eigen::MatrixXd negH = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd d(n), c(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = T[static_cast<std::size_t>(i)];
            double di = 0.0, ci = 0.0;
            if (t > 0.0) {
                const double ez = std::exp(-(y[i] - theta[i]) / s.sigma1);
                di += t * (1.0 - ez) / s.sigma1;
                ci += t * ez / (s.sigma1 * s.sigma1);
            }
            if (t < 1.0) {
                const double eu = std::exp((y[i] - theta[i]) / s.sigma2);
                di += (1.0 - t) * (eu - 1.0) / s.sigma2;
                ci += (1.0 - t) * eu / (s.sigma2 * s.sigma2);
            }
            d[i] = di;
            c[i] = ci;
        }
        grad = X.transpose() * d;
        negH = X.transpose() * c.asDiagonal() * X;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(negH);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            step = ldlt.solve(grad);
        } else {
            step = grad / std::max(1.0, grad.norm());
        }
        if (!step.allFinite()) break;

        bool moved = false;
        Eigen::VectorXd beta_new;
        Eigen::VectorXd theta_new;
        double value_new = value;
        for (int k = 0; k < 60; ++k) {
            beta_new = s.beta + step;
            theta_new = X * beta_new;
            value_new = location_objective(y, theta_new, T, s.sigma1, s.sigma2);
            if (value_new >= value) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        const double dx = step.lpNorm<Eigen::Infinity>();
        s.beta = beta_new;
        theta = theta_new;
        value = value_new;
        if (dx <= tol * (1.0 + s.beta.lpNorm<Eigen::Infinity>())) break;
    }
}

// Scale of the Gumbel-max (upper == true) or Gumbel-min component, optimized
// over log(sigma).
double update_scale(const Eigen::VectorXd& y, const Eigen::VectorXd& theta, const std::vector<double>& T,
                    bool upper, double sigma, double tol, bool& clamped) {
    double total_weight = 0.0;
    for (double t : T) total_weight += upper ? t : 1.0 - t;
    if (total_weight <= 0.0) return sigma;

    auto eval = [&](double ls) {
        const double sg = std::exp(ls);
        Eval1d e{0.0, 0.0, 0.0};
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double t = T[static_cast<std::size_t>(i)];
            const double wt = upper ? t : 1.0 - t;
            if (wt <= 0.0) continue;
            if (upper) {
                const double z = (y[i] - theta[i]) / sg;
                const double ez = std::exp(-z);
                e.value += wt * (-ls - z - ez);
                e.grad += wt * (-1.0 + z - z * ez);
                e.hess += wt * (-z + z * ez - z * z * ez);
            } else {
                const double u = (y[i] - theta[i]) / sg;
                const double eu = std::exp(u);
                e.value += wt * (-ls + u - eu);
                e.grad += wt * (-1.0 - u + u * eu);
                e.hess += wt * (u - u * eu - u * u * eu);
            }
        }
        if (std::isnan(e.value)) e.value = kNegInf;
        return e;
    };
    bool at_lower = false;
    const double ls = newton_max_1d(eval, std::log(sigma), tol, std::log(kMinScale), std::log(1e12), 2.0, at_lower);
    clamped = clamped || at_lower;
    return std::exp(ls);
}

}  // namespace

bool cm_sweep(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const std::vector<double>& T, EcmState& s,
              double inner_tol) {
    double sum = 0.0;
    for (double t : T) sum += t;
    s.w = std::clamp(sum / static_cast<double>(T.size()), 0.0, 1.0);

    update_beta(y, X, T, s, inner_tol);
    const Eigen::VectorXd theta = X * s.beta;
    bool clamped = false;
    s.sigma1 = update_scale(y, theta, T, true, s.sigma1, inner_tol, clamped);
    s.sigma2 = update_scale(y, theta, T, false, s.sigma2, inner_tol, clamped);
    return clamped;
}

ChainResult run_chain(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const EcmState& start,
                      const EcmConfig& cfg) {
    ChainResult r;
    r.start = start;
    r.end = start;
    Eigen::VectorXd theta = X * start.beta;
    double ll = observed_loglik(y, theta, start.sigma1, start.sigma2, start.w);
    r.trace.push_back(ll);
    if (!std::isfinite(ll)) {
        r.loglik = ll;
        return r;
    }
    std::vector<double> T;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        theta = X * r.end.beta;
        responsibilities(y, theta, r.end.sigma1, r.end.sigma2, r.end.w, T);
        r.scale_clamped = cm_sweep(y, X, T, r.end, cfg.inner_tol) || r.scale_clamped;
        r.last_T = T;
        theta = X * r.end.beta;
        const double ll_new = observed_loglik(y, theta, r.end.sigma1, r.end.sigma2, r.end.w);
        r.trace.push_back(ll_new);
        r.n_iter = it;
        const double change = std::abs(ll_new - ll);
        ll = ll_new;
        if (change < cfg.tol * std::max(1.0, std::abs(ll))) {
            r.converged = true;
            break;
        }
    }
    r.loglik = ll;
    return r;
}

void polish(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, ChainResult& c, const EcmConfig& cfg) {
    std::vector<double> T;
    for (int it = 0; it < cfg.max_iter; ++it) {
        const EcmState prev = c.end;
        responsibilities(y, X * c.end.beta, c.end.sigma1, c.end.sigma2, c.end.w, T);
        EcmState next = c.end;
        const bool clamped = cm_sweep(y, X, T, next, cfg.inner_tol);
        const double ll = observed_loglik(y, X * next.beta, next.sigma1, next.sigma2, next.w);
        if (!(ll >= c.loglik - 1e-12 * std::abs(c.loglik))) break;
        c.end = next;
        c.loglik = ll;
        c.last_T = T;
        c.scale_clamped = c.scale_clamped || clamped;
        c.trace.push_back(ll);
        double change = std::abs(next.w - prev.w);
        change = std::max(change, std::abs(next.sigma1 - prev.sigma1) / prev.sigma1);
        change = std::max(change, std::abs(next.sigma2 - prev.sigma2) / prev.sigma2);
        for (Eigen::Index k = 0; k < next.beta.size(); ++k)
            change = std::max(change, std::abs(next.beta[k] - prev.beta[k]) / std::max(1.0, std::abs(prev.beta[k])));
        if (change < 1e-10) break;
    }
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double shorth_mode(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const std::size_t h = n / 2 + 1;
    if (n < 2) return v.empty() ? 0.0 : v[0];
    std::size_t best = 0;
    double width = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + h <= n; ++i) {
        const double wdt = v[i + h - 1] - v[i];
        if (wdt < width) {
            width = wdt;
            best = i;
        }
    }
    return 0.5 * (v[best] + v[best + h - 1]);
}

namespace {

struct Residuals {
    Eigen::VectorXd beta_ls;
    std::vector<double> sorted;
    double sd;
};

Residuals least_squares_residuals(const Eigen::VectorXd& y, const Eigen::MatrixXd& X) {
    Residuals r;
    r.beta_ls = X.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd res = y - X * r.beta_ls;
    r.sorted.assign(res.data(), res.data() + res.size());
    std::sort(r.sorted.begin(), r.sorted.end());
    const double mean = res.mean();
    r.sd = std::sqrt((res.array() - mean).square().sum() / static_cast<double>(res.size() - 1));
    return r;
}

}  // namespace

std::vector<EcmState> initial_states(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const EcmConfig& cfg) {
    const Residuals res = least_squares_residuals(y, X);
    const double s0 = res.sd * std::sqrt(6.0) / constants::pi;
    if (!(s0 > 0.0)) throw DomainError("cannot initialize ECM: residuals have zero spread");

    auto at = [&](double q, double s1, double s2, double w) {
        EcmState st{res.beta_ls, s1, s2, w};
        st.beta[0] += quantile_sorted(res.sorted, q);
        return st;
    };

    // (residual quantile, weight) pairs; the list is closed under reflection
    // (q, w) -> (1 - q, 1 - w) in consecutive pairs.
    static constexpr std::array<std::array<double, 2>, 9> grid{{{0.5, 0.5},
                                                                {0.25, 0.2},
                                                                {0.75, 0.8},
                                                                {0.25, 0.8},
                                                                {0.75, 0.2},
                                                                {0.5, 0.2},
                                                                {0.5, 0.8},
                                                                {0.25, 0.5},
                                                                {0.75, 0.5}}};
    std::vector<EcmState> out;
    for (int k = 0; k < cfg.n_starts; ++k) {
        if (k < static_cast<int>(grid.size())) {
            out.push_back(at(grid[k][0], s0, s0, grid[k][1]));
        } else {
            Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(k)}));
            std::uniform_real_distribution<double> uq(0.2, 0.8);
            std::uniform_real_distribution<double> uw(0.1, 0.9);
            std::normal_distribution<double> nz(0.0, 0.5);
            const double q = uq(rng);
            const double s1 = s0 * std::exp(nz(rng));
            const double s2 = s0 * std::exp(nz(rng));
            out.push_back(at(q, s1, s2, uw(rng)));
        }
    }
    out.push_back(at(0.5, s0, s0, 1.0));
    out.push_back(at(0.5, s0, s0, 0.0));
    return out;
}

MultiStartResult multistart(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const EcmConfig& cfg) {
    MultiStartResult out;
    const auto starts = initial_states(y, X, cfg);
    const Residuals res = least_squares_residuals(y, X);
    const double mode_proxy = res.beta_ls[0] + shorth_mode(res.sorted);

    int best = -1;
    for (const auto& st : starts) {
        out.chains.push_back(run_chain(y, X, st, cfg));
        const ChainResult& c = out.chains.back();
        if (!std::isfinite(c.loglik)) continue;
        const int idx = static_cast<int>(out.chains.size()) - 1;
        if (best < 0) {
            best = idx;
            continue;
        }
        const ChainResult& b = out.chains[static_cast<std::size_t>(best)];
        const double diff = c.loglik - b.loglik;
        if (diff > 1e-10) {
            best = idx;
        } else if (std::abs(diff) <= 1e-10 &&
                   std::abs(c.end.beta[0] - mode_proxy) < std::abs(b.end.beta[0] - mode_proxy)) {
            best = idx;
        }
    }
    if (best < 0) throw std::runtime_error("ECM: every start produced a non-finite log-likelihood");
    out.best = out.chains[static_cast<std::size_t>(best)];
    if (out.best.converged) polish(y, X, out.best, cfg);
    return out;
}

Eigen::MatrixXd sandwich(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const EcmState& s) {
    const Eigen::Index n = y.size();
    const Eigen::Index p = X.cols();
    const Eigen::Index d = p + 3;
    Eigen::VectorXd v(d);
    v << s.beta, s.sigma1, s.sigma2, s.w;

    const double eps = std::numeric_limits<double>::epsilon();
    const double h_score = std::cbrt(eps);
    const double h_hess = std::pow(eps, 0.25);
    auto step = [&](Eigen::Index k, double base) { return base * std::max(1.0, std::abs(v[k])); };

    const double hw = step(d - 1, h_hess);
    if (s.w - 2.0 * hw <= 0.0 || s.w + 2.0 * hw >= 1.0)
        throw SandwichError("estimate is on the boundary of the weight space (w = " + std::to_string(s.w) +
                                "); use a profile-likelihood or Bayesian interval instead",
                            std::numeric_limits<double>::infinity());
    for (Eigen::Index k = p; k < p + 2; ++k) {
        if (v[k] - 2.0 * step(k, h_hess) <= 0.0)
            throw SandwichError("scale estimate too close to zero for finite differences",
                                std::numeric_limits<double>::infinity());
    }

    auto obs_ll = [&](const Eigen::VectorXd& par, Eigen::VectorXd& out) {
        const Eigen::VectorXd beta = par.head(p);
        const Eigen::VectorXd theta = X * beta;
        const double s1 = par[p], s2 = par[p + 1], w = par[p + 2];
        const double lw = std::log(w), lw1 = std::log1p(-w), ls1 = std::log(s1), ls2 = std::log(s2);
        for (Eigen::Index i = 0; i < n; ++i)
            out[i] = lse(lw + log_max_comp(y[i], theta[i], s1, ls1), lw1 + log_min_comp(y[i], theta[i], s2, ls2));
    };
    auto total_ll = [&](const Eigen::VectorXd& par) {
        Eigen::VectorXd tmp(n);
        obs_ll(par, tmp);
        return tmp.sum();
    };

    // Per-observation scores.
    Eigen::MatrixXd scores(n, d);
    Eigen::VectorXd up(n), dn(n);
    for (Eigen::Index k = 0; k < d; ++k) {
        const double h = step(k, h_score);
        Eigen::VectorXd vp = v, vm = v;
        vp[k] += h;
        vm[k] -= h;
        obs_ll(vp, up);
        obs_ll(vm, dn);
        scores.col(k) = (up - dn) / (2.0 * h);
    }
    const Eigen::MatrixXd B = scores.transpose() * scores / static_cast<double>(n);

    // Hessian of the total log-likelihood.
    Eigen::MatrixXd H(d, d);
    const double f0 = total_ll(v);
    for (Eigen::Index k = 0; k < d; ++k) {
        const double hk = step(k, h_hess);
        Eigen::VectorXd vp = v, vm = v;
        vp[k] += hk;
        vm[k] -= hk;
        H(k, k) = (total_ll(vp) - 2.0 * f0 + total_ll(vm)) / (hk * hk);
        for (Eigen::Index l = 0; l < k; ++l) {
            const double hl = step(l, h_hess);
            Eigen::VectorXd a = v, b = v, c = v, e = v;
            a[k] += hk, a[l] += hl;
            b[k] += hk, b[l] -= hl;
            c[k] -= hk, c[l] += hl;
            e[k] -= hk, e[l] -= hl;
            H(k, l) = H(l, k) = (total_ll(a) - total_ll(b) - total_ll(c) + total_ll(e)) / (4.0 * hk * hl);
        }
    }
    const Eigen::MatrixXd A = -H / static_cast<double>(n);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    const double cond = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
    if (!(cond < 1e12) || !A.allFinite())
        throw SandwichError("information matrix is singular (condition number " + std::to_string(cond) + ")", cond);

    const Eigen::MatrixXd Ainv = A.inverse();
    Eigen::MatrixXd V = Ainv * B * Ainv.transpose() / static_cast<double>(n);
    V = 0.5 * (V + V.transpose()).eval();
    return V;
}

}  // namespace fg::detail
