#ifndef FG_DIAGNOSTICS_HPP
#define FG_DIAGNOSTICS_HPP

// MCMC convergence diagnostics on a set of equal-length chains for one
// scalar quantity: rank-normalized split-Rhat and bulk effective sample
// size, plus the classic (non-ranked) split-Rhat and ESS.

#include <vector>

namespace fg {

using Chains = std::vector<std::vector<double>>;

/// Gelman-Rubin potential scale reduction after splitting each chain in two.
double split_rhat_classic(const Chains& chains);

/// max(bulk, tail) rank-normalized split-Rhat.
double split_rhat(const Chains& chains);

/// Effective sample size from Geyer's initial monotone sequence, pooled over
/// chains (no ranking, no splitting).
double ess_basic(const Chains& chains);

/// ESS of the rank-normalized split chains.
double ess_bulk(const Chains& chains);

/// Replaces each value by the normal score of its pooled rank.
Chains rank_normalize(const Chains& chains);

}  // namespace fg

#endif
