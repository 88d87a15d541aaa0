#pragma once

#include <vector>

#include "gbsvie/model.hpp"

namespace gbsvie {

/// Gaussian increments dB[p][k] = sigma_{p,k} sqrt(dt) xi with the paired
/// bookkeeping quad_var[p][k] = sigma_{p,k}^2 dt (exact, by construction).
/// Feedback controls read sigma from sig_star at the nearest grid node of
/// the running state; paths start at 0. Deterministic given the seed.
PathBatch simulate_paths(const VolControl& control, const ProblemSpec& spec, int n_paths,
                         std::uint64_t seed, const Grid2D* sig_star = nullptr);

struct McEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    int argmax = -1;  // index of the winning batch
};

/// Max over the supplied controlled batches of the sample mean of
/// payoff(X_T), with the winner's standard error. Every fixed control
/// prices from below, so this is a lower bound on the worst case.
McEstimate mc_lower_bound(const Expression& payoff, const std::vector<PathBatch>& batches);

/// Pathwise K(t_i, T): the equation rearranged along one simulated path,
/// with Y and Z read from the bundle at the nearest state node.
KSample reconstruct_k(const SolutionBundle& bundle, const ProblemSpec& spec,
                      const PathBatch& batch, int path, int t_index);

/// Reconstructs K(t,T) for every path at the given anchors and appends the
/// samples to the bundle.
void append_k_samples(SolutionBundle& bundle, const ProblemSpec& spec, const PathBatch& batch,
                      const std::vector<int>& t_indices);

struct BdgEntry {
    double moment_sup = 0.0;  // empirical E[ sup_k |sum xi dB|^p ]
    double moment_qv = 0.0;   // ( sum xi^2 dt )^{p/2}
    double ratio_lo = 0.0;    // moment_sup / (sigma_lo^p * moment_qv)
    double ratio_hi = 0.0;    // moment_sup / (sigma_hi^p * moment_qv)
};

struct BdgReport {
    double p = 2.0;
    std::vector<BdgEntry> entries;  // one per batch
    bool positive_and_finite = true;
};

/// Empirical two-sided moment sandwich for a deterministic integrand slice.
/// Only positivity and finiteness are asserted; the sandwich constants are
/// reported, not bounded.
BdgReport bdg_diagnostic(const std::vector<double>& z_slice, double p,
                         const std::vector<PathBatch>& batches, const VolatilityBand& band,
                         double dt);

}  // namespace gbsvie
