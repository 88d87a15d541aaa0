#pragma once

#include <random>
#include <utility>

#include "gbsvie/bsvie.hpp"
#include "gbsvie/model.hpp"

namespace gbsvie {

struct ComparisonReport {
    bool audited = false;  // ordering hypotheses verified before any verdict
    std::vector<std::string> audit_failures;
    double min_gap = 0.0;  // min over all nodes of Y1 - Y2
    double cmp_tol = 1e-6;
    bool pass = false;
    bool chained = false;
    // chained mode: per sweep, min over interval nodes of the iterate increment
    std::vector<double> ladder_min_increments;
    bool ladder_monotone = true;
};

/// Solves both problems and checks the nodewise ordering of the diagonals.
/// Refuses to assert a verdict (audited=false) unless Phi1 >= Phi2 on the
/// grid, F1 >= F2 on a probe lattice, and F1 or F2 is y-monotone there.
/// Chained mode additionally re-runs problem 1 with iterates seeded at Y2,
/// tracing the monotone ladder sweep by sweep.
ComparisonReport compare_solutions(const ProblemSpec& spec1, const ProblemSpec& spec2,
                                   bool chained = false, double cmp_tol = 1e-6);

struct AprioriReport {
    std::vector<double> pointwise_ratio;  // per anchor
    double integral_ratio = 0.0;
    bool finite = true;
};

/// Ratio diagnostics of the solution size against its data: per anchor,
/// max_x |Y|^alpha over the lattice conditional expectation of
/// |Phi(t,.)|^alpha plus the frozen-state driver integral, and the
/// time-integrated version of the same. Ratios are reported, not bounded.
AprioriReport apriori_diagnostics(const SolutionBundle& bundle, const ProblemSpec& spec);

struct ContinuityReport {
    std::vector<double> h;  // dt, 2dt, 4dt
    std::vector<double> m_y;
    std::vector<double> m_z;
    std::vector<double> m_k;
    bool monotone = true;  // every modulus non-decreasing in h
};

/// Discrete continuity moduli of Y (sup over space), Z (tail H-norm over the
/// shared triangle) and K (mean reconstructed K(t,T) under the feedback
/// control) at separations h in {dt, 2dt, 4dt}.
ContinuityReport continuity_report(const SolutionBundle& bundle, const ProblemSpec& spec,
                                   int n_paths = 256, std::uint64_t seed = 2024);

/// Randomized ordered pair on shared grids: problem 2 with smooth data,
/// problem 1 with nonnegative bumps added to Phi and F and a y-monotone
/// generator. Both satisfy the comparison hypotheses by construction.
std::pair<ProblemSpec, ProblemSpec> make_ordered_pair(const ProblemSpec& base,
                                                      std::mt19937_64& rng);

}  // namespace gbsvie
