#pragma once

#include <functional>
#include <vector>

#include "gbsvie/model.hpp"

namespace gbsvie {

/// The sublinear generator in one dimension:
/// g(a) = (sigma_hi^2 * a^+ - sigma_lo^2 * a^-) / 2.
inline double g_function(double a, const VolatilityBand& band) {
    return 0.5 * (band.hi2() * (a > 0.0 ? a : 0.0) - band.lo2() * (a < 0.0 ? -a : 0.0));
}

struct StepResult {
    std::vector<double> u_row;
    std::vector<double> grad_row;  // central differences of u_row
    std::vector<double> sig_row;   // argmax volatility, from the input row
};

/// One explicit backward step of length dt:
///   u[j] = u_next[j] + dt * ( g(D2 u_next[j]) + source(x_j, u_next[j], D1 u_next[j]) )
/// with the 3-point second difference forced to 0 at the two boundary
/// columns. Monotone in u_next when the CFL number is <= 1.
/// sig_row[j] is sigma_hi exactly when D2 u_next[j] >= 0 (tie -> sigma_hi).
StepResult step_backward(const std::vector<double>& u_next,
                         const std::function<double(double x, double y, double z)>& source,
                         const ProblemSpec& spec);

/// Backward solve of the anchored problem on [t_index*dt, T]: terminal row
/// Phi(t_i, .), then repeated explicit steps with source
/// F(t_i, s_k, x, y, z), where y is read from y_source at (k, x_j) when
/// given and from the working row otherwise. With spec.substep, each macro
/// step runs ceil(CFL) inner steps so the effective CFL stays <= 1; all
/// reported rows remain on the macro grid.
ValueSurface solve_gbsde(int t_index, const ProblemSpec& spec, const Grid2D* y_source = nullptr);

/// Worst-case expectation of payoff(B_T): zero-generator solve read at
/// (t=0, x=0).
double g_expectation(const Expression& payoff, const VolatilityBand& band, const TimeGrid& tgrid,
                     const SpaceGrid& xgrid, bool substep = false);

/// Zero-generator backward solve from a numeric terminal row; the lattice
/// realization of the conditional worst-case expectation of that row.
ValueSurface solve_g_heat(const ProblemSpec& spec, const std::vector<double>& terminal_row,
                          int t_index = 0);

/// Inner time-refinement factor used by the stepper for this spec.
int substep_factor(const ProblemSpec& spec);

}  // namespace gbsvie
