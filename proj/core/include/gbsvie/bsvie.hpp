#pragma once

#include "gbsvie/gexp.hpp"
#include "gbsvie/model.hpp"

namespace gbsvie {

/// Raised when interval halving hits the time-grid resolution without the
/// iteration contracting.
struct NonContraction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Interval length used by solve_bsvie: the configured delta_init, or
/// min(T, 1/(2L)) when delta_init is 0 (auto) and the generator has L > 0.
double resolved_delta(const ProblemSpec& spec);

/// Iterate-gap norm over anchors (first..last):
/// ( sum_i dt * max_j |y_new - y_old|^alpha )^(1/alpha).
double residual_norm(const Grid2D& y_new, const Grid2D& y_old, int first_anchor, int last_anchor,
                     double alpha, double dt);

/// Optional capture of per-anchor surface fields during a sweep.
struct SweepSink {
    TriangularField* z = nullptr;  // gradient rows of every solved anchor
    Grid2D* sig0 = nullptr;        // anchor-0 optimizer field, if anchor 0 is swept
};

/// One fixed-point sweep over the anchors (first..last): every anchor is
/// re-solved with y read from y_prev on the interval rows and from y_frozen
/// on the rows past last_anchor. The frozen rows are copied through
/// untouched; rows below the interval are left as in y_prev.
Grid2D picard_sweep(const ProblemSpec& spec, int first_anchor, int last_anchor,
                    const Grid2D& y_frozen, const Grid2D& y_prev, SweepSink* sink = nullptr);

/// Direct construction for y-independent generators: one anchored solve per
/// t_index, diagonal extraction, gradient rows as the triangular field.
SolutionBundle solve_bsvie_no_y(const ProblemSpec& spec);

struct SolveOptions {
    /// Initial iterate for every interval; nullptr = start from 0.
    const Grid2D* initial_iterate = nullptr;
    /// Called after each sweep with (interval_log, y_prev, y_new);
    /// used by the comparison harness to trace the monotone ladder.
    std::function<void(const IntervalLog&, const Grid2D&, const Grid2D&)> on_sweep;
};

/// Backward local-interval construction: intervals of length delta walked
/// from T down to 0, each iterated to a fixed point before its values are
/// frozen; delta is halved (current interval restarted) when the logged
/// contraction ratio exceeds theta twice in a row. y-independent generators
/// take the solve_bsvie_no_y path unchanged.
SolutionBundle solve_bsvie(const ProblemSpec& spec, const SolveOptions& opts = {});

}  // namespace gbsvie
