#include "gbsvie/bsvie.hpp"

#include <algorithm>
#include <cmath>

#include "gbsvie/parallel.hpp"

namespace gbsvie {

double resolved_delta(const ProblemSpec& spec) {
    double T = spec.tgrid.horizon;
    if (spec.picard.delta_init > 0.0) return std::min(spec.picard.delta_init, T);
    double L = spec.gen.lipschitz;
    if (L > 0.0) return std::min(T, 1.0 / (2.0 * L));
    return T;
}

double residual_norm(const Grid2D& y_new, const Grid2D& y_old, int first_anchor, int last_anchor,
                     double alpha, double dt) {
    double acc = 0.0;
    for (int i = first_anchor; i <= last_anchor; ++i) {
        double gap = 0.0;
        for (int j = 0; j < y_new.cols; ++j)
            gap = std::max(gap, std::abs(y_new.at(i, j) - y_old.at(i, j)));
        acc += dt * std::pow(gap, alpha);
    }
    return std::pow(acc, 1.0 / alpha);
}

namespace {

void capture_surface(const ValueSurface& surf, SweepSink* sink) {
    if (!sink) return;
    if (sink->z && !sink->z->empty()) {
        for (int k = surf.t_index; k <= surf.n_t; ++k) {
            double* dst = sink->z->row(surf.t_index, k);
            const double* src = surf.grad.data() + surf.idx(k, 0);
            std::copy(src, src + surf.n_x, dst);
        }
    }
    if (sink->sig0 && surf.t_index == 0) {
        sink->sig0->allocate(surf.n_t + 1, surf.n_x);
        std::copy(surf.sig.begin(), surf.sig.end(), sink->sig0->v.begin());
    }
}

}  // namespace

Grid2D picard_sweep(const ProblemSpec& spec, int first_anchor, int last_anchor,
                    const Grid2D& y_frozen, const Grid2D& y_prev, SweepSink* sink) {
    const int n_t = spec.tgrid.n_t;
    const int n_x = spec.xgrid.n_x;

    // compose the y the generator sees: previous iterate on the interval,
    // accepted values past it (never modified here)
    Grid2D source;
    source.allocate(n_t + 1, n_x);
    for (int k = first_anchor; k <= last_anchor; ++k)
        for (int j = 0; j < n_x; ++j) source.at(k, j) = y_prev.at(k, j);
    for (int k = last_anchor + 1; k <= n_t; ++k)
        for (int j = 0; j < n_x; ++j) source.at(k, j) = y_frozen.at(k, j);

    Grid2D out = source;  // frozen rows pass through bitwise
    const int count = last_anchor - first_anchor + 1;
    parallel_for(count, [&](int idx) {
        int i = first_anchor + idx;
        ValueSurface surf = solve_gbsde(i, spec, &source);
        for (int j = 0; j < n_x; ++j) out.at(i, j) = surf.value(i, j);
        capture_surface(surf, sink);
    });
    return out;
}

SolutionBundle solve_bsvie_no_y(const ProblemSpec& spec) {
    const int n_t = spec.tgrid.n_t;
    const int n_x = spec.xgrid.n_x;

    SolutionBundle bundle;
    bundle.y.allocate(n_t + 1, n_x);
    bundle.z.allocate(n_t, n_x);

    parallel_for(n_t + 1, [&](int i) {
        ValueSurface surf = solve_gbsde(i, spec, nullptr);
        for (int j = 0; j < n_x; ++j) bundle.y.at(i, j) = surf.value(i, j);
        for (int k = i; k <= n_t; ++k) {
            double* dst = bundle.z.row(i, k);
            const double* src = surf.grad.data() + surf.idx(k, 0);
            std::copy(src, src + n_x, dst);
        }
        if (i == 0) {
            bundle.sig_star.allocate(n_t + 1, n_x);
            std::copy(surf.sig.begin(), surf.sig.end(), bundle.sig_star.v.begin());
        }
    });

    IntervalLog log;
    log.a = 0.0;
    log.b = spec.tgrid.horizon;
    log.first_anchor = 0;
    log.last_anchor = n_t;
    log.converged = true;
    bundle.plan.intervals.push_back(log);
    bundle.plan.delta_final = spec.tgrid.horizon;
    bundle.diagnostics["picard_sweeps"] = n_t + 1.0;
    return bundle;
}

SolutionBundle solve_bsvie(const ProblemSpec& spec, const SolveOptions& opts) {
    if (!spec.gen.depends_on_y) return solve_bsvie_no_y(spec);

    const int n_t = spec.tgrid.n_t;
    const int n_x = spec.xgrid.n_x;
    const double dt = spec.tgrid.dt();

    SolutionBundle bundle;
    bundle.y.allocate(n_t + 1, n_x);
    bundle.z.allocate(n_t, n_x);

    SweepSink sink;
    sink.z = &bundle.z;
    sink.sig0 = &bundle.sig_star;

    int delta_steps = std::max(1, static_cast<int>(std::floor(resolved_delta(spec) / dt + 1e-9)));
    Grid2D frozen;
    frozen.allocate(n_t + 1, n_x);

    int b_idx = n_t;
    int pending_halvings = 0;
    double total_sweeps = 0.0;
    while (b_idx > 0) {
        int a_idx = std::max(0, b_idx - delta_steps);
        int first = (a_idx == 0) ? 0 : a_idx + 1;

        IntervalLog log;
        log.a = spec.tgrid.time(a_idx);
        log.b = spec.tgrid.time(b_idx);
        log.first_anchor = first;
        log.last_anchor = b_idx;
        log.halvings = pending_halvings;

        Grid2D y_prev;
        y_prev.allocate(n_t + 1, n_x);
        if (opts.initial_iterate)
            for (int k = first; k <= b_idx; ++k)
                for (int j = 0; j < n_x; ++j) y_prev.at(k, j) = opts.initial_iterate->at(k, j);

        bool accepted = false;
        int consecutive_bad = 0;
        for (int n = 1; n <= spec.picard.max_iter; ++n) {
            Grid2D y_new = picard_sweep(spec, first, b_idx, frozen, y_prev, &sink);
            total_sweeps += 1.0;
            double r = residual_norm(y_new, y_prev, first, b_idx, spec.alpha, dt);
            log.residuals.push_back(r);
            if (opts.on_sweep) opts.on_sweep(log, y_prev, y_new);

            if (log.residuals.size() >= 2) {
                double prev = log.residuals[log.residuals.size() - 2];
                double ratio = prev > 0.0 ? r / prev : 0.0;
                log.ratios.push_back(ratio);
                consecutive_bad = (ratio > spec.picard.theta) ? consecutive_bad + 1 : 0;
            }

            y_prev = std::move(y_new);
            if (r <= spec.picard.tol) {
                log.converged = true;
                accepted = true;
                break;
            }
            if (consecutive_bad >= 2) break;  // halve delta and restart the interval
        }

        if (!accepted && consecutive_bad >= 2) {
            if (delta_steps <= 1)
                throw NonContraction(
                    "interval iteration failed to contract with delta at the grid step");
            delta_steps /= 2;
            pending_halvings += 1;
            bundle.diagnostics["delta_halvings"] += 1.0;
            continue;  // rebuild the same interval with the shorter delta
        }
        // max_iter exhausted while still contracting: accept the last iterate
        // and record converged=false in the log.
        pending_halvings = 0;

        for (int k = first; k <= b_idx; ++k)
            for (int j = 0; j < n_x; ++j) {
                frozen.at(k, j) = y_prev.at(k, j);
                bundle.y.at(k, j) = y_prev.at(k, j);
            }
        bundle.plan.intervals.push_back(log);
        b_idx = a_idx;
    }

    std::reverse(bundle.plan.intervals.begin(), bundle.plan.intervals.end());
    bundle.plan.delta_final = delta_steps * dt;
    bundle.diagnostics["picard_sweeps"] = total_sweeps;
    return bundle;
}

}  // namespace gbsvie
