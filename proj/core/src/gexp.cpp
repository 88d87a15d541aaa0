#include "gbsvie/gexp.hpp"

#include <cmath>
#include <stdexcept>

namespace gbsvie {

namespace {

void check_finite_row(const std::vector<double>& row, int k) {
    for (double v : row) {
        if (!std::isfinite(v))
            throw std::runtime_error("backward step produced a non-finite value at time row " +
                                     std::to_string(k) + " (blow-up / CFL breach)");
    }
}

void gradient_of(const std::vector<double>& u, double dx, std::vector<double>& out) {
    const int n = static_cast<int>(u.size());
    out.resize(n);
    out[0] = (u[1] - u[0]) / dx;
    for (int j = 1; j < n - 1; ++j) out[j] = (u[j + 1] - u[j - 1]) / (2.0 * dx);
    out[n - 1] = (u[n - 1] - u[n - 2]) / dx;
}

// One explicit step; writes the stepped row into `out` and, when `sig` is
// non-null, the argmax volatility of the input row.
template <class Source>
void step_rows(const std::vector<double>& u, std::vector<double>& out, std::vector<double>* sig,
               const SpaceGrid& xg, const VolatilityBand& band, double dt, Source&& source) {
    const int n = xg.n_x;
    const double dx = xg.dx();
    const double inv_dx2 = 1.0 / (dx * dx);
    const double inv_2dx = 1.0 / (2.0 * dx);

    for (int j = 0; j < n; ++j) {
        double d2, z;
        if (j == 0) {
            d2 = 0.0;
            z = (u[1] - u[0]) / dx;
        } else if (j == n - 1) {
            d2 = 0.0;
            z = (u[n - 1] - u[n - 2]) / dx;
        } else {
            d2 = (u[j - 1] - 2.0 * u[j] + u[j + 1]) * inv_dx2;
            z = (u[j + 1] - u[j - 1]) * inv_2dx;
        }
        if (sig) (*sig)[j] = d2 >= 0.0 ? band.sigma_hi : band.sigma_lo;
        out[j] = u[j] + dt * (g_function(d2, band) + source(j, xg.xval(j), u[j], z));
    }
}

}  // namespace

int substep_factor(const ProblemSpec& spec) {
    if (!spec.substep) return 1;
    double cfl = cfl_number(spec);
    return cfl > 1.0 ? static_cast<int>(std::ceil(cfl)) : 1;
}

StepResult step_backward(const std::vector<double>& u_next,
                         const std::function<double(double x, double y, double z)>& source,
                         const ProblemSpec& spec) {
    StepResult r;
    const int n = spec.xgrid.n_x;
    r.u_row.resize(n);
    r.sig_row.resize(n);
    step_rows(u_next, r.u_row, &r.sig_row, spec.xgrid, spec.band, spec.tgrid.dt(),
              [&source](int, double x, double y, double z) { return source(x, y, z); });
    check_finite_row(r.u_row, -1);
    gradient_of(r.u_row, spec.xgrid.dx(), r.grad_row);
    return r;
}

ValueSurface solve_gbsde(int t_index, const ProblemSpec& spec, const Grid2D* y_source) {
    const int n_t = spec.tgrid.n_t;
    const int n_x = spec.xgrid.n_x;
    const double dt = spec.tgrid.dt();
    const double t_anchor = spec.tgrid.time(t_index);
    const int m = substep_factor(spec);
    const double dt_sub = dt / m;

    ValueSurface surf;
    surf.allocate(t_index, n_t, n_x);

    std::vector<double> w(n_x), w2(n_x), grad(n_x), sig(n_x);
    for (int j = 0; j < n_x; ++j)
        w[j] = spec.terminal.Phi({t_anchor, spec.tgrid.horizon, spec.xgrid.xval(j), 0.0, 0.0});
    check_finite_row(w, n_t);

    gradient_of(w, spec.xgrid.dx(), grad);
    for (int j = 0; j < n_x; ++j) {
        surf.u[surf.idx(n_t, j)] = w[j];
        surf.grad[surf.idx(n_t, j)] = grad[j];
        surf.sig[surf.idx(n_t, j)] = spec.band.sigma_hi;
    }

    const bool const_gen = spec.gen.F.is_constant();
    const double gen_const = const_gen ? spec.gen.F.constant_value() : 0.0;
    const Expression& F = spec.gen.F;

    for (int k = n_t - 1; k >= t_index; --k) {
        const double s_k = spec.tgrid.time(k);
        for (int q = 0; q < m; ++q) {
            std::vector<double>* sig_out = (q == 0) ? &sig : nullptr;
            if (const_gen) {
                step_rows(w, w2, sig_out, spec.xgrid, spec.band, dt_sub,
                          [gen_const](int, double, double, double) { return gen_const; });
            } else if (y_source) {
                step_rows(w, w2, sig_out, spec.xgrid, spec.band, dt_sub,
                          [&](int j, double x, double, double z) {
                              return F({t_anchor, s_k, x, y_source->at(k, j), z});
                          });
            } else {
                step_rows(w, w2, sig_out, spec.xgrid, spec.band, dt_sub,
                          [&](int j, double x, double y, double z) {
                              return F({t_anchor, s_k, x, y, z});
                          });
            }
            w.swap(w2);
        }
        check_finite_row(w, k);
        gradient_of(w, spec.xgrid.dx(), grad);
        for (int j = 0; j < n_x; ++j) {
            surf.u[surf.idx(k, j)] = w[j];
            surf.grad[surf.idx(k, j)] = grad[j];
            surf.sig[surf.idx(k, j)] = sig[j];
        }
    }
    return surf;
}

ValueSurface solve_g_heat(const ProblemSpec& spec, const std::vector<double>& terminal_row,
                          int t_index) {
    const int n_t = spec.tgrid.n_t;
    const int n_x = spec.xgrid.n_x;
    const int m = substep_factor(spec);
    const double dt_sub = spec.tgrid.dt() / m;

    ValueSurface surf;
    surf.allocate(t_index, n_t, n_x);

    std::vector<double> w = terminal_row, w2(n_x), grad(n_x), sig(n_x);
    check_finite_row(w, n_t);
    gradient_of(w, spec.xgrid.dx(), grad);
    for (int j = 0; j < n_x; ++j) {
        surf.u[surf.idx(n_t, j)] = w[j];
        surf.grad[surf.idx(n_t, j)] = grad[j];
        surf.sig[surf.idx(n_t, j)] = spec.band.sigma_hi;
    }
    for (int k = n_t - 1; k >= t_index; --k) {
        for (int q = 0; q < m; ++q) {
            step_rows(w, w2, q == 0 ? &sig : nullptr, spec.xgrid, spec.band, dt_sub,
                      [](int, double, double, double) { return 0.0; });
            w.swap(w2);
        }
        check_finite_row(w, k);
        gradient_of(w, spec.xgrid.dx(), grad);
        for (int j = 0; j < n_x; ++j) {
            surf.u[surf.idx(k, j)] = w[j];
            surf.grad[surf.idx(k, j)] = grad[j];
            surf.sig[surf.idx(k, j)] = sig[j];
        }
    }
    return surf;
}

double g_expectation(const Expression& payoff, const VolatilityBand& band, const TimeGrid& tgrid,
                     const SpaceGrid& xgrid, bool substep) {
    ProblemSpec spec;
    spec.band = band;
    spec.tgrid = tgrid;
    spec.xgrid = xgrid;
    spec.terminal = TerminalFamily::from_expression(payoff);
    spec.substep = substep;
    ValueSurface surf = solve_gbsde(0, spec);
    return surf.value(0, xgrid.nearest_index(0.0));
}

}  // namespace gbsvie
