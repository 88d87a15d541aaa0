#include "gbsvie/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace gbsvie {

double ProblemSpec::k_tolerance() const {
    if (k_tol > 0.0) return k_tol;
    return 4.0 * band.hi2() * std::sqrt(2.0 * tgrid.horizon * tgrid.dt());
}

double cfl_number(const ProblemSpec& spec) {
    double dx = spec.xgrid.dx();
    return spec.band.hi2() * spec.tgrid.dt() / (dx * dx);
}

double TriangularField::norm(double alpha, double dt) const {
    double worst = 0.0;
    for (int j = 0; j < n_x_; ++j) {
        double outer = 0.0;
        for (int i = 0; i <= n_t_; ++i) {
            double inner = 0.0;
            for (int k = i; k <= n_t_; ++k) {
                double z = at(i, k, j);
                inner += z * z * dt;
            }
            outer += std::pow(inner, alpha / 2.0) * dt;
        }
        worst = std::max(worst, std::pow(outer, 1.0 / alpha));
    }
    return worst;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// Sampled Lipschitz ratio of F in (y,z) over the declared probe box.
ProxyResult audit_lipschitz(const ProblemSpec& spec, std::mt19937_64& rng) {
    ProxyResult r;
    r.name = "H2_lipschitz";
    if (!spec.gen.depends_on_y && !spec.gen.depends_on_z) {
        r.pass = true;
        r.stat = 0.0;
        r.detail = "generator is (y,z)-independent";
        return r;
    }
    std::uniform_real_distribution<double> ut(0.0, spec.tgrid.horizon);
    std::uniform_real_distribution<double> ux(spec.xgrid.x_min, spec.xgrid.x_max);
    std::uniform_real_distribution<double> ubox(-spec.probe.box, spec.probe.box);

    double max_ratio = 0.0;
    for (int m = 0; m < spec.probe.lattice; ++m) {
        double t = ut(rng);
        double s = t + (spec.tgrid.horizon - t) * std::uniform_real_distribution<double>(0, 1)(rng);
        double x = ux(rng);
        EvalContext a{t, s, x, ubox(rng), ubox(rng)};
        EvalContext b{t, s, x, ubox(rng), ubox(rng)};
        double den = std::abs(a.y - b.y) + std::abs(a.z - b.z);
        if (den < 1e-12) continue;
        double ratio = std::abs(spec.gen.F(a) - spec.gen.F(b)) / den;
        max_ratio = std::max(max_ratio, ratio);
    }
    r.stat = max_ratio;
    r.pass = max_ratio <= spec.gen.lipschitz * (1.0 + spec.probe.eps_lip);
    r.detail = "sampled ratio " + fmt(max_ratio) + " vs declared L=" + fmt(spec.gen.lipschitz);
    return r;
}

// Gridded profile of integral_t^T |F(t,s,x,0,0)| ds; pass iff finite.
// Anchors and states are strided so large grids stay cheap; the inner
// s-integration is always full resolution.
ProxyResult audit_driver_profile(const ProblemSpec& spec) {
    ProxyResult r;
    r.name = "H3_driver_integrable";
    double dt = spec.tgrid.dt();
    double worst = 0.0;
    const int di = std::max(1, spec.tgrid.n_t / 64);
    const int dj = std::max(1, spec.xgrid.n_x / 64);
    for (int i = 0; i <= spec.tgrid.n_t; i += di) {
        for (int j = 0; j < spec.xgrid.n_x; j += dj) {
            double acc = 0.0;
            for (int k = i; k < spec.tgrid.n_t; ++k) {
                EvalContext c{spec.tgrid.time(i), spec.tgrid.time(k), spec.xgrid.xval(j), 0.0, 0.0};
                acc += std::abs(spec.gen.F(c)) * dt;
            }
            worst = std::max(worst, acc);
        }
    }
    r.stat = worst;
    r.pass = std::isfinite(worst);
    r.detail = "max_t,x  integral |F(t,s,x,0,0)| ds = " + fmt(worst);
    return r;
}

// t-modulus of h |-> sup |int_{t v t'}^T |F(t',..) - F(t,..)| ds| on a probe
// box; a modulus that fails to shrink with h flags a jump in t. Anchors are
// scanned systematically (strided only on very large grids) so a single
// jump node cannot be missed by sampling.
ProxyResult audit_generator_t_modulus(const ProblemSpec& spec, std::mt19937_64& rng) {
    ProxyResult r;
    r.name = "H4_generator_t_modulus";
    const double dt = spec.tgrid.dt();
    const int n_t = spec.tgrid.n_t;
    std::uniform_real_distribution<double> ux(spec.xgrid.x_min, spec.xgrid.x_max);
    std::uniform_real_distribution<double> ubox(-spec.probe.box, spec.probe.box);

    const int kDraws = std::clamp(spec.probe.t_probes, 1, 64);
    std::vector<double> xs(kDraws), ys(kDraws), zs(kDraws);
    for (int d = 0; d < kDraws; ++d) {
        xs[d] = ux(rng);
        ys[d] = ubox(rng);
        zs[d] = ubox(rng);
    }

    auto modulus = [&](int lag) {
        double worst = 0.0;
        const int stride = std::max(1, n_t / 512);
        for (int i = 0; i + lag <= n_t; i += stride) {
            double t = spec.tgrid.time(i), t2 = spec.tgrid.time(i + lag);
            for (int d = 0; d < kDraws; ++d) {
                double acc = 0.0;
                for (int k = i + lag; k < n_t; ++k) {
                    double s = spec.tgrid.time(k);
                    acc += std::abs(spec.gen.F({t2, s, xs[d], ys[d], zs[d]}) -
                                    spec.gen.F({t, s, xs[d], ys[d], zs[d]})) *
                           dt;
                }
                worst = std::max(worst, acc);
            }
        }
        return worst;
    };

    if (!spec.gen.F.uses('t')) {
        r.pass = true;
        r.stat = 0.0;
        r.detail = "generator is t-independent";
        return r;
    }
    double w1 = modulus(1), w4 = modulus(4);
    r.stat = w1;
    r.pass = w1 <= std::max(1e-12, 0.5 * w4);
    r.detail = "omega(dt)=" + fmt(w1) + ", omega(4dt)=" + fmt(w4);
    return r;
}

// Same audit for the terminal family, on the full grid.
ProxyResult audit_terminal_t_modulus(const ProblemSpec& spec) {
    ProxyResult r;
    r.name = "phi_t_modulus";
    const int n_t = spec.tgrid.n_t;
    auto modulus = [&](int lag) {
        double worst = 0.0;
        for (int i = 0; i + lag <= n_t; ++i) {
            double t = spec.tgrid.time(i), t2 = spec.tgrid.time(i + lag);
            for (int j = 0; j < spec.xgrid.n_x; ++j) {
                double x = spec.xgrid.xval(j);
                worst = std::max(worst, std::abs(spec.terminal.Phi({t2, t2, x, 0, 0}) -
                                                 spec.terminal.Phi({t, t, x, 0, 0})));
            }
        }
        return worst;
    };
    if (!spec.terminal.Phi.uses('t')) {
        r.pass = true;
        r.stat = 0.0;
        r.detail = "terminal family is t-independent";
        return r;
    }
    double w1 = modulus(1), w4 = modulus(4);
    r.stat = w1;
    r.pass = w1 <= std::max(1e-12, 0.5 * w4);
    r.detail = "omega(dt)=" + fmt(w1) + ", omega(4dt)=" + fmt(w4);
    return r;
}

}  // namespace

ValidationReport validate_problem(const ProblemSpec& spec) {
    ValidationReport rep;

    if (!spec.band.valid())
        rep.hard_errors.push_back("band violates 0<sigma_lo<=sigma_hi");
    if (!spec.tgrid.valid()) rep.hard_errors.push_back("time grid requires n_t>=2, T>0");
    if (!spec.xgrid.valid())
        rep.hard_errors.push_back("space grid requires n_x>=3 and x_min<0<x_max");
    if (!(spec.alpha > 1.0)) rep.hard_errors.push_back("alpha must exceed 1");
    if (spec.picard.delta_init < 0.0 || spec.picard.delta_init > spec.tgrid.horizon)
        rep.hard_errors.push_back("picard.delta_init must lie in (0, T] (or 0 for auto)");
    if (!(spec.picard.theta > 0.0 && spec.picard.theta < 1.0))
        rep.hard_errors.push_back("picard.theta must lie in (0,1)");
    if (!rep.hard_errors.empty()) return rep;

    rep.cfl = cfl_number(spec);
    if (rep.cfl > 1.0 && !spec.substep) {
        rep.hard_errors.push_back("CFL violated: sigma_hi^2*dt/dx^2 = " + fmt(rep.cfl) +
                                  " > 1 (enable substep or refine the time grid)");
        return rep;
    }

    // finite-on-grid gate for both expressions before any probing
    try {
        for (int i = 0; i <= spec.tgrid.n_t; i += std::max(1, spec.tgrid.n_t / 32)) {
            double t = spec.tgrid.time(i);
            for (int j = 0; j < spec.xgrid.n_x; ++j) {
                double x = spec.xgrid.xval(j);
                if (!std::isfinite(spec.terminal.Phi({t, t, x, 0, 0})))
                    throw EvalError("terminal value not finite on grid");
                if (!std::isfinite(spec.gen.F({t, t, x, 0, 0})))
                    throw EvalError("generator value not finite on grid");
            }
        }
    } catch (const EvalError& e) {
        rep.hard_errors.push_back(std::string("expression evaluation failed: ") + e.what());
        return rep;
    }

    std::mt19937_64 rng(spec.probe.seed);
    rep.proxies.push_back(audit_lipschitz(spec, rng));
    rep.proxies.push_back(audit_driver_profile(spec));
    rep.proxies.push_back(audit_generator_t_modulus(spec, rng));
    rep.proxies.push_back(audit_terminal_t_modulus(spec));
    return rep;
}

}  // namespace gbsvie
