#include "gbsvie/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gbsvie/gexp.hpp"
#include "gbsvie/path_sim.hpp"

namespace gbsvie {

namespace {

bool same_discretization(const ProblemSpec& a, const ProblemSpec& b) {
    return a.band.sigma_lo == b.band.sigma_lo && a.band.sigma_hi == b.band.sigma_hi &&
           a.tgrid.horizon == b.tgrid.horizon && a.tgrid.n_t == b.tgrid.n_t &&
           a.xgrid.x_min == b.xgrid.x_min && a.xgrid.x_max == b.xgrid.x_max &&
           a.xgrid.n_x == b.xgrid.n_x;
}

// Ordering audit: terminal ordering on the grid, generator ordering and
// y-monotonicity on a seeded probe lattice.
void audit_pair(const ProblemSpec& s1, const ProblemSpec& s2, ComparisonReport& rep) {
    const double slack = 1e-12;

    for (int i = 0; i <= s1.tgrid.n_t; ++i) {
        double t = s1.tgrid.time(i);
        for (int j = 0; j < s1.xgrid.n_x; ++j) {
            double x = s1.xgrid.xval(j);
            if (s1.terminal.Phi({t, t, x, 0, 0}) < s2.terminal.Phi({t, t, x, 0, 0}) - slack) {
                std::ostringstream os;
                os << "terminal ordering fails at t=" << t << ", x=" << x;
                rep.audit_failures.push_back(os.str());
                return;
            }
        }
    }

    std::mt19937_64 rng(s1.probe.seed ^ 0xC0FFEEULL);
    std::uniform_real_distribution<double> ut(0.0, s1.tgrid.horizon);
    std::uniform_real_distribution<double> ux(s1.xgrid.x_min, s1.xgrid.x_max);
    std::uniform_real_distribution<double> ubox(-s1.probe.box, s1.probe.box);
    bool mono1 = true, mono2 = true;
    for (int m = 0; m < s1.probe.lattice; ++m) {
        double t = ut(rng);
        double s = t + (s1.tgrid.horizon - t) * std::uniform_real_distribution<double>(0, 1)(rng);
        double x = ux(rng), y = ubox(rng), z = ubox(rng);
        if (s1.gen.F({t, s, x, y, z}) < s2.gen.F({t, s, x, y, z}) - slack) {
            std::ostringstream os;
            os << "generator ordering fails at (t,s,x,y,z)=(" << t << "," << s << "," << x << ","
               << y << "," << z << ")";
            rep.audit_failures.push_back(os.str());
            return;
        }
        double y2 = ubox(rng);
        double ylo = std::min(y, y2), yhi = std::max(y, y2);
        if (s1.gen.F({t, s, x, yhi, z}) < s1.gen.F({t, s, x, ylo, z}) - slack) mono1 = false;
        if (s2.gen.F({t, s, x, yhi, z}) < s2.gen.F({t, s, x, ylo, z}) - slack) mono2 = false;
    }
    if (!mono1 && !mono2)
        rep.audit_failures.push_back("neither generator is y-monotone on the probe lattice");
}

double min_nodewise_gap(const Grid2D& a, const Grid2D& b, int first_row, int last_row) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = first_row; i <= last_row; ++i)
        for (int j = 0; j < a.cols; ++j) m = std::min(m, a.at(i, j) - b.at(i, j));
    return m;
}

}  // namespace

ComparisonReport compare_solutions(const ProblemSpec& spec1, const ProblemSpec& spec2,
                                   bool chained, double cmp_tol) {
    if (!same_discretization(spec1, spec2))
        throw std::invalid_argument("compare_solutions needs identical grids and band");

    ComparisonReport rep;
    rep.cmp_tol = cmp_tol;
    rep.chained = chained;

    audit_pair(spec1, spec2, rep);
    if (!rep.audit_failures.empty()) return rep;  // refuse to assert the ordering
    rep.audited = true;

    SolutionBundle b2 = solve_bsvie(spec2);

    SolutionBundle b1;
    if (!chained) {
        b1 = solve_bsvie(spec1);
    } else {
        SolveOptions opts;
        opts.initial_iterate = &b2.y;
        opts.on_sweep = [&rep](const IntervalLog& log, const Grid2D& prev, const Grid2D& next) {
            double inc = min_nodewise_gap(next, prev, log.first_anchor, log.last_anchor);
            rep.ladder_min_increments.push_back(inc);
            if (inc < -rep.cmp_tol) rep.ladder_monotone = false;
        };
        b1 = solve_bsvie(spec1, opts);
    }

    rep.min_gap = min_nodewise_gap(b1.y, b2.y, 0, spec1.tgrid.n_t);
    rep.pass = rep.min_gap >= -cmp_tol && (!chained || rep.ladder_monotone);
    return rep;
}

AprioriReport apriori_diagnostics(const SolutionBundle& bundle, const ProblemSpec& spec) {
    AprioriReport rep;
    const int n_t = spec.tgrid.n_t;
    const int n_x = spec.xgrid.n_x;
    const double dt = spec.tgrid.dt();
    const double alpha = spec.alpha;

    double num_int = 0.0, den_int = 0.0;
    rep.pointwise_ratio.resize(n_t + 1, 0.0);

    for (int i = 0; i <= n_t; ++i) {
        double t = spec.tgrid.time(i);
        std::vector<double> terminal(n_x);
        for (int j = 0; j < n_x; ++j)
            terminal[j] = std::pow(std::abs(spec.terminal.Phi({t, spec.tgrid.horizon,
                                                               spec.xgrid.xval(j), 0, 0})),
                                   alpha);
        ValueSurface cond = solve_g_heat(spec, terminal, i);

        double worst_ratio = 0.0, worst_lhs = 0.0, worst_rhs = 0.0;
        for (int j = 0; j < n_x; ++j) {
            double driver = 0.0;
            for (int k = i; k < n_t; ++k)
                driver += std::abs(spec.gen.F({t, spec.tgrid.time(k), spec.xgrid.xval(j), 0, 0})) *
                          dt;
            double rhs = cond.value(i, j) + std::pow(driver, alpha);
            double lhs = std::pow(std::abs(bundle.y.at(i, j)), alpha);
            double ratio;
            if (lhs == 0.0)
                ratio = 0.0;
            else if (rhs == 0.0) {
                ratio = std::numeric_limits<double>::infinity();
                rep.finite = false;
            } else
                ratio = lhs / rhs;
            worst_ratio = std::max(worst_ratio, ratio);
            worst_lhs = std::max(worst_lhs, lhs);
            worst_rhs = std::max(worst_rhs, rhs);
        }
        rep.pointwise_ratio[i] = worst_ratio;
        num_int += dt * worst_lhs;
        den_int += dt * worst_rhs;
    }

    rep.integral_ratio = (num_int == 0.0) ? 0.0 : num_int / den_int;
    if (!std::isfinite(rep.integral_ratio)) rep.finite = false;
    return rep;
}

ContinuityReport continuity_report(const SolutionBundle& bundle, const ProblemSpec& spec,
                                   int n_paths, std::uint64_t seed) {
    ContinuityReport rep;
    const int n_t = spec.tgrid.n_t;
    const int n_x = spec.xgrid.n_x;
    const double dt = spec.tgrid.dt();
    const int lags[3] = {1, 2, 4};

    // mean reconstructed K(t_i, T) under the feedback control, per anchor
    std::vector<double> mean_k(n_t + 1, 0.0);
    if (n_paths > 0 && !bundle.sig_star.empty()) {
        PathBatch batch =
            simulate_paths(VolControl::feedback(), spec, n_paths, seed, &bundle.sig_star);
        for (int i = 0; i <= n_t; ++i) {
            double acc = 0.0;
            for (int p = 0; p < n_paths; ++p)
                acc += reconstruct_k(bundle, spec, batch, p, i).value;
            mean_k[i] = acc / n_paths;
        }
    }

    for (int lag : lags) {
        int L = std::min(lag, n_t);
        double my = 0.0, mz = 0.0, mk = 0.0;
        for (int l = 1; l <= L; ++l) {
            for (int i = 0; i + l <= n_t; ++i) {
                for (int j = 0; j < n_x; ++j)
                    my = std::max(my, std::abs(bundle.y.at(i, j) - bundle.y.at(i + l, j)));
                // tail H-norm of the Z rows over the shared triangle
                if (!bundle.z.empty()) {
                    for (int j = 0; j < n_x; ++j) {
                        double acc = 0.0;
                        for (int k = i + l; k <= n_t; ++k) {
                            double d = bundle.z.at(i, k, j) - bundle.z.at(i + l, k, j);
                            acc += d * d * dt;
                        }
                        mz = std::max(mz, std::sqrt(acc));
                    }
                }
                mk = std::max(mk, std::abs(mean_k[i] - mean_k[i + l]));
            }
        }
        rep.h.push_back(lag * dt);
        rep.m_y.push_back(my);
        rep.m_z.push_back(mz);
        rep.m_k.push_back(mk);
    }

    for (std::size_t r = 1; r < rep.h.size(); ++r) {
        if (rep.m_y[r] < rep.m_y[r - 1] || rep.m_z[r] < rep.m_z[r - 1] ||
            rep.m_k[r] < rep.m_k[r - 1])
            rep.monotone = false;
    }
    return rep;
}

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

std::pair<ProblemSpec, ProblemSpec> make_ordered_pair(const ProblemSpec& base,
                                                      std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    ProblemSpec s2 = base;
    ProblemSpec s1 = base;

    double a = 0.5 * u01(rng), w = 0.5 + 2.0 * u01(rng), c = u01(rng) - 0.5;
    std::string phi2 = num(a) + "*x + " + num(0.3 * u01(rng)) + "*cos(" + num(w) + "*x) + " + num(c);
    double bump_phi = 0.2 * u01(rng);
    std::string phi1 =
        phi2 + " + " + num(bump_phi) + "*(1 + cos(" + num(0.5 + u01(rng)) + "*x))";

    double cy = 0.4 * u01(rng);  // nonnegative: keeps both generators y-monotone
    double cz = 0.3 * (u01(rng) - 0.5);
    std::string f2 = num(0.4 * u01(rng)) + "*sin(t + s) + " + num(0.3 * u01(rng)) + "*cos(" +
                     num(w) + "*x) + " + num(cy) + "*y + " + num(cz) + "*z";
    double bump_f = 0.5 * u01(rng);
    std::string f1 = f2 + " + " + num(bump_f) + "*(1 + sin(" + num(w) + "*s + x))*0.5";

    double L = cy + std::abs(cz) + 1e-3;
    s2.terminal = TerminalFamily::from_expression(Expression::parse(phi2));
    s1.terminal = TerminalFamily::from_expression(Expression::parse(phi1));
    s2.gen = GeneratorSpec::from_expression(Expression::parse(f2), L);
    s1.gen = GeneratorSpec::from_expression(Expression::parse(f1), L);
    return {s1, s2};
}

}  // namespace gbsvie
