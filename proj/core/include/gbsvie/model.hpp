#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gbsvie/expression.hpp"

namespace gbsvie {

/// Volatility uncertainty interval [sigma_lo, sigma_hi], per unit sqrt(time).
struct VolatilityBand {
    double sigma_lo = 0.0;
    double sigma_hi = 0.0;

    bool valid() const {
        return sigma_lo > 0.0 && sigma_lo <= sigma_hi && std::isfinite(sigma_hi);
    }
    double lo2() const { return sigma_lo * sigma_lo; }
    double hi2() const { return sigma_hi * sigma_hi; }
};

/// Uniform partition of [0, T] into n_t steps; node times t_k = k*dt.
struct TimeGrid {
    double horizon = 1.0;
    int n_t = 2;

    double dt() const { return horizon / n_t; }
    double time(int k) const { return k * dt(); }
    bool valid() const { return n_t >= 2 && horizon > 0.0 && std::isfinite(horizon); }
};

/// Uniform state grid on [x_min, x_max]; must straddle the start state 0.
struct SpaceGrid {
    double x_min = -1.0;
    double x_max = 1.0;
    int n_x = 3;

    double dx() const { return (x_max - x_min) / (n_x - 1); }
    double xval(int j) const { return x_min + j * dx(); }
    int nearest_index(double x) const {
        if (x <= x_min) return 0;
        if (x >= x_max) return n_x - 1;
        int j = static_cast<int>((x - x_min) / dx() + 0.5);
        return j < n_x ? j : n_x - 1;
    }
    bool valid() const {
        return n_x >= 3 && x_min < 0.0 && x_max > 0.0 && std::isfinite(x_min) &&
               std::isfinite(x_max);
    }
};

/// Generator F(t,s,x,y,z) with its declared Lipschitz constant in (y,z).
struct GeneratorSpec {
    Expression F;            // defaults to the constant 0
    double lipschitz = 0.0;  // declared, then audited by validate_problem
    bool depends_on_y = false;
    bool depends_on_z = false;

    static GeneratorSpec from_expression(Expression e, double L) {
        GeneratorSpec g;
        g.depends_on_y = e.uses('y');
        g.depends_on_z = e.uses('z');
        g.F = std::move(e);
        g.lipschitz = L;
        return g;
    }
};

/// Terminal family Phi(t, x): the terminal payoff seen from anchor time t.
struct TerminalFamily {
    Expression Phi;
    int growth_degree = 2;

    static TerminalFamily from_expression(Expression e, int degree = 2) {
        TerminalFamily f;
        f.Phi = std::move(e);
        f.growth_degree = degree;
        return f;
    }
};

/// Local-interval fixed-point iteration controls.
struct PicardParams {
    double delta_init = 0.0;  // 0 = pick default at parse/validate time
    double theta = 0.75;      // contraction threshold in (0,1)
    double tol = 1e-10;
    int max_iter = 60;
};

/// Validation probing controls (sampled assumption proxies).
struct ProbeParams {
    double box = 10.0;          // |y|,|z| probe box half-width N
    int lattice = 32768;        // 32^3 probe draws for the Lipschitz audit
    int t_probes = 8;           // (x,y,z) draws per anchor for the t-modulus audits
    double eps_lip = 0.05;      // slack on sampled Lipschitz ratios
    std::uint64_t seed = 20250810;
};

struct ProblemSpec {
    VolatilityBand band;
    TimeGrid tgrid;
    SpaceGrid xgrid;
    GeneratorSpec gen;
    TerminalFamily terminal;
    double alpha = 2.0;  // norm exponent, > 1
    PicardParams picard;
    ProbeParams probe;
    bool substep = false;  // opt-in inner time refinement when CFL > 1
    double k_tol = 0.0;    // 0 = auto: 4*sigma_hi^2*sqrt(2*T*dt)

    double k_tolerance() const;
};

/// Stability number sigma_hi^2 * dt / dx^2 of the raw grids.
double cfl_number(const ProblemSpec& spec);

struct ProxyResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double stat = 0.0;
};

struct ValidationReport {
    std::vector<std::string> hard_errors;
    std::vector<ProxyResult> proxies;
    double cfl = 0.0;

    bool ok() const { return hard_errors.empty(); }
    bool all_proxies_pass() const {
        for (const auto& p : proxies)
            if (!p.pass) return false;
        return true;
    }
    const ProxyResult* proxy(const std::string& name) const {
        for (const auto& p : proxies)
            if (p.name == name) return &p;
        return nullptr;
    }
};

/// Sampled audit of the standing assumptions plus the CFL gate.
/// CFL violation (without substep) and non-finite grid values are hard
/// errors; proxy failures are warnings carried in the report.
ValidationReport validate_problem(const ProblemSpec& spec);

/// Value surface of one parameterized backward solve anchored at t_index:
/// rows k = t_index..n_t over the space grid, with the spatial gradient and
/// the per-node argmax volatility of each step.
struct ValueSurface {
    int t_index = 0;
    int n_t = 0;
    int n_x = 0;
    std::vector<double> u;     // (n_t - t_index + 1) rows
    std::vector<double> grad;  // same shape
    std::vector<double> sig;   // same shape; row k = control chosen on step k

    void allocate(int i, int nt, int nx) {
        t_index = i;
        n_t = nt;
        n_x = nx;
        std::size_t n = static_cast<std::size_t>(nt - i + 1) * nx;
        u.assign(n, 0.0);
        grad.assign(n, 0.0);
        sig.assign(n, 0.0);
    }
    std::size_t idx(int k, int j) const {
        assert(k >= t_index && k <= n_t && j >= 0 && j < n_x);
        return static_cast<std::size_t>(k - t_index) * n_x + j;
    }
    double value(int k, int j) const { return u[idx(k, j)]; }
    double gradient(int k, int j) const { return grad[idx(k, j)]; }
    double sigma(int k, int j) const { return sig[idx(k, j)]; }
};

/// Dense rectangular table (anchor-diagonal surfaces, optimizer fields).
struct Grid2D {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    void allocate(int r, int c, double fill = 0.0) {
        rows = r;
        cols = c;
        v.assign(static_cast<std::size_t>(r) * c, fill);
    }
    double& at(int i, int j) {
        assert(i >= 0 && i < rows && j >= 0 && j < cols);
        return v[static_cast<std::size_t>(i) * cols + j];
    }
    double at(int i, int j) const {
        assert(i >= 0 && i < rows && j >= 0 && j < cols);
        return v[static_cast<std::size_t>(i) * cols + j];
    }
    bool empty() const { return v.empty(); }
};

/// Field z(t_i, s_k, x_j) on the discrete triangle k >= i.
/// Access outside the triangle throws (contract violation).
class TriangularField {
public:
    TriangularField() = default;
    TriangularField(int n_t, int n_x) { allocate(n_t, n_x); }

    void allocate(int n_t, int n_x) {
        n_t_ = n_t;
        n_x_ = n_x;
        offsets_.assign(n_t + 2, 0);
        for (int i = 0; i <= n_t; ++i)
            offsets_[i + 1] = offsets_[i] + static_cast<std::size_t>(n_t - i + 1) * n_x;
        data_.assign(offsets_[n_t + 1], 0.0);
    }

    int n_t() const { return n_t_; }
    int n_x() const { return n_x_; }
    bool empty() const { return data_.empty(); }

    double& at(int i, int k, int j) {
        check(i, k, j);
        return data_[offsets_[i] + static_cast<std::size_t>(k - i) * n_x_ + j];
    }
    double at(int i, int k, int j) const {
        check(i, k, j);
        return data_[offsets_[i] + static_cast<std::size_t>(k - i) * n_x_ + j];
    }
    double* row(int i, int k) {
        check(i, k, 0);
        return data_.data() + offsets_[i] + static_cast<std::size_t>(k - i) * n_x_;
    }
    const double* row(int i, int k) const {
        check(i, k, 0);
        return data_.data() + offsets_[i] + static_cast<std::size_t>(k - i) * n_x_;
    }

    /// Expectation-free surrogate of the triangle norm: max over space of
    /// ( sum_i dt ( sum_{k>=i} dt z^2 )^{alpha/2} )^{1/alpha}.
    double norm(double alpha, double dt) const;

private:
    void check(int i, int k, int j) const {
        if (i < 0 || i > n_t_ || k < i || k > n_t_ || j < 0 || j >= n_x_)
            throw std::out_of_range("TriangularField: index (" + std::to_string(i) + "," +
                                    std::to_string(k) + "," + std::to_string(j) +
                                    ") outside the triangle");
    }

    int n_t_ = 0;
    int n_x_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<double> data_;
};

/// One reconstructed K(t,T) sample along a simulated path.
struct KSample {
    int t_index = 0;
    int path = 0;
    double value = 0.0;
};

/// Volatility control defining one admissible measure.
struct VolControl {
    enum class Kind { Constant, Schedule, Feedback };
    Kind kind = Kind::Constant;
    double sigma = 0.0;            // Constant
    std::vector<double> schedule;  // Schedule: one sigma per time step

    static VolControl constant(double s) {
        VolControl c;
        c.kind = Kind::Constant;
        c.sigma = s;
        return c;
    }
    static VolControl piecewise(std::vector<double> sched) {
        VolControl c;
        c.kind = Kind::Schedule;
        c.schedule = std::move(sched);
        return c;
    }
    static VolControl feedback() {
        VolControl c;
        c.kind = Kind::Feedback;
        return c;
    }

    bool within(const VolatilityBand& band) const {
        auto ok = [&band](double s) { return s >= band.sigma_lo && s <= band.sigma_hi; };
        switch (kind) {
            case Kind::Constant: return ok(sigma);
            case Kind::Schedule: {
                for (double s : schedule)
                    if (!ok(s)) return false;
                return true;
            }
            case Kind::Feedback: return true;  // read from an optimizer field in-band
        }
        return false;
    }
};

/// Simulated increments of one batch of volatility-controlled paths.
struct PathBatch {
    std::uint64_t seed = 0;
    int n_paths = 0;
    int n_steps = 0;
    VolControl control;
    std::vector<double> dB;        // [p][k]
    std::vector<double> quad_var;  // [p][k], exactly sigma_{p,k}^2 * dt

    double increment(int p, int k) const { return dB[static_cast<std::size_t>(p) * n_steps + k]; }
    double qv(int p, int k) const { return quad_var[static_cast<std::size_t>(p) * n_steps + k]; }
    /// Path state at node k (paths start at 0).
    double state(int p, int k) const {
        double x = 0.0;
        for (int m = 0; m < k; ++m) x += increment(p, m);
        return x;
    }
};

/// Per-interval iteration log of the backward local-interval construction.
struct IntervalLog {
    double a = 0.0;
    double b = 0.0;
    int first_anchor = 0;  // anchors (first..last] assigned to this interval
    int last_anchor = 0;
    std::vector<double> residuals;
    std::vector<double> ratios;  // residual_n / residual_{n-1}, n >= 2
    int halvings = 0;
    bool converged = false;
};

struct IntervalPlan {
    std::vector<IntervalLog> intervals;
    double delta_final = 0.0;
};

/// Full output of a Volterra solve: diagonal surface, triangular gradient
/// field, anchor-0 optimizer field, pathwise K samples, diagnostics.
struct SolutionBundle {
    Grid2D y;       // (n_t+1) x n_x diagonal values
    TriangularField z;
    Grid2D sig_star;  // anchor-0 optimizer field, rows 0..n_t
    std::vector<KSample> k_samples;
    IntervalPlan plan;
    std::map<std::string, double> diagnostics;
};

}  // namespace gbsvie
