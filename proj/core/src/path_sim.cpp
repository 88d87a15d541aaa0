#include "gbsvie/path_sim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "gbsvie/parallel.hpp"

namespace gbsvie {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

PathBatch simulate_paths(const VolControl& control, const ProblemSpec& spec, int n_paths,
                         std::uint64_t seed, const Grid2D* sig_star) {
    if (!control.within(spec.band))
        throw std::invalid_argument("control sigma outside the volatility band");
    if (control.kind == VolControl::Kind::Feedback && (!sig_star || sig_star->empty()))
        throw std::invalid_argument("feedback control needs an optimizer field");
    if (control.kind == VolControl::Kind::Schedule &&
        static_cast<int>(control.schedule.size()) != spec.tgrid.n_t)
        throw std::invalid_argument("schedule length must equal n_t");

    const int n_steps = spec.tgrid.n_t;
    const double dt = spec.tgrid.dt();
    const double sqrt_dt = std::sqrt(dt);

    PathBatch batch;
    batch.seed = seed;
    batch.n_paths = n_paths;
    batch.n_steps = n_steps;
    batch.control = control;
    batch.dB.resize(static_cast<std::size_t>(n_paths) * n_steps);
    batch.quad_var.resize(batch.dB.size());

    parallel_for(n_paths, [&](int p) {
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(p) + 1)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        double x = 0.0;
        for (int k = 0; k < n_steps; ++k) {
            double sigma;
            switch (control.kind) {
                case VolControl::Kind::Constant: sigma = control.sigma; break;
                case VolControl::Kind::Schedule: sigma = control.schedule[k]; break;
                case VolControl::Kind::Feedback:
                default:
                    sigma = sig_star->at(k, spec.xgrid.nearest_index(x));
                    break;
            }
            double db = sigma * sqrt_dt * gauss(rng);
            std::size_t idx = static_cast<std::size_t>(p) * n_steps + k;
            batch.dB[idx] = db;
            batch.quad_var[idx] = sigma * sigma * dt;
            x += db;
        }
    });
    return batch;
}

McEstimate mc_lower_bound(const Expression& payoff, const std::vector<PathBatch>& batches) {
    if (batches.empty()) throw std::invalid_argument("mc_lower_bound needs at least one control");

    McEstimate best;
    bool have = false;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        const PathBatch& batch = batches[b];
        double sum = 0.0, sum2 = 0.0;
        for (int p = 0; p < batch.n_paths; ++p) {
            double x = 0.0;
            for (int k = 0; k < batch.n_steps; ++k) x += batch.increment(p, k);
            double v = payoff({0.0, 0.0, x, 0.0, 0.0});
            sum += v;
            sum2 += v * v;
        }
        double mean = sum / batch.n_paths;
        double var = std::max(0.0, sum2 / batch.n_paths - mean * mean);
        double se = std::sqrt(var / batch.n_paths);
        if (!have || mean > best.value) {
            best.value = mean;
            best.stderr_ = se;
            best.argmax = static_cast<int>(b);
            have = true;
        }
    }
    return best;
}

KSample reconstruct_k(const SolutionBundle& bundle, const ProblemSpec& spec,
                      const PathBatch& batch, int path, int t_index) {
    const int n_t = spec.tgrid.n_t;
    if (t_index < 0 || t_index > n_t) throw std::out_of_range("t_index outside the time grid");
    if (batch.n_steps != n_t)
        throw std::invalid_argument("path batch resolution does not match the spec");

    const double dt = spec.tgrid.dt();
    const double t_anchor = spec.tgrid.time(t_index);

    double x = 0.0;
    double x_at_anchor = 0.0;
    double gen_sum = 0.0;
    double ito_sum = 0.0;
    for (int k = 0; k < n_t; ++k) {
        if (k == t_index) x_at_anchor = x;
        if (k >= t_index) {
            int j = spec.xgrid.nearest_index(x);
            double z = bundle.z.at(t_index, k, j);
            double db = batch.increment(path, k);
            gen_sum +=
                spec.gen.F({t_anchor, spec.tgrid.time(k), x, bundle.y.at(k, j), z}) * dt;
            ito_sum += z * db;
        }
        x += batch.increment(path, k);
    }
    if (t_index == n_t) x_at_anchor = x;

    double terminal = spec.terminal.Phi({t_anchor, spec.tgrid.horizon, x, 0.0, 0.0});
    double y_at_anchor = bundle.y.at(t_index, spec.xgrid.nearest_index(x_at_anchor));

    KSample sample;
    sample.t_index = t_index;
    sample.path = path;
    sample.value = terminal + gen_sum - ito_sum - y_at_anchor;
    return sample;
}

void append_k_samples(SolutionBundle& bundle, const ProblemSpec& spec, const PathBatch& batch,
                      const std::vector<int>& t_indices) {
    std::size_t base = bundle.k_samples.size();
    bundle.k_samples.resize(base + t_indices.size() * static_cast<std::size_t>(batch.n_paths));
    for (std::size_t a = 0; a < t_indices.size(); ++a) {
        const int ti = t_indices[a];
        parallel_for(batch.n_paths, [&, ti](int p) {
            bundle.k_samples[base + a * batch.n_paths + p] =
                reconstruct_k(bundle, spec, batch, p, ti);
        });
    }
}

BdgReport bdg_diagnostic(const std::vector<double>& z_slice, double p,
                         const std::vector<PathBatch>& batches, const VolatilityBand& band,
                         double dt) {
    if (!(p > 0.0)) throw std::invalid_argument("bdg_diagnostic needs p > 0");
    BdgReport report;
    report.p = p;

    double qv = 0.0;
    for (double xi : z_slice) qv += xi * xi * dt;
    double moment_qv = std::pow(qv, p / 2.0);

    for (const PathBatch& batch : batches) {
        const int n = std::min<int>(batch.n_steps, static_cast<int>(z_slice.size()));
        double acc = 0.0;
        for (int path = 0; path < batch.n_paths; ++path) {
            double run = 0.0, sup = 0.0;
            for (int k = 0; k < n; ++k) {
                run += z_slice[k] * batch.increment(path, k);
                sup = std::max(sup, std::abs(run));
            }
            acc += std::pow(sup, p);
        }
        BdgEntry e;
        e.moment_sup = batch.n_paths > 0 ? acc / batch.n_paths : 0.0;
        e.moment_qv = moment_qv;
        double lo_scale = std::pow(band.sigma_lo, p) * moment_qv;
        double hi_scale = std::pow(band.sigma_hi, p) * moment_qv;
        e.ratio_lo = lo_scale > 0.0 ? e.moment_sup / lo_scale : 0.0;
        e.ratio_hi = hi_scale > 0.0 ? e.moment_sup / hi_scale : 0.0;
        if (!std::isfinite(e.moment_sup) || e.moment_sup < 0.0) report.positive_and_finite = false;
        report.entries.push_back(e);
    }
    return report;
}

}  // namespace gbsvie
