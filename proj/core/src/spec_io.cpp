#include "gbsvie/spec_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace gbsvie {

using nlohmann::json;

namespace {

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double require_number(const json& j, const std::string& scope, const char* field) {
    if (!j.contains(field))
        throw SpecError("missing field '" + scope + "." + field + "'");
    if (!j[field].is_number())
        throw SpecError("field '" + scope + "." + field + "' must be a number");
    return j[field].get<double>();
}

// generator/terminal blocks accept either a bare expression string or an
// object {expr, ...}
std::string expression_of(const json& j, const std::string& scope) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_object()) {
        if (!j.contains("expr"))
            throw SpecError("missing field '" + scope + ".expr'");
        return j["expr"].get<std::string>();
    }
    throw SpecError("field '" + scope + "' must be a string or an object with 'expr'");
}

int default_n_x(const VolatilityBand& band, const TimeGrid& tgrid, double half_width) {
    double dx_min = band.sigma_hi * std::sqrt(tgrid.dt() / 0.9);
    int half_cells = std::clamp(static_cast<int>(std::floor(half_width / dx_min)), 1, 1000);
    return 2 * half_cells + 1;  // odd: x = 0 is a node
}

}  // namespace

ProblemSpec parse_problem_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SpecError(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SpecError("spec document must be a JSON object");

    ProblemSpec spec;

    if (!doc.contains("band")) throw SpecError("missing field 'band'");
    spec.band.sigma_lo = require_number(doc["band"], "band", "sigma_lo");
    spec.band.sigma_hi = require_number(doc["band"], "band", "sigma_hi");
    if (!spec.band.valid()) throw SpecError("band violates 0<sigma_lo<=sigma_hi");

    if (!doc.contains("grid")) throw SpecError("missing field 'grid'");
    const json& grid = doc["grid"];
    spec.tgrid.horizon = require_number(grid, "grid", "T");
    spec.tgrid.n_t = static_cast<int>(require_number(grid, "grid", "n_t"));
    if (!spec.tgrid.valid()) throw SpecError("grid requires n_t>=2 and T>0");

    double half_width = 6.0 * spec.band.sigma_hi * std::sqrt(spec.tgrid.horizon);
    spec.xgrid.x_min = grid.contains("x_min") ? grid["x_min"].get<double>() : -half_width;
    spec.xgrid.x_max = grid.contains("x_max") ? grid["x_max"].get<double>() : half_width;
    spec.xgrid.n_x = grid.contains("n_x")
                         ? static_cast<int>(grid["n_x"].get<double>())
                         : default_n_x(spec.band, spec.tgrid,
                                       std::min(-spec.xgrid.x_min, spec.xgrid.x_max));
    if (!spec.xgrid.valid()) throw SpecError("grid requires n_x>=3 and x_min<0<x_max");

    if (!doc.contains("generator")) throw SpecError("missing field 'generator'");
    if (!doc.contains("terminal")) throw SpecError("missing field 'terminal'");
    double L = 0.0;
    if (doc["generator"].is_object() && doc["generator"].contains("L"))
        L = doc["generator"]["L"].get<double>();
    try {
        spec.gen = GeneratorSpec::from_expression(
            Expression::parse(expression_of(doc["generator"], "generator")), L);
        spec.terminal = TerminalFamily::from_expression(
            Expression::parse(expression_of(doc["terminal"], "terminal")));
    } catch (const ParseError& e) {
        throw SpecError(std::string("expression error: ") + e.what());
    }
    if ((spec.gen.depends_on_y || spec.gen.depends_on_z) && L <= 0.0)
        throw SpecError("generator.L must be declared (>0) for (y,z)-dependent generators");

    spec.alpha = doc.contains("alpha") ? doc["alpha"].get<double>() : 2.0;
    if (doc.contains("picard")) {
        const json& p = doc["picard"];
        if (p.contains("delta_init")) spec.picard.delta_init = p["delta_init"].get<double>();
        if (p.contains("theta")) spec.picard.theta = p["theta"].get<double>();
        if (p.contains("tol")) spec.picard.tol = p["tol"].get<double>();
        if (p.contains("max_iter")) spec.picard.max_iter = p["max_iter"].get<int>();
    }
    if (doc.contains("substep")) spec.substep = doc["substep"].get<bool>();
    if (doc.contains("k_tol")) spec.k_tol = doc["k_tol"].get<double>();
    if (doc.contains("probe_seed")) spec.probe.seed = doc["probe_seed"].get<std::uint64_t>();
    return spec;
}

ProblemSpec parse_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open spec file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    ProblemSpec spec = parse_problem_text(ss.str());
    ValidationReport rep = validate_problem(spec);
    if (!rep.ok()) {
        std::string msg = "spec validation failed:";
        for (const auto& e : rep.hard_errors) msg += " " + e + ";";
        throw SpecError(msg);
    }
    return spec;
}

std::string canonical_spec_string(const ProblemSpec& spec) {
    std::ostringstream os;
    os << "band=" << g17(spec.band.sigma_lo) << "," << g17(spec.band.sigma_hi)
       << ";T=" << g17(spec.tgrid.horizon) << ";n_t=" << spec.tgrid.n_t
       << ";x=" << g17(spec.xgrid.x_min) << "," << g17(spec.xgrid.x_max) << ","
       << spec.xgrid.n_x << ";F=" << spec.gen.F.source() << ";L=" << g17(spec.gen.lipschitz)
       << ";Phi=" << spec.terminal.Phi.source() << ";alpha=" << g17(spec.alpha)
       << ";picard=" << g17(spec.picard.delta_init) << "," << g17(spec.picard.theta) << ","
       << g17(spec.picard.tol) << "," << spec.picard.max_iter
       << ";substep=" << (spec.substep ? 1 : 0);
    return os.str();
}

std::string spec_fingerprint(const ProblemSpec& spec) {
    std::string s = canonical_spec_string(spec);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

void write_y_surface_csv(const std::string& path, const SolutionBundle& bundle,
                         const ProblemSpec& spec) {
    std::ostringstream os;
    os << "t,x,y\n";
    for (int i = 0; i <= spec.tgrid.n_t; ++i)
        for (int j = 0; j < spec.xgrid.n_x; ++j)
            os << g17(spec.tgrid.time(i)) << "," << g17(spec.xgrid.xval(j)) << ","
               << g17(bundle.y.at(i, j)) << "\n";
    write_text_file(path, os.str());
}

void write_z_field_csv(const std::string& path, const SolutionBundle& bundle,
                       const ProblemSpec& spec) {
    std::ostringstream os;
    os << "t,s,x,z\n";
    for (int i = 0; i <= spec.tgrid.n_t; ++i)
        for (int k = i; k <= spec.tgrid.n_t; ++k)
            for (int j = 0; j < spec.xgrid.n_x; ++j)
                os << g17(spec.tgrid.time(i)) << "," << g17(spec.tgrid.time(k)) << ","
                   << g17(spec.xgrid.xval(j)) << "," << g17(bundle.z.at(i, k, j)) << "\n";
    write_text_file(path, os.str());
}

void write_sig_star_csv(const std::string& path, const SolutionBundle& bundle,
                        const ProblemSpec& spec) {
    std::ostringstream os;
    os << "t,x,sigma\n";
    for (int i = 0; i < bundle.sig_star.rows; ++i)
        for (int j = 0; j < bundle.sig_star.cols; ++j)
            os << g17(spec.tgrid.time(i)) << "," << g17(spec.xgrid.xval(j)) << ","
               << g17(bundle.sig_star.at(i, j)) << "\n";
    write_text_file(path, os.str());
}

void write_k_samples_csv(const std::string& path, const SolutionBundle& bundle,
                         const ProblemSpec& spec) {
    std::ostringstream os;
    os << "t,path,k\n";
    for (const KSample& s : bundle.k_samples)
        os << g17(spec.tgrid.time(s.t_index)) << "," << s.path << "," << g17(s.value) << "\n";
    write_text_file(path, os.str());
}

void write_path_batch_csv(const std::string& path, const PathBatch& batch, int max_paths) {
    std::ostringstream os;
    os << "path,k,dB,d_qv,x,running_k\n";
    int limit = max_paths < 0 ? batch.n_paths : std::min(max_paths, batch.n_paths);
    for (int p = 0; p < limit; ++p) {
        double x = 0.0;
        for (int k = 0; k < batch.n_steps; ++k) {
            os << p << "," << k << "," << g17(batch.increment(p, k)) << ","
               << g17(batch.qv(p, k)) << "," << g17(x) << ",0\n";
            x += batch.increment(p, k);
        }
    }
    write_text_file(path, os.str());
}

namespace {

json plan_to_json(const IntervalPlan& plan) {
    json out = json::array();
    for (const IntervalLog& log : plan.intervals) {
        json j;
        j["a"] = log.a;
        j["b"] = log.b;
        j["first_anchor"] = log.first_anchor;
        j["last_anchor"] = log.last_anchor;
        j["residuals"] = log.residuals;
        j["ratios"] = log.ratios;
        j["halvings"] = log.halvings;
        j["converged"] = log.converged;
        out.push_back(j);
    }
    return out;
}

json validation_to_json(const ValidationReport& rep) {
    json out;
    out["cfl"] = rep.cfl;
    out["hard_errors"] = rep.hard_errors;
    json proxies = json::array();
    for (const auto& p : rep.proxies) {
        proxies.push_back(
            {{"name", p.name}, {"pass", p.pass}, {"stat", p.stat}, {"detail", p.detail}});
    }
    out["proxies"] = proxies;
    out["pass"] = rep.ok() && rep.all_proxies_pass();
    return out;
}

}  // namespace

std::string render_diagnostics_json(const SolutionBundle& bundle, const ProblemSpec& spec,
                                    const ValidationReport& validation) {
    json out;
    out["validation"] = validation_to_json(validation);
    out["interval_plan"] = plan_to_json(bundle.plan);
    out["delta_final"] = bundle.plan.delta_final;
    out["counters"] = bundle.diagnostics;
    if (!bundle.k_samples.empty()) {
        double mx = -std::numeric_limits<double>::infinity(), mean = 0.0;
        for (const KSample& s : bundle.k_samples) {
            mx = std::max(mx, s.value);
            mean += s.value;
        }
        mean /= bundle.k_samples.size();
        out["k_samples"] = {{"count", bundle.k_samples.size()},
                            {"max", mx},
                            {"mean", mean},
                            {"k_tol", spec.k_tolerance()}};
    }
    return out.dump(2) + "\n";
}

std::string render_comparison_json(const ComparisonReport& rep) {
    json out;
    out["audited"] = rep.audited;
    out["audit_failures"] = rep.audit_failures;
    out["min_gap"] = rep.min_gap;
    out["cmp_tol"] = rep.cmp_tol;
    out["pass"] = rep.pass;
    out["chained"] = rep.chained;
    if (rep.chained) {
        out["ladder_min_increments"] = rep.ladder_min_increments;
        out["ladder_monotone"] = rep.ladder_monotone;
    }
    return out.dump(2) + "\n";
}

std::string render_validation_json(const ValidationReport& rep) {
    return validation_to_json(rep).dump(2) + "\n";
}

std::string render_manifest_json(const ManifestInfo& info, const ProblemSpec& spec,
                                 const IntervalPlan& plan) {
    json out;
    out["spec_hash"] = info.spec_hash;
    out["grid"] = {{"T", spec.tgrid.horizon},
                   {"n_t", spec.tgrid.n_t},
                   {"x_min", spec.xgrid.x_min},
                   {"x_max", spec.xgrid.x_max},
                   {"n_x", spec.xgrid.n_x}};
    out["band"] = {{"sigma_lo", spec.band.sigma_lo}, {"sigma_hi", spec.band.sigma_hi}};
    out["seed"] = info.seed;
    out["n_paths"] = info.n_paths;
    out["solver_version"] = "gbsvie-0.1.0";
    out["interval_plan"] = plan_to_json(plan);
    out["wall_clock_s"] = info.wall_clock_s;
    out["outputs"] = info.outputs;
    return out.dump(2) + "\n";
}

}  // namespace gbsvie
