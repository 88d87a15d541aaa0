#pragma once

#include <string>
#include <vector>

#include "gbsvie/model.hpp"
#include "gbsvie/verify.hpp"

namespace gbsvie {

/// Schema violations in a problem-spec document.
struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parses a problem-spec JSON document. Required: band.sigma_lo,
/// band.sigma_hi, grid.T, grid.n_t, generator, terminal. Defaults:
/// alpha = 2, picard theta 0.75 / tol 1e-10 / max_iter 60 / delta auto,
/// x half-width 6 sigma_hi sqrt(T), n_x chosen so the CFL number is <= 0.9.
ProblemSpec parse_problem_text(const std::string& text);

/// parse_problem_text over a file, followed by validate_problem; hard
/// validation errors are rethrown as SpecError.
ProblemSpec parse_problem(const std::string& path);

/// Canonical rendering of everything that determines solver output.
std::string canonical_spec_string(const ProblemSpec& spec);

/// FNV-1a 64-bit fingerprint of the canonical rendering, as fixed-width hex.
std::string spec_fingerprint(const ProblemSpec& spec);

// Fixed-format artifact writers (17 significant digits, exact headers).
void write_y_surface_csv(const std::string& path, const SolutionBundle& bundle,
                         const ProblemSpec& spec);
void write_z_field_csv(const std::string& path, const SolutionBundle& bundle,
                       const ProblemSpec& spec);
void write_sig_star_csv(const std::string& path, const SolutionBundle& bundle,
                        const ProblemSpec& spec);
void write_k_samples_csv(const std::string& path, const SolutionBundle& bundle,
                         const ProblemSpec& spec);
void write_path_batch_csv(const std::string& path, const PathBatch& batch, int max_paths = -1);

std::string render_diagnostics_json(const SolutionBundle& bundle, const ProblemSpec& spec,
                                    const ValidationReport& validation);
std::string render_comparison_json(const ComparisonReport& report);
std::string render_validation_json(const ValidationReport& report);

struct ManifestInfo {
    std::string spec_hash;
    std::uint64_t seed = 0;
    int n_paths = 0;
    double wall_clock_s = 0.0;
    std::vector<std::string> outputs;
};
std::string render_manifest_json(const ManifestInfo& info, const ProblemSpec& spec,
                                 const IntervalPlan& plan);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace gbsvie
