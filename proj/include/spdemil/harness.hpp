#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spdemil/costmodel.hpp"
#include "spdemil/iterints.hpp"
#include "spdemil/schemes.hpp"

namespace spdemil {

enum class ErrorFunctional {
    Endpoint,  // ||Y_T - Y^ref_T||_H
    SupGrid,   // sup over the common grid of the root mean square error
};

struct ResolutionSpec {
    SchemeKind scheme = SchemeKind::EES;
    std::size_t N = 1, M = 1, K = 1;
    std::optional<std::size_t> D;  // choose_D when absent
};

struct ReferenceSpec {
    std::size_t N = 32, K = 3, M = 1u << 14;
};

/// Config document (JSON), every key optional:
///
///   problem     {"family": "example", "epsilon": 1e-6, "p": 4}
///   schemes     ["MIL1", "MIL2", "EES"]
///   ladder      [2, 4, 8, 16]            N values; M, K follow the optimal relations
///   resolutions [{"scheme", "N", "M", "K", "D"?}, ...]   replaces the ladder
///   reference   {"N": 32, "K": 3, "M": 16384}
///   paths, batches, seed, threads
///   error       "endpoint" | "sup-grid"
///   d_order     q used in choose_D and in the cost columns (default 1)
///   truncation  "step" | "eigenvalue"
///   max_normal_draws
///   output      directory for rows.csv, plot.csv, manifest.json, timing.json
///
/// Unknown keys are rejected.
struct ExperimentConfig {
    std::string family = "example";
    double epsilon = 1e-6;
    double p = 4.0;
    std::vector<SchemeKind> schemes{SchemeKind::MIL1, SchemeKind::MIL2, SchemeKind::EES};
    std::vector<std::size_t> ladder{2, 4, 8, 16};
    std::vector<ResolutionSpec> resolutions;
    ReferenceSpec reference;
    std::size_t paths = 200;
    std::size_t batches = 20;
    std::uint64_t seed = 20240607;
    ErrorFunctional error = ErrorFunctional::Endpoint;
    double d_order = 1.0;
    TruncationRule truncation = TruncationRule::StepBased;
    double max_normal_draws = 2.0e11;
    unsigned threads = 0;  // 0: SPDEMIL_THREADS, else hardware concurrency
    std::string output = "out";
};

/// Desk defaults; `full` switches to N up to 32 and M_ref = 2^16.
ExperimentConfig default_config(bool full);

/// Parses a config document on top of default_config(full). Throws
/// ConfigError carrying the 1-based line and column of the offending
/// token.
ExperimentConfig parse_config(const std::string& text, bool full = false);
ExperimentConfig load_config(const std::string& path, bool full = false);

struct ExperimentRow {
    SchemeKind scheme = SchemeKind::EES;
    std::size_t N = 0, M = 0, K = 0, D = 0;
    std::uint32_t level = 0;
    double cost_caption = 0.0;
    double cost_primitives = 0.0;
    double error = 0.0;
    double std = 0.0;       // sample std of the per-batch RMS errors
    double std_path = 0.0;  // sample std of the per-path errors
    std::uint64_t normals_per_step = 0;
    double wall_time = 0.0;  // seconds, summed over paths
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;
    std::size_t M_fine = 0;
    std::size_t K_max = 0;
    std::size_t paths = 0;
    std::size_t batches = 0;
    bool coupling_verified = false;
    double predicted_normals = 0.0;
    double wall_time = 0.0;
};

/// Resolutions the experiment will run, in output order (N ascending,
/// then scheme order), with D filled in.
std::vector<ResolutionSpec> plan_rows(const ExperimentConfig& config);

/// Normal draws the whole run will consume.
double predict_normal_draws(const ExperimentConfig& config);

/// Throws ResourceLimitExceeded above config.max_normal_draws and
/// InvalidArgument on inconsistent configs.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct EocFit {
    double slope = 0.0;         // least squares over all rows
    double finest_slope = 0.0;  // through the two largest-cost rows
};

/// log(error) against log(cost_caption) for rows of one scheme.
EocFit fit_eoc(const std::vector<ExperimentRow>& rows);

std::vector<ExperimentRow> rows_of(const std::vector<ExperimentRow>& rows, SchemeKind scheme);

void write_rows_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);
void write_plot_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);
void write_manifest(std::ostream& out, const ExperimentConfig& config, const ExperimentResult& result);
void write_timing(std::ostream& out, const ExperimentResult& result);
/// Human-readable table, one line per N with MIL1/MIL2/EES columns.
void write_table(std::ostream& out, const std::vector<ExperimentRow>& rows);

/// Writes the four artifacts into config.output.
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

}  // namespace spdemil
