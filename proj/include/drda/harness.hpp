#pragma once

#include "drda/aggregation.hpp"
#include "drda/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace drda {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct SynthShift {
    double mean_shift = 0.0;     // added to every target covariate mean
    double cov_scale = 0.0;      // target covariance is (1 + cov_scale) I
    double coef_rotation = 0.0;  // angle (radians) between source and target coefficients
    double noise = 0.0;          // response noise standard deviation
};

struct ExperimentConfig {
    std::size_t family_size = 10;
    double eta = 1e-6;
    double upsilon = 0.5;
    std::optional<std::size_t> n_target_train;  // defaults to d
    std::size_t stream_length = 1000;
    std::size_t replications = 100;
    std::uint64_t seed = 0;
    std::optional<bool> standardize;            // defaults: on for CSV data, off for synthetic
    std::optional<double> epsilon;              // SI floor; default per SI module
    double ir_radius_rule = 3.0;                // rho = psi(T || S) / (ir_radius_rule * |E|)
    double si_radius_rule = 0.5;                // rho_T = minimum radius + si_radius_rule * rho_S
    std::size_t si_high_dim = 15;               // d at which rho_S is floored at si_high_dim_min_rho_s
    double si_high_dim_min_rho_s = 5.0;
    std::vector<std::string> methods;
    std::vector<std::size_t> checkpoints{5, 10, 50, 100};
    PredictionConvention convention = PredictionConvention::PreUpdate;

    // Data source: a CSV file, or synthetic data when data_path is empty.
    std::string dataset_name = "synthetic";
    std::string data_path;
    std::string response_column = "y";
    std::string domain_column = "domain";
    std::string domain_rule = "=S";
    std::uint64_t synth_seed = 0;
    std::size_t synth_d = 5;
    std::size_t synth_n_source = 200;
    std::size_t synth_n_target = 1200;
    SynthShift synth_shift{};
};

/// Every method name the harness understands, in output order.
const std::vector<std::string>& all_methods();

/// Parses a flat `key = value` file; '#' starts a comment. Unknown keys,
/// duplicate keys and malformed values throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Serializes every field in parse_config syntax.
std::string format_config(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

struct DomainSplit {
    Dataset source;
    Dataset target;
    std::vector<std::string> feature_names;
};

/// Reads a comma-separated file with a header row. Rows whose domain_column
/// value satisfies `domain_rule` form the source; the rest form the target.
/// Rules: [column] op value with op one of = != < <= > >=; the ordering
/// operators compare numerically.
DomainSplit load_csv(const std::filesystem::path& path, const std::string& response_column,
                     const std::string& domain_column, const std::string& domain_rule);

/// Writes source rows with domain "S" and target rows with domain "T" in the
/// layout load_csv reads back with rule "=S".
void write_csv(const std::filesystem::path& path, const Dataset& source, const Dataset& target,
               const std::string& response_column = "y", const std::string& domain_column = "domain");

struct SynthData {
    Dataset source;
    Dataset target;
    Vector beta_source;
    Vector beta_target;
};

SynthData synth_generate(std::uint64_t seed, std::size_t d, std::size_t n_source, std::size_t n_target,
                         const SynthShift& shift);

struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Dataset& data);
    Sample apply(const Sample& s) const;
    Dataset apply(const Dataset& data) const;
};

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// Inputs shared by every expert family of one replication.
struct FamilyContext {
    Dataset source;
    Dataset target_train;
    MomentPair source_moments;
    MomentPair target_moments;  // jittered to positive definite when needed
    double target_jitter = 0.0;
};

FamilyContext make_context(const Dataset& source, const Dataset& target_train);

struct FamilyBuild {
    ExpertFamily family;
    bool converged = true;
    std::vector<std::string> dropped;  // "label: reason" for experts whose solver threw
};

/// Experts whose solver throws NumericError are left out and reported in
/// `dropped`; the build then counts as not converged. Throws if none remain.
FamilyBuild build_family(const FamilyContext& ctx, const ExperimentConfig& cfg, const std::string& method);

struct RunResult {
    std::string method;
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    std::vector<double> cumulative;  // length J, nondecreasing
    bool converged = true;
    std::vector<std::string> dropped;
};

struct ResultsTable {
    std::vector<std::string> methods;
    std::vector<std::size_t> checkpoints;
    std::string dataset;
    std::vector<std::vector<double>> mean;        // [checkpoint][method], raw means
    std::vector<std::vector<double>> normalized;  // row minimum exactly 1
};

struct ExperimentOutput {
    std::vector<RunResult> runs;  // ordered by (replication, method)
    ResultsTable table;
    bool all_converged = true;
    double max_target_jitter = 0.0;
    bool standardized = false;
    std::size_t dropped_experts = 0;
};

/// Replications run on `workers` threads; the output does not depend on it.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, const Dataset& source, const Dataset& target,
                                unsigned workers = 1);

/// Loads or generates the data named by cfg, then runs the experiment.
ExperimentOutput run_configured(const ExperimentConfig& cfg, unsigned workers = 1);

ResultsTable make_table(const std::vector<RunResult>& runs, const std::vector<std::string>& methods,
                        const std::vector<std::size_t>& checkpoints, const std::string& dataset);

/// Row normalization: the first minimum becomes exactly 1, the rest entry / min.
std::vector<double> normalize_row(const std::vector<double>& row);

struct OutputFiles {
    std::filesystem::path table;
    std::filesystem::path curves;
    std::filesystem::path runs;
    std::filesystem::path manifest;
};

/// Writes the table, the per-step mean/std curves, the raw runs and a
/// manifest that parse_config reads back. File names embed the seed.
OutputFiles emit_outputs(const ExperimentOutput& out, const ExperimentConfig& cfg,
                         const std::filesystem::path& out_dir);

std::vector<RunResult> read_runs(const std::filesystem::path& path);

std::string format_table(const ResultsTable& table);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace drda
