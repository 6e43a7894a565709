#pragma once

#include "sdekit/builtin.hpp"
#include "sdekit/discovery.hpp"
#include "sdekit/io.hpp"
#include "sdekit/reliability.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sdekit {

/// Declarative run description parsed from a JSON config file. State indices
/// in config files are 1-based, matching the x1..xm column naming; they are
/// converted to 0-based on parse. Unknown keys are rejected.
struct RunConfig {
    std::string system;                ///< Built-in name; empty when a file is given.
    std::filesystem::path model_file;  ///< Alternative to `system`.

    struct Simulate {
        double dt = 0.001;
        double horizon = 1.0;
        std::size_t n_paths = 100;
        std::uint64_t seed = 1;
        double noise_percent = 0.0;
        std::vector<int> noise_states;     ///< 0-based after parse; empty = all.
        std::optional<Eigen::VectorXd> x0; ///< Default: the system's own x0.
    } simulate;

    DiscoveryConfig discovery; ///< dictionary + vb + discovery sections combined.

    struct Reliability {
        bool enabled = false;
        double threshold = 0.0;
        int state_index = 0; ///< 0-based after parse.
        bool use_abs = false;
        double horizon = 30.0; ///< Config key "T".
        std::optional<double> dt; ///< Defaults to simulate.dt.
        std::size_t n_paths = 2000;
        std::uint64_t seed = 1;
        double report_stride = 0.1;
        std::optional<Eigen::VectorXd> x0; ///< Defaults to simulate x0.
    } reliability;

    std::filesystem::path output_dir = "out";
    unsigned threads = 0;

    nlohmann::json raw; ///< Canonical parsed document, hashed for provenance.

    std::string hash() const { return config_hash_hex(raw); }
    double reliability_dt() const { return reliability.dt.value_or(simulate.dt); }
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& file);

/// Applies a dotted-path override ("simulate.seed=7") onto a JSON document
/// before parsing. The value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Resolves the system under study and its default initial state (the
/// built-in's x0, or the origin for file-loaded models).
std::pair<SdeModel, Eigen::VectorXd> resolve_system(const RunConfig& cfg);

/// Provenance block embedded in every output: config hash plus the config.
nlohmann::json provenance_json(const RunConfig& cfg);

/// Stage 1: simulate the configured ensemble and apply measurement noise.
Ensemble run_simulate(const RunConfig& cfg);

/// Stage 2: per-equation discovery on an ensemble.
DiscoveredSde run_discover(const RunConfig& cfg, const Ensemble& ens);

/// Stage 3: failure curve of one model under the configured limit state.
FailureCurve run_reliability(const RunConfig& cfg, const SdeModel& model);

/// Per-stage writers, so a failed later stage retains earlier artifacts.
/// Returns the directory/file written.
std::filesystem::path write_simulate_outputs(const RunConfig& cfg, const Ensemble& ens);
std::filesystem::path write_discover_outputs(const RunConfig& cfg, const DiscoveredSde& disc);
std::filesystem::path write_curve_output(const RunConfig& cfg, const FailureCurve& curve,
                                         const std::string& stem);
std::filesystem::path write_comparison_output(const RunConfig& cfg, const CurveComparison& cmp,
                                              const nlohmann::json& provenance_a,
                                              const nlohmann::json& provenance_b);

struct PipelineResult {
    Ensemble ensemble;
    DiscoveredSde discovered;
    std::optional<FailureCurve> curve_true;
    std::optional<FailureCurve> curve_discovered;
    std::optional<CurveComparison> comparison;
};

/// All three stages in memory (no files). When reliability is configured both
/// the reference and the discovered models are propagated and compared.
PipelineResult run_pipeline(const RunConfig& cfg);

} // namespace sdekit
