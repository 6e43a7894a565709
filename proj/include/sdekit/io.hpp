#pragma once

#include "sdekit/discovery.hpp"
#include "sdekit/model.hpp"
#include "sdekit/reliability.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sdekit {

/// Shortest exact decimal representation ("%.17g") used by every CSV writer,
/// so identical runs produce byte-identical files.
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view data);

/// Hash of the canonical (sorted-key) dump of a JSON document, as a 16-char
/// lowercase hex string. Embedded in output files for provenance.
std::string config_hash_hex(const nlohmann::json& j);

nlohmann::json term_to_json(const BasisTerm& term, double weight);
std::pair<BasisTerm, double> term_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const SdeModel& model);
SdeModel model_from_json(const nlohmann::json& j);

void save_model(const SdeModel& model, const std::filesystem::path& file);
/// Accepts either a bare model document or a discovery document (unwraps its
/// "model" section).
SdeModel load_model(const std::filesystem::path& file);

/// File-name-safe equation label: "drift_x2", "diffusion_x1", ...
std::string equation_slug(const EquationRecord& record);

nlohmann::json discovered_to_json(const DiscoveredSde& discovered,
                                  const nlohmann::json& provenance);
void save_discovered(const DiscoveredSde& discovered, const nlohmann::json& provenance,
                     const std::filesystem::path& file);

void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& file);

/// Writes path_<j>.csv files plus manifest.json into `dir`.
void write_ensemble(const std::filesystem::path& dir, const Ensemble& ens,
                    const std::string& config_hash = {});
Ensemble read_ensemble(const std::filesystem::path& dir);

void write_curve_csv(const std::filesystem::path& file, const FailureCurve& curve,
                     const std::string& config_hash = {});

void write_pip_csv(const std::filesystem::path& file, const EquationRecord& record,
                   const std::string& config_hash = {});

void write_elbo_csv(const std::filesystem::path& file, const std::vector<double>& trace,
                    const std::string& config_hash = {});

void write_targets_csv(const std::filesystem::path& file, const TargetSet& targets,
                       const std::string& config_hash = {});

nlohmann::json comparison_to_json(const CurveComparison& cmp, const nlohmann::json& provenance_a,
                                  const nlohmann::json& provenance_b);

} // namespace sdekit
