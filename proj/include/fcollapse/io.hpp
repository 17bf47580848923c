#pragma once

// JSON and CSV encodings for every value that crosses the process boundary.
// Matrices are row-major nested arrays; item indices are 0-based.

#include <filesystem>
#include <span>
#include <string>

#include "json.hpp"

#include "fcollapse/equilibrium.hpp"
#include "fcollapse/experiment.hpp"
#include "fcollapse/extraction.hpp"
#include "fcollapse/model.hpp"
#include "fcollapse/simulate.hpp"

namespace fcollapse {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

/// Throws InvalidInput with the parser message on malformed text.
nlohmann::json parse_json_text(const std::string& text);
/// Throws IoError when unreadable, InvalidInput when malformed.
nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so a failed
/// write never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

void to_json(nlohmann::json& j, const Matrix& m);
void from_json(const nlohmann::json& j, Matrix& m);

void to_json(nlohmann::json& j, const ModelSpec& spec);
/// lambda, b and rho are required; p and m default to lambda's shape, mu0 to
/// zeros, sigma0 and sigma_w to identities.
void from_json(const nlohmann::json& j, ModelSpec& spec);

void to_json(nlohmann::json& j, const ValidationReport& report);

void to_json(nlohmann::json& j, const ConvergenceReport& report);
void from_json(const nlohmann::json& j, ConvergenceReport& report);
void to_json(nlohmann::json& j, const EquivalencePartition& partition);
void from_json(const nlohmann::json& j, EquivalencePartition& partition);
void to_json(nlohmann::json& j, const ClassReport& report);
void from_json(const nlohmann::json& j, ClassReport& report);

void to_json(nlohmann::json& j, const DimensionalityReport& report);
void from_json(const nlohmann::json& j, DimensionalityReport& report);
void to_json(nlohmann::json& j, const LoadingEstimate& estimate);
void from_json(const nlohmann::json& j, LoadingEstimate& estimate);
void to_json(nlohmann::json& j, const CrossBlockSummary& summary);
void from_json(const nlohmann::json& j, CrossBlockSummary& summary);

void to_json(nlohmann::json& j, const Thresholds& th);
void from_json(const nlohmann::json& j, Thresholds& th);
void to_json(nlohmann::json& j, const ScenarioConfig& config);
void from_json(const nlohmann::json& j, ScenarioConfig& config);
void to_json(nlohmann::json& j, const WaveRecord& record);
void from_json(const nlohmann::json& j, WaveRecord& record);
void to_json(nlohmann::json& j, const ExperimentReport& report);
void from_json(const nlohmann::json& j, ExperimentReport& report);

/// Header `subject,wave,item_1..item_p`, one row per (subject, wave).
std::string panel_to_csv(const TrajectoryPanel& panel);
/// Expects a complete subject x wave grid; row order is free.
TrajectoryPanel panel_from_csv(const std::string& text);
TrajectoryPanel read_panel_csv(const std::filesystem::path& path);

/// Two-column `index,value` listing (1-based index) for scree plots.
std::string scree_csv(std::span<const double> eigenvalues);

}  // namespace fcollapse
