#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fcollapse/equilibrium.hpp"
#include "fcollapse/extraction.hpp"
#include "fcollapse/model.hpp"

namespace fcollapse {

struct Thresholds {
    double rank_rel_tol = kDefaultRankTol;
    double eig_tol = kDefaultEigTol;
    double zero_tol = kDefaultZeroTol;
    double equilibrium_abs_tol = 1e-12;
    std::size_t max_waves = 100000;
    std::size_t pa_replicates = 200;
    double pa_percentile = 95.0;
    std::size_t gap_max_k = 5;

    bool operator==(const Thresholds&) const = default;
};

struct ScenarioConfig {
    std::string name;
    ModelSpec spec;
    std::vector<std::size_t> wave_schedule;  // non-empty, strictly increasing
    std::size_t n_subjects = 0;
    std::uint64_t seed = 0;
    Thresholds thresholds;

    /// Throws InvalidInput if the schedule or subject count is unusable.
    void validate() const;
    bool operator==(const ScenarioConfig&) const = default;
};

struct WaveRecord {
    std::size_t wave = 0;
    std::size_t population_rank = 0;
    std::size_t est_reduced = 0;
    std::size_t est_parallel = 0;
    std::size_t est_gap = 0;
    std::vector<double> population_leading;  // top two eigenvalues of Cov - I
    std::vector<double> sample_leading;      // top two eigenvalues of S
    CrossBlockSummary population_cross;
    CrossBlockSummary sample_cross;

    bool operator==(const WaveRecord&) const = default;
};

struct ExperimentReport {
    std::string scenario;
    std::uint64_t seed = 0;
    std::size_t n_subjects = 0;
    std::vector<WaveRecord> waves;
    ConvergenceReport convergence;
    EquivalencePartition partition;
    std::vector<ClassReport> classes;
    double parallel_threshold = 0.0;
    std::optional<std::size_t> asymptotic_rank;
    /// First scheduled wave whose population dimensionality equals the
    /// asymptotic rank.
    std::optional<std::size_t> collapse_wave;
    std::string verdict;

    bool operator==(const ExperimentReport&) const = default;
};

/// Population and sample dimensionality at every scheduled wave, plus the
/// structural analysis of B. A divergent B still produces per-wave records;
/// the verdict says so.
ExperimentReport run_collapse_experiment(const ScenarioConfig& config);

/// figure1, identity, positive-block, mixed-sign, anxiety-depression.
ScenarioConfig builtin_scenario(const std::string& name);
const std::vector<std::string>& builtin_scenario_names();

/// Strictly positive m x m matrix scaled to spectral radius 1.
Matrix random_positive_unit_radius(std::size_t m, std::uint64_t seed, std::uint64_t stream = 0);

enum class ReportFormat { json, csv };

std::string report_to_csv(const ExperimentReport& report);
std::string report_to_json_text(const ExperimentReport& report);
ExperimentReport report_from_json_text(const std::string& text);

/// Throws IoError (with the path) when the file cannot be written.
void write_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& destination);

/// `<scenario>_<seed>`.
std::string report_stem(const ExperimentReport& report);

}  // namespace fcollapse
