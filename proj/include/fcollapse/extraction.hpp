#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fcollapse/linalg.hpp"
#include "fcollapse/matrix.hpp"
#include "fcollapse/model.hpp"
#include "fcollapse/simulate.hpp"

namespace fcollapse {

/// Unbiased covariance of the p items at one wave. Needs at least two
/// subjects; throws InvalidInput for an out-of-range wave.
Matrix sample_covariance(const TrajectoryPanel& panel, std::size_t wave);

/// Same, for n rows of p values stored row-major.
Matrix sample_covariance(std::span<const double> rows, std::size_t n, std::size_t p);

enum class DimensionMethod { reduced_rank, parallel_analysis, gap_ratio };

std::string_view to_string(DimensionMethod method);
DimensionMethod parse_dimension_method(std::string_view text);

struct DimensionParams {
    /// reduced-rank: singular values of S - I above rel_tol * largest count.
    double rel_tol = kDefaultRankTol;
    /// parallel analysis: sample size the noise replicates are matched to.
    std::size_t n_subjects = 1000;
    std::size_t replicates = 200;
    double percentile = 95.0;
    std::uint64_t seed = 42;
    /// Reuse a previously computed noise threshold (same n, p).
    std::optional<double> threshold;
    /// gap-ratio: largest k considered.
    std::size_t max_k = 5;
};

struct DimensionalityReport {
    std::vector<double> eigenvalues;  // of S, descending
    DimensionMethod method = DimensionMethod::reduced_rank;
    std::size_t estimated_factors = 0;
    /// reduced-rank: the relative tolerance; parallel analysis: the noise
    /// eigenvalue percentile; gap-ratio: the winning ratio.
    double threshold_used = 0.0;

    bool operator==(const DimensionalityReport&) const = default;
};

/// Throws InvalidInput when S is not square or is asymmetric beyond 1e-8.
DimensionalityReport estimate_dimensionality(const Matrix& s, DimensionMethod method,
                                             const DimensionParams& params = {});

/// `percentile` of the leading eigenvalue of pure N(0, I_p) sample
/// covariances at sample size n (linear interpolation between order
/// statistics).
double parallel_analysis_threshold(std::size_t n, std::size_t p, std::size_t replicates, double percentile,
                                   std::uint64_t seed);

struct LoadingEstimate {
    Matrix loadings;  // p x k
    std::vector<double> variance_explained;

    bool operator==(const LoadingEstimate&) const = default;
};

/// Principal-axis loadings from S - I: the top-k eigenvectors, each scaled by
/// the square root of its eigenvalue clipped at zero. Each column is signed so
/// its largest-magnitude entry is positive.
LoadingEstimate extract_loadings(const Matrix& s, std::size_t k);

struct CrossBlockSummary {
    double max_abs = 0.0;
    double mean_abs = 0.0;

    bool operator==(const CrossBlockSummary&) const = default;
};

/// Covariance magnitudes over every pair (i in a, j in b). Blocks must be
/// disjoint, non-empty and in range.
CrossBlockSummary cross_block_covariance(const Matrix& s, std::span<const std::size_t> block_a,
                                         std::span<const std::size_t> block_b);

/// Pooled over every pair of distinct blocks; zero when fewer than two blocks.
CrossBlockSummary cross_block_covariance(const Matrix& s, const std::vector<ItemBlock>& blocks);

}  // namespace fcollapse
