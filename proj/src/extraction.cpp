#include "fcollapse/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fcollapse/errors.hpp"
#include "fcollapse/kernels.hpp"

namespace fcollapse {

namespace {

void require_symmetric(const Matrix& s, const char* op) {
    if (!s.is_square() || s.empty()) throw InvalidInput(std::string(op) + ": matrix must be square");
    if (asymmetry(s) > 1e-8) throw InvalidInput(std::string(op) + ": matrix is not symmetric");
}

}  // namespace

Matrix sample_covariance(const TrajectoryPanel& panel, std::size_t wave) {
    if (wave >= panel.n_waves) {
        throw InvalidInput("sample_covariance: wave " + std::to_string(wave) + " out of range (panel has " +
                           std::to_string(panel.n_waves) + " waves)");
    }
    if (panel.n_subjects < 2) throw InvalidInput("sample_covariance: need at least two subjects");
    return kernels::omp::covariance(
        kernels::RowView{panel.observations, panel.n_subjects, panel.p, panel.n_waves * panel.p, wave * panel.p});
}

Matrix sample_covariance(std::span<const double> rows, std::size_t n, std::size_t p) {
    if (n < 2) throw InvalidInput("sample_covariance: need at least two rows");
    if (rows.size() != n * p || p == 0) throw InvalidInput("sample_covariance: data size does not match n x p");
    return kernels::omp::covariance(kernels::RowView{rows, n, p, p, 0});
}

std::string_view to_string(DimensionMethod method) {
    switch (method) {
        case DimensionMethod::reduced_rank: return "reduced-rank";
        case DimensionMethod::parallel_analysis: return "parallel-analysis";
        case DimensionMethod::gap_ratio: return "gap-ratio";
    }
    return "unknown";
}

DimensionMethod parse_dimension_method(std::string_view text) {
    if (text == "reduced-rank") return DimensionMethod::reduced_rank;
    if (text == "parallel-analysis") return DimensionMethod::parallel_analysis;
    if (text == "gap-ratio") return DimensionMethod::gap_ratio;
    throw InvalidInput("unknown dimensionality method '" + std::string(text) + "'");
}

double parallel_analysis_threshold(std::size_t n, std::size_t p, std::size_t replicates, double percentile,
                                   std::uint64_t seed) {
    if (n < 2 || p == 0) throw InvalidInput("parallel analysis: need n >= 2 and p >= 1");
    if (replicates == 0) throw InvalidInput("parallel analysis: need at least one replicate");
    if (!(percentile >= 0.0 && percentile <= 100.0)) throw InvalidInput("parallel analysis: percentile outside [0, 100]");
    std::vector<double> leading = kernels::omp::null_leading_eigenvalues(n, p, replicates, seed);
    std::sort(leading.begin(), leading.end());
    const double pos = percentile / 100.0 * static_cast<double>(leading.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, leading.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return leading[lo] + frac * (leading[hi] - leading[lo]);
}

DimensionalityReport estimate_dimensionality(const Matrix& s, DimensionMethod method, const DimensionParams& params) {
    require_symmetric(s, "estimate_dimensionality");
    const std::size_t p = s.rows();
    DimensionalityReport report;
    report.method = method;
    report.eigenvalues = symmetric_eigenvalues(s);

    switch (method) {
        case DimensionMethod::reduced_rank: {
            report.threshold_used = params.rel_tol;
            report.estimated_factors = numeric_rank(s - Matrix::identity(p), params.rel_tol);
            break;
        }
        case DimensionMethod::parallel_analysis: {
            const double threshold =
                params.threshold ? *params.threshold
                                 : parallel_analysis_threshold(params.n_subjects, p, params.replicates,
                                                               params.percentile, params.seed);
            report.threshold_used = threshold;
            report.estimated_factors = static_cast<std::size_t>(
                std::count_if(report.eigenvalues.begin(), report.eigenvalues.end(),
                              [threshold](double v) { return v > threshold; }));
            break;
        }
        case DimensionMethod::gap_ratio: {
            const std::size_t last = std::min(params.max_k, p - 1);
            double best = 0.0;
            std::size_t best_k = 0;
            for (std::size_t k = 1; k <= last; ++k) {
                const double num = report.eigenvalues[k - 1];
                const double den = report.eigenvalues[k];
                const double ratio = den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::max() : 0.0);
                if (ratio > best) {
                    best = ratio;
                    best_k = k;
                }
            }
            report.estimated_factors = best_k;
            report.threshold_used = best;
            break;
        }
    }
    return report;
}

LoadingEstimate extract_loadings(const Matrix& s, std::size_t k) {
    require_symmetric(s, "extract_loadings");
    const std::size_t p = s.rows();
    if (k == 0 || k > p) throw InvalidInput("extract_loadings: k must lie in [1, p]");
    const SymmetricEigen eig = symmetric_eigen(s - Matrix::identity(p));

    LoadingEstimate out;
    out.loadings = Matrix(p, k);
    for (std::size_t c = 0; c < k; ++c) {
        const double value = std::max(0.0, eig.values[c]);
        const double root = std::sqrt(value);
        std::size_t pivot = 0;
        for (std::size_t i = 1; i < p; ++i)
            if (std::abs(eig.vectors(i, c)) > std::abs(eig.vectors(pivot, c))) pivot = i;
        const double sign = eig.vectors(pivot, c) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < p; ++i) out.loadings(i, c) = sign * root * eig.vectors(i, c);
        out.variance_explained.push_back(value);
    }
    return out;
}

CrossBlockSummary cross_block_covariance(const Matrix& s, std::span<const std::size_t> block_a,
                                         std::span<const std::size_t> block_b) {
    if (!s.is_square()) throw InvalidInput("cross_block_covariance: matrix must be square");
    if (block_a.empty() || block_b.empty()) throw InvalidInput("cross_block_covariance: empty block");
    for (std::size_t i : block_a) {
        if (i >= s.rows()) throw InvalidInput("cross_block_covariance: index out of range");
        if (std::find(block_b.begin(), block_b.end(), i) != block_b.end())
            throw InvalidInput("cross_block_covariance: blocks overlap at item " + std::to_string(i));
    }
    for (std::size_t j : block_b)
        if (j >= s.rows()) throw InvalidInput("cross_block_covariance: index out of range");

    CrossBlockSummary out;
    double sum = 0.0;
    for (std::size_t i : block_a) {
        for (std::size_t j : block_b) {
            const double v = std::abs(s(i, j));
            out.max_abs = std::max(out.max_abs, v);
            sum += v;
        }
    }
    out.mean_abs = sum / static_cast<double>(block_a.size() * block_b.size());
    return out;
}

CrossBlockSummary cross_block_covariance(const Matrix& s, const std::vector<ItemBlock>& blocks) {
    CrossBlockSummary out;
    double weighted = 0.0;
    double pairs = 0.0;
    for (std::size_t a = 0; a < blocks.size(); ++a) {
        for (std::size_t b = a + 1; b < blocks.size(); ++b) {
            const CrossBlockSummary part = cross_block_covariance(s, blocks[a].items, blocks[b].items);
            const double count = static_cast<double>(blocks[a].items.size() * blocks[b].items.size());
            out.max_abs = std::max(out.max_abs, part.max_abs);
            weighted += part.mean_abs * count;
            pairs += count;
        }
    }
    if (pairs > 0.0) out.mean_abs = weighted / pairs;
    return out;
}

}  // namespace fcollapse
