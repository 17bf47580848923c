#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcollapse/matrix.hpp"

namespace fcollapse {

/// Tolerance for deciding that an eigenvalue equals 1.
inline constexpr double kDefaultEigTol = 1e-9;
/// Entries at or below this magnitude are structural zeros of B.
inline constexpr double kDefaultZeroTol = 1e-12;
inline constexpr double kDefaultLimitAbsTol = 1e-12;
inline constexpr int kDefaultMaxDoublings = 64;

enum class ConvergenceStatus { converges, diverges_unbounded, diverges_oscillates };

std::string_view to_string(ConvergenceStatus status);
ConvergenceStatus parse_convergence_status(std::string_view text);

/// Behaviour of B^t as t grows.
///
/// B^t converges iff every eigenvalue is strictly inside the unit circle or
/// equals 1, and the eigenvalue 1 (if present) is semisimple. When it does,
/// `limit` is the idempotent B* and `asymptotic_rank` its rank, which is
/// also the multiplicity of eigenvalue 1 and the number of factors that
/// survive in equilibrium.
struct ConvergenceReport {
    std::vector<ComplexScalar> eigenvalues;
    ConvergenceStatus status = ConvergenceStatus::converges;
    std::string reason;
    std::optional<Matrix> limit;
    std::optional<std::size_t> asymptotic_rank;
    /// Non-empty when some eigenvalue sits in the near-critical band
    /// (modulus within tol of 1 but not equal to 1).
    std::string warning;

    bool converges() const noexcept { return status == ConvergenceStatus::converges; }
    bool operator==(const ConvergenceReport&) const = default;
};

struct LimitOptions {
    double abs_tol = kDefaultLimitAbsTol;
    int max_doublings = kDefaultMaxDoublings;
};

ConvergenceReport classify_convergence(const Matrix& b, double tol = kDefaultEigTol,
                                       const LimitOptions& limit = {});

/// lim B^t by repeated squaring until successive squarings differ by less
/// than abs_tol (Frobenius). Throws NumericFailure if the budget runs out.
Matrix limit_matrix(const Matrix& b, double abs_tol = kDefaultLimitAbsTol,
                    int max_doublings = kDefaultMaxDoublings);

/// Rank of the equilibrium factor space. Throws InvalidInput for a
/// non-convergent B.
std::size_t asymptotic_rank(const Matrix& b, double tol = kDefaultEigTol);

/// Factors grouped by mutual causal reachability: i and j share a class when
/// they are connected through nonzero entries of B (either direction).
struct EquivalencePartition {
    std::vector<std::vector<std::size_t>> classes;  // 0-based, each sorted
    /// permutation[k] is the original index placed at position k; applying
    /// it to B gives block-diagonal form with one block per class.
    std::vector<std::size_t> permutation;

    bool operator==(const EquivalencePartition&) const = default;
};

EquivalencePartition equivalence_classes(const Matrix& b, double zero_tol = kDefaultZeroTol);

enum class BoundKind { singleton_unit, singleton_decay, pair, positive_perron, general };

std::string_view to_string(BoundKind kind);
BoundKind parse_bound_kind(std::string_view text);

struct ClassReport {
    std::vector<std::size_t> indices;
    Matrix block;
    BoundKind bound_kind = BoundKind::general;
    /// "≤1", "exact k" or "none".
    std::string rank_bound;
    std::optional<std::size_t> exact_rank;
    bool convergent = false;

    bool operator==(const ClassReport&) const = default;
};

std::vector<ClassReport> block_decompose(const Matrix& b, const EquivalencePartition& partition,
                                         double tol = kDefaultEigTol, double zero_tol = kDefaultZeroTol);

}  // namespace fcollapse
