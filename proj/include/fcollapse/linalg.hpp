#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fcollapse/matrix.hpp"

namespace fcollapse {

/// Relative tolerance for rank and singularity decisions on analytically
/// specified matrices.
inline constexpr double kDefaultRankTol = 1e-8;

Matrix mat_mul(const Matrix& a, const Matrix& b);

/// a^t by repeated squaring; t = 0 gives the identity. Throws
/// NumericFailure if the power overflows.
Matrix mat_pow(const Matrix& a, std::uint64_t t);

struct EigenOptions {
    /// QR sweeps allowed per eigenvalue before giving up.
    int max_iterations_per_value = 100;
};

/// All eigenvalues with multiplicity, ordered by descending modulus, then
/// descending real part, then descending imaginary part. Orders 1 and 2 use
/// the closed form; larger orders go through a real Schur reduction.
std::vector<ComplexScalar> eigenvalues(const Matrix& a, const EigenOptions& options = {});

/// Sorts in place using the eigenvalue ordering convention above.
void sort_eigenvalues(std::vector<ComplexScalar>& values);

/// Singular values in descending order.
std::vector<double> singular_values(const Matrix& a);

/// Number of singular values above rel_tol * (largest singular value).
std::size_t numeric_rank(const Matrix& a, double rel_tol = kDefaultRankTol);

/// 2-norm condition number; +inf for exactly singular input.
double condition_number(const Matrix& a);

/// Throws SingularMatrix when the condition number exceeds 1 / rel_tol.
Matrix invert(const Matrix& a, double rel_tol = kDefaultRankTol);

double determinant(const Matrix& a);

/// order - rank(a - lambda I). Throws InvalidInput if lambda is not an
/// eigenvalue at this tolerance (i.e. a - lambda I has full numeric rank).
std::size_t geometric_multiplicity(const Matrix& a, double lambda, double rel_tol = kDefaultRankTol);

struct EigenCluster {
    ComplexScalar value;
    std::size_t algebraic = 0;
    /// Only computed for real clusters.
    std::optional<std::size_t> geometric;
};

struct EigenReport {
    std::vector<ComplexScalar> values;
    std::vector<EigenCluster> clusters;
};

/// Groups eigenvalues lying within cluster_tol of each other and attaches
/// multiplicities. Geometric multiplicity is clamped to [1, algebraic].
EigenReport eigen_report(const Matrix& a, double cluster_tol = 1e-9, double rel_tol = kDefaultRankTol);

struct SymmetricEigen {
    std::vector<double> values;  // descending
    Matrix vectors;              // column k pairs with values[k]
};

/// Eigen-decomposition of the symmetric part (a + a^T) / 2.
SymmetricEigen symmetric_eigen(const Matrix& a);

/// Descending eigenvalues of the symmetric part.
std::vector<double> symmetric_eigenvalues(const Matrix& a);

/// Symmetric square root S with S*S = a. Eigenvalues in [-clip_tol, 0) are
/// clipped to zero; anything more negative throws InvalidInput.
Matrix symmetric_sqrt(const Matrix& a, double clip_tol = 1e-10);

/// True when a is symmetric within sym_tol and no eigenvalue is below -psd_tol.
bool is_symmetric_psd(const Matrix& a, double sym_tol = 1e-12, double psd_tol = 1e-10);

}  // namespace fcollapse
