#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fcollapse/equilibrium.hpp"
#include "fcollapse/linalg.hpp"
#include "fcollapse/matrix.hpp"

namespace fcollapse {

struct ItemBlock {
    std::string label;
    std::vector<std::size_t> items;  // 0-based item indices

    bool operator==(const ItemBlock&) const = default;
};

/// Dynamic factor model
///
///   eta^t = B eta^{t-1} + W^t,   W^t ~ N(0, rho^t * sigma_w)
///   Y^t   = lambda eta^t + eps,  eps ~ N(0, I_p)
///
/// with eta^0 ~ N(mu0, sigma0). b(i, j) is the effect of factor j at t-1 on
/// factor i at t. Measurement error variance is fixed at 1 per item.
struct ModelSpec {
    std::size_t p = 0;  // items
    std::size_t m = 0;  // factors
    Matrix lambda;      // p x m loadings
    Matrix b;           // m x m transition
    std::vector<double> mu0;
    Matrix sigma0;
    Matrix sigma_w;
    double rho = 1.0;  // noise decay per wave, in (0, 1]
    std::vector<ItemBlock> item_blocks;

    /// mu0 = 0, sigma0 = I, sigma_w = I.
    static ModelSpec with_defaults(Matrix lambda, Matrix b, double rho);

    bool operator==(const ModelSpec&) const = default;
};

/// Loadings where consecutive runs of `items_per_factor` items load `loading`
/// on one factor each, plus matching item blocks.
Matrix block_loadings(std::size_t m, std::size_t items_per_factor, double loading);
std::vector<ItemBlock> consecutive_blocks(std::size_t m, std::size_t items_per_factor,
                                          const std::vector<std::string>& labels = {});

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::map<std::string, double> measured;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    const ValidationCheck* find(const std::string& name) const;
    bool passed(const std::string& name) const;
    /// Dimensions, PSD covariances, decay range and item blocks; enough to
    /// simulate and compute covariances.
    bool structurally_valid() const;
    bool all_passed() const;
};

namespace check {
inline constexpr const char* kDims = "dims-consistent";
inline constexpr const char* kSigma0Psd = "sigma0-psd";
inline constexpr const char* kSigmaWPsd = "sigma-w-psd";
inline constexpr const char* kDecayRange = "decay-range";
inline constexpr const char* kItemBlocks = "item-blocks";
inline constexpr const char* kInvertible = "b-invertible";
/// rho < (min |eigenvalue of B|)^2: the sum of B^{-k} W^k converges.
inline constexpr const char* kDecaySufficient = "decay-sufficient";
/// rho < 1 and B^t convergent: the covariance recursion settles.
inline constexpr const char* kIterationSufficient = "iteration-sufficient";
}  // namespace check

/// Never throws for a malformed spec; failures are reported per check.
ValidationReport validate_spec(const ModelSpec& spec, double rel_tol = kDefaultRankTol);

/// Throws InvalidInput naming the first failed structural check.
void require_structurally_valid(const ModelSpec& spec);

/// Exact Cov(eta^t) from sigma^t = B sigma^{t-1} B^T + rho^t sigma_w.
Matrix latent_covariance(const ModelSpec& spec, std::size_t t);

/// Exact Cov(Y^t) = lambda Cov(eta^t) lambda^T + I_p.
Matrix population_covariance(const ModelSpec& spec, std::size_t t);

/// lambda sigma lambda^T + I_p for an arbitrary latent covariance.
Matrix item_covariance(const ModelSpec& spec, const Matrix& latent);

struct EquilibriumCovariance {
    Matrix covariance;  // p x p
    Matrix latent;      // m x m
    std::size_t waves = 0;
    double last_change = 0.0;
};

/// Runs the latent recursion until the Frobenius change between waves drops
/// below abs_tol. Requires convergent B^t and rho < 1 (InvalidInput
/// otherwise); throws NoEquilibrium when max_waves is exhausted.
EquilibriumCovariance equilibrium_covariance(const ModelSpec& spec, double abs_tol = 1e-12,
                                             std::size_t max_waves = 100000, double eig_tol = kDefaultEigTol);

}  // namespace fcollapse
