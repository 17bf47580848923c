#pragma once

// Data-parallel inner loops. Each kernel exists twice: `serial` is the
// straightforward reference kept for tests and benchmarks, `omp` is the
// OpenMP version the library calls. Both produce the same values for the
// same inputs regardless of thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fcollapse/matrix.hpp"

namespace fcollapse {

struct ModelSpec;

namespace kernels {

/// Everything a subject simulation needs, with the covariance square roots
/// factored once up front.
struct SimulationPlan {
    std::size_t p = 0;
    std::size_t m = 0;
    std::size_t n_waves = 0;
    std::uint64_t seed = 0;
    Matrix lambda;
    Matrix b;
    std::vector<double> mu0;
    Matrix sigma0_root;
    Matrix sigma_w_root;
    std::vector<double> noise_scale;  // rho^(w/2) per wave
};

SimulationPlan make_simulation_plan(const ModelSpec& spec, std::size_t n_waves, std::uint64_t seed);

/// One subject's trajectory. Draw order per wave: m latent normals (eta^0
/// at wave 0, W^w afterwards), then p measurement normals.
/// `observations` has n_waves * p slots, `latents` n_waves * m or is empty.
void simulate_subject(const SimulationPlan& plan, std::size_t subject, std::span<double> observations,
                      std::span<double> latents);

/// Strided view of n rows of p values: row s starts at offset + s * stride.
struct RowView {
    std::span<const double> data;
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t stride = 0;
    std::size_t offset = 0;

    double at(std::size_t row, std::size_t col) const { return data[offset + row * stride + col]; }
};

/// Leading eigenvalue of the sample covariance of an n x p standard-normal
/// draw, one per replicate.
double null_leading_eigenvalue(std::size_t n, std::size_t p, std::uint64_t seed, std::size_t replicate);

namespace serial {
void simulate(const SimulationPlan& plan, std::size_t n_subjects, std::span<double> observations,
              std::span<double> latents);
/// Single-pass co-moment (Welford) update, n - 1 denominator.
Matrix covariance(const RowView& rows);
std::vector<double> null_leading_eigenvalues(std::size_t n, std::size_t p, std::size_t replicates,
                                             std::uint64_t seed);
}  // namespace serial

namespace omp {
void simulate(const SimulationPlan& plan, std::size_t n_subjects, std::span<double> observations,
              std::span<double> latents);
/// Centred two-pass covariance over fixed row chunks.
Matrix covariance(const RowView& rows);
std::vector<double> null_leading_eigenvalues(std::size_t n, std::size_t p, std::size_t replicates,
                                             std::uint64_t seed);
}  // namespace omp

}  // namespace kernels
}  // namespace fcollapse
