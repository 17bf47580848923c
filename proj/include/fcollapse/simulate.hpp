#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fcollapse/model.hpp"

namespace fcollapse {

/// Simulated item responses indexed (subject, wave, item). Wave 0 is the
/// draw at eta^0.
struct TrajectoryPanel {
    std::size_t n_subjects = 0;
    std::size_t n_waves = 0;
    std::size_t p = 0;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    std::vector<double> observations;  // n_subjects * n_waves * p
    std::vector<double> latents;       // n_subjects * n_waves * m, or empty

    double observation(std::size_t subject, std::size_t wave, std::size_t item) const {
        return observations[(subject * n_waves + wave) * p + item];
    }
    double latent(std::size_t subject, std::size_t wave, std::size_t factor) const {
        return latents[(subject * n_waves + wave) * m + factor];
    }
    bool has_latents() const noexcept { return !latents.empty(); }

    bool operator==(const TrajectoryPanel&) const = default;
};

/// Draws n_subjects independent trajectories of n_waves waves. Subject s uses
/// its own random stream derived from (seed, s), so the panel is identical for
/// any thread count. Throws InvalidInput for a structurally invalid spec.
TrajectoryPanel simulate_panel(const ModelSpec& spec, std::size_t n_waves, std::size_t n_subjects,
                               std::uint64_t seed, bool keep_latents = false);

}  // namespace fcollapse
