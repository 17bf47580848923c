#include "fcollapse/simulate.hpp"

#include "fcollapse/errors.hpp"
#include "fcollapse/kernels.hpp"

namespace fcollapse {

TrajectoryPanel simulate_panel(const ModelSpec& spec, std::size_t n_waves, std::size_t n_subjects,
                               std::uint64_t seed, bool keep_latents) {
    if (n_waves == 0 || n_subjects == 0) throw InvalidInput("simulate_panel: waves and subjects must be positive");
    require_structurally_valid(spec);

    const kernels::SimulationPlan plan = kernels::make_simulation_plan(spec, n_waves, seed);
    TrajectoryPanel panel;
    panel.n_subjects = n_subjects;
    panel.n_waves = n_waves;
    panel.p = spec.p;
    panel.m = spec.m;
    panel.seed = seed;
    panel.observations.resize(n_subjects * n_waves * spec.p);
    if (keep_latents) panel.latents.resize(n_subjects * n_waves * spec.m);
    kernels::omp::simulate(plan, n_subjects, panel.observations, panel.latents);
    return panel;
}

}  // namespace fcollapse
