#pragma once

#include <cstdint>
#include <random>

namespace fcollapse {

/// Thread cap for OpenMP kernels. Reads FACTOR_COLLAPSE_THREADS once
/// (0 or unset means the OpenMP default) unless overridden.
int worker_threads();

/// Override the thread cap for this process; 0 restores the environment
/// setting.
void set_worker_threads(int n);

/// Independent engine for (seed, stream, tag). Subjects, replicates and so on
/// each get their own stream so results do not depend on thread count or
/// scheduling order.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint32_t tag);

namespace stream_tag {
inline constexpr std::uint32_t kSimulation = 0x53494d55;      // "SIMU"
inline constexpr std::uint32_t kParallelAnalysis = 0x50414e41;  // "PANA"
inline constexpr std::uint32_t kScenario = 0x5343454e;        // "SCEN"
}  // namespace stream_tag

}  // namespace fcollapse
