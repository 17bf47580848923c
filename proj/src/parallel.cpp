#include "fcollapse/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fcollapse {

namespace {

std::atomic<int> g_override{0};

int env_threads() {
    static const int value = [] {
        const char* raw = std::getenv("FACTOR_COLLAPSE_THREADS");
        if (raw == nullptr || *raw == '\0') return 0;
        try {
            return std::max(0, std::stoi(raw));
        } catch (const std::exception&) {
            return 0;
        }
    }();
    return value;
}

}  // namespace

int worker_threads() {
    int n = g_override.load();
    if (n <= 0) n = env_threads();
#ifdef _OPENMP
    if (n <= 0) n = omp_get_max_threads();
#else
    n = 1;
#endif
    return n;
}

void set_worker_threads(int n) { g_override.store(n < 0 ? 0 : n); }

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32U), tag};
    return std::mt19937_64(seq);
}

}  // namespace fcollapse
