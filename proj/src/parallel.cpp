#include "lcfl/parallel.hpp"

#include <atomic>

namespace lcfl::parallel {

namespace {
std::atomic<bool> g_force_serial{false};
}

void set_force_serial(bool on) { g_force_serial.store(on, std::memory_order_relaxed); }

bool force_serial() { return g_force_serial.load(std::memory_order_relaxed); }

bool openmp_available() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace lcfl::parallel
