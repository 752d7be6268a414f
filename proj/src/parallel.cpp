#include "geomphase/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>

namespace geomphase::par {

static int read_thread_cap() {
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("GEOMPHASE_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return std::max(1, n);
}

int max_threads() {
    static const int cached = read_thread_cap();
    return cached;
}

Mode default_mode() { return Mode::openmp; }

}  // namespace geomphase::par
