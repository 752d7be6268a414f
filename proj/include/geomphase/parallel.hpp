#pragma once

namespace geomphase::par {

/// Execution policy for the data-parallel kernels. Every kernel has a plain
/// serial loop and an OpenMP loop over independent output slots; both produce
/// bit-identical results (no cross-thread reductions).
enum class Mode { serial, openmp };

/// Thread cap: min(omp_get_max_threads(), $GEOMPHASE_THREADS when set).
int max_threads();

Mode default_mode();

}  // namespace geomphase::par
