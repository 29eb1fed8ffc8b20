#pragma once

namespace camadapt {

/// Apply the CAMADAPT_THREADS cap (if set) to OpenMP and pin Eigen's internal
/// GEMM to one thread. Every parallel loop in the library writes disjoint
/// output slots and reduces in a fixed serial order afterwards, so results are
/// byte-identical for any thread count; this only controls how many workers
/// run. Call once from main().
void configure_threads();

/// Worker count currently in effect (1 when built without OpenMP).
int max_threads();

}  // namespace camadapt
