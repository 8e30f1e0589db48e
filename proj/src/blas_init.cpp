// OpenBLAS selects its compute kernel inside a library constructor based on
// CPUID. Hypervisors that mask the processor model make it fall back to a
// generic SSE kernel even when AVX-512 units exist, which costs ~3.5x on the
// dense layers. With the static archive, a higher-priority constructor can
// steer the pick through OPENBLAS_CORETYPE before OpenBLAS initializes.
// A user-provided OPENBLAS_CORETYPE always wins.
//
// blas_single_thread() lives here so every binary that uses the trainer
// pulls this object file in, keeping the constructor in the link.

#include <cstdlib>

extern "C" void openblas_set_num_threads(int);

namespace avsim {

void blas_single_thread() { openblas_set_num_threads(1); }

}  // namespace avsim

#if defined(__x86_64__) || defined(__i386__)
#include <cpuid.h>

namespace {

__attribute__((constructor(101))) void pick_openblas_core() {
    if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
    unsigned a = 0, b = 0, c = 0, d = 0;
    if (__get_cpuid_count(7, 0, &a, &b, &c, &d) && (b & (1u << 16))) {
        setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 1);  // AVX512F present
    }
}

}  // namespace

#endif
