#pragma once

#if defined(__SSE__) || defined(_M_X64)
#include <xmmintrin.h>
#define REFSIG_HAS_MXCSR 1
#endif

namespace refsig::nn {

// Flushes subnormal floats to zero for the guard's lifetime. GELU tails and
// small Adam updates produce subnormals that are two orders of magnitude
// slower on x86; flushing them changes results only below 1e-38.
class DenormalGuard {
public:
    DenormalGuard() {
#ifdef REFSIG_HAS_MXCSR
        saved_ = _mm_getcsr();
        _mm_setcsr(saved_ | 0x8040u);  // FTZ | DAZ
#endif
    }
    ~DenormalGuard() {
#ifdef REFSIG_HAS_MXCSR
        _mm_setcsr(saved_);
#endif
    }
    DenormalGuard(const DenormalGuard&) = delete;
    DenormalGuard& operator=(const DenormalGuard&) = delete;

private:
    unsigned saved_ = 0;
};

}  // namespace refsig::nn
