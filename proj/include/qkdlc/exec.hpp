#pragma once

namespace qkdlc {

// Worker count for the OpenMP kernels: hardware threads, capped by the
// QKDLC_THREADS environment variable when set. Always >= 1.
int thread_count();

}  // namespace qkdlc
