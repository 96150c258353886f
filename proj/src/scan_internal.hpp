#pragma once

#include "qpscan/scan.hpp"

namespace qpscan::detail {

// Normalize, rank, and prune one level in place: posterior over tuples,
// total log evidence, retained prefix holding mass >= 1 - epsilon (never
// empty while tuples exist).
void finalize_level(ScanResult& r, double epsilon);

// Effective worker count for the kernels under the current build.
int effective_threads(const ScanOptions& opt);

}  // namespace qpscan::detail
