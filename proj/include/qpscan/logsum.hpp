#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace qpscan {

// Serial, fixed-order log(sum(exp(v))).  Keeping the reduction order fixed
// is part of the determinism contract; do not parallelize.
inline double log_sum_exp(const double* v, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (v[i] > m) m = v[i];
  if (!std::isfinite(m)) return m;  // all -inf (or a stray +inf/nan surfaces)
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

inline double log_sum_exp(const std::vector<double>& v) {
  return log_sum_exp(v.data(), v.size());
}

}  // namespace qpscan
