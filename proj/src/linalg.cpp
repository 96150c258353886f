#include "qpscan/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qpscan {

bool SpdFactor::factor(int d, const double* a, double cond_limit) {
  d_ = d;
  bad_col_ = -1;
  log_det_ = 0.0;
  cond_ = 0.0;
  l_.assign(static_cast<std::size_t>(d) * d, 0.0);
  scale_.resize(d);
  work_.resize(d);

  double log_scale_sum = 0.0;
  for (int i = 0; i < d; ++i) {
    const double aii = a[static_cast<std::size_t>(i) * d + i];
    if (!(aii > 0.0) || !std::isfinite(aii)) {
      bad_col_ = i;
      return false;
    }
    scale_[i] = 1.0 / std::sqrt(aii);
    log_scale_sum += std::log(aii);
  }

  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  int argmin = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[static_cast<std::size_t>(i) * d + j] * scale_[i] * scale_[j];
      for (int k = 0; k < j; ++k)
        s -= l_[static_cast<std::size_t>(i) * d + k] * l_[static_cast<std::size_t>(j) * d + k];
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s)) {
          bad_col_ = i;
          return false;
        }
        const double lii = std::sqrt(s);
        l_[static_cast<std::size_t>(i) * d + i] = lii;
        log_det_ += 2.0 * std::log(lii);
        if (lii < dmin) {
          dmin = lii;
          argmin = i;
        }
        dmax = std::max(dmax, lii);
      } else {
        l_[static_cast<std::size_t>(i) * d + j] =
            s / l_[static_cast<std::size_t>(j) * d + j];
      }
    }
  }
  cond_ = (dmax / dmin) * (dmax / dmin);
  if (!(cond_ <= cond_limit)) {
    bad_col_ = argmin;
    return false;
  }
  log_det_ += log_scale_sum;  // undo the symmetric scaling in the determinant
  return true;
}

void SpdFactor::solve(const double* b, double* x) const {
  const int d = d_;
  for (int i = 0; i < d; ++i) {
    double s = b[i] * scale_[i];
    for (int k = 0; k < i; ++k)
      s -= l_[static_cast<std::size_t>(i) * d + k] * work_[k];
    work_[i] = s / l_[static_cast<std::size_t>(i) * d + i];
  }
  for (int i = d - 1; i >= 0; --i) {
    double s = work_[i];
    for (int k = i + 1; k < d; ++k)
      s -= l_[static_cast<std::size_t>(k) * d + i] * work_[k];
    work_[i] = s / l_[static_cast<std::size_t>(i) * d + i];
  }
  for (int i = 0; i < d; ++i) x[i] = work_[i] * scale_[i];
}

void SpdFactor::inverse(double* ainv) const {
  const int d = d_;
  std::vector<double> e(d, 0.0), col(d);
  for (int j = 0; j < d; ++j) {
    e[j] = 1.0;
    solve(e.data(), col.data());
    e[j] = 0.0;
    for (int i = 0; i < d; ++i) ainv[static_cast<std::size_t>(i) * d + j] = col[i];
  }
  // Symmetrize: round-off keeps the two triangles a few ulps apart.
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j) {
      const double v = 0.5 * (ainv[static_cast<std::size_t>(i) * d + j] +
                              ainv[static_cast<std::size_t>(j) * d + i]);
      ainv[static_cast<std::size_t>(i) * d + j] = v;
      ainv[static_cast<std::size_t>(j) * d + i] = v;
    }
}

}  // namespace qpscan
