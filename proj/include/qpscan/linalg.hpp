#pragma once

#include <vector>

namespace qpscan {

// Cholesky factorization of a dense symmetric positive definite matrix with
// symmetric diagonal scaling (unit diagonal before factoring).  The scaling
// makes the condition estimate meaningful when columns have wildly different
// magnitudes, e.g. polynomial columns next to unit-amplitude sinusoids.
//
// Instances are reusable; factor() only grows its workspace.
class SpdFactor {
 public:
  // a: row-major d x d, only the lower triangle is read.  Returns false if a
  // pivot fails or the scaled condition estimate exceeds cond_limit; in that
  // case bad_column() names the offending column.
  bool factor(int d, const double* a, double cond_limit = 1e12);

  int dim() const { return d_; }
  int bad_column() const { return bad_col_; }
  double cond() const { return cond_; }
  double log_det() const { return log_det_; }  // of the original matrix

  // Solve a * x = b for one right-hand side (b and x may alias).
  void solve(const double* b, double* x) const;
  // Dense inverse of the original matrix, row-major d x d.
  void inverse(double* ainv) const;

 private:
  int d_ = 0;
  std::vector<double> l_;      // lower factor of the scaled matrix
  std::vector<double> scale_;  // 1/sqrt(diag(a))
  mutable std::vector<double> work_;
  double log_det_ = 0.0;
  double cond_ = 0.0;
  int bad_col_ = -1;
};

}  // namespace qpscan
