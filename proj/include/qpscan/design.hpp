#pragma once

#include <cstddef>
#include <vector>

namespace qpscan {

// Column-major design matrix for a sum of sinusoids plus a polynomial:
// columns [sin(2*pi*f1*x), cos(2*pi*f1*x), ..., x^0, x^1, ..., x^nd].
// Frequencies must be strictly ascending; equal frequencies would make the
// matrix exactly singular.
struct Design {
  int nf = 0;
  int nd = -1;  // polynomial degree; -1 means no polynomial columns
  int ncol = 0;
  std::size_t nrow = 0;
  std::vector<double> cols;  // cols[c * nrow + k]

  const double* col(int c) const { return cols.data() + static_cast<std::size_t>(c) * nrow; }
  double* col(int c) { return cols.data() + static_cast<std::size_t>(c) * nrow; }
};

Design build_design(const std::vector<double>& x, const std::vector<double>& freqs,
                    int poly_degree);

}  // namespace qpscan
