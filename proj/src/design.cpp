#include "qpscan/design.hpp"

#include <cmath>

#include "qpscan/error.hpp"

namespace qpscan {

Design build_design(const std::vector<double>& x, const std::vector<double>& freqs,
                    int poly_degree) {
  Design d;
  d.nf = static_cast<int>(freqs.size());
  d.nd = poly_degree;
  d.ncol = 2 * d.nf + (poly_degree >= 0 ? poly_degree + 1 : 0);
  d.nrow = x.size();
  if (d.ncol == 0) raise(ErrorKind::validation, "design has no columns");
  for (std::size_t i = 1; i < freqs.size(); ++i)
    if (!(freqs[i] > freqs[i - 1]))
      raise(ErrorKind::validation, "frequencies must be strictly ascending");
  for (double f : freqs)
    if (!(f > 0.0))
      raise(ErrorKind::validation, "frequencies must be positive");
  d.cols.resize(static_cast<std::size_t>(d.ncol) * d.nrow);

  constexpr double two_pi = 6.283185307179586476925286766559;
  for (int i = 0; i < d.nf; ++i) {
    double* s = d.col(2 * i);
    double* c = d.col(2 * i + 1);
    const double w = two_pi * freqs[i];
    for (std::size_t k = 0; k < d.nrow; ++k) {
      s[k] = std::sin(w * x[k]);
      c[k] = std::cos(w * x[k]);
    }
  }
  for (int p = 0; p <= poly_degree; ++p) {
    double* cp = d.col(2 * d.nf + p);
    if (p == 0) {
      for (std::size_t k = 0; k < d.nrow; ++k) cp[k] = 1.0;
    } else {
      const double* prev = d.col(2 * d.nf + p - 1);
      for (std::size_t k = 0; k < d.nrow; ++k) cp[k] = prev[k] * x[k];
    }
  }
  return d;
}

}  // namespace qpscan
