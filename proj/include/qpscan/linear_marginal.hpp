#pragma once

#include <vector>

#include "qpscan/design.hpp"
#include "qpscan/priors.hpp"

namespace qpscan {

// Weighted least squares through the design, weights 1/(sigma_k^2 + jitter^2).
struct LinearFit {
  std::vector<double> theta;  // best-fit coefficients, design column order
  std::vector<double> cov;    // ncol x ncol inverse Hessian, row-major
  double chi2 = 0.0;          // explicit weighted residual sum at theta
  double log_det_h = 0.0;     // log det of the Hessian X^T W X
  bool singular = false;
  int bad_column = -1;
  double cond = 0.0;
};

LinearFit fit_linear(const Design& design, const std::vector<double>& y,
                     const std::vector<double>& sigma, double jitter,
                     double cond_limit = 1e12);

struct LaplaceOptions {
  bool flat_prior = false;  // drop the prior factors: exact Gaussian integral
  double cond_limit = 1e12;
  // Amplitude used in the prior factor is floored at this fraction of the
  // prior knee; the density diverges integrably at zero amplitude and the
  // mode of a weak signal can land arbitrarily close to it.
  double amplitude_floor_frac = 1e-3;
};

struct LaplaceResult {
  double log_evidence = 0.0;  // -inf when singular or mode outside support
  double chi2 = 0.0;
  bool singular = false;
  int bad_column = -1;
};

// Evidence for fixed frequencies and jitter with the linear coefficients
// integrated out: Gaussian integral around the least-squares mode times the
// prior density evaluated there.
LaplaceResult laplace_log_evidence(const Design& design, const std::vector<double>& y,
                                   const std::vector<double>& sigma, double jitter,
                                   const ResolvedPriors& priors,
                                   const LaplaceOptions& opt = {});

}  // namespace qpscan
