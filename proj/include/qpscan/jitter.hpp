#pragma once

#include <vector>

#include "qpscan/linear_marginal.hpp"
#include "qpscan/priors.hpp"

namespace qpscan {

// Quadrature grid over the jitter amplitude: log-spaced nodes with
// trapezoid weights taken in log-sigma (Jacobian folded into the weights).
// The lower end is floored at a small fraction of the prior knee; mass below
// the floor is bounded separately rather than sampled.
struct JitterGrid {
  std::vector<double> nodes;
  std::vector<double> log_weights;
  double lo = 0.0;
  double hi = 0.0;
};

JitterGrid make_jitter_grid(const ResolvedPriors& priors, int n_nodes = 48,
                            double jitter_min = 0.0);

struct JitterMarginal {
  double log_evidence = 0.0;               // quadrature total
  std::vector<double> node_log_integrand;  // prior * conditional * weight, in log
  std::vector<double> node_log_cond;       // conditional evidence per node
  double log_below_floor_bound = 0.0;      // estimate of mass omitted below lo
  int singular_nodes = 0;
};

// Evidence for fixed frequencies with both the linear coefficients and the
// jitter integrated out.
JitterMarginal marginalize_jitter(const Design& design, const std::vector<double>& y,
                                  const std::vector<double>& sigma,
                                  const JitterGrid& grid, const ResolvedPriors& priors,
                                  const LaplaceOptions& opt = {});

// Same, refining the grid (doubling node count) until the total moves by
// less than tol or max_doublings is hit.  Returns the last refinement.
JitterMarginal marginalize_jitter_adaptive(const Design& design,
                                           const std::vector<double>& y,
                                           const std::vector<double>& sigma,
                                           const ResolvedPriors& priors,
                                           const LaplaceOptions& opt = {},
                                           int n_nodes = 48, double tol = 1e-6,
                                           int max_doublings = 4);

// Normalized posterior mass per grid node.
std::vector<double> jitter_posterior(const JitterMarginal& m);

// Prior CDF at s, used for the below-floor mass bound.
double jitter_prior_cdf(const ResolvedPriors& priors, double s);

}  // namespace qpscan
