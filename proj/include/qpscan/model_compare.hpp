#pragma once

#include <cstddef>
#include <vector>

#include "qpscan/priors.hpp"
#include "qpscan/scan.hpp"
#include "qpscan/timeseries.hpp"

namespace qpscan {

// Posterior over (sinusoid count, polynomial degree) assembled from one
// scan per combination.
struct ModelPosterior {
  std::vector<int> nf_levels;        // ascending
  std::vector<int> nd_levels;        // ascending
  std::vector<double> nf_log_prior;  // per nf level
  std::vector<double> nd_log_prior;  // per nd level
  std::vector<double> log_joint;     // nf x nd, evidence + level priors, unnormalized
  std::vector<double> joint;      // normalized posterior matrix
  std::vector<double> nf_marginal;
  std::vector<double> nd_marginal;
  double log_total = 0.0;  // total evidence including level priors
  int map_nf = 0, map_nd = 0;

  // Evidence ratio between sinusoid counts, polynomial degree integrated
  // out under its prior.  Level priors on the counts themselves cancel.
  double log_bayes_factor(int nf_hi, int nf_lo) const;
  // Same at one fixed polynomial degree.
  double log_bayes_factor_at(int nf_hi, int nf_lo, int nd) const;
  int nf_marginal_argmax() const;

  double log_joint_at(int nf, int nd) const;
  std::size_t nf_index(int nf) const;
  std::size_t nd_index(int nd) const;
};

ModelPosterior assemble_posterior(const std::vector<ScanResult>& levels,
                                  const ResolvedPriors& priors);

// Histogram with mass per bin; bin i covers [lo + i*width, lo + (i+1)*width).
struct BinnedDensity {
  double lo = 0.0;
  double width = 0.0;
  std::vector<double> mass;

  double total() const;
  double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * width; }
};

// Overlap coefficient sum(min(a_i, b_i)); the two lattices must share the
// bin width and be integer-shifted copies of each other.
double overlap(const BinnedDensity& a, const BinnedDensity& b);

// Posterior mass per grid node of one tuple element (0-based, ascending
// frequency order).  Bins are grid cells centered on the nodes.
BinnedDensity element_marginal(const ScanResult& level, int element);

// For a two-sinusoid level: posterior of f2 - 2*f1 on its exact lattice
// (spacing = grid step).  Mass near zero means the pair sits at a 2:1 ratio.
BinnedDensity delta_marginal(const ScanResult& level);

// Image of a density under f -> 2*f, re-binned onto the same lattice.
BinnedDensity doubled_marginal(const BinnedDensity& d);

// s*sin(theta) + c*cos(theta) rewritten as amplitude*cos(theta + phase).
struct AmpPhase {
  double amplitude = 0.0;
  double phase = 0.0;
};
AmpPhase amplitude_phase(double s, double c);

// Point summary of one tuple: coefficients refit at the posterior-mean
// jitter, their covariance from the inverse Hessian, amplitude/phase per
// sinusoid, and polynomial coefficients mapped back to the original
// (uncentered) abscissa.
struct TupleSummary {
  std::vector<double> freqs;
  std::vector<double> theta;  // centered-abscissa coefficients
  std::vector<double> cov;    // ncol x ncol
  std::vector<double> amplitude;
  std::vector<double> phase;
  std::vector<double> poly;  // original-abscissa polynomial coefficients
  double jitter_mean = 0.0;
  double chi2 = 0.0;
};

TupleSummary summarize_tuple(const TimeSeries& ts, const ScanResult& level,
                             std::size_t tuple_index, const ResolvedPriors& priors,
                             const ScanOptions& opt);

// Coefficients of sum_q dq*(x - mu)^q expanded in plain powers of x.
std::vector<double> shift_poly_coefficients(const std::vector<double>& centered,
                                            double mu);

}  // namespace qpscan
