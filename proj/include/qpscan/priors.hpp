#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qpscan/error.hpp"
#include "qpscan/timeseries.hpp"

namespace qpscan {

// Geometric distribution over model levels kmin..kmax with fixed ratio
// between successive levels above kmin; the base level absorbs the
// remaining mass so the distribution sums to one exactly.
struct GeometricLevelPrior {
  int kmin = 0;
  int kmax = 0;
  double ratio = 0.5;

  double prob(int k) const;
  double log_prob(int k) const;
};

GeometricLevelPrior make_level_prior(int kmin, int kmax, double ratio);

enum class JitterPriorKind { mjeff, cutoff, halfnormal };
const char* to_string(JitterPriorKind k);
JitterPriorKind jitter_prior_from_string(const std::string& s);

// User-facing knobs; anything left unset is resolved from the data.
struct PriorConfig {
  double alpha = 0.5;  // ratio between successive sinusoid counts
  double beta = 0.5;   // ratio between successive polynomial degrees
  int nf_max = 3;
  int nd_min = 0;
  int nd_max = 1;
  std::optional<double> a0;    // amplitude prior knee
  std::optional<double> amax;  // amplitude prior upper limit
  std::optional<double> b0;    // coefficient/jitter prior knee
  std::optional<double> bmax;  // coefficient/jitter prior upper limit
  std::optional<double> fmin;  // default 2/span
  std::optional<double> fmax;  // required, no data-driven default
  JitterPriorKind jitter_kind = JitterPriorKind::mjeff;
  std::optional<double> jitter_cutoff;  // cutoff kind knee, default 10*b0
  std::optional<double> jitter_scale;   // halfnormal kind scale, default b0
};

// All hyperparameters pinned to numbers; every log density below refers to
// a normalized distribution on its stated support.
struct ResolvedPriors {
  GeometricLevelPrior nf_prior;
  GeometricLevelPrior nd_prior;
  double a0 = 0, amax = 0;
  double b0 = 0, bmax = 0;
  double fmin = 0, fmax = 0;
  double log_la = 0;  // log(1 + amax/a0)
  double log_lb = 0;  // log(1 + bmax/b0)
  JitterPriorKind jitter_kind = JitterPriorKind::mjeff;
  double jitter_cutoff = 0;
  double jitter_scale = 0;
  double jitter_max = 0;  // upper end of jitter support (= bmax)

  double prob_nf(int n) const { return nf_prior.prob(n); }
  double prob_nd(int n) const { return nd_prior.prob(n); }

  // log p(f) = -log f - log log(fmax/fmin) on [fmin, fmax].
  double log_prior_freq(double f) const;

  // Joint density over one (sin, cos) amplitude pair, isotropic in phase
  // with a modified-Jeffreys radial profile.  Requires amplitude > 0; the
  // density diverges (integrably) toward zero amplitude.
  double log_prior_sc(double s, double c) const;
  double log_prior_sc_amp(double a) const;

  // Signed polynomial coefficient, symmetric modified Jeffreys on
  // [-bmax, bmax].
  double log_prior_coeff(double b) const;

  // Nonnegative jitter on [0, jitter_max], shape per jitter_kind.
  double log_prior_jitter(double s) const;
};

ResolvedPriors resolve_priors(const TimeSeries& ts, const PriorConfig& cfg);

}  // namespace qpscan
