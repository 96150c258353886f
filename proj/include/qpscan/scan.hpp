#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "qpscan/priors.hpp"
#include "qpscan/timeseries.hpp"

namespace qpscan {

// Arithmetic frequency ladder fmin + i*step with one log-prior mass per
// node.  Masses are cell integrals of the log-uniform prior between cell
// midpoints (end cells run to the support edges), so they sum to one
// exactly and track p(f)*step to O(1/m).
struct FrequencyGrid {
  double fmin = 0.0;
  double fmax = 0.0;
  double step = 0.0;
  std::int64_t m = 0;
  std::vector<double> log_weight;

  double node(std::int64_t i) const { return fmin + step * static_cast<double>(i); }
};

FrequencyGrid make_grid(double fmin, double fmax, double span, double oversample = 10.0,
                        std::int64_t max_nodes = 50000000);

struct ScanOptions {
  double epsilon = 1e-4;      // pruning: retain tuples holding mass >= 1-epsilon
  bool flat_prior = false;    // drop amplitude/coefficient prior factors
  bool zero_jitter = false;   // fix jitter to 0 instead of integrating
  int jitter_nodes = 48;
  double cond_limit = 1e12;
  double amplitude_floor_frac = 1e-3;
  int n_threads = 0;          // 0 = library default
  int trig_reseed = 1024;
  int guard_cells = 2;        // skip sweep nodes this close to an occupied node
  std::int64_t max_tuples = 20000000;
  std::function<void(std::string_view, double)> progress;  // stage, fraction
};

// One sinusoid-count level of the scan.  Tuples are strictly ascending node
// index lists, flattened nf entries at a time.  log_conditional is the
// evidence given the tuple with linear coefficients and jitter integrated
// out; log_weight is the tuple's log prior mass on the grid; posterior is
// normalized across the tuples present.
struct ScanResult {
  int nf = 0;
  int nd = 0;
  double x_offset = 0.0;  // abscissa shift applied before scanning
  FrequencyGrid grid;
  std::vector<std::int32_t> tuple_nodes;
  std::vector<double> log_conditional;
  std::vector<double> log_weight;
  std::vector<double> posterior;
  double log_evidence = 0.0;
  std::vector<std::size_t> retained;  // tuple indices, descending posterior
  double retained_mass = 0.0;
  std::size_t eval_count = 0;      // tuple evaluations before merging
  std::size_t singular_count = 0;  // tuples lost to a singular system
  double seconds = 0.0;
  bool used_openmp = false;

  std::size_t tuple_count() const {
    return nf == 0 ? (log_conditional.empty() ? 0 : 1)
                   : tuple_nodes.size() / static_cast<std::size_t>(nf);
  }
  const std::int32_t* tuple(std::size_t t) const {
    return tuple_nodes.data() + t * static_cast<std::size_t>(nf);
  }
};

// Zero sinusoids: a single polynomial-only model, still jitter-marginalized.
ScanResult scan_nf0(const TimeSeries& ts, int nd, const ResolvedPriors& priors,
                    const ScanOptions& opt);

// One sinusoid: every grid node.
ScanResult scan_1d(const TimeSeries& ts, const FrequencyGrid& grid, int nd,
                   const ResolvedPriors& priors, const ScanOptions& opt);

// Two sinusoids, exhaustive: every strictly ascending node pair outside the
// guard band.  Quadratic in grid size; kept for validating the greedy scan.
ScanResult scan_2d(const TimeSeries& ts, const FrequencyGrid& grid, int nd,
                   const ResolvedPriors& priors, const ScanOptions& opt);

// Grow a level: sweep one new frequency over the full grid for every
// retained tuple of the previous level, merging duplicate tuples (first
// occurrence wins; values are bit-identical across occurrences).
ScanResult scan_step(const TimeSeries& ts, const FrequencyGrid& grid, int nd,
                     const ResolvedPriors& priors, const ScanOptions& opt,
                     const ScanResult& prev_level);

// Levels 1..nf_target chained through scan_step.  Index i holds i+1 sinusoids.
std::vector<ScanResult> scan_levels(const TimeSeries& ts, const FrequencyGrid& grid,
                                    int nf_target, int nd,
                                    const ResolvedPriors& priors,
                                    const ScanOptions& opt);

// Straightforward single-threaded implementations (fresh trig per node, no
// recurrence, no precomputation).  Reference results for testing and the
// baseline side of the benchmark.
ScanResult scan_1d_reference(const TimeSeries& ts, const FrequencyGrid& grid, int nd,
                             const ResolvedPriors& priors, const ScanOptions& opt);
ScanResult scan_2d_reference(const TimeSeries& ts, const FrequencyGrid& grid, int nd,
                             const ResolvedPriors& priors, const ScanOptions& opt);

// Index of the first level whose mass falls below stop_ratio times the
// combined mass of all lower levels, or SIZE_MAX when none does.  Growth
// stops at (and keeps) the triggering level.
std::size_t truncation_trigger(const std::vector<double>& log_level_mass,
                               double stop_ratio);

}  // namespace qpscan
