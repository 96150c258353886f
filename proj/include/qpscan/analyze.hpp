#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "qpscan/model_compare.hpp"
#include "qpscan/priors.hpp"
#include "qpscan/scan.hpp"
#include "qpscan/timeseries.hpp"

namespace qpscan {

struct AnalysisOptions {
  PriorConfig priors;
  double oversample = 10.0;
  double epsilon = 1e-4;
  double stop_ratio = 1e-3;  // stop growing levels once one falls this far behind
  int jitter_nodes = 48;
  int n_threads = 0;
  bool flat_prior = false;   // diagnostic hooks, not for normal analysis
  bool zero_jitter = false;
  std::function<void(std::string_view, double)> progress;
};

struct AnalysisResult {
  ResolvedPriors priors;
  FrequencyGrid grid;
  std::vector<ScanResult> levels;  // every (nf, nd) combination computed
  ModelPosterior posterior;
  bool truncated = false;   // level growth stopped by the mass-ratio rule
  bool hit_nf_max = false;  // grew to nf_max without the rule firing
  double x_offset = 0.0;
  double total_seconds = 0.0;

  const ScanResult& level(int nf, int nd) const;
};

// Full pipeline: resolve priors, build the grid, scan sinusoid counts
// 0..nf_max for every polynomial degree (growing greedily and stopping
// early when a count contributes negligible mass), assemble the model
// posterior.
AnalysisResult run_analysis(const TimeSeries& ts, const AnalysisOptions& opt);

}  // namespace qpscan
