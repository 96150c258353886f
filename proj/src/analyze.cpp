#include "qpscan/analyze.hpp"

#include <chrono>
#include <cmath>

#include "qpscan/logsum.hpp"

namespace qpscan {

const ScanResult& AnalysisResult::level(int nf, int nd) const {
  for (const ScanResult& r : levels)
    if (r.nf == nf && r.nd == nd) return r;
  raise(ErrorKind::validation, "no scan level for nf=" + std::to_string(nf) +
                                   " nd=" + std::to_string(nd));
}

AnalysisResult run_analysis(const TimeSeries& ts, const AnalysisOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_for_analysis(ts);
  AnalysisResult res;
  res.priors = resolve_priors(ts, opt.priors);
  res.grid = make_grid(res.priors.fmin, res.priors.fmax, ts.span(), opt.oversample);

  ScanOptions so;
  so.epsilon = opt.epsilon;
  so.flat_prior = opt.flat_prior;
  so.zero_jitter = opt.zero_jitter;
  so.jitter_nodes = opt.jitter_nodes;
  so.n_threads = opt.n_threads;
  so.progress = opt.progress;

  std::vector<int> nd_levels;
  for (int nd = res.priors.nd_prior.kmin; nd <= res.priors.nd_prior.kmax; ++nd)
    nd_levels.push_back(nd);
  const int nf_max = res.priors.nf_prior.kmax;

  // One chain of levels per polynomial degree; each level seeds the next.
  std::vector<std::size_t> prev_idx;
  for (int nd : nd_levels) {
    res.levels.push_back(scan_nf0(ts, nd, res.priors, so));
    prev_idx.push_back(res.levels.size() - 1);
  }

  auto level_mass = [&](int nf) {
    std::vector<double> terms;
    for (const ScanResult& r : res.levels)
      if (r.nf == nf)
        terms.push_back(r.log_evidence + res.priors.nf_prior.log_prob(nf) +
                        res.priors.nd_prior.log_prob(r.nd));
    return log_sum_exp(terms);
  };

  std::vector<double> masses{level_mass(0)};
  for (int nf = 1; nf <= nf_max; ++nf) {
    for (std::size_t c = 0; c < nd_levels.size(); ++c) {
      res.levels.push_back(scan_step(ts, res.grid, nd_levels[c], res.priors, so,
                                     res.levels[prev_idx[c]]));
      prev_idx[c] = res.levels.size() - 1;
    }
    masses.push_back(level_mass(nf));
    if (truncation_trigger(masses, opt.stop_ratio) != static_cast<std::size_t>(-1)) {
      res.truncated = true;
      break;
    }
  }
  res.hit_nf_max = !res.truncated && nf_max >= 1;

  res.posterior = assemble_posterior(res.levels, res.priors);
  res.x_offset = res.levels.front().x_offset;
  res.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace qpscan
