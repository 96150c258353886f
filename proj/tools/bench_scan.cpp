#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "qpscan/model_compare.hpp"
#include "qpscan/priors.hpp"
#include "qpscan/scan.hpp"
#include "qpscan/simulate.hpp"

// Times the fast scan kernel against the straight-line reference on the
// same workload and reports the per-level sweep cost profile.

using namespace qpscan;

namespace {

TimeSeries make_series(int n_obs, double span, std::uint64_t seed) {
  CadenceSpec cad;
  cad.kind = CadenceKind::random_uniform;
  cad.n = n_obs;
  cad.t_span = span;
  NoiseSpec noise;
  noise.sigma = 0.5;
  const std::vector<SignalComponent> comps = {{2.0, 0.21, 0.4}, {0.8, 0.52, 1.1}};
  return simulate_series(gen_cadence(cad, seed), comps, {0.3}, noise, seed + 1);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (std::isfinite(d) && d > m) m = d;
  }
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency scan benchmark: fast kernel vs reference"};
  std::int64_t nodes = 18000;
  int n_obs = 300;
  int nd = 0;
  int threads = 0;
  int jitter_nodes = 48;
  std::uint64_t seed = 7;
  bool skip_reference = false;
  app.add_option("--nodes", nodes, "frequency grid size");
  app.add_option("--n-obs", n_obs, "observations");
  app.add_option("--nd", nd, "polynomial degree");
  app.add_option("--threads", threads, "threads for the parallel kernel (0 = all)");
  app.add_option("--jitter-nodes", jitter_nodes, "jitter quadrature nodes");
  app.add_option("--seed", seed, "simulation seed");
  app.add_flag("--skip-reference", skip_reference, "time only the fast kernel");
  CLI11_PARSE(app, argc, argv);

  const double span = 180.0;
  const TimeSeries ts = make_series(n_obs, span, seed);
  PriorConfig pc;
  pc.nf_max = 3;
  pc.nd_max = nd;
  const double fmin = 2.0 / ts.span();
  // Pick fmax so the grid lands on the requested node count.
  const double step = 1.0 / (10.0 * ts.span());
  pc.fmax = fmin + step * static_cast<double>(nodes - 1) + 0.5 * step;
  const ResolvedPriors priors = resolve_priors(ts, pc);
  const FrequencyGrid grid = make_grid(priors.fmin, priors.fmax, ts.span());
  std::printf("grid nodes: %lld, observations: %d, jitter nodes: %d\n",
              static_cast<long long>(grid.m), n_obs, jitter_nodes);

  ScanOptions fast;
  fast.jitter_nodes = jitter_nodes;
  fast.n_threads = threads;
  ScanOptions serial1 = fast;
  serial1.n_threads = 1;

  int threads_used = threads;
#ifdef _OPENMP
  if (threads_used <= 0) threads_used = omp_get_max_threads();
#else
  threads_used = 1;
#endif

  const ScanResult one_serial = scan_1d(ts, grid, nd, priors, serial1);
  std::printf("kernel, 1 thread:        %8.3f s\n", one_serial.seconds);
  const ScanResult one_par = scan_1d(ts, grid, nd, priors, fast);
  std::printf("kernel, %2d thread(s):    %8.3f s  (speedup %.2fx)\n", threads_used,
              one_par.seconds, one_serial.seconds / one_par.seconds);
  std::printf("kernel agreement:        %.3e max |delta log|\n",
              max_abs_diff(one_serial.log_conditional, one_par.log_conditional));

  if (!skip_reference) {
    const ScanResult ref = scan_1d_reference(ts, grid, nd, priors, serial1);
    std::printf("reference, 1 thread:     %8.3f s  (kernel speedup %.2fx)\n",
                ref.seconds, ref.seconds / one_serial.seconds);
    std::printf("reference agreement:     %.3e max |delta log|\n",
                max_abs_diff(ref.log_conditional, one_serial.log_conditional));
  }

  // Sweep cost growth with the number of fixed frequencies: force a single
  // retained tuple so each level is exactly one full-grid sweep.
  ScanOptions single = serial1;
  single.epsilon = 1.0;
  const ScanResult l1 = scan_1d(ts, grid, nd, priors, single);
  const ScanResult l2 = scan_step(ts, grid, nd, priors, single, l1);
  const ScanResult l3 = scan_step(ts, grid, nd, priors, single, l2);
  std::printf("sweep seconds by level:  %0.3f : %0.3f : %0.3f  (1, 2, 3 frequencies)\n",
              l1.seconds, l2.seconds, l3.seconds);
  std::printf("normalized profile:      1.00 : %.2f : %.2f\n",
              l2.seconds / l1.seconds, l3.seconds / l1.seconds);
  return 0;
}
