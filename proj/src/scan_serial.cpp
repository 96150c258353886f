#include <chrono>

#include "qpscan/design.hpp"
#include "qpscan/jitter.hpp"
#include "qpscan/linear_marginal.hpp"
#include "qpscan/scan.hpp"
#include "scan_internal.hpp"

// Straight-line reference scans: one design matrix and one full
// marginalization per tuple, sin/cos from libm every time.  Slow on
// purpose; the fast kernels are validated against these.

namespace qpscan {

namespace {

struct RefCtx {
  std::vector<double> xs, y, sigma;
  double x_offset = 0.0;
  JitterGrid jg;
  bool have_jg = false;
  LaplaceOptions lo;
};

RefCtx make_ref(const TimeSeries& ts, const ResolvedPriors& priors,
                const ScanOptions& opt) {
  validate_for_analysis(ts);
  RefCtx ctx;
  auto [cts, mu] = center_abscissa(ts);
  ctx.x_offset = mu;
  ctx.xs = cts.x_values();
  ctx.y = cts.y_values();
  ctx.sigma = cts.sigma_values();
  if (!opt.zero_jitter) {
    ctx.jg = make_jitter_grid(priors, opt.jitter_nodes);
    ctx.have_jg = true;
  }
  ctx.lo.flat_prior = opt.flat_prior;
  ctx.lo.cond_limit = opt.cond_limit;
  ctx.lo.amplitude_floor_frac = opt.amplitude_floor_frac;
  return ctx;
}

struct RefEval {
  double cond;
  bool singular;
};

RefEval ref_eval(const RefCtx& ctx, const std::vector<double>& freqs, int nd,
                 const ResolvedPriors& priors) {
  const Design dz = build_design(ctx.xs, freqs, nd);
  if (!ctx.have_jg) {
    const LaplaceResult lr =
        laplace_log_evidence(dz, ctx.y, ctx.sigma, 0.0, priors, ctx.lo);
    return {lr.log_evidence, lr.singular};
  }
  const JitterMarginal jm =
      marginalize_jitter(dz, ctx.y, ctx.sigma, ctx.jg, priors, ctx.lo);
  return {jm.log_evidence,
          jm.singular_nodes == static_cast<int>(ctx.jg.nodes.size())};
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ScanResult scan_1d_reference(const TimeSeries& ts, const FrequencyGrid& grid, int nd,
                             const ResolvedPriors& priors, const ScanOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RefCtx ctx = make_ref(ts, priors, opt);
  ScanResult r;
  r.nf = 1;
  r.nd = nd;
  r.x_offset = ctx.x_offset;
  r.grid = grid;
  r.tuple_nodes.resize(grid.m);
  r.log_conditional.resize(grid.m);
  r.log_weight.resize(grid.m);
  for (std::int64_t i = 0; i < grid.m; ++i) {
    const RefEval ev = ref_eval(ctx, {grid.node(i)}, nd, priors);
    r.tuple_nodes[i] = static_cast<std::int32_t>(i);
    r.log_conditional[i] = ev.cond;
    r.log_weight[i] = grid.log_weight[i];
    if (ev.singular) ++r.singular_count;
  }
  r.eval_count = static_cast<std::size_t>(grid.m);
  detail::finalize_level(r, opt.epsilon);
  r.seconds = elapsed_since(t0);
  return r;
}

ScanResult scan_2d_reference(const TimeSeries& ts, const FrequencyGrid& grid, int nd,
                             const ResolvedPriors& priors, const ScanOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RefCtx ctx = make_ref(ts, priors, opt);
  const std::int64_t m = grid.m;
  if (m * (m - 1) / 2 > opt.max_tuples)
    raise(ErrorKind::resource, "exhaustive pair scan would evaluate too many tuples");
  ScanResult r;
  r.nf = 2;
  r.nd = nd;
  r.x_offset = ctx.x_offset;
  r.grid = grid;
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = i + opt.guard_cells + 1; j < m; ++j) {
      const RefEval ev = ref_eval(ctx, {grid.node(i), grid.node(j)}, nd, priors);
      r.tuple_nodes.push_back(static_cast<std::int32_t>(i));
      r.tuple_nodes.push_back(static_cast<std::int32_t>(j));
      r.log_conditional.push_back(ev.cond);
      r.log_weight.push_back(grid.log_weight[i] + grid.log_weight[j]);
      if (ev.singular) ++r.singular_count;
      ++r.eval_count;
    }
  }
  detail::finalize_level(r, opt.epsilon);
  r.seconds = elapsed_since(t0);
  return r;
}

}  // namespace qpscan
