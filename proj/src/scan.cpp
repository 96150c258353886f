#include "qpscan/scan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qpscan/design.hpp"
#include "qpscan/jitter.hpp"
#include "qpscan/linalg.hpp"
#include "qpscan/linear_marginal.hpp"
#include "qpscan/logsum.hpp"
#include "qpscan/trig_table.hpp"
#include "scan_internal.hpp"

namespace qpscan {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

inline double dot_n(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

// Inputs shared by every sweep of one scan: centered data, per-jitter-node
// weight rows, and the moments that do not involve the swept frequency.
struct ScanCore {
  std::vector<double> xs, y, sigma;
  double x_offset = 0.0;
  const FrequencyGrid* grid = nullptr;
  const ResolvedPriors* priors = nullptr;
  const ScanOptions* opt = nullptr;
  int nd = 0, P = 0;
  int J = 0;
  std::vector<double> w;         // J x n jitter-dependent weights
  std::vector<double> log_norm;  // per row Gaussian normalization
  std::vector<double> swyy;      // per row weighted sum of y^2
  std::vector<double> extra;     // per row jitter prior + quadrature weight
  std::vector<double> polycols;  // P x n powers of centered x
  std::vector<double> pp;        // J x P x P polynomial Gram
  std::vector<double> py;        // J x P polynomial rhs
};

// Moments involving the fixed (already chosen) frequencies of a sweep.
struct BaseCtx {
  int nb = 0;
  std::vector<std::int32_t> nodes;  // ascending
  std::vector<double> bs, bc;       // nb x n canonical trig columns
  std::vector<double> bb;           // J x 2nb x 2nb
  std::vector<double> bp;           // J x 2nb x P
  std::vector<double> by;           // J x 2nb
};

ScanCore make_core(const TimeSeries& ts, const FrequencyGrid* grid, int nd,
                   const ResolvedPriors& priors, const ScanOptions& opt) {
  validate_for_analysis(ts);
  if (nd < 0) raise(ErrorKind::config, "polynomial degree must be >= 0");
  ScanCore core;
  auto [cts, mu] = center_abscissa(ts);
  core.x_offset = mu;
  core.xs = cts.x_values();
  core.y = cts.y_values();
  core.sigma = cts.sigma_values();
  core.grid = grid;
  core.priors = &priors;
  core.opt = &opt;
  core.nd = nd;
  core.P = nd + 1;
  const std::size_t n = core.xs.size();

  std::vector<double> nodes;
  if (opt.zero_jitter) {
    core.J = 1;
    nodes = {0.0};
    core.extra = {0.0};
  } else {
    JitterGrid jg = make_jitter_grid(priors, opt.jitter_nodes);
    core.J = static_cast<int>(jg.nodes.size());
    nodes = jg.nodes;
    core.extra.resize(core.J);
    for (int j = 0; j < core.J; ++j)
      core.extra[j] = priors.log_prior_jitter(nodes[j]) + jg.log_weights[j];
  }
  core.w.resize(static_cast<std::size_t>(core.J) * n);
  core.log_norm.resize(core.J);
  core.swyy.resize(core.J);
  for (int j = 0; j < core.J; ++j) {
    double* wj = core.w.data() + static_cast<std::size_t>(j) * n;
    double ln = 0.0, sw = 0.0;
    const double j2 = nodes[j] * nodes[j];
    for (std::size_t k = 0; k < n; ++k) {
      const double v = core.sigma[k] * core.sigma[k] + j2;
      wj[k] = 1.0 / v;
      ln += std::log(v);
      sw += wj[k] * core.y[k] * core.y[k];
    }
    core.log_norm[j] = -0.5 * (static_cast<double>(n) * kLogTwoPi + ln);
    core.swyy[j] = sw;
  }

  core.polycols.resize(static_cast<std::size_t>(core.P) * n);
  for (int p = 0; p < core.P; ++p) {
    double* cp = core.polycols.data() + static_cast<std::size_t>(p) * n;
    if (p == 0) {
      std::fill(cp, cp + n, 1.0);
    } else {
      const double* prev = cp - n;
      for (std::size_t k = 0; k < n; ++k) cp[k] = prev[k] * core.xs[k];
    }
  }
  core.pp.resize(static_cast<std::size_t>(core.J) * core.P * core.P);
  core.py.resize(static_cast<std::size_t>(core.J) * core.P);
  for (int j = 0; j < core.J; ++j) {
    const double* wj = core.w.data() + static_cast<std::size_t>(j) * n;
    for (int p = 0; p < core.P; ++p) {
      const double* cp = core.polycols.data() + static_cast<std::size_t>(p) * n;
      for (int q = 0; q <= p; ++q) {
        const double* cq = core.polycols.data() + static_cast<std::size_t>(q) * n;
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += wj[k] * cp[k] * cq[k];
        core.pp[(static_cast<std::size_t>(j) * core.P + p) * core.P + q] = s;
        core.pp[(static_cast<std::size_t>(j) * core.P + q) * core.P + p] = s;
      }
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += wj[k] * cp[k] * core.y[k];
      core.py[static_cast<std::size_t>(j) * core.P + p] = s;
    }
  }
  return core;
}

BaseCtx make_base(const ScanCore& core, const std::vector<std::int32_t>& base_nodes) {
  BaseCtx bc;
  bc.nb = static_cast<int>(base_nodes.size());
  bc.nodes = base_nodes;
  const std::size_t n = core.xs.size();
  const int nb2 = 2 * bc.nb;
  bc.bs.resize(static_cast<std::size_t>(bc.nb) * n);
  bc.bc.resize(static_cast<std::size_t>(bc.nb) * n);
  if (bc.nb > 0) {
    // Base columns come from the same canonical ladder path as swept ones,
    // so a tuple's value does not depend on which element was swept.
    TrigTable trig(core.xs, core.grid->fmin, core.grid->step, core.opt->trig_reseed);
    for (int a = 0; a < bc.nb; ++a) {
      trig.move_to(base_nodes[a]);
      std::copy(trig.sin_vals(), trig.sin_vals() + n,
                bc.bs.data() + static_cast<std::size_t>(a) * n);
      std::copy(trig.cos_vals(), trig.cos_vals() + n,
                bc.bc.data() + static_cast<std::size_t>(a) * n);
    }
  }
  bc.bb.resize(static_cast<std::size_t>(core.J) * nb2 * nb2);
  bc.bp.resize(static_cast<std::size_t>(core.J) * nb2 * core.P);
  bc.by.resize(static_cast<std::size_t>(core.J) * nb2);
  auto bcol = [&](int t) {
    const int a = t / 2;
    const double* col = (t % 2 == 0) ? bc.bs.data() : bc.bc.data();
    return col + static_cast<std::size_t>(a) * n;
  };
  // Same rounding as the sweep hot path (elementwise product, then the
  // weighted dot): a tuple value must not depend on which element was the
  // swept one, and that only holds if the moments round identically.
  for (int j = 0; j < core.J; ++j) {
    const double* wj = core.w.data() + static_cast<std::size_t>(j) * n;
    for (int t1 = 0; t1 < nb2; ++t1) {
      const double* c1 = bcol(t1);
      for (int t2 = 0; t2 <= t1; ++t2) {
        const double* c2 = bcol(t2);
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += wj[k] * (c1[k] * c2[k]);
        bc.bb[(static_cast<std::size_t>(j) * nb2 + t1) * nb2 + t2] = s;
        bc.bb[(static_cast<std::size_t>(j) * nb2 + t2) * nb2 + t1] = s;
      }
      for (int p = 0; p < core.P; ++p) {
        const double* cp = core.polycols.data() + static_cast<std::size_t>(p) * n;
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += wj[k] * (c1[k] * cp[k]);
        bc.bp[(static_cast<std::size_t>(j) * nb2 + t1) * core.P + p] = s;
      }
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += wj[k] * (c1[k] * core.y[k]);
      bc.by[static_cast<std::size_t>(j) * nb2 + t1] = s;
    }
  }
  return bc;
}

struct EvalScratch {
  std::vector<double> prod, dots, gram, rhs, theta, lap;
  std::vector<int> psrc;
  SpdFactor chol;

  EvalScratch(const ScanCore& core, int nb) {
    const std::size_t n = core.xs.size();
    const int nprod = 3 + 4 * nb + 2 * core.P + 2;
    const int d = 2 * (nb + 1) + core.P;
    prod.resize(static_cast<std::size_t>(nprod) * n);
    dots.resize(static_cast<std::size_t>(core.J) * nprod);
    gram.resize(static_cast<std::size_t>(d) * d);
    rhs.resize(d);
    theta.resize(d);
    lap.resize(core.J);
    psrc.resize(nb + 1);
  }
};

struct NodeEval {
  double cond = kNegInf;
  bool singular = false;
};

NodeEval eval_node(const ScanCore& core, const BaseCtx& base, EvalScratch& es,
                   const double* sv, const double* cv, std::int64_t node) {
  const std::size_t n = core.xs.size();
  const int nb = base.nb, nb2 = 2 * nb, P = core.P, J = core.J;
  const int npair = nb + 1;
  const int d = 2 * npair + P;
  const int off_sb = 3;
  const int off_sp = off_sb + 4 * nb;
  const int off_y = off_sp + 2 * P;
  const int nprod = off_y + 2;

  double* pr = es.prod.data();
  {
    double* ss = pr;
    double* sc = pr + n;
    double* cc = pr + 2 * n;
    for (std::size_t k = 0; k < n; ++k) {
      ss[k] = sv[k] * sv[k];
      sc[k] = sv[k] * cv[k];
      cc[k] = cv[k] * cv[k];
    }
  }
  for (int a = 0; a < nb; ++a) {
    const double* bs = base.bs.data() + static_cast<std::size_t>(a) * n;
    const double* bcc = base.bc.data() + static_cast<std::size_t>(a) * n;
    double* p0 = pr + static_cast<std::size_t>(off_sb + 4 * a) * n;
    for (std::size_t k = 0; k < n; ++k) {
      p0[k] = sv[k] * bs[k];
      p0[n + k] = sv[k] * bcc[k];
      p0[2 * n + k] = cv[k] * bs[k];
      p0[3 * n + k] = cv[k] * bcc[k];
    }
  }
  for (int p = 0; p < P; ++p) {
    const double* cp = core.polycols.data() + static_cast<std::size_t>(p) * n;
    double* p0 = pr + static_cast<std::size_t>(off_sp + 2 * p) * n;
    for (std::size_t k = 0; k < n; ++k) {
      p0[k] = sv[k] * cp[k];
      p0[n + k] = cv[k] * cp[k];
    }
  }
  {
    double* p0 = pr + static_cast<std::size_t>(off_y) * n;
    for (std::size_t k = 0; k < n; ++k) {
      p0[k] = sv[k] * core.y[k];
      p0[n + k] = cv[k] * core.y[k];
    }
  }

  for (int j = 0; j < J; ++j) {
    const double* wj = core.w.data() + static_cast<std::size_t>(j) * n;
    double* dj = es.dots.data() + static_cast<std::size_t>(j) * nprod;
    for (int q = 0; q < nprod; ++q)
      dj[q] = dot_n(wj, pr + static_cast<std::size_t>(q) * n, n);
  }

  // Canonical column order: trig pairs by ascending frequency, then the
  // polynomial.  psrc maps pair slot -> base index, -1 for the swept pair.
  int below = 0;
  for (int a = 0; a < nb; ++a)
    if (base.nodes[a] < node) ++below;
  for (int q = 0; q < npair; ++q)
    es.psrc[q] = (q < below) ? q : (q == below ? -1 : q - 1);

  int nsing = 0;
  for (int j = 0; j < J; ++j) {
    const double* dj = es.dots.data() + static_cast<std::size_t>(j) * nprod;
    auto trig_trig = [&](int q1, int r1, int q2, int r2) -> double {
      const int b1 = es.psrc[q1], b2 = es.psrc[q2];
      if (b1 < 0 && b2 < 0) return dj[r1 + r2];  // ss=0, sc=1, cc=2
      if (b1 < 0) return dj[off_sb + 4 * b2 + 2 * r1 + r2];
      if (b2 < 0) return dj[off_sb + 4 * b1 + 2 * r2 + r1];
      return base.bb[(static_cast<std::size_t>(j) * nb2 + 2 * b1 + r1) * nb2 + 2 * b2 + r2];
    };
    auto trig_poly = [&](int q, int r, int p) -> double {
      const int b = es.psrc[q];
      if (b < 0) return dj[off_sp + 2 * p + r];
      return base.bp[(static_cast<std::size_t>(j) * nb2 + 2 * b + r) * P + p];
    };
    double* g = es.gram.data();
    for (int c1 = 0; c1 < d; ++c1) {
      for (int c2 = 0; c2 <= c1; ++c2) {
        double v;
        if (c1 < 2 * npair && c2 < 2 * npair)
          v = trig_trig(c1 / 2, c1 % 2, c2 / 2, c2 % 2);
        else if (c2 < 2 * npair)
          v = trig_poly(c2 / 2, c2 % 2, c1 - 2 * npair);
        else
          v = core.pp[(static_cast<std::size_t>(j) * P + (c1 - 2 * npair)) * P +
                      (c2 - 2 * npair)];
        g[static_cast<std::size_t>(c1) * d + c2] = v;
        g[static_cast<std::size_t>(c2) * d + c1] = v;
      }
    }
    for (int c = 0; c < d; ++c) {
      if (c < 2 * npair) {
        const int b = es.psrc[c / 2];
        es.rhs[c] = (b < 0) ? dj[off_y + c % 2]
                            : base.by[static_cast<std::size_t>(j) * nb2 + 2 * b + c % 2];
      } else {
        es.rhs[c] = core.py[static_cast<std::size_t>(j) * P + (c - 2 * npair)];
      }
    }

    if (!es.chol.factor(d, g, core.opt->cond_limit)) {
      es.lap[j] = kNegInf;
      ++nsing;
      continue;
    }
    es.chol.solve(es.rhs.data(), es.theta.data());
    double chi2 = core.swyy[j] - dot_n(es.rhs.data(), es.theta.data(), d);
    if (chi2 < 0.0) chi2 = 0.0;
    double v = core.log_norm[j] - 0.5 * chi2 + 0.5 * d * kLogTwoPi -
               0.5 * es.chol.log_det();
    if (!core.opt->flat_prior) {
      const ResolvedPriors& pri = *core.priors;
      for (int q = 0; q < npair && std::isfinite(v); ++q) {
        double a = std::hypot(es.theta[2 * q], es.theta[2 * q + 1]);
        if (a > pri.amax) {
          v = kNegInf;
          break;
        }
        a = std::max(a, core.opt->amplitude_floor_frac * pri.a0);
        v += pri.log_prior_sc_amp(a);
      }
      for (int p = 0; p < P && std::isfinite(v); ++p)
        v += pri.log_prior_coeff(es.theta[2 * npair + p]);
    }
    es.lap[j] = v + core.extra[j];
  }
  NodeEval out;
  out.cond = log_sum_exp(es.lap.data(), J);
  out.singular = !std::isfinite(out.cond) && nsing == J;
  return out;
}

// Evaluate nodes in [range_lo, range_hi) against a fixed base, skipping the
// guard band around occupied nodes.  Output slots are absolute node indices;
// skipped nodes keep their NaN marker.  Work is split on reseed-aligned
// blocks, and every node's trig values follow the same canonical path, so
// the output is bit-identical for any thread count.
void run_sweep(const ScanCore& core, const BaseCtx& base, std::int64_t range_lo,
               std::int64_t range_hi, double* out_cond, std::uint8_t* out_sing) {
  if (range_lo >= range_hi) return;
  const int R = core.opt->trig_reseed;
  const int g = core.opt->guard_cells;
  const std::int64_t b_lo = range_lo / R;
  const std::int64_t b_hi = (range_hi + R - 1) / R;
  const int nt = detail::effective_threads(*core.opt);
  (void)nt;

#ifdef _OPENMP
#pragma omp parallel num_threads(nt)
#endif
  {
    TrigTable trig(core.xs, core.grid->fmin, core.grid->step, R);
    EvalScratch es(core, base.nb);
#ifdef _OPENMP
#pragma omp for schedule(dynamic)
#endif
    for (std::int64_t b = b_lo; b < b_hi; ++b) {
      const std::int64_t lo = std::max(range_lo, b * R);
      const std::int64_t hi = std::min(range_hi, (b + 1) * R);
      if (lo >= hi) continue;
      trig.move_to(lo);
      for (std::int64_t i = lo; i < hi; ++i) {
        if (i > lo) trig.step();
        bool guarded = false;
        for (std::int32_t bn : base.nodes) {
          const std::int64_t diff = i - bn;
          if (diff <= g && diff >= -g) {
            guarded = true;
            break;
          }
        }
        if (guarded) continue;
        const NodeEval ev = eval_node(core, base, es, trig.sin_vals(),
                                      trig.cos_vals(), i);
        out_cond[i] = ev.cond;
        out_sing[i] = ev.singular ? 1 : 0;
      }
    }
  }
}

std::int64_t guarded_node_count(const std::vector<std::int32_t>& bases, int g,
                                std::int64_t range_lo, std::int64_t range_hi) {
  std::int64_t total = 0;
  std::int64_t cur_lo = 0, cur_hi = -1;
  bool open = false;
  for (std::int32_t b : bases) {  // ascending
    const std::int64_t lo = std::max<std::int64_t>(range_lo, b - g);
    const std::int64_t hi = std::min<std::int64_t>(range_hi - 1, b + g);
    if (hi < lo) continue;
    if (!open) {
      cur_lo = lo;
      cur_hi = hi;
      open = true;
    } else if (lo <= cur_hi + 1) {
      cur_hi = std::max(cur_hi, hi);
    } else {
      total += cur_hi - cur_lo + 1;
      cur_lo = lo;
      cur_hi = hi;
    }
  }
  if (open) total += cur_hi - cur_lo + 1;
  return total;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

namespace detail {

int effective_threads(const ScanOptions& opt) {
#ifdef _OPENMP
  return opt.n_threads > 0 ? opt.n_threads : omp_get_max_threads();
#else
  (void)opt;
  return 1;
#endif
}

void finalize_level(ScanResult& r, double epsilon) {
  const std::size_t n = r.tuple_count();
  std::vector<double> joint(n);
  for (std::size_t t = 0; t < n; ++t)
    joint[t] = r.log_conditional[t] + r.log_weight[t];
  r.log_evidence = log_sum_exp(joint);
  r.posterior.assign(n, 0.0);
  if (std::isfinite(r.log_evidence))
    for (std::size_t t = 0; t < n; ++t)
      r.posterior[t] = std::exp(joint[t] - r.log_evidence);
  std::vector<std::size_t> ord(n);
  std::iota(ord.begin(), ord.end(), std::size_t{0});
  std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
    return r.posterior[a] > r.posterior[b];
  });
  r.retained.clear();
  r.retained_mass = 0.0;
  const double target = 1.0 - epsilon;
  for (std::size_t idx : ord) {
    r.retained.push_back(idx);
    r.retained_mass += r.posterior[idx];
    if (r.retained_mass >= target) break;
  }
  if (r.retained.empty() && n > 0) r.retained.push_back(0);
}

}  // namespace detail

FrequencyGrid make_grid(double fmin, double fmax, double span, double oversample,
                        std::int64_t max_nodes) {
  if (!(fmin > 0.0) || !(fmax > fmin))
    raise(ErrorKind::config, "grid needs 0 < fmin < fmax");
  if (!(span > 0.0)) raise(ErrorKind::config, "grid needs a positive time span");
  if (!(oversample > 0.0)) raise(ErrorKind::config, "oversample must be positive");
  FrequencyGrid g;
  g.fmin = fmin;
  g.fmax = fmax;
  g.step = 1.0 / (oversample * span);
  g.m = static_cast<std::int64_t>(std::floor((fmax - fmin) / g.step)) + 1;
  if (g.m > max_nodes)
    raise(ErrorKind::resource,
          "frequency grid has " + std::to_string(g.m) + " nodes, limit " +
              std::to_string(max_nodes) + "; widen the step or narrow the band");
  const double log_range = std::log(fmax / fmin);
  g.log_weight.resize(g.m);
  double prev_edge = fmin;
  for (std::int64_t i = 0; i < g.m; ++i) {
    const double next_edge =
        (i == g.m - 1) ? fmax : fmin + g.step * (static_cast<double>(i) + 0.5);
    g.log_weight[i] = std::log(std::log(next_edge / prev_edge) / log_range);
    prev_edge = next_edge;
  }
  return g;
}

ScanResult scan_nf0(const TimeSeries& ts, int nd, const ResolvedPriors& priors,
                    const ScanOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_for_analysis(ts);
  auto [cts, mu] = center_abscissa(ts);
  const Design dz = build_design(cts.x_values(), {}, nd);
  const std::vector<double> y = cts.y_values();
  const std::vector<double> sig = cts.sigma_values();
  LaplaceOptions lo;
  lo.flat_prior = opt.flat_prior;
  lo.cond_limit = opt.cond_limit;
  lo.amplitude_floor_frac = opt.amplitude_floor_frac;

  ScanResult r;
  r.nf = 0;
  r.nd = nd;
  r.x_offset = mu;
  double cond;
  bool singular = false;
  if (opt.zero_jitter) {
    const LaplaceResult lr = laplace_log_evidence(dz, y, sig, 0.0, priors, lo);
    cond = lr.log_evidence;
    singular = lr.singular;
  } else {
    const JitterGrid jg = make_jitter_grid(priors, opt.jitter_nodes);
    const JitterMarginal jm = marginalize_jitter(dz, y, sig, jg, priors, lo);
    cond = jm.log_evidence;
    singular = jm.singular_nodes == static_cast<int>(jg.nodes.size());
  }
  r.log_conditional = {cond};
  r.log_weight = {0.0};
  r.eval_count = 1;
  r.singular_count = singular ? 1 : 0;
  detail::finalize_level(r, opt.epsilon);
  r.seconds = elapsed_since(t0);
  return r;
}

ScanResult scan_1d(const TimeSeries& ts, const FrequencyGrid& grid, int nd,
                   const ResolvedPriors& priors, const ScanOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  ScanCore core = make_core(ts, &grid, nd, priors, opt);
  BaseCtx base = make_base(core, {});
  if (opt.progress) opt.progress("scan one-frequency grid", 0.0);

  std::vector<double> cond(grid.m, kNaN);
  std::vector<std::uint8_t> sing(grid.m, 0);
  run_sweep(core, base, 0, grid.m, cond.data(), sing.data());

  ScanResult r;
  r.nf = 1;
  r.nd = nd;
  r.x_offset = core.x_offset;
  r.grid = grid;
  r.tuple_nodes.resize(grid.m);
  r.log_conditional.resize(grid.m);
  r.log_weight.resize(grid.m);
  for (std::int64_t i = 0; i < grid.m; ++i) {
    r.tuple_nodes[i] = static_cast<std::int32_t>(i);
    r.log_conditional[i] = cond[i];
    r.log_weight[i] = grid.log_weight[i];
    r.singular_count += sing[i];
  }
  r.eval_count = static_cast<std::size_t>(grid.m);
  r.used_openmp = detail::effective_threads(opt) > 1;
  detail::finalize_level(r, opt.epsilon);
  if (opt.progress) opt.progress("scan one-frequency grid", 1.0);
  r.seconds = elapsed_since(t0);
  return r;
}

namespace {

// Shared tail of the pair scan and the greedy step: collect candidate
// tuples from sweeps, merge exact duplicates, rank and prune.
struct TupleAccum {
  int nf;
  std::vector<std::int32_t> nodes;  // nf per candidate
  std::vector<double> cond;
  std::vector<std::uint8_t> sing;

  void add(const std::vector<std::int32_t>& base, std::int32_t swept, double c,
           std::uint8_t s) {
    std::int32_t buf[8];
    int pos = 0;
    bool placed = false;
    for (std::int32_t b : base) {
      if (!placed && swept < b) {
        buf[pos++] = swept;
        placed = true;
      }
      buf[pos++] = b;
    }
    if (!placed) buf[pos++] = swept;
    nodes.insert(nodes.end(), buf, buf + pos);
    cond.push_back(c);
    sing.push_back(s);
  }

  std::size_t count() const { return cond.size(); }

  // Lexicographic order with exact duplicates collapsed; values of
  // duplicates are bit-identical by construction, so which one survives
  // does not matter.
  void merge_sorted(ScanResult& r, const FrequencyGrid& grid) {
    const std::size_t n = count();
    std::vector<std::size_t> ord(n);
    std::iota(ord.begin(), ord.end(), std::size_t{0});
    auto key_less = [&](std::size_t a, std::size_t b) {
      const std::int32_t* ta = nodes.data() + a * nf;
      const std::int32_t* tb = nodes.data() + b * nf;
      return std::lexicographical_compare(ta, ta + nf, tb, tb + nf);
    };
    std::stable_sort(ord.begin(), ord.end(), key_less);
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0 && !key_less(ord[i - 1], ord[i])) continue;  // duplicate
      const std::int32_t* t = nodes.data() + ord[i] * nf;
      r.tuple_nodes.insert(r.tuple_nodes.end(), t, t + nf);
      r.log_conditional.push_back(cond[ord[i]]);
      double w = 0.0;
      for (int q = 0; q < nf; ++q) w += grid.log_weight[t[q]];
      r.log_weight.push_back(w);
      r.singular_count += sing[ord[i]];
    }
  }
};

}  // namespace

ScanResult scan_2d(const TimeSeries& ts, const FrequencyGrid& grid, int nd,
                   const ResolvedPriors& priors, const ScanOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  ScanCore core = make_core(ts, &grid, nd, priors, opt);
  const std::int64_t m = grid.m;
  if (m * (m - 1) / 2 > opt.max_tuples)
    raise(ErrorKind::resource, "exhaustive pair scan would evaluate too many tuples");

  TupleAccum acc;
  acc.nf = 2;
  std::vector<double> cond(m);
  std::vector<std::uint8_t> sing(m);
  ScanResult r;
  r.eval_count = 0;
  for (std::int64_t i = 0; i < m; ++i) {
    const std::int64_t lo = i + opt.guard_cells + 1;
    if (lo >= m) continue;
    const std::vector<std::int32_t> bn{static_cast<std::int32_t>(i)};
    BaseCtx base = make_base(core, bn);
    std::fill(cond.begin() + lo, cond.end(), kNaN);
    run_sweep(core, base, lo, m, cond.data(), sing.data());
    for (std::int64_t j = lo; j < m; ++j)
      if (!std::isnan(cond[j]))
        acc.add(bn, static_cast<std::int32_t>(j), cond[j], sing[j]);
    r.eval_count += static_cast<std::size_t>(m - lo) -
                    guarded_node_count(bn, opt.guard_cells, lo, m);
    if (opt.progress && (i % 64 == 0))
      opt.progress("scan frequency pairs", static_cast<double>(i) / m);
  }
  r.nf = 2;
  r.nd = nd;
  r.x_offset = core.x_offset;
  r.grid = grid;
  acc.merge_sorted(r, grid);
  r.used_openmp = detail::effective_threads(opt) > 1;
  detail::finalize_level(r, opt.epsilon);
  if (opt.progress) opt.progress("scan frequency pairs", 1.0);
  r.seconds = elapsed_since(t0);
  return r;
}

ScanResult scan_step(const TimeSeries& ts, const FrequencyGrid& grid, int nd,
                     const ResolvedPriors& priors, const ScanOptions& opt,
                     const ScanResult& prev_level) {
  if (prev_level.nf == 0) return scan_1d(ts, grid, nd, priors, opt);
  if (prev_level.nf >= 8)
    raise(ErrorKind::config, "greedy growth beyond 8 frequencies is not supported");
  const auto t0 = std::chrono::steady_clock::now();
  ScanCore core = make_core(ts, &grid, nd, priors, opt);
  const std::int64_t m = grid.m;
  const std::size_t nsweep = prev_level.retained.size();
  if (static_cast<std::int64_t>(nsweep) * m > opt.max_tuples)
    raise(ErrorKind::resource,
          "greedy step would evaluate too many tuples; raise epsilon or "
          "coarsen the grid");

  TupleAccum acc;
  acc.nf = prev_level.nf + 1;
  std::vector<double> cond(m);
  std::vector<std::uint8_t> sing(m);
  ScanResult r;
  std::size_t done = 0;
  for (std::size_t t : prev_level.retained) {
    const std::int32_t* tn = prev_level.tuple(t);
    const std::vector<std::int32_t> bn(tn, tn + prev_level.nf);
    BaseCtx base = make_base(core, bn);
    std::fill(cond.begin(), cond.end(), kNaN);
    run_sweep(core, base, 0, m, cond.data(), sing.data());
    for (std::int64_t j = 0; j < m; ++j)
      if (!std::isnan(cond[j]))
        acc.add(bn, static_cast<std::int32_t>(j), cond[j], sing[j]);
    r.eval_count += static_cast<std::size_t>(m) -
                    guarded_node_count(bn, opt.guard_cells, 0, m);
    ++done;
    if (opt.progress)
      opt.progress("grow to " + std::to_string(acc.nf) + " frequencies",
                   static_cast<double>(done) / nsweep);
  }
  r.nf = acc.nf;
  r.nd = nd;
  r.x_offset = core.x_offset;
  r.grid = grid;
  acc.merge_sorted(r, grid);
  r.used_openmp = detail::effective_threads(opt) > 1;
  detail::finalize_level(r, opt.epsilon);
  r.seconds = elapsed_since(t0);
  return r;
}

std::vector<ScanResult> scan_levels(const TimeSeries& ts, const FrequencyGrid& grid,
                                    int nf_target, int nd,
                                    const ResolvedPriors& priors,
                                    const ScanOptions& opt) {
  if (nf_target < 1) raise(ErrorKind::config, "need at least one level");
  std::vector<ScanResult> levels;
  levels.push_back(scan_1d(ts, grid, nd, priors, opt));
  for (int nf = 2; nf <= nf_target; ++nf)
    levels.push_back(scan_step(ts, grid, nd, priors, opt, levels.back()));
  return levels;
}

std::size_t truncation_trigger(const std::vector<double>& log_level_mass,
                               double stop_ratio) {
  if (!(stop_ratio > 0.0))
    raise(ErrorKind::config, "stop ratio must be positive");
  const double log_ratio = std::log(stop_ratio);
  std::vector<double> below;
  for (std::size_t n = 1; n < log_level_mass.size(); ++n) {
    below.push_back(log_level_mass[n - 1]);
    const double log_below = log_sum_exp(below);
    if (log_level_mass[n] < log_ratio + log_below) return n;
  }
  return static_cast<std::size_t>(-1);
}

}  // namespace qpscan
