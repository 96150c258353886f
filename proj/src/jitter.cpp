#include "qpscan/jitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpscan/logsum.hpp"

namespace qpscan {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

JitterGrid make_jitter_grid(const ResolvedPriors& priors, int n_nodes,
                            double jitter_min) {
  if (n_nodes < 2) raise(ErrorKind::config, "jitter grid needs at least 2 nodes");
  JitterGrid g;
  g.lo = std::max(jitter_min, 1e-3 * priors.b0);
  g.hi = priors.jitter_max;
  if (!(g.lo > 0.0) || !(g.hi > g.lo))
    raise(ErrorKind::config, "jitter grid bounds must satisfy 0 < lo < hi");
  const double ulo = std::log(g.lo), uhi = std::log(g.hi);
  const double du = (uhi - ulo) / (n_nodes - 1);
  g.nodes.resize(n_nodes);
  g.log_weights.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    const double u = ulo + du * i;
    g.nodes[i] = std::exp(u);
    const double trap = (i == 0 || i == n_nodes - 1) ? 0.5 * du : du;
    g.log_weights[i] = std::log(trap) + u;  // + u: d sigma = sigma d(log sigma)
  }
  return g;
}

double jitter_prior_cdf(const ResolvedPriors& priors, double s) {
  if (s <= 0.0) return 0.0;
  s = std::min(s, priors.jitter_max);
  switch (priors.jitter_kind) {
    case JitterPriorKind::mjeff:
      return std::log1p(s / priors.b0) / priors.log_lb;
    case JitterPriorKind::cutoff:
      return std::log1p(s / priors.jitter_cutoff) /
             std::log1p(priors.jitter_max / priors.jitter_cutoff);
    case JitterPriorKind::halfnormal: {
      const double z = priors.jitter_scale * std::sqrt(2.0);
      return std::erf(s / z) / std::erf(priors.jitter_max / z);
    }
  }
  return 0.0;
}

JitterMarginal marginalize_jitter(const Design& design, const std::vector<double>& y,
                                  const std::vector<double>& sigma,
                                  const JitterGrid& grid, const ResolvedPriors& priors,
                                  const LaplaceOptions& opt) {
  JitterMarginal m;
  const std::size_t n = grid.nodes.size();
  m.node_log_integrand.resize(n);
  m.node_log_cond.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = grid.nodes[i];
    const LaplaceResult lr = laplace_log_evidence(design, y, sigma, s, priors, opt);
    if (lr.singular) ++m.singular_nodes;
    m.node_log_cond[i] = lr.log_evidence;
    m.node_log_integrand[i] =
        lr.log_evidence + priors.log_prior_jitter(s) + grid.log_weights[i];
  }
  m.log_evidence = log_sum_exp(m.node_log_integrand);

  // Mass omitted below the grid floor: prior mass there times the
  // conditional evidence at the floor (the likelihood only sees sigma^2
  // shifts of order lo^2, so the edge value stands in for the sup).
  const double pm = jitter_prior_cdf(priors, grid.lo);
  m.log_below_floor_bound =
      pm > 0.0 && std::isfinite(m.node_log_cond.front())
          ? std::log(pm) + m.node_log_cond.front()
          : kNegInf;
  return m;
}

JitterMarginal marginalize_jitter_adaptive(const Design& design,
                                           const std::vector<double>& y,
                                           const std::vector<double>& sigma,
                                           const ResolvedPriors& priors,
                                           const LaplaceOptions& opt, int n_nodes,
                                           double tol, int max_doublings) {
  JitterGrid grid = make_jitter_grid(priors, n_nodes);
  JitterMarginal m = marginalize_jitter(design, y, sigma, grid, priors, opt);
  for (int level = 0; level < max_doublings; ++level) {
    n_nodes = 2 * n_nodes - 1;  // refinement keeps existing nodes in place
    grid = make_jitter_grid(priors, n_nodes);
    JitterMarginal fine = marginalize_jitter(design, y, sigma, grid, priors, opt);
    const bool settled = std::isfinite(fine.log_evidence) &&
                         std::isfinite(m.log_evidence) &&
                         std::fabs(fine.log_evidence - m.log_evidence) < tol;
    m = std::move(fine);
    if (settled) break;
  }
  return m;
}

std::vector<double> jitter_posterior(const JitterMarginal& m) {
  std::vector<double> p(m.node_log_integrand.size(), 0.0);
  if (!std::isfinite(m.log_evidence)) return p;
  for (std::size_t i = 0; i < p.size(); ++i)
    p[i] = std::exp(m.node_log_integrand[i] - m.log_evidence);
  return p;
}

}  // namespace qpscan
