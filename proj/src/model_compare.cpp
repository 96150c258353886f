#include "qpscan/model_compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "qpscan/design.hpp"
#include "qpscan/jitter.hpp"
#include "qpscan/linear_marginal.hpp"
#include "qpscan/logsum.hpp"

namespace qpscan {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::size_t ModelPosterior::nf_index(int nf) const {
  for (std::size_t i = 0; i < nf_levels.size(); ++i)
    if (nf_levels[i] == nf) return i;
  raise(ErrorKind::validation, "sinusoid count " + std::to_string(nf) + " not present");
}

std::size_t ModelPosterior::nd_index(int nd) const {
  for (std::size_t i = 0; i < nd_levels.size(); ++i)
    if (nd_levels[i] == nd) return i;
  raise(ErrorKind::validation, "polynomial degree " + std::to_string(nd) + " not present");
}

double ModelPosterior::log_joint_at(int nf, int nd) const {
  return log_joint[nf_index(nf) * nd_levels.size() + nd_index(nd)];
}

ModelPosterior assemble_posterior(const std::vector<ScanResult>& levels,
                                  const ResolvedPriors& priors) {
  if (levels.empty()) raise(ErrorKind::validation, "no scan levels to assemble");
  ModelPosterior mp;
  for (const ScanResult& r : levels) {
    if (std::find(mp.nf_levels.begin(), mp.nf_levels.end(), r.nf) == mp.nf_levels.end())
      mp.nf_levels.push_back(r.nf);
    if (std::find(mp.nd_levels.begin(), mp.nd_levels.end(), r.nd) == mp.nd_levels.end())
      mp.nd_levels.push_back(r.nd);
  }
  std::sort(mp.nf_levels.begin(), mp.nf_levels.end());
  std::sort(mp.nd_levels.begin(), mp.nd_levels.end());
  for (int nf : mp.nf_levels) mp.nf_log_prior.push_back(priors.nf_prior.log_prob(nf));
  for (int nd : mp.nd_levels) mp.nd_log_prior.push_back(priors.nd_prior.log_prob(nd));
  const std::size_t nr = mp.nf_levels.size(), nc = mp.nd_levels.size();
  mp.log_joint.assign(nr * nc, kNegInf);
  std::vector<std::uint8_t> seen(nr * nc, 0);
  for (const ScanResult& r : levels) {
    const std::size_t idx = mp.nf_index(r.nf) * nc + mp.nd_index(r.nd);
    if (seen[idx])
      raise(ErrorKind::validation, "duplicate scan level for one model order");
    seen[idx] = 1;
    mp.log_joint[idx] = r.log_evidence + priors.nf_prior.log_prob(r.nf) +
                        priors.nd_prior.log_prob(r.nd);
  }
  mp.log_total = log_sum_exp(mp.log_joint);
  mp.joint.assign(nr * nc, 0.0);
  if (std::isfinite(mp.log_total))
    for (std::size_t i = 0; i < nr * nc; ++i)
      mp.joint[i] = std::exp(mp.log_joint[i] - mp.log_total);
  mp.nf_marginal.assign(nr, 0.0);
  mp.nd_marginal.assign(nc, 0.0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) {
      mp.nf_marginal[i] += mp.joint[i * nc + j];
      mp.nd_marginal[j] += mp.joint[i * nc + j];
      if (mp.joint[i * nc + j] > mp.joint[best]) best = i * nc + j;
    }
  mp.map_nf = mp.nf_levels[best / nc];
  mp.map_nd = mp.nd_levels[best % nc];
  return mp;
}

double ModelPosterior::log_bayes_factor(int nf_hi, int nf_lo) const {
  const std::size_t nc = nd_levels.size();
  const std::size_t ih = nf_index(nf_hi), il = nf_index(nf_lo);
  // log_joint rows carry both level priors; the nd prior belongs in the
  // marginalization, the nf prior must go so this stays an evidence ratio.
  std::vector<double> hi(log_joint.begin() + ih * nc, log_joint.begin() + (ih + 1) * nc);
  std::vector<double> lo(log_joint.begin() + il * nc, log_joint.begin() + (il + 1) * nc);
  return (log_sum_exp(hi) - nf_log_prior[ih]) - (log_sum_exp(lo) - nf_log_prior[il]);
}

double ModelPosterior::log_bayes_factor_at(int nf_hi, int nf_lo, int nd) const {
  // The shared nd prior cancels in the difference; the nf priors do not.
  return (log_joint_at(nf_hi, nd) - nf_log_prior[nf_index(nf_hi)]) -
         (log_joint_at(nf_lo, nd) - nf_log_prior[nf_index(nf_lo)]);
}

int ModelPosterior::nf_marginal_argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < nf_marginal.size(); ++i)
    if (nf_marginal[i] > nf_marginal[best]) best = i;
  return nf_levels[best];
}

double BinnedDensity::total() const {
  double s = 0.0;
  for (double v : mass) s += v;
  return s;
}

double overlap(const BinnedDensity& a, const BinnedDensity& b) {
  if (!(a.width > 0.0) || !(b.width > 0.0))
    raise(ErrorKind::validation, "overlap needs positive bin widths");
  if (std::fabs(a.width - b.width) > 1e-9 * a.width)
    raise(ErrorKind::validation, "overlap needs equal bin widths");
  const double off = (b.lo - a.lo) / a.width;
  const long shift = std::lround(off);
  if (std::fabs(off - static_cast<double>(shift)) > 1e-6)
    raise(ErrorKind::validation, "overlap needs integer-shifted bin lattices");
  double s = 0.0;
  for (std::size_t j = 0; j < b.mass.size(); ++j) {
    const long ia = static_cast<long>(j) + shift;
    if (ia >= 0 && ia < static_cast<long>(a.mass.size()))
      s += std::min(a.mass[static_cast<std::size_t>(ia)], b.mass[j]);
  }
  return s;
}

BinnedDensity element_marginal(const ScanResult& level, int element) {
  if (level.nf < 1 || element < 0 || element >= level.nf)
    raise(ErrorKind::validation, "tuple element out of range");
  BinnedDensity d;
  d.width = level.grid.step;
  d.lo = level.grid.fmin - 0.5 * level.grid.step;
  d.mass.assign(level.grid.m, 0.0);
  const std::size_t n = level.tuple_count();
  for (std::size_t t = 0; t < n; ++t)
    d.mass[level.tuple(t)[element]] += level.posterior[t];
  return d;
}

BinnedDensity delta_marginal(const ScanResult& level) {
  if (level.nf != 2)
    raise(ErrorKind::validation, "difference marginal needs a two-sinusoid level");
  const std::int64_t m = level.grid.m;
  // k = j - 2*i spans [-2(m-1), m-1]; delta_k = k*step - fmin exactly.
  const std::int64_t kmin = -2 * (m - 1);
  BinnedDensity d;
  d.width = level.grid.step;
  d.lo = (static_cast<double>(kmin) - 0.5) * level.grid.step - level.grid.fmin;
  d.mass.assign(static_cast<std::size_t>(m - 1 - kmin + 1), 0.0);
  const std::size_t n = level.tuple_count();
  for (std::size_t t = 0; t < n; ++t) {
    const std::int32_t* tp = level.tuple(t);
    const std::int64_t k = static_cast<std::int64_t>(tp[1]) - 2 * tp[0];
    d.mass[static_cast<std::size_t>(k - kmin)] += level.posterior[t];
  }
  return d;
}

BinnedDensity doubled_marginal(const BinnedDensity& d) {
  BinnedDensity out;
  out.width = d.width;
  out.lo = d.lo;
  out.mass.assign(2 * d.mass.size() + 2, 0.0);
  for (std::size_t i = 0; i < d.mass.size(); ++i) {
    if (d.mass[i] == 0.0) continue;
    const double image = 2.0 * d.center(i);
    const long k = static_cast<long>(std::floor((image - out.lo) / out.width));
    if (k >= 0) {
      if (static_cast<std::size_t>(k) >= out.mass.size())
        out.mass.resize(static_cast<std::size_t>(k) + 1, 0.0);
      out.mass[static_cast<std::size_t>(k)] += d.mass[i];
    }
  }
  return out;
}

AmpPhase amplitude_phase(double s, double c) {
  AmpPhase ap;
  ap.amplitude = std::hypot(s, c);
  ap.phase = std::atan2(-s, c);
  return ap;
}

std::vector<double> shift_poly_coefficients(const std::vector<double>& centered,
                                            double mu) {
  const std::size_t np = centered.size();
  std::vector<double> out(np, 0.0);
  for (std::size_t q = 0; q < np; ++q) {
    // (x - mu)^q contributes C(q,p) * (-mu)^(q-p) to the x^p coefficient.
    double binom = 1.0;
    double shift_pow = 1.0;
    for (std::size_t p = q + 1; p-- > 0;) {
      out[p] += centered[q] * binom * shift_pow;
      if (p > 0) {
        binom = binom * static_cast<double>(p) / static_cast<double>(q - p + 1);
        shift_pow *= -mu;
      }
    }
  }
  return out;
}

TupleSummary summarize_tuple(const TimeSeries& ts, const ScanResult& level,
                             std::size_t tuple_index, const ResolvedPriors& priors,
                             const ScanOptions& opt) {
  if (tuple_index >= level.tuple_count())
    raise(ErrorKind::validation, "tuple index out of range");
  auto [cts, mu] = center_abscissa(ts);
  TupleSummary s;
  for (int q = 0; q < level.nf; ++q)
    s.freqs.push_back(level.grid.node(level.tuple(tuple_index)[q]));
  const Design dz = build_design(cts.x_values(), s.freqs, level.nd);
  const std::vector<double> y = cts.y_values();
  const std::vector<double> sig = cts.sigma_values();

  LaplaceOptions lo;
  lo.flat_prior = opt.flat_prior;
  lo.cond_limit = opt.cond_limit;
  lo.amplitude_floor_frac = opt.amplitude_floor_frac;
  if (!opt.zero_jitter) {
    const JitterGrid jg = make_jitter_grid(priors, opt.jitter_nodes);
    const JitterMarginal jm = marginalize_jitter(dz, y, sig, jg, priors, lo);
    const std::vector<double> post = jitter_posterior(jm);
    for (std::size_t i = 0; i < post.size(); ++i)
      s.jitter_mean += post[i] * jg.nodes[i];
  }

  const LinearFit fit = fit_linear(dz, y, sig, s.jitter_mean, opt.cond_limit);
  if (fit.singular)
    raise(ErrorKind::singular,
          "summary refit is singular at column " + std::to_string(fit.bad_column));
  s.theta = fit.theta;
  s.cov = fit.cov;
  s.chi2 = fit.chi2;
  for (int q = 0; q < level.nf; ++q) {
    const AmpPhase ap = amplitude_phase(fit.theta[2 * q], fit.theta[2 * q + 1]);
    s.amplitude.push_back(ap.amplitude);
    s.phase.push_back(ap.phase);
  }
  std::vector<double> centered(fit.theta.begin() + 2 * level.nf, fit.theta.end());
  s.poly = shift_poly_coefficients(centered, mu);
  return s;
}

}  // namespace qpscan
