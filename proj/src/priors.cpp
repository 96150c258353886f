#include "qpscan/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qpscan {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

double GeometricLevelPrior::prob(int k) const {
  if (k < kmin || k > kmax) return 0.0;
  if (k > kmin) return std::pow(ratio, static_cast<double>(k - kmin));
  double rest = 0.0;
  for (int j = kmax; j > kmin; --j) rest += std::pow(ratio, static_cast<double>(j - kmin));
  return 1.0 - rest;
}

double GeometricLevelPrior::log_prob(int k) const {
  const double p = prob(k);
  return p > 0.0 ? std::log(p) : kNegInf;
}

GeometricLevelPrior make_level_prior(int kmin, int kmax, double ratio) {
  if (kmin < 0 || kmax < kmin)
    raise(ErrorKind::config, "level prior needs 0 <= kmin <= kmax, got [" +
                                 std::to_string(kmin) + "," + std::to_string(kmax) + "]");
  if (!(ratio > 0.0) || !(ratio < 1.0))
    raise(ErrorKind::config,
          "level prior ratio must lie in (0,1), got " + std::to_string(ratio));
  GeometricLevelPrior p{kmin, kmax, ratio};
  if (p.prob(kmin) < 0.0)
    raise(ErrorKind::config,
          "level prior ratio " + std::to_string(ratio) + " leaves negative mass at level " +
              std::to_string(kmin) + " with kmax " + std::to_string(kmax));
  return p;
}

const char* to_string(JitterPriorKind k) {
  switch (k) {
    case JitterPriorKind::mjeff: return "mjeff";
    case JitterPriorKind::cutoff: return "cutoff";
    case JitterPriorKind::halfnormal: return "halfnormal";
  }
  return "mjeff";
}

JitterPriorKind jitter_prior_from_string(const std::string& s) {
  if (s == "mjeff") return JitterPriorKind::mjeff;
  if (s == "cutoff") return JitterPriorKind::cutoff;
  if (s == "halfnormal") return JitterPriorKind::halfnormal;
  raise(ErrorKind::config, "unknown jitter prior '" + s + "'");
}

double ResolvedPriors::log_prior_freq(double f) const {
  if (f < fmin || f > fmax) return kNegInf;
  return -std::log(f) - std::log(std::log(fmax / fmin));
}

double ResolvedPriors::log_prior_sc_amp(double a) const {
  if (a > amax || a <= 0.0) return kNegInf;
  return -std::log(kTwoPi) - std::log(log_la) - std::log(a) - std::log(a0 + a);
}

double ResolvedPriors::log_prior_sc(double s, double c) const {
  return log_prior_sc_amp(std::hypot(s, c));
}

double ResolvedPriors::log_prior_coeff(double b) const {
  const double ab = std::fabs(b);
  if (ab > bmax) return kNegInf;
  return -std::log(2.0) - std::log(ab + b0) - std::log(log_lb);
}

double ResolvedPriors::log_prior_jitter(double s) const {
  if (s < 0.0 || s > jitter_max) return kNegInf;
  switch (jitter_kind) {
    case JitterPriorKind::mjeff:
      return -std::log(s + b0) - std::log(log_lb);
    case JitterPriorKind::cutoff:
      return -std::log(s + jitter_cutoff) -
             std::log(std::log1p(jitter_max / jitter_cutoff));
    case JitterPriorKind::halfnormal: {
      const double z = s / jitter_scale;
      const double norm = std::erf(jitter_max / (jitter_scale * std::sqrt(2.0)));
      return 0.5 * std::log(2.0 / (M_PI * jitter_scale * jitter_scale)) -
             0.5 * z * z - std::log(norm);
    }
  }
  return kNegInf;
}

ResolvedPriors resolve_priors(const TimeSeries& ts, const PriorConfig& cfg) {
  ResolvedPriors r;
  r.nf_prior = make_level_prior(0, cfg.nf_max, cfg.alpha);
  if (cfg.nd_min < 0 || cfg.nd_min > cfg.nd_max)
    raise(ErrorKind::config, "need 0 <= nd_min <= nd_max");
  r.nd_prior = make_level_prior(cfg.nd_min, cfg.nd_max, cfg.beta);

  // Data-driven knee: RMS of one-sigma noise, weighted harmonically so a
  // few precise points dominate, matching the scale a marginally
  // detectable amplitude would have.
  double inv2 = 0.0;
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  for (const Observation& o : ts.observations()) {
    inv2 += 1.0 / (o.sigma * o.sigma);
    ymin = std::min(ymin, o.y);
    ymax = std::max(ymax, o.y);
  }
  const double knee = ts.size() > 0
                          ? std::sqrt(static_cast<double>(ts.size()) / inv2)
                          : 1.0;
  double ptp = (ts.size() > 0) ? ymax - ymin : 0.0;
  if (!(ptp > 0.0)) ptp = std::max(1.0, std::fabs(ymax));  // constant series guard

  r.a0 = cfg.a0.value_or(knee);
  r.b0 = cfg.b0.value_or(knee);
  r.amax = cfg.amax.value_or(10.0 * ptp);
  r.bmax = cfg.bmax.value_or(10.0 * ptp);
  for (auto [v, name] : {std::pair{r.a0, "a0"}, {r.amax, "amax"},
                         {r.b0, "b0"}, {r.bmax, "bmax"}}) {
    if (!(v > 0.0) || !std::isfinite(v))
      raise(ErrorKind::config, std::string(name) + " must be positive and finite");
  }
  r.log_la = std::log1p(r.amax / r.a0);
  r.log_lb = std::log1p(r.bmax / r.b0);

  const double span = ts.span();
  if (cfg.fmin) {
    r.fmin = *cfg.fmin;
  } else {
    if (!(span > 0.0))
      raise(ErrorKind::config, "fmin default needs a positive time span");
    r.fmin = 2.0 / span;
  }
  if (!cfg.fmax)
    raise(ErrorKind::config, "fmax is required (no safe data-driven default)");
  r.fmax = *cfg.fmax;
  if (!(r.fmin > 0.0) || !(r.fmax > r.fmin))
    raise(ErrorKind::config, "need 0 < fmin < fmax, got [" + std::to_string(r.fmin) +
                                 "," + std::to_string(r.fmax) + "]");

  r.jitter_kind = cfg.jitter_kind;
  r.jitter_max = r.bmax;
  r.jitter_cutoff = cfg.jitter_cutoff.value_or(10.0 * r.b0);
  r.jitter_scale = cfg.jitter_scale.value_or(r.b0);
  if (!(r.jitter_cutoff > 0.0) || !(r.jitter_scale > 0.0))
    raise(ErrorKind::config, "jitter prior parameters must be positive");
  return r;
}

}  // namespace qpscan
