#include "qpscan/linear_marginal.hpp"

#include <cmath>
#include <limits>

#include "qpscan/linalg.hpp"

namespace qpscan {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
}  // namespace

LinearFit fit_linear(const Design& design, const std::vector<double>& y,
                     const std::vector<double>& sigma, double jitter,
                     double cond_limit) {
  const int d = design.ncol;
  const std::size_t n = design.nrow;
  LinearFit fit;
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k)
    w[k] = 1.0 / (sigma[k] * sigma[k] + jitter * jitter);

  std::vector<double> h(static_cast<std::size_t>(d) * d, 0.0);
  std::vector<double> b(d, 0.0);
  for (int i = 0; i < d; ++i) {
    const double* ci = design.col(i);
    for (int j = 0; j <= i; ++j) {
      const double* cj = design.col(j);
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += w[k] * ci[k] * cj[k];
      h[static_cast<std::size_t>(i) * d + j] = s;
      h[static_cast<std::size_t>(j) * d + i] = s;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += w[k] * ci[k] * y[k];
    b[i] = s;
  }

  SpdFactor chol;
  if (!chol.factor(d, h.data(), cond_limit)) {
    fit.singular = true;
    fit.bad_column = chol.bad_column();
    fit.cond = chol.cond();
    return fit;
  }
  fit.theta.resize(d);
  chol.solve(b.data(), fit.theta.data());
  fit.cov.resize(static_cast<std::size_t>(d) * d);
  chol.inverse(fit.cov.data());
  fit.log_det_h = chol.log_det();
  fit.cond = chol.cond();

  // Residual evaluated directly; the moment shortcut Swyy - b.theta loses
  // all significance when the fit is nearly interpolating.
  double chi2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double m = 0.0;
    for (int i = 0; i < d; ++i) m += fit.theta[i] * design.col(i)[k];
    const double r = y[k] - m;
    chi2 += w[k] * r * r;
  }
  fit.chi2 = chi2;
  return fit;
}

LaplaceResult laplace_log_evidence(const Design& design, const std::vector<double>& y,
                                   const std::vector<double>& sigma, double jitter,
                                   const ResolvedPriors& priors,
                                   const LaplaceOptions& opt) {
  LaplaceResult res;
  const LinearFit fit = fit_linear(design, y, sigma, jitter, opt.cond_limit);
  if (fit.singular) {
    res.singular = true;
    res.bad_column = fit.bad_column;
    res.log_evidence = kNegInf;
    return res;
  }
  res.chi2 = fit.chi2;

  double log_norm = 0.0;
  for (double s : sigma) log_norm += std::log(s * s + jitter * jitter);
  log_norm = -0.5 * (static_cast<double>(sigma.size()) * kLogTwoPi + log_norm);

  double log_ev = log_norm - 0.5 * fit.chi2 +
                  0.5 * design.ncol * kLogTwoPi - 0.5 * fit.log_det_h;

  if (!opt.flat_prior) {
    double log_prior = 0.0;
    for (int i = 0; i < design.nf; ++i) {
      double a = std::hypot(fit.theta[2 * i], fit.theta[2 * i + 1]);
      if (a > priors.amax) {
        res.log_evidence = kNegInf;  // mode outside the prior support
        return res;
      }
      a = std::max(a, opt.amplitude_floor_frac * priors.a0);
      log_prior += priors.log_prior_sc_amp(a);
    }
    for (int p = 0; p <= design.nd; ++p)
      log_prior += priors.log_prior_coeff(fit.theta[2 * design.nf + p]);
    log_ev += log_prior;  // -inf propagates when a coefficient leaves support
  }
  res.log_evidence = log_ev;
  return res;
}

}  // namespace qpscan
