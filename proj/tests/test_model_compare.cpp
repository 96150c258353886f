#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "qpscan/logsum.hpp"
#include "qpscan/model_compare.hpp"
#include "qpscan/scan.hpp"

using namespace qpscan;

namespace {

ScanResult stub_level(int nf, int nd, double log_evidence) {
  ScanResult r;
  r.nf = nf;
  r.nd = nd;
  r.log_evidence = log_evidence;
  return r;
}

ResolvedPriors stub_priors(int nf_max = 2, int nd_max = 1) {
  ResolvedPriors p;
  p.nf_prior = make_level_prior(0, nf_max, 0.5);
  p.nd_prior = make_level_prior(0, nd_max, 0.5);
  return p;
}

// Hand-built two-frequency level on a small grid.
ScanResult stub_pairs(double fmin, double step, std::int64_t m,
                      const std::vector<std::pair<int, int>>& tuples,
                      const std::vector<double>& posterior) {
  ScanResult r;
  r.nf = 2;
  r.nd = 0;
  r.grid.fmin = fmin;
  r.grid.fmax = fmin + step * static_cast<double>(m - 1);
  r.grid.step = step;
  r.grid.m = m;
  for (const auto& [i, j] : tuples) {
    r.tuple_nodes.push_back(i);
    r.tuple_nodes.push_back(j);
  }
  r.posterior = posterior;
  r.log_conditional.assign(tuples.size(), 0.0);
  r.log_weight.assign(tuples.size(), 0.0);
  return r;
}

}  // namespace

TEST_CASE("posterior assembly: joint, marginals, and map") {
  const ResolvedPriors priors = stub_priors();
  const std::vector<ScanResult> levels{
      stub_level(0, 0, -10.0), stub_level(0, 1, -12.0), stub_level(1, 0, -4.0),
      stub_level(1, 1, -6.0),  stub_level(2, 0, -5.5),  stub_level(2, 1, -8.0)};
  const ModelPosterior mp = assemble_posterior(levels, priors);

  CHECK(mp.nf_levels == std::vector<int>{0, 1, 2});
  CHECK(mp.nd_levels == std::vector<int>{0, 1});

  // Joint reconstruction by hand.
  std::vector<double> expect;
  for (const ScanResult& r : levels)
    expect.push_back(r.log_evidence + priors.nf_prior.log_prob(r.nf) +
                     priors.nd_prior.log_prob(r.nd));
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::size_t idx =
        mp.nf_index(levels[i].nf) * mp.nd_levels.size() + mp.nd_index(levels[i].nd);
    CHECK(mp.log_joint[idx] == doctest::Approx(expect[i]).epsilon(1e-15));
  }
  CHECK(mp.log_total == doctest::Approx(log_sum_exp(expect)).epsilon(1e-13));

  double total = 0.0;
  for (double v : mp.joint) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // nf=1 dominates: evidence -4 and -6 beat everything else.
  CHECK(mp.map_nf == 1);
  CHECK(mp.map_nd == 0);
  CHECK(mp.nf_marginal_argmax() == 1);
  CHECK(mp.nf_marginal[1] > mp.nf_marginal[0]);
  CHECK(mp.nf_marginal[1] > mp.nf_marginal[2]);
  const double row_total =
      mp.nf_marginal[0] + mp.nf_marginal[1] + mp.nf_marginal[2];
  CHECK(row_total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mp.nd_marginal[0] + mp.nd_marginal[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bayes factors are evidence ratios marginal over the degree prior") {
  const ResolvedPriors priors = stub_priors();
  const std::vector<ScanResult> levels{
      stub_level(0, 0, -10.0), stub_level(0, 1, -12.0), stub_level(1, 0, -4.0),
      stub_level(1, 1, -6.0),  stub_level(2, 0, -5.5),  stub_level(2, 1, -8.0)};
  const ModelPosterior mp = assemble_posterior(levels, priors);

  auto nd_marg = [&](double e0, double e1) {
    const std::vector<double> v{e0 + priors.nd_prior.log_prob(0),
                                e1 + priors.nd_prior.log_prob(1)};
    return log_sum_exp(v);
  };
  // The nf prior must not appear in the ratio.
  CHECK(mp.log_bayes_factor(1, 0) ==
        doctest::Approx(nd_marg(-4.0, -6.0) - nd_marg(-10.0, -12.0)).epsilon(1e-13));
  CHECK(mp.log_bayes_factor(2, 1) ==
        doctest::Approx(nd_marg(-5.5, -8.0) - nd_marg(-4.0, -6.0)).epsilon(1e-13));
  CHECK(mp.log_bayes_factor(1, 0) ==
        doctest::Approx(-mp.log_bayes_factor(0, 1)).epsilon(1e-13));
  // Chain consistency.
  CHECK(mp.log_bayes_factor(2, 0) ==
        doctest::Approx(mp.log_bayes_factor(2, 1) + mp.log_bayes_factor(1, 0))
            .epsilon(1e-12));

  // At fixed degree the nd prior cancels and only evidences remain.
  CHECK(mp.log_bayes_factor_at(1, 0, 0) == doctest::Approx(6.0).epsilon(1e-13));
  CHECK(mp.log_bayes_factor_at(2, 1, 1) == doctest::Approx(-2.0).epsilon(1e-13));

  CHECK_THROWS_AS(mp.log_bayes_factor(3, 0), Error);
  CHECK_THROWS_AS(mp.log_joint_at(1, 5), Error);
}

TEST_CASE("duplicate model orders are rejected") {
  const ResolvedPriors priors = stub_priors();
  const std::vector<ScanResult> levels{stub_level(0, 0, -1.0), stub_level(0, 0, -2.0)};
  CHECK_THROWS_AS(assemble_posterior(levels, priors), Error);
  CHECK_THROWS_AS(assemble_posterior({}, priors), Error);
}

TEST_CASE("missing combinations carry zero mass") {
  const ResolvedPriors priors = stub_priors(1, 1);
  const std::vector<ScanResult> levels{stub_level(0, 0, -3.0), stub_level(1, 0, -2.0),
                                       stub_level(1, 1, -2.5)};
  const ModelPosterior mp = assemble_posterior(levels, priors);
  CHECK(mp.log_joint_at(0, 1) == -std::numeric_limits<double>::infinity());
  const std::size_t idx = mp.nf_index(0) * 2 + mp.nd_index(1);
  CHECK(mp.joint[idx] == 0.0);
}

TEST_CASE("overlap: aligned, shifted, and invalid lattices") {
  BinnedDensity a{0.0, 1.0, {0.2, 0.8}};
  BinnedDensity b{1.0, 1.0, {0.5, 0.5}};
  // a covers [0,2), b covers [1,3); only [1,2) intersects: min(0.8, 0.5)
  CHECK(overlap(a, b) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(overlap(b, a) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(overlap(a, a) == doctest::Approx(1.0).epsilon(1e-15));

  BinnedDensity far{10.0, 1.0, {1.0}};
  CHECK(overlap(a, far) == 0.0);

  BinnedDensity badw{0.0, 0.5, {1.0}};
  CHECK_THROWS_AS(overlap(a, badw), Error);
  BinnedDensity badshift{0.25, 1.0, {1.0}};
  CHECK_THROWS_AS(overlap(a, badshift), Error);
}

TEST_CASE("element marginals accumulate tuple mass on grid cells") {
  const ScanResult level = stub_pairs(1.0, 0.1, 5, {{0, 2}, {1, 3}}, {0.3, 0.7});
  const BinnedDensity f1 = element_marginal(level, 0);
  const BinnedDensity f2 = element_marginal(level, 1);
  CHECK(f1.width == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(f1.lo == doctest::Approx(0.95).epsilon(1e-13));
  REQUIRE(f1.mass.size() == 5);
  CHECK(f1.mass[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(f1.mass[1] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(f1.mass[2] == 0.0);
  CHECK(f2.mass[2] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(f2.mass[3] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(f1.center(0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(element_marginal(level, 2), Error);
  CHECK_THROWS_AS(element_marginal(level, -1), Error);
}

TEST_CASE("difference marginal lives on the exact integer lattice") {
  const ScanResult level = stub_pairs(1.0, 0.1, 5, {{0, 2}, {1, 3}}, {0.3, 0.7});
  const BinnedDensity d = delta_marginal(level);
  CHECK(d.width == doctest::Approx(0.1).epsilon(1e-15));
  // k = j - 2i ranges over [-8, 4]: 13 bins.
  REQUIRE(d.mass.size() == 13);
  // (0,2): k=2, delta = 2*0.1 - 1.0 = -0.8; (1,3): k=1, delta = -0.9.
  CHECK(d.mass[2 + 8] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(d.mass[1 + 8] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(d.center(2 + 8) == doctest::Approx(-0.8).epsilon(1e-12));
  CHECK(d.center(1 + 8) == doctest::Approx(-0.9).epsilon(1e-12));
  CHECK(d.total() == doctest::Approx(1.0).epsilon(1e-15));

  ScanResult single;
  single.nf = 1;
  CHECK_THROWS_AS(delta_marginal(single), Error);
}

TEST_CASE("difference marginal checks tuple frequency ratios directly") {
  // A pair at an exact 2:1 ratio lands its difference at zero.
  // fmin=0.1, step=0.1: node(i) = 0.1*(i+1); (i=2 -> 0.3, j=5 -> 0.6).
  const ScanResult level = stub_pairs(0.1, 0.1, 8, {{2, 5}}, {1.0});
  const BinnedDensity d = delta_marginal(level);
  // k = 5 - 4 = 1, delta = 0.1 - 0.1 = 0.0
  double at_zero = 0.0;
  for (std::size_t i = 0; i < d.mass.size(); ++i)
    if (std::fabs(d.center(i)) < 0.5 * d.width) at_zero += d.mass[i];
  CHECK(at_zero == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("doubled image lands mass on twice the frequency") {
  const ScanResult level = stub_pairs(0.1, 0.1, 8, {{2, 5}}, {1.0});
  const BinnedDensity f1 = element_marginal(level, 0);
  const BinnedDensity f2 = element_marginal(level, 1);
  const BinnedDensity f1x2 = doubled_marginal(f1);
  CHECK(f1x2.width == doctest::Approx(f1.width).epsilon(1e-15));
  CHECK(f1x2.lo == doctest::Approx(f1.lo).epsilon(1e-15));
  CHECK(f1x2.total() == doctest::Approx(1.0).epsilon(1e-15));
  // Perfect harmonic pair: the doubled first frequency sits exactly on the
  // second frequency's bin.
  CHECK(overlap(f2, f1x2) == doctest::Approx(1.0).epsilon(1e-12));

  // Mass that doubles past the lattice is kept by growing the lattice.
  BinnedDensity wide{0.0, 0.5, {0.0, 0.0, 0.0, 1.0}};
  const BinnedDensity wide2 = doubled_marginal(wide);
  CHECK(wide2.total() == doctest::Approx(1.0).epsilon(1e-15));
  double found = 0.0;
  for (std::size_t i = 0; i < wide2.mass.size(); ++i)
    if (std::fabs(wide2.center(i) - 3.5) < 0.26) found += wide2.mass[i];
  CHECK(found == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("amplitude and phase reproduce the sinusoid") {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double s = u(rng), c = u(rng);
    const AmpPhase ap = amplitude_phase(s, c);
    CHECK(ap.amplitude >= 0.0);
    for (double th : {0.0, 0.7, 2.1, 4.4}) {
      const double direct = s * std::sin(th) + c * std::cos(th);
      const double folded = ap.amplitude * std::cos(th + ap.phase);
      CHECK(folded == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("polynomial recentering preserves the polynomial") {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 10; ++rep) {
    const double mu = 10.0 * u(rng);
    std::vector<double> centered;
    const int deg = static_cast<int>(rng() % 4);
    for (int q = 0; q <= deg; ++q) centered.push_back(u(rng));
    const std::vector<double> plain = shift_poly_coefficients(centered, mu);
    REQUIRE(plain.size() == centered.size());
    for (double x : {-5.0, -1.0, 0.0, 2.0, 7.0}) {
      double want = 0.0, zp = 1.0;
      for (double d : centered) {
        want += d * zp;
        zp *= (x - mu);
      }
      double got = 0.0, xp = 1.0;
      for (double d : plain) {
        got += d * xp;
        xp *= x;
      }
      CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
  }
  // mu = 0 is the identity.
  const std::vector<double> same = shift_poly_coefficients({1.0, 2.0, 3.0}, 0.0);
  CHECK(same == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("tuple summary refits the winner and maps the trend back") {
  // Synthetic single tone on a slope, uncentered times.
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> ux(50.0, 90.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Observation> obs;
  const double f0 = 0.3, amp = 2.0, phase = 0.9;
  for (int k = 0; k < 50; ++k) {
    const double t = ux(rng);
    const double v = amp * std::cos(2.0 * M_PI * f0 * t + phase) + 0.5 + 0.02 * t;
    obs.push_back({t, v + 0.2 * g(rng), 0.2});
  }
  const TimeSeries ts(std::move(obs), SeriesKind::doppler);
  PriorConfig cfg;
  cfg.fmax = 1.0;
  cfg.nd_max = 1;
  const ResolvedPriors priors = resolve_priors(ts, cfg);
  const FrequencyGrid grid = make_grid(priors.fmin, priors.fmax, ts.span(), 10.0);
  ScanOptions opt;
  const ScanResult level = scan_1d(ts, grid, 1, priors, opt);

  const std::size_t best = level.retained.front();
  const TupleSummary sum = summarize_tuple(ts, level, best, priors, opt);
  REQUIRE(sum.freqs.size() == 1);
  CHECK(std::fabs(sum.freqs[0] - f0) < 2.0 * grid.step);
  CHECK(sum.amplitude[0] == doctest::Approx(amp).epsilon(0.15));
  CHECK(sum.theta.size() == 4);  // sin, cos, two trend coefficients
  CHECK(sum.cov.size() == 16);
  CHECK(sum.cov[0] > 0.0);
  CHECK(sum.chi2 > 0.0);
  CHECK(sum.jitter_mean >= 0.0);

  // Trend coefficients mapped to original abscissa: evaluating the plain
  // polynomial at x equals evaluating the centered one at x - offset.
  REQUIRE(sum.poly.size() == 2);
  const double mu = level.x_offset;
  for (double x : {55.0, 70.0, 88.0}) {
    const double centered = sum.theta[2] + sum.theta[3] * (x - mu);
    const double plain = sum.poly[0] + sum.poly[1] * x;
    CHECK(plain == doctest::Approx(centered).epsilon(1e-10));
  }
  // And the recovered slope is near the injected one (slope SE ~ 0.003).
  CHECK(std::fabs(sum.poly[1] - 0.02) < 0.01);

  CHECK_THROWS_AS(summarize_tuple(ts, level, level.tuple_count() + 5, priors, opt),
                  Error);
}
