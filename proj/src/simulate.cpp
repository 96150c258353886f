#include "qpscan/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qpscan/model_compare.hpp"
#include "qpscan/priors.hpp"
#include "qpscan/scan.hpp"

namespace qpscan {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSolarDay = 1.0;
constexpr double kSiderealDay = 86164.0 / 86400.0;  // 23h 56m 04s
constexpr double kLunarMonth = 29.5;
constexpr double kYear = 365.25;
}  // namespace

std::vector<SignalComponent> harmonic_stack(double k0, double f, double ecc,
                                            double phi, int n_harmonics) {
  if (n_harmonics < 1) raise(ErrorKind::config, "need at least one harmonic");
  std::vector<SignalComponent> comps;
  double amp = k0;
  for (int n = 1; n <= n_harmonics; ++n) {
    comps.push_back({amp, n * f, n * phi});
    amp *= ecc;
  }
  return comps;
}

double signal_value(const std::vector<SignalComponent>& comps,
                    const std::vector<double>& poly, double x) {
  double v = 0.0;
  for (const SignalComponent& c : comps)
    v += c.amplitude * std::cos(kTwoPi * c.freq * x + c.phase);
  double xp = 1.0;
  for (double d : poly) {
    v += d * xp;
    xp *= x;
  }
  return v;
}

const char* to_string(CadenceKind k) {
  switch (k) {
    case CadenceKind::uniform: return "uniform";
    case CadenceKind::random_uniform: return "random_uniform";
    case CadenceKind::ground_based: return "ground_based";
  }
  return "random_uniform";
}

CadenceKind cadence_from_string(const std::string& s) {
  if (s == "uniform") return CadenceKind::uniform;
  if (s == "random_uniform") return CadenceKind::random_uniform;
  if (s == "ground_based") return CadenceKind::ground_based;
  raise(ErrorKind::config, "unknown cadence '" + s + "'");
}

std::vector<double> gen_cadence(const CadenceSpec& spec, std::uint64_t seed) {
  if (spec.n < 1) raise(ErrorKind::config, "cadence needs at least one time");
  if (!(spec.t_span > 0.0)) raise(ErrorKind::config, "cadence needs a positive span");
  std::vector<double> x;
  x.reserve(spec.n);
  if (spec.kind == CadenceKind::uniform) {
    const double dt = spec.n > 1 ? spec.t_span / (spec.n - 1) : 0.0;
    for (int i = 0; i < spec.n; ++i) x.push_back(spec.t_start + dt * i);
    return x;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(0.0, spec.t_span);
  if (spec.kind == CadenceKind::random_uniform) {
    for (int i = 0; i < spec.n; ++i) x.push_back(spec.t_start + ut(rng));
    std::sort(x.begin(), x.end());
    return x;
  }
  if (!(spec.night_fraction > 0.0) || spec.night_fraction > 1.0 ||
      !(spec.season_fraction > 0.0) || spec.season_fraction > 1.0 ||
      spec.lunar_weight < 0.0 || spec.lunar_weight > 1.0)
    raise(ErrorKind::config, "ground cadence fractions out of range");
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double day = spec.sidereal ? kSiderealDay : kSolarDay;
  const std::int64_t max_tries = static_cast<std::int64_t>(spec.n) * 1000000;
  std::int64_t tries = 0;
  while (static_cast<int>(x.size()) < spec.n) {
    if (++tries > max_tries)
      raise(ErrorKind::resource, "cadence acceptance rate too low; widen the windows");
    const double t = spec.t_start + ut(rng);
    const double day_phase = t / day - std::floor(t / day);
    if (day_phase >= spec.night_fraction) continue;
    const double year_phase = t / kYear - std::floor(t / kYear);
    if (year_phase >= spec.season_fraction) continue;
    const double lunar = (1.0 + spec.lunar_weight * std::cos(kTwoPi * t / kLunarMonth)) /
                         (1.0 + spec.lunar_weight);
    if (u01(rng) > lunar) continue;
    x.push_back(t);
  }
  std::sort(x.begin(), x.end());
  return x;
}

TimeSeries simulate_series(const std::vector<double>& x,
                           const std::vector<SignalComponent>& comps,
                           const std::vector<double>& poly, const NoiseSpec& noise,
                           std::uint64_t seed, SeriesKind kind) {
  if (!(noise.sigma > 0.0)) raise(ErrorKind::config, "noise sigma must be positive");
  if (noise.sigma_spread < 0.0 || noise.sigma_spread >= 1.0)
    raise(ErrorKind::config, "sigma spread must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uspread(1.0 - noise.sigma_spread,
                                                 1.0 + noise.sigma_spread);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Observation> obs;
  obs.reserve(x.size());
  for (double t : x) {
    Observation o;
    o.x = t;
    o.sigma = noise.sigma_spread > 0.0 ? noise.sigma * uspread(rng) : noise.sigma;
    o.y = signal_value(comps, poly, t);
    if (noise.draw_noise) {
      const double s = std::sqrt(o.sigma * o.sigma + noise.jitter * noise.jitter);
      o.y += s * gauss(rng);
    }
    obs.push_back(o);
  }
  return TimeSeries(std::move(obs), kind);
}

namespace {

double harmonic_overlap(const TimeSeries& ts, const AliasStudyOptions& opt,
                        double* map_f1, double* map_f2) {
  PriorConfig pc;
  pc.fmax = opt.fmax;
  pc.nf_max = 2;
  pc.nd_max = 0;
  const ResolvedPriors priors = resolve_priors(ts, pc);
  const FrequencyGrid grid =
      make_grid(priors.fmin, priors.fmax, ts.span(), opt.oversample);
  ScanOptions so;
  so.epsilon = opt.epsilon;
  so.n_threads = opt.n_threads;
  const std::vector<ScanResult> levels = scan_levels(ts, grid, 2, 0, priors, so);
  const ScanResult& pairs = levels[1];
  const BinnedDensity f1 = element_marginal(pairs, 0);
  const BinnedDensity f2 = element_marginal(pairs, 1);
  const std::size_t best = pairs.retained.empty() ? 0 : pairs.retained.front();
  if (map_f1) *map_f1 = pairs.grid.node(pairs.tuple(best)[0]);
  if (map_f2) *map_f2 = pairs.grid.node(pairs.tuple(best)[1]);
  return overlap(f2, doubled_marginal(f1));
}

}  // namespace

AliasStudyResult replicate_aliasing_experiment(std::uint64_t seed,
                                               const AliasStudyOptions& opt) {
  if (!(opt.fmax > 2.0 * opt.f0))
    raise(ErrorKind::config, "fmax must cover the second harmonic");
  const std::vector<SignalComponent> comps =
      harmonic_stack(opt.k0, opt.f0, opt.ecc, opt.phi, 2);
  NoiseSpec noise;
  noise.sigma = opt.sigma;
  noise.jitter = opt.jitter;

  CadenceSpec ground = opt.ground;
  ground.kind = CadenceKind::ground_based;
  ground.t_span = opt.t_span;
  ground.n = opt.n_obs;
  CadenceSpec random;
  random.kind = CadenceKind::random_uniform;
  random.t_span = opt.t_span;
  random.n = opt.n_obs;

  // Per-seed derived streams keep the pair independent but reproducible.
  const std::uint64_t s_cad_g = seed * 4 + 1;
  const std::uint64_t s_cad_r = seed * 4 + 2;
  const std::uint64_t s_noise = seed * 4 + 3;

  AliasStudyResult out;
  const TimeSeries ts_g = simulate_series(gen_cadence(ground, s_cad_g), comps, {},
                                          noise, s_noise);
  const TimeSeries ts_r = simulate_series(gen_cadence(random, s_cad_r), comps, {},
                                          noise, s_noise);
  out.overlap_ground =
      harmonic_overlap(ts_g, opt, &out.map_f1_ground, &out.map_f2_ground);
  out.overlap_random =
      harmonic_overlap(ts_r, opt, &out.map_f1_random, &out.map_f2_random);
  return out;
}

}  // namespace qpscan
