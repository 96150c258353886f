#pragma once

#include <cstdint>
#include <vector>

#include "qpscan/timeseries.hpp"

namespace qpscan {

// One tone: amplitude * cos(2*pi*freq*x + phase).
struct SignalComponent {
  double amplitude = 0.0;
  double freq = 0.0;
  double phase = 0.0;
};

// Tone stack mimicking an eccentric orbit: harmonic n sits at n*f with
// amplitude k0 * ecc^(n-1) and phase n*phi.
std::vector<SignalComponent> harmonic_stack(double k0, double f, double ecc,
                                            double phi, int n_harmonics);

double signal_value(const std::vector<SignalComponent>& comps,
                    const std::vector<double>& poly, double x);

enum class CadenceKind { uniform, random_uniform, ground_based };
const char* to_string(CadenceKind k);
CadenceKind cadence_from_string(const std::string& s);

struct CadenceSpec {
  CadenceKind kind = CadenceKind::random_uniform;
  double t_start = 0.0;
  double t_span = 100.0;  // days
  int n = 50;
  // ground_based acceptance model:
  double night_fraction = 0.3;   // observable fraction of each day
  bool sidereal = false;         // anchor the nightly window to the sidereal day
  double season_fraction = 1.0;  // observable fraction of each year
  double lunar_weight = 0.0;     // acceptance (1 + w*cos(2*pi*t/29.5)) / (1 + w)
};

// Observation times, ascending.  uniform ignores the acceptance model;
// random_uniform draws times uniformly; ground_based draws uniformly and
// keeps times that pass the nightly window, the seasonal window, and a
// lunar-phase thinning.
std::vector<double> gen_cadence(const CadenceSpec& spec, std::uint64_t seed);

struct NoiseSpec {
  double sigma = 1.0;         // reported per-point uncertainty
  double sigma_spread = 0.0;  // per-point sigma drawn in sigma*(1 +- spread)
  double jitter = 0.0;        // extra scatter, not reported in sigma
  bool draw_noise = true;     // false: exact signal values, sigma still reported
};

TimeSeries simulate_series(const std::vector<double>& x,
                           const std::vector<SignalComponent>& comps,
                           const std::vector<double>& poly, const NoiseSpec& noise,
                           std::uint64_t seed,
                           SeriesKind kind = SeriesKind::doppler);

// Paired cadence experiment: the same two-harmonic signal observed with a
// ground-based (gapped) cadence and with a random cadence, both analyzed
// for two sinusoids; reports how much of the second frequency's posterior
// sits on the doubled image of the first (1 = clean 2:1 harmonic pair).
struct AliasStudyOptions {
  double k0 = 3.0;
  double f0 = 0.25;
  double ecc = 0.5;
  double phi = 0.7;
  int n_obs = 60;
  double t_span = 120.0;
  double sigma = 0.3;
  double jitter = 0.0;
  double fmax = 1.0;
  double oversample = 10.0;
  double epsilon = 1e-3;
  int n_threads = 0;
  CadenceSpec ground;  // kind forced to ground_based
};

struct AliasStudyResult {
  double overlap_ground = 0.0;
  double overlap_random = 0.0;
  double map_f1_ground = 0.0, map_f2_ground = 0.0;
  double map_f1_random = 0.0, map_f2_random = 0.0;
};

AliasStudyResult replicate_aliasing_experiment(std::uint64_t seed,
                                               const AliasStudyOptions& opt);

}  // namespace qpscan
