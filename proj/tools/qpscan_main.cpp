#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpscan/analyze.hpp"
#include "qpscan/model_compare.hpp"
#include "qpscan/report.hpp"
#include "qpscan/simulate.hpp"
#include "qpscan/timeseries.hpp"

namespace {

using nlohmann::json;
using namespace qpscan;

void emit_error(ErrorKind kind, const std::string& message) {
  json j;
  j["error"]["kind"] = to_string(kind);
  j["error"]["message"] = message;
  std::fprintf(stderr, "%s\n", j.dump().c_str());
}

int exit_code_for(ErrorKind kind) { return kind == ErrorKind::config ? 2 : 1; }

std::string fmt_val(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void progress_printer(std::string_view stage, double frac) {
  std::fprintf(stderr, "progress %-36.*s %5.1f%%\n", static_cast<int>(stage.size()),
               stage.data(), 100.0 * frac);
}

// Values read from --config when the flag was not given explicitly.
struct ConfigBinds {
  std::vector<std::pair<std::string, std::function<void(const json&)>>> binds;
  CLI::App* app = nullptr;

  template <typename T>
  void add(CLI::App* a, const std::string& flag, T& var) {
    app = a;
    binds.emplace_back(flag, [&var](const json& v) { var = v.get<T>(); });
  }
  template <typename T>
  void add_opt(CLI::App* a, const std::string& flag, std::optional<T>& var) {
    app = a;
    binds.emplace_back(flag, [&var](const json& v) { var = v.get<T>(); });
  }

  void apply(const std::string& config_path) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) raise(ErrorKind::config, "cannot open config '" + config_path + "'");
    json j;
    try {
      j = json::parse(in, nullptr, true, true);  // allow comments
    } catch (const json::exception& e) {
      raise(ErrorKind::config, "config '" + config_path + "': " + e.what());
    }
    for (auto& [key, value] : j.items()) {
      bool known = false;
      for (auto& [flag, setter] : binds) {
        if (flag != key) continue;
        known = true;
        const CLI::Option* o = app->get_option("--" + flag);
        if (o->count() == 0) {  // explicit flags win over the config file
          try {
            setter(value);
          } catch (const json::exception& e) {
            raise(ErrorKind::config, "config key '" + key + "': " + e.what());
          }
        }
        break;
      }
      if (!known) raise(ErrorKind::config, "config key '" + key + "' is not recognized");
    }
  }
};

struct AnalyzeArgs {
  std::string input;
  std::string format = "auto";
  std::string output_dir = ".";
  std::string config_path;
  AnalysisOptions opt;
  std::optional<double> fmax, fmin, a0, amax, b0, bmax, jitter_cutoff, jitter_scale;
  std::string jitter_prior = "mjeff";
  bool progress = false;
};

std::string analyze_config_canon(const AnalyzeArgs& a) {
  // Canonical settings string; its hash ties outputs to the configuration.
  std::string s;
  auto kv = [&s](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
  auto opt_num = [&](const std::string& k, const std::optional<double>& v) {
    kv(k, v ? fmt_val(*v) : "auto");
  };
  kv("alpha", fmt_val(a.opt.priors.alpha));
  kv("beta", fmt_val(a.opt.priors.beta));
  kv("nf_max", std::to_string(a.opt.priors.nf_max));
  kv("nd_min", std::to_string(a.opt.priors.nd_min));
  kv("nd_max", std::to_string(a.opt.priors.nd_max));
  opt_num("a0", a.a0);
  opt_num("amax", a.amax);
  opt_num("b0", a.b0);
  opt_num("bmax", a.bmax);
  opt_num("fmin", a.fmin);
  opt_num("fmax", a.fmax);
  kv("oversample", fmt_val(a.opt.oversample));
  kv("epsilon", fmt_val(a.opt.epsilon));
  kv("stop_ratio", fmt_val(a.opt.stop_ratio));
  kv("jitter_prior", a.jitter_prior);
  opt_num("jitter_cutoff", a.jitter_cutoff);
  opt_num("jitter_scale", a.jitter_scale);
  kv("jitter_nodes", std::to_string(a.opt.jitter_nodes));
  kv("flat_prior", a.opt.flat_prior ? "1" : "0");
  kv("zero_jitter", a.opt.zero_jitter ? "1" : "0");
  return s;
}

int run_analyze(AnalyzeArgs& a) {
  if (a.input.empty()) raise(ErrorKind::config, "--input is required");
  a.opt.priors.fmax = a.fmax;
  a.opt.priors.fmin = a.fmin;
  a.opt.priors.a0 = a.a0;
  a.opt.priors.amax = a.amax;
  a.opt.priors.b0 = a.b0;
  a.opt.priors.bmax = a.bmax;
  a.opt.priors.jitter_kind = jitter_prior_from_string(a.jitter_prior);
  a.opt.priors.jitter_cutoff = a.jitter_cutoff;
  a.opt.priors.jitter_scale = a.jitter_scale;
  if (a.progress) a.opt.progress = progress_printer;

  SeriesFormat fmt = SeriesFormat::auto_detect;
  if (a.format == "csv") fmt = SeriesFormat::csv;
  else if (a.format == "json") fmt = SeriesFormat::json;
  else if (a.format != "auto") raise(ErrorKind::config, "--format must be auto, csv, or json");

  const TimeSeries ts = load_timeseries(a.input, fmt);
  const AnalysisResult res = run_analysis(ts, a.opt);

  ReportOptions ro;
  ro.output_dir = a.output_dir;
  ro.config_hash = fnv1a_hex(analyze_config_canon(a));
  const ReportFiles files = write_reports(res, ts, a.opt, ro);

  json out;
  out["map_nf"] = res.posterior.map_nf;
  out["map_nd"] = res.posterior.map_nd;
  for (std::size_t i = 1; i < res.posterior.nf_levels.size(); ++i) {
    const int hi = res.posterior.nf_levels[i], lo = res.posterior.nf_levels[i - 1];
    out["log_bayes_factors"][std::to_string(hi) + "_vs_" + std::to_string(lo)] =
        res.posterior.log_bayes_factor(hi, lo);
  }
  if (res.posterior.map_nf >= 1) {
    const ScanResult& sel = res.level(res.posterior.map_nf, res.posterior.map_nd);
    json freqs = json::array();
    const std::int32_t* t = sel.tuple(sel.retained.front());
    for (int q = 0; q < sel.nf; ++q) freqs.push_back(sel.grid.node(t[q]));
    out["map_freqs"] = freqs;
  }
  out["truncated"] = res.truncated;
  out["hit_nf_max"] = res.hit_nf_max;
  out["seconds"] = res.total_seconds;
  out["posterior_json"] = files.posterior_json;
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

int run_simulate(const CadenceSpec& cad_in, const std::string& cadence_name,
                 double k0, double f0, double ecc, double phi, int harmonics,
                 const std::vector<double>& poly, const NoiseSpec& noise,
                 std::uint64_t seed, const std::string& kind_name,
                 const std::string& output) {
  CadenceSpec cad = cad_in;
  cad.kind = cadence_from_string(cadence_name);
  const std::vector<double> x = gen_cadence(cad, seed);
  std::vector<SignalComponent> comps;
  if (k0 != 0.0) comps = harmonic_stack(k0, f0, ecc, phi, harmonics);
  const TimeSeries ts = simulate_series(x, comps, poly, noise, seed + 1,
                                        series_kind_from_string(kind_name));
  save_timeseries_csv(ts, output);
  json out;
  out["output"] = output;
  out["observations"] = ts.size();
  out["span"] = ts.span();
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

int run_alias_study(std::uint64_t seed_start, int n_seeds, AliasStudyOptions& opt,
                    const std::string& output, bool progress) {
  if (n_seeds < 1) raise(ErrorKind::config, "need at least one seed");
  std::vector<double> og, orr;
  std::string body = "seed,overlap_ground,overlap_random,f1_ground,f2_ground,f1_random,f2_random\n";
  for (int i = 0; i < n_seeds; ++i) {
    const std::uint64_t seed = seed_start + static_cast<std::uint64_t>(i);
    const AliasStudyResult r = replicate_aliasing_experiment(seed, opt);
    og.push_back(r.overlap_ground);
    orr.push_back(r.overlap_random);
    body += std::to_string(seed) + "," + fmt_val(r.overlap_ground) + "," +
            fmt_val(r.overlap_random) + "," + fmt_val(r.map_f1_ground) + "," +
            fmt_val(r.map_f2_ground) + "," + fmt_val(r.map_f1_random) + "," +
            fmt_val(r.map_f2_random) + "\n";
    if (progress)
      progress_printer("alias study seeds", static_cast<double>(i + 1) / n_seeds);
  }
  if (!output.empty()) atomic_write(output, body);
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  json out;
  out["seeds"] = n_seeds;
  out["median_overlap_ground"] = median(og);
  out["median_overlap_random"] = median(orr);
  if (!output.empty()) out["output"] = output;
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

BinnedDensity load_binned_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open '" + path + "'");
  std::vector<double> centers, masses;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      raise(ErrorKind::parse, path + ": expected 'value,mass' at line " +
                                  std::to_string(lineno));
    try {
      const double c = std::stod(line.substr(0, comma));
      const double m = std::stod(line.substr(comma + 1));
      centers.push_back(c);
      masses.push_back(m);
    } catch (const std::exception&) {
      if (centers.empty()) continue;  // header row
      raise(ErrorKind::parse, path + ": malformed row at line " + std::to_string(lineno));
    }
  }
  if (centers.size() < 2)
    raise(ErrorKind::validation, path + ": need at least two bins");
  const double width = centers[1] - centers[0];
  if (!(width > 0.0)) raise(ErrorKind::validation, path + ": bins must ascend");
  for (std::size_t i = 1; i < centers.size(); ++i)
    if (std::fabs(centers[i] - centers[i - 1] - width) > 1e-6 * width)
      raise(ErrorKind::validation, path + ": bins must be evenly spaced");
  BinnedDensity d;
  d.width = width;
  d.lo = centers[0] - 0.5 * width;
  d.mass = std::move(masses);
  return d;
}

int run_compare(const std::string& path_a, const std::string& path_b) {
  const BinnedDensity a = load_binned_csv(path_a);
  const BinnedDensity b = load_binned_csv(path_b);
  json out;
  out["overlap"] = overlap(a, b);
  out["total_a"] = a.total();
  out["total_b"] = b.total();
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian frequency scan for unevenly sampled time series"};
  app.require_subcommand(1);

  AnalyzeArgs a;
  ConfigBinds binds;
  CLI::App* an = app.add_subcommand("analyze", "Scan a series and write posterior reports");
  binds.app = an;
  binds.add(an, "input", a.input);
  an->add_option("--input", a.input, "time series file (csv or json)");
  an->add_option("--format", a.format, "input format: auto, csv, json");
  binds.add(an, "format", a.format);
  an->add_option("--output-dir", a.output_dir, "directory for reports");
  binds.add(an, "output-dir", a.output_dir);
  an->add_option("--config", a.config_path, "JSON file with defaults for these flags");
  an->add_option("--f-max", a.fmax, "highest frequency scanned (required)");
  binds.add_opt(an, "f-max", a.fmax);
  an->add_option("--f-min", a.fmin, "lowest frequency scanned (default 2/span)");
  binds.add_opt(an, "f-min", a.fmin);
  an->add_option("--oversample", a.opt.oversample, "grid points per 1/span");
  binds.add(an, "oversample", a.opt.oversample);
  an->add_option("--nf-max", a.opt.priors.nf_max, "most sinusoids considered");
  binds.add(an, "nf-max", a.opt.priors.nf_max);
  an->add_option("--nd-max", a.opt.priors.nd_max, "highest polynomial degree");
  binds.add(an, "nd-max", a.opt.priors.nd_max);
  an->add_option("--nd-min", a.opt.priors.nd_min, "lowest polynomial degree");
  binds.add(an, "nd-min", a.opt.priors.nd_min);
  an->add_option("--alpha", a.opt.priors.alpha, "prior ratio between sinusoid counts");
  binds.add(an, "alpha", a.opt.priors.alpha);
  an->add_option("--beta", a.opt.priors.beta, "prior ratio between polynomial degrees");
  binds.add(an, "beta", a.opt.priors.beta);
  an->add_option("--epsilon", a.opt.epsilon, "posterior mass the greedy scan may drop");
  binds.add(an, "epsilon", a.opt.epsilon);
  an->add_option("--stop-ratio", a.opt.stop_ratio, "level growth stop threshold");
  binds.add(an, "stop-ratio", a.opt.stop_ratio);
  an->add_option("--jitter-prior", a.jitter_prior, "mjeff, cutoff, or halfnormal");
  binds.add(an, "jitter-prior", a.jitter_prior);
  an->add_option("--jitter-cutoff", a.jitter_cutoff, "knee of the cutoff jitter prior");
  binds.add_opt(an, "jitter-cutoff", a.jitter_cutoff);
  an->add_option("--jitter-scale", a.jitter_scale, "scale of the halfnormal jitter prior");
  binds.add_opt(an, "jitter-scale", a.jitter_scale);
  an->add_option("--jitter-nodes", a.opt.jitter_nodes, "jitter quadrature nodes");
  binds.add(an, "jitter-nodes", a.opt.jitter_nodes);
  an->add_option("--a0", a.a0, "amplitude prior knee (default from noise)");
  binds.add_opt(an, "a0", a.a0);
  an->add_option("--amax", a.amax, "amplitude prior limit (default from data range)");
  binds.add_opt(an, "amax", a.amax);
  an->add_option("--b0", a.b0, "coefficient prior knee (default from noise)");
  binds.add_opt(an, "b0", a.b0);
  an->add_option("--bmax", a.bmax, "coefficient prior limit (default from data range)");
  binds.add_opt(an, "bmax", a.bmax);
  an->add_option("--threads", a.opt.n_threads, "worker threads (0 = all)");
  an->add_flag("--flat-prior", a.opt.flat_prior, "diagnostic: flat coefficient priors");
  an->add_flag("--zero-jitter", a.opt.zero_jitter, "diagnostic: fix jitter to zero");
  an->add_flag("--progress", a.progress, "print progress to stderr");

  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic series");
  std::string sim_output = "simulated.csv", sim_cadence = "random_uniform";
  std::string sim_kind = "doppler";
  CadenceSpec cad;
  NoiseSpec noise;
  double k0 = 3.0, f0 = 0.25, ecc = 0.0, phi = 0.0;
  int harmonics = 1;
  std::vector<double> poly;
  std::uint64_t sim_seed = 1;
  bool no_noise = false;
  sim->add_option("--output", sim_output, "where to write the CSV");
  sim->add_option("--cadence", sim_cadence, "uniform, random_uniform, ground_based");
  sim->add_option("--n", cad.n, "number of observations");
  sim->add_option("--t-span", cad.t_span, "time span in days");
  sim->add_option("--t-start", cad.t_start, "first possible time");
  sim->add_option("--night-fraction", cad.night_fraction, "nightly window fraction");
  sim->add_flag("--sidereal", cad.sidereal, "anchor the nightly window to the sidereal day");
  sim->add_option("--season-fraction", cad.season_fraction, "seasonal window fraction");
  sim->add_option("--lunar-weight", cad.lunar_weight, "lunar-phase thinning weight");
  sim->add_option("--k0", k0, "fundamental amplitude (0 = pure noise)");
  sim->add_option("--f0", f0, "fundamental frequency");
  sim->add_option("--ecc", ecc, "harmonic decay factor");
  sim->add_option("--phi", phi, "fundamental phase");
  sim->add_option("--harmonics", harmonics, "number of harmonics");
  sim->add_option("--poly", poly, "polynomial trend coefficients, low order first");
  sim->add_option("--sigma", noise.sigma, "reported noise level");
  sim->add_option("--sigma-spread", noise.sigma_spread, "relative spread of sigma");
  sim->add_option("--jitter", noise.jitter, "unreported extra scatter");
  sim->add_flag("--no-noise", no_noise, "write exact signal values");
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--kind", sim_kind, "series kind tag");

  CLI::App* als = app.add_subcommand("alias-study",
                                     "Paired-cadence harmonic recovery experiment");
  AliasStudyOptions aopt;
  std::uint64_t als_seed_start = 1;
  int als_seeds = 20;
  std::string als_output = "alias_study.csv";
  bool als_progress = false;
  als->add_option("--seeds", als_seeds, "number of paired seeds");
  als->add_option("--seed-start", als_seed_start, "first seed");
  als->add_option("--output", als_output, "CSV of per-seed results ('' to skip)");
  als->add_option("--k0", aopt.k0, "fundamental amplitude");
  als->add_option("--f0", aopt.f0, "fundamental frequency");
  als->add_option("--ecc", aopt.ecc, "harmonic decay factor");
  als->add_option("--phi", aopt.phi, "fundamental phase");
  als->add_option("--n", aopt.n_obs, "observations per series");
  als->add_option("--t-span", aopt.t_span, "time span in days");
  als->add_option("--sigma", aopt.sigma, "noise level");
  als->add_option("--f-max", aopt.fmax, "highest frequency scanned");
  als->add_option("--oversample", aopt.oversample, "grid points per 1/span");
  als->add_option("--epsilon", aopt.epsilon, "greedy pruning tolerance");
  als->add_option("--threads", aopt.n_threads, "worker threads (0 = all)");
  als->add_option("--night-fraction", aopt.ground.night_fraction, "nightly window fraction");
  als->add_flag("--sidereal", aopt.ground.sidereal, "sidereal nightly window");
  als->add_option("--season-fraction", aopt.ground.season_fraction, "seasonal window fraction");
  als->add_option("--lunar-weight", aopt.ground.lunar_weight, "lunar thinning weight");
  als->add_flag("--progress", als_progress, "print progress to stderr");

  CLI::App* cmp = app.add_subcommand("compare", "Overlap of two binned marginal CSVs");
  std::string cmp_a, cmp_b;
  cmp->add_option("first", cmp_a, "first marginal CSV")->required();
  cmp->add_option("second", cmp_b, "second marginal CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error(ErrorKind::config, e.what());
    return 2;
  }

  try {
    if (an->parsed()) {
      if (!a.config_path.empty()) binds.apply(a.config_path);
      return run_analyze(a);
    }
    if (sim->parsed()) {
      noise.draw_noise = !no_noise;
      return run_simulate(cad, sim_cadence, k0, f0, ecc, phi, harmonics, poly, noise,
                          sim_seed, sim_kind, sim_output);
    }
    if (als->parsed())
      return run_alias_study(als_seed_start, als_seeds, aopt, als_output, als_progress);
    if (cmp->parsed()) return run_compare(cmp_a, cmp_b);
    emit_error(ErrorKind::config, "no subcommand given");
    return 2;
  } catch (const Error& e) {
    emit_error(e.kind(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    emit_error(ErrorKind::io, std::string("unexpected failure: ") + e.what());
    return 1;
  }
}
