#include "qpscan/report.hpp"

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "qpscan/design.hpp"
#include "qpscan/jitter.hpp"

namespace qpscan {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ScanOptions to_scan_options(const AnalysisOptions& opt) {
  ScanOptions so;
  so.epsilon = opt.epsilon;
  so.flat_prior = opt.flat_prior;
  so.zero_jitter = opt.zero_jitter;
  so.jitter_nodes = opt.jitter_nodes;
  so.n_threads = opt.n_threads;
  return so;
}

}  // namespace

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string iso_timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) raise(ErrorKind::io, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) raise(ErrorKind::io, "cannot move report into place: " + ec.message());
}

namespace {

std::string csv_header(const ReportOptions& ro, const char* columns) {
  std::string s = "# config_hash: " + ro.config_hash + "\n";
  s += columns;
  s += "\n";
  return s;
}

void write_marginal_csv(const std::string& path, const BinnedDensity& d,
                        const char* value_name, const ReportOptions& ro) {
  std::string body = csv_header(ro, (std::string(value_name) + ",mass").c_str());
  for (std::size_t i = 0; i < d.mass.size(); ++i)
    body += fmt_g(d.center(i)) + "," + fmt_g(d.mass[i]) + "\n";
  atomic_write(path, body);
}

ordered_json level_json(const ScanResult& r) {
  ordered_json j;
  j["nf"] = r.nf;
  j["nd"] = r.nd;
  j["log_evidence"] = r.log_evidence;
  j["tuples"] = r.tuple_count();
  j["eval_count"] = r.eval_count;
  j["singular_count"] = r.singular_count;
  j["retained"] = r.retained.size();
  j["retained_mass"] = r.retained_mass;
  if (r.nf >= 1 && !r.retained.empty()) {
    const std::int32_t* t = r.tuple(r.retained.front());
    ordered_json freqs = ordered_json::array();
    for (int q = 0; q < r.nf; ++q) freqs.push_back(r.grid.node(t[q]));
    j["map_freqs"] = freqs;
    j["map_mass"] = r.posterior[r.retained.front()];
  }
  return j;
}

}  // namespace

ReportFiles write_reports(const AnalysisResult& res, const TimeSeries& ts,
                          const AnalysisOptions& opt, const ReportOptions& ro) {
  namespace fs = std::filesystem;
  ReportFiles files;
  fs::create_directories(ro.output_dir);
  const std::string stamp = ro.timestamp.empty() ? iso_timestamp_utc() : ro.timestamp;

  const int map_nf = res.posterior.map_nf;
  const int map_nd = res.posterior.map_nd;
  const ScanResult& sel = res.level(map_nf, map_nd);

  ordered_json j;
  j["generated_at"] = stamp;
  j["config_hash"] = ro.config_hash;
  {
    ordered_json in;
    in["observations"] = ts.size();
    in["span"] = ts.span();
    in["kind"] = to_string(ts.kind());
    in["x_offset"] = res.x_offset;
    j["input"] = in;
  }
  {
    ordered_json g;
    g["fmin"] = res.grid.fmin;
    g["fmax"] = res.grid.fmax;
    g["step"] = res.grid.step;
    g["nodes"] = res.grid.m;
    j["grid"] = g;
  }
  {
    const ResolvedPriors& p = res.priors;
    ordered_json pj;
    pj["alpha"] = p.nf_prior.ratio;
    pj["beta"] = p.nd_prior.ratio;
    pj["nf_max"] = p.nf_prior.kmax;
    pj["nd_min"] = p.nd_prior.kmin;
    pj["nd_max"] = p.nd_prior.kmax;
    pj["a0"] = p.a0;
    pj["amax"] = p.amax;
    pj["b0"] = p.b0;
    pj["bmax"] = p.bmax;
    pj["fmin"] = p.fmin;
    pj["fmax"] = p.fmax;
    pj["jitter_prior"] = to_string(p.jitter_kind);
    pj["jitter_cutoff"] = p.jitter_cutoff;
    pj["jitter_scale"] = p.jitter_scale;
    j["priors"] = pj;
  }
  {
    const ModelPosterior& mp = res.posterior;
    ordered_json m;
    m["nf_levels"] = mp.nf_levels;
    m["nd_levels"] = mp.nd_levels;
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < mp.nf_levels.size(); ++i) {
      ordered_json row = ordered_json::array();
      for (std::size_t k = 0; k < mp.nd_levels.size(); ++k)
        row.push_back(mp.joint[i * mp.nd_levels.size() + k]);
      rows.push_back(row);
    }
    m["joint"] = rows;
    m["nf_marginal"] = mp.nf_marginal;
    m["nd_marginal"] = mp.nd_marginal;
    m["map_nf"] = mp.map_nf;
    m["map_nd"] = mp.map_nd;
    m["log_total"] = mp.log_total;
    j["model_posterior"] = m;
  }
  {
    ordered_json bf;
    for (std::size_t i = 1; i < res.posterior.nf_levels.size(); ++i) {
      const int hi = res.posterior.nf_levels[i];
      const int lo = res.posterior.nf_levels[i - 1];
      bf[std::to_string(hi) + "_vs_" + std::to_string(lo)] =
          res.posterior.log_bayes_factor(hi, lo);
    }
    j["log_bayes_factors"] = bf;
  }
  {
    ordered_json levels = ordered_json::array();
    for (const ScanResult& r : res.levels) levels.push_back(level_json(r));
    j["levels"] = levels;
  }
  if (map_nf >= 1) {
    const ScanOptions so = to_scan_options(opt);
    const TupleSummary s =
        summarize_tuple(ts, sel, sel.retained.front(), res.priors, so);
    ordered_json b;
    b["nf"] = map_nf;
    b["nd"] = map_nd;
    b["freqs"] = s.freqs;
    b["amplitudes"] = s.amplitude;
    b["phases"] = s.phase;
    b["poly"] = s.poly;
    b["jitter_mean"] = s.jitter_mean;
    b["chi2"] = s.chi2;
    j["selected"] = b;
  } else {
    j["selected"] = nullptr;
  }
  {
    ordered_json f;
    f["truncated"] = res.truncated;
    f["hit_nf_max"] = res.hit_nf_max;
    j["flags"] = f;
  }

  files.posterior_json = (fs::path(ro.output_dir) / "posterior.json").string();
  atomic_write(files.posterior_json, j.dump(2) + "\n");

  for (int q = 0; q < sel.nf; ++q) {
    const BinnedDensity d = element_marginal(sel, q);
    const std::string path =
        (fs::path(ro.output_dir) / ("marginal_" + std::to_string(q + 1) + ".csv"))
            .string();
    write_marginal_csv(path, d, "f", ro);
    files.marginals.push_back(path);
  }

  // The 2:1 spacing diagnostic lives on the pair level even when another
  // order carries the posterior mode.
  for (const ScanResult& r : res.levels) {
    if (r.nf == 2 && r.nd == map_nd) {
      files.delta_csv = (fs::path(ro.output_dir) / "delta.csv").string();
      write_marginal_csv(files.delta_csv, delta_marginal(r), "delta", ro);
      break;
    }
  }

  if (!opt.zero_jitter) {
    auto [cts, mu] = center_abscissa(ts);
    (void)mu;
    std::vector<double> freqs;
    if (map_nf >= 1 && !sel.retained.empty()) {
      const std::int32_t* t = sel.tuple(sel.retained.front());
      for (int q = 0; q < sel.nf; ++q) freqs.push_back(sel.grid.node(t[q]));
    }
    const Design dz = build_design(cts.x_values(), freqs, map_nd);
    const JitterGrid jg = make_jitter_grid(res.priors, opt.jitter_nodes);
    LaplaceOptions lo;
    lo.flat_prior = opt.flat_prior;
    const JitterMarginal jm = marginalize_jitter(dz, cts.y_values(),
                                                 cts.sigma_values(), jg, res.priors, lo);
    const std::vector<double> post = jitter_posterior(jm);
    std::string body = csv_header(ro, "sigma_j,mass");
    for (std::size_t i = 0; i < post.size(); ++i)
      body += fmt_g(jg.nodes[i]) + "," + fmt_g(post[i]) + "\n";
    files.jitter_csv = (fs::path(ro.output_dir) / "jitter.csv").string();
    atomic_write(files.jitter_csv, body);
  }
  return files;
}

}  // namespace qpscan
