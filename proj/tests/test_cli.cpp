#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpscan/timeseries.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("qpscan_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = scratch_dir() / ("out" + std::to_string(counter) + ".txt");
  const fs::path err = scratch_dir() / ("err" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string("'") + QPSCAN_CLI_PATH + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// stderr carries one JSON object describing the failure.
std::string error_kind(const RunResult& r) {
  const json j = json::parse(r.err);
  return j.at("error").at("kind").get<std::string>();
}

// Report text with the timestamp line removed, for byte comparisons.
std::string without_timestamp(const std::string& text) {
  std::istringstream in(text);
  std::string line, kept;
  while (std::getline(in, line))
    if (line.find("generated_at") == std::string::npos) kept += line + "\n";
  return kept;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("help exits cleanly and names the subcommands") {
  const RunResult r = run_cli("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("analyze") != std::string::npos);
  CHECK(r.out.find("simulate") != std::string::npos);
  CHECK(r.out.find("compare") != std::string::npos);
}

TEST_CASE("no subcommand is a usage error") {
  const RunResult r = run_cli("");
  CHECK(r.exit_code == 2);
  CHECK(error_kind(r) == "config");
}

TEST_CASE("simulate writes a loadable series") {
  const fs::path csv = scratch_dir() / "sim.csv";
  const RunResult r = run_cli("simulate --output '" + csv.string() +
                              "' --n 25 --t-span 20 --seed 3 --sigma 0.4"
                              " --k0 2 --f0 0.35 --kind doppler");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.out);
  CHECK(j.at("observations").get<int>() == 25);
  CHECK(j.at("output").get<std::string>() == csv.string());
  REQUIRE(fs::exists(csv));
  const qpscan::TimeSeries ts = qpscan::load_timeseries(csv.string());
  CHECK(ts.size() == 25);
  CHECK(ts.kind() == qpscan::SeriesKind::doppler);
}

TEST_CASE("analyze produces consistent, reproducible reports") {
  const fs::path csv = scratch_dir() / "tone.csv";
  RunResult sim = run_cli("simulate --output '" + csv.string() +
                          "' --n 30 --t-span 25 --seed 11 --sigma 0.3"
                          " --k0 2.5 --f0 0.35");
  REQUIRE(sim.exit_code == 0);

  const std::string flags =
      " --f-max 0.8 --nf-max 1 --nd-max 0 --oversample 6 --threads 1";
  const fs::path d1 = scratch_dir() / "rep1";
  const fs::path d2 = scratch_dir() / "rep2";
  const fs::path d3 = scratch_dir() / "rep3";
  fs::create_directories(d1);
  fs::create_directories(d2);
  fs::create_directories(d3);

  const RunResult a1 = run_cli("analyze --input '" + csv.string() +
                               "' --output-dir '" + d1.string() + "'" + flags);
  REQUIRE(a1.exit_code == 0);
  const json summary = json::parse(a1.out);
  CHECK(summary.at("map_nf").get<int>() == 1);
  REQUIRE(summary.contains("map_freqs"));
  CHECK(summary.at("map_freqs")[0].get<double>() == doctest::Approx(0.35).epsilon(0.1));

  // posterior.json parses and carries the advertised sections.
  const fs::path pj = d1 / "posterior.json";
  REQUIRE(fs::exists(pj));
  const json post = json::parse(slurp(pj));
  for (const char* key : {"generated_at", "config_hash", "input", "grid", "priors",
                          "model_posterior", "log_bayes_factors", "levels",
                          "selected", "flags"})
    CHECK(post.contains(key));
  CHECK(post.at("input").at("observations").get<int>() == 30);
  CHECK(post.at("model_posterior").at("map_nf").get<int>() == 1);

  // Every CSV written alongside carries the same config hash.
  const std::string hash = post.at("config_hash").get<std::string>();
  CHECK(hash.size() == 16);
  int csv_count = 0;
  for (const auto& entry : fs::directory_iterator(d1)) {
    if (entry.path().extension() != ".csv") continue;
    ++csv_count;
    const std::string body = slurp(entry.path());
    CHECK(body.find("# config_hash: " + hash) != std::string::npos);
  }
  CHECK(csv_count >= 2);  // marginal_1.csv and jitter.csv at least

  // Same command: byte-identical output except the timestamp.
  const RunResult a2 = run_cli("analyze --input '" + csv.string() +
                               "' --output-dir '" + d2.string() + "'" + flags);
  REQUIRE(a2.exit_code == 0);
  CHECK(without_timestamp(slurp(d1 / "posterior.json")) ==
        without_timestamp(slurp(d2 / "posterior.json")));
  for (const auto& entry : fs::directory_iterator(d1)) {
    if (entry.path().extension() != ".csv") continue;
    CHECK(slurp(entry.path()) == slurp(d2 / entry.path().filename()));
  }

  // More threads must not change any reported number.
  const std::string flags4 =
      " --f-max 0.8 --nf-max 1 --nd-max 0 --oversample 6 --threads 4";
  const RunResult a3 = run_cli("analyze --input '" + csv.string() +
                               "' --output-dir '" + d3.string() + "'" + flags4);
  REQUIRE(a3.exit_code == 0);
  CHECK(without_timestamp(slurp(d1 / "posterior.json")) ==
        without_timestamp(slurp(d3 / "posterior.json")));
}

TEST_CASE("analyze failure modes map to exit codes and error kinds") {
  const RunResult missing =
      run_cli("analyze --input /no/such/file.csv --f-max 1.0");
  CHECK(missing.exit_code == 1);
  CHECK(error_kind(missing) == "io");

  const fs::path csv = scratch_dir() / "few.csv";
  write_file(csv, "x,y,sigma\n0,1,0.1\n1,2,0.1\n2,1,0.1\n");

  const RunResult nofmax = run_cli("analyze --input '" + csv.string() + "'");
  CHECK(nofmax.exit_code == 2);
  CHECK(error_kind(nofmax) == "config");

  const RunResult badflag =
      run_cli("analyze --input '" + csv.string() + "' --f-max 1.0 --bogus 3");
  CHECK(badflag.exit_code == 2);
  CHECK(error_kind(badflag) == "config");

  const RunResult badvalue =
      run_cli("analyze --input '" + csv.string() + "' --f-max notanumber");
  CHECK(badvalue.exit_code == 2);
  CHECK(error_kind(badvalue) == "config");
}

TEST_CASE("config files feed defaults but explicit flags win") {
  const fs::path csv = scratch_dir() / "cfgtone.csv";
  RunResult sim = run_cli("simulate --output '" + csv.string() +
                          "' --n 25 --t-span 20 --seed 5 --sigma 0.3"
                          " --k0 2 --f0 0.3");
  REQUIRE(sim.exit_code == 0);

  const fs::path cfg = scratch_dir() / "analysis.json";
  write_file(cfg, "{\"f-max\": 0.6, \"nf-max\": 1, \"nd-max\": 0,"
                  " \"oversample\": 5.0}\n");
  const fs::path d1 = scratch_dir() / "cfg1";
  fs::create_directories(d1);

  const RunResult a1 = run_cli("analyze --input '" + csv.string() +
                               "' --config '" + cfg.string() + "' --output-dir '" +
                               d1.string() + "' --threads 1");
  REQUIRE(a1.exit_code == 0);
  json post = json::parse(slurp(d1 / "posterior.json"));
  CHECK(post.at("priors").at("fmax").get<double>() == 0.6);
  CHECK(post.at("priors").at("nf_max").get<int>() == 1);

  // The explicit flag overrides the config value.
  const fs::path d2 = scratch_dir() / "cfg2";
  fs::create_directories(d2);
  const RunResult a2 = run_cli("analyze --input '" + csv.string() +
                               "' --config '" + cfg.string() + "' --f-max 0.8" +
                               " --output-dir '" + d2.string() + "' --threads 1");
  REQUIRE(a2.exit_code == 0);
  post = json::parse(slurp(d2 / "posterior.json"));
  CHECK(post.at("priors").at("fmax").get<double>() == 0.8);

  const fs::path bad = scratch_dir() / "bad.json";
  write_file(bad, "{\"f-maxx\": 0.6}\n");
  const RunResult r = run_cli("analyze --input '" + csv.string() + "' --config '" +
                              bad.string() + "'");
  CHECK(r.exit_code == 2);
  CHECK(error_kind(r) == "config");
}

TEST_CASE("compare reports the overlap of two binned marginals") {
  const fs::path pa = scratch_dir() / "ma.csv";
  const fs::path pb = scratch_dir() / "mb.csv";
  write_file(pa, "# config_hash: abc\nfreq,mass\n0.05,0.2\n0.15,0.5\n0.25,0.3\n");
  write_file(pb, "freq,mass\n0.15,0.1\n0.25,0.6\n0.35,0.3\n");
  const RunResult r = run_cli("compare '" + pa.string() + "' '" + pb.string() + "'");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.out);
  // Shared bins 0.15 and 0.25: min(0.5,0.1) + min(0.3,0.6) = 0.4.
  CHECK(j.at("overlap").get<double>() == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(j.at("total_a").get<double>() == doctest::Approx(1.0).epsilon(1e-12));

  const fs::path pc = scratch_dir() / "mc.csv";
  write_file(pc, "freq,mass\n0.05,0.5\n0.30,0.5\n");  // different bin width
  const RunResult bad = run_cli("compare '" + pa.string() + "' '" + pc.string() + "'");
  CHECK(bad.exit_code == 1);
  CHECK(error_kind(bad) == "validation");

  const RunResult gone = run_cli("compare '" + pa.string() + "' /no/such.csv");
  CHECK(gone.exit_code == 1);
  CHECK(error_kind(gone) == "io");
}

TEST_CASE("alias study runs end to end and writes its per-seed table") {
  const fs::path out = scratch_dir() / "alias.csv";
  const RunResult r = run_cli("alias-study --seeds 1 --seed-start 11 --n 40"
                              " --f-max 0.7 --oversample 6 --output '" +
                              out.string() + "'");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.out);
  CHECK(j.at("seeds").get<int>() == 1);
  const double og = j.at("median_overlap_ground").get<double>();
  const double orr = j.at("median_overlap_random").get<double>();
  CHECK(og >= 0.0);
  CHECK(og <= 1.0 + 1e-12);
  CHECK(orr >= 0.0);
  CHECK(orr <= 1.0 + 1e-12);
  REQUIRE(fs::exists(out));
  const std::string body = slurp(out);
  CHECK(body.find("seed,overlap_ground") != std::string::npos);
  CHECK(body.find("\n11,") != std::string::npos);
}
