#include "qpscan/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace qpscan {

const char* to_string(SeriesKind k) {
  switch (k) {
    case SeriesKind::doppler: return "doppler";
    case SeriesKind::transit_timing: return "transit_timing";
    case SeriesKind::generic: return "generic";
  }
  return "generic";
}

SeriesKind series_kind_from_string(const std::string& s) {
  if (s == "doppler") return SeriesKind::doppler;
  if (s == "transit_timing") return SeriesKind::transit_timing;
  if (s == "generic") return SeriesKind::generic;
  raise(ErrorKind::parse, "unknown series kind '" + s + "'");
}

TimeSeries::TimeSeries(std::vector<Observation> obs, SeriesKind kind,
                       std::vector<std::size_t> source_rows)
    : kind_(kind) {
  const std::size_t n = obs.size();
  if (source_rows.empty()) {
    source_rows.resize(n);
    std::iota(source_rows.begin(), source_rows.end(), std::size_t{1});
  } else if (source_rows.size() != n) {
    raise(ErrorKind::validation, "source_rows size mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Observation& o = obs[i];
    const std::string at = " (row " + std::to_string(source_rows[i]) + ")";
    if (!std::isfinite(o.x) || !std::isfinite(o.y))
      raise(ErrorKind::validation, "non-finite observation value" + at);
    if (!std::isfinite(o.sigma) || o.sigma <= 0.0)
      raise(ErrorKind::validation,
            "sigma must be finite and > 0, got " + std::to_string(o.sigma) + at);
  }
  // Sort by (x, y, sigma, row): analyses become invariant under permutation
  // of input rows, including ties in x.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (obs[a].x != obs[b].x) return obs[a].x < obs[b].x;
    if (obs[a].y != obs[b].y) return obs[a].y < obs[b].y;
    if (obs[a].sigma != obs[b].sigma) return obs[a].sigma < obs[b].sigma;
    return source_rows[a] < source_rows[b];
  });
  obs_.reserve(n);
  rows_.reserve(n);
  for (std::size_t i : order) {
    obs_.push_back(obs[i]);
    rows_.push_back(source_rows[i]);
  }
  for (std::size_t i = 1; i < n; ++i)
    if (obs_[i].x == obs_[i - 1].x) ++duplicate_x_;
}

double TimeSeries::span() const {
  if (obs_.size() < 2) return 0.0;
  return obs_.back().x - obs_.front().x;
}

std::vector<double> TimeSeries::x_values() const {
  std::vector<double> v(obs_.size());
  for (std::size_t i = 0; i < obs_.size(); ++i) v[i] = obs_[i].x;
  return v;
}

std::vector<double> TimeSeries::y_values() const {
  std::vector<double> v(obs_.size());
  for (std::size_t i = 0; i < obs_.size(); ++i) v[i] = obs_[i].y;
  return v;
}

std::vector<double> TimeSeries::sigma_values() const {
  std::vector<double> v(obs_.size());
  for (std::size_t i = 0; i < obs_.size(); ++i) v[i] = obs_[i].sigma;
  return v;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view tok, double& out) {
  tok = trim(tok);
  if (tok.empty()) return false;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

TimeSeries timeseries_from_csv(const std::string& text, const std::string& origin) {
  std::vector<Observation> obs;
  std::vector<std::size_t> rows;
  SeriesKind kind = SeriesKind::generic;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool saw_data = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      // Honor a "# kind: doppler" annotation so CSV round-trips keep the tag.
      auto pos = s.find("kind:");
      if (pos != std::string_view::npos)
        kind = series_kind_from_string(std::string(trim(s.substr(pos + 5))));
      continue;
    }
    std::vector<std::string_view> toks;
    std::size_t start = 0;
    const std::string sv(s);
    for (std::size_t i = 0; i <= sv.size(); ++i) {
      if (i == sv.size() || sv[i] == ',') {
        toks.push_back(std::string_view(sv).substr(start, i - start));
        start = i + 1;
      }
    }
    Observation o;
    const bool three = toks.size() == 3;
    const bool ok = three && parse_double(toks[0], o.x) &&
                    parse_double(toks[1], o.y) && parse_double(toks[2], o.sigma);
    if (!ok) {
      // A single non-numeric line before any data is taken as the header.
      if (!saw_data && obs.empty()) continue;
      raise(ErrorKind::parse, origin + ": malformed row at line " +
                                  std::to_string(lineno) +
                                  (three ? "" : " (expected 3 columns)"));
    }
    saw_data = true;
    obs.push_back(o);
    rows.push_back(lineno);
  }
  return TimeSeries(std::move(obs), kind, std::move(rows));
}

TimeSeries timeseries_from_json_text(const std::string& text, const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::parse, origin + ": " + e.what());
  }
  SeriesKind kind = SeriesKind::generic;
  if (j.contains("kind")) kind = series_kind_from_string(j["kind"].get<std::string>());
  if (!j.contains("observations") || !j["observations"].is_array())
    raise(ErrorKind::parse, origin + ": missing 'observations' array");
  std::vector<Observation> obs;
  std::vector<std::size_t> rows;
  std::size_t k = 0;
  for (const auto& row : j["observations"]) {
    ++k;
    if (!row.is_array() || row.size() != 3)
      raise(ErrorKind::parse, origin + ": observation " + std::to_string(k) +
                                  " is not a [x,y,sigma] triple");
    obs.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
    rows.push_back(k);
  }
  return TimeSeries(std::move(obs), kind, std::move(rows));
}

TimeSeries load_timeseries(const std::string& path, SeriesFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (format == SeriesFormat::auto_detect) {
    const bool json_ext = path.size() > 5 && path.substr(path.size() - 5) == ".json";
    format = json_ext ? SeriesFormat::json : SeriesFormat::csv;
  }
  if (format == SeriesFormat::json) return timeseries_from_json_text(buf.str(), path);
  return timeseries_from_csv(buf.str(), path);
}

std::string timeseries_to_csv(const TimeSeries& ts) {
  std::string out;
  out += "# kind: ";
  out += to_string(ts.kind());
  out += "\nx,y,sigma\n";
  char buf[96];
  for (const Observation& o : ts.observations()) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", o.x, o.y, o.sigma);
    out += buf;
  }
  return out;
}

void save_timeseries_csv(const TimeSeries& ts, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::io, "cannot write '" + path + "'");
  out << timeseries_to_csv(ts);
}

std::pair<TimeSeries, double> center_abscissa(const TimeSeries& ts) {
  const std::size_t n = ts.size();
  if (n == 0) return {ts, 0.0};
  double mean = 0.0;
  for (const Observation& o : ts.observations()) mean += o.x;
  mean /= static_cast<double>(n);
  std::vector<Observation> obs(ts.observations());
  for (Observation& o : obs) o.x -= mean;
  return {TimeSeries(std::move(obs), ts.kind(),
                     std::vector<std::size_t>(ts.source_rows())),
          mean};
}

void validate_for_analysis(const TimeSeries& ts) {
  if (ts.size() < 3)
    raise(ErrorKind::validation,
          "analysis requires at least 3 observations, got " +
              std::to_string(ts.size()));
  if (!(ts.span() > 0.0))
    raise(ErrorKind::validation, "analysis requires a positive time span");
}

}  // namespace qpscan
