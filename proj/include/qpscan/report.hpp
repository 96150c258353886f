#pragma once

#include <string>

#include "qpscan/analyze.hpp"
#include "qpscan/timeseries.hpp"

namespace qpscan {

// 64-bit FNV-1a of a string, lowercase hex.
std::string fnv1a_hex(const std::string& data);

// UTC timestamp, ISO 8601 with seconds.
std::string iso_timestamp_utc();

// Write via a temp file in the same directory plus rename, so a crash never
// leaves a half-written report.
void atomic_write(const std::string& path, const std::string& content);

struct ReportOptions {
  std::string output_dir = ".";
  std::string config_hash;  // embedded in every file written
  std::string timestamp;    // empty: stamp with the current time
};

struct ReportFiles {
  std::string posterior_json;
  std::vector<std::string> marginals;  // one per frequency of the selected model
  std::string delta_csv;               // only when a two-sinusoid level exists
  std::string jitter_csv;              // only when jitter was integrated
};

// Write posterior.json plus marginal_<i>.csv, delta.csv, and jitter.csv for
// the maximum-posterior model order.  Returns the paths written.  Output is
// byte-identical across runs with identical inputs except for the one line
// carrying the timestamp.
ReportFiles write_reports(const AnalysisResult& res, const TimeSeries& ts,
                          const AnalysisOptions& opt, const ReportOptions& ro);

}  // namespace qpscan
