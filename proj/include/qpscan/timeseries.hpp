#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qpscan/error.hpp"

namespace qpscan {

enum class SeriesKind { doppler, transit_timing, generic };

const char* to_string(SeriesKind k);
SeriesKind series_kind_from_string(const std::string& s);

/// One measurement: abscissa x (time in days, or transit index stored as a
/// real), observable y, and its reported 1-sigma uncertainty.
struct Observation {
  double x = 0.0;
  double y = 0.0;
  double sigma = 1.0;
};

/// Unevenly sampled series. Observations are sorted ascending in x at
/// construction; the original row of each observation is kept so that
/// diagnostics can refer back to the source file. Immutable once built and
/// safe to share across scan workers.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(std::vector<Observation> obs, SeriesKind kind,
             std::vector<std::size_t> source_rows = {});

  std::size_t size() const { return obs_.size(); }
  const Observation& operator[](std::size_t i) const { return obs_[i]; }
  const std::vector<Observation>& observations() const { return obs_; }
  SeriesKind kind() const { return kind_; }
  /// max(x) - min(x); zero for degenerate (constant-x) series.
  double span() const;
  /// Number of observations sharing an x value with a predecessor.
  std::size_t duplicate_x_count() const { return duplicate_x_; }
  /// Source row (in the original file or input order) per sorted observation.
  const std::vector<std::size_t>& source_rows() const { return rows_; }

  std::vector<double> x_values() const;
  std::vector<double> y_values() const;
  std::vector<double> sigma_values() const;

 private:
  std::vector<Observation> obs_;
  std::vector<std::size_t> rows_;
  SeriesKind kind_ = SeriesKind::generic;
  std::size_t duplicate_x_ = 0;
};

enum class SeriesFormat { auto_detect, csv, json };

/// Reads a series from CSV (columns x,y,sigma; '#' comments; optional header)
/// or from the JSON variant {"kind":..., "observations":[[x,y,sigma],...]}.
/// Throws Error(parse) or Error(validation) with the offending row number.
TimeSeries load_timeseries(const std::string& path,
                           SeriesFormat format = SeriesFormat::auto_detect);

/// Writes CSV that round-trips bit-identically through load_timeseries.
void save_timeseries_csv(const TimeSeries& ts, const std::string& path);

std::string timeseries_to_csv(const TimeSeries& ts);
TimeSeries timeseries_from_csv(const std::string& text,
                               const std::string& origin = "<string>");
TimeSeries timeseries_from_json_text(const std::string& text,
                                     const std::string& origin = "<string>");

/// Replaces x by x - mean(x) and returns the offset. All model evaluation
/// happens in centered coordinates; outputs are mapped back on report.
std::pair<TimeSeries, double> center_abscissa(const TimeSeries& ts);

/// Preconditions shared by every analysis entry point: at least 3
/// observations and a strictly positive span.
void validate_for_analysis(const TimeSeries& ts);

}  // namespace qpscan
