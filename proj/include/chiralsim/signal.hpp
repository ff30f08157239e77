// Time-series analysis of occupation traces: dominant period and the order
// in which sites first peak.

#pragma once

#include <string>
#include <vector>

namespace chiralsim {

/// Dominant nonzero frequency (cycles per time unit) of a uniformly sampled
/// trace: mean removal, Hann window, zero padding, log-parabolic peak
/// interpolation. Throws NumericalError for flat or too short traces.
double dominant_frequency(const std::vector<double>& times, const std::vector<double>& values,
                          int padding = 16);

inline double detect_period(const std::vector<double>& times, const std::vector<double>& values) {
  return 1.0 / dominant_frequency(times, values);
}

/// Time of the first local maximum rising at least `prominence` above the
/// initial value, refined by a parabola through the three samples; negative
/// when none exists.
double first_peak_time(const std::vector<double>& times, const std::vector<double>& values,
                       double prominence = 0.05);

struct PeakOrder {
  std::vector<int> sequence;  // sites after the start, by first-peak time
  int orientation = 0;        // +1 along 0 -> 1 -> 2, -1 against, 0 none

  bool ordered() const { return orientation != 0; }
  /// "1>2>3" style (1-based, start site first) or "none".
  std::string label(int start) const;
  bool reverse_of(const PeakOrder& other) const {
    return ordered() && other.ordered() && orientation == -other.orientation;
  }
};

/// Order in which the sites other than `start` first peak. Times closer than
/// `tie_ns` for the two earliest sites mean no order.
PeakOrder peak_order(const std::vector<double>& times, const std::vector<std::vector<double>>& traces, int start,
                     double tie_ns = 1e-2);

}  // namespace chiralsim
