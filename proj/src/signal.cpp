#include "chiralsim/signal.hpp"

#include "chiralsim/types.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace chiralsim {

double dominant_frequency(const std::vector<double>& times, const std::vector<double>& values, int padding) {
  const std::size_t n = values.size();
  if (n < 8 || times.size() != n) throw NumericalError("period detection needs at least 8 samples");
  const double step = (times.back() - times.front()) / static_cast<double>(n - 1);
  if (!(step > 0.0)) throw NumericalError("period detection needs increasing times");

  double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double spread = 0.0;
  for (double v : values) spread = std::max(spread, std::abs(v - mean));
  if (spread < 1e-9) throw NumericalError("trace is flat; no period to detect");

  std::size_t size = 1;
  while (size < n * static_cast<std::size_t>(std::max(1, padding))) size <<= 1;
  std::vector<double> buffer(size, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n - 1));
    buffer[i] = w * (values[i] - mean);
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, buffer);

  // Skip the main lobe around zero frequency (two unpadded bins).
  const std::size_t lo = std::max<std::size_t>(2, 2 * size / n);
  const std::size_t hi = size / 2;
  if (lo + 1 >= hi) throw NumericalError("trace too short for period detection");
  std::size_t best = lo;
  for (std::size_t k = lo; k < hi; ++k) {
    if (std::abs(spectrum[k]) > std::abs(spectrum[best])) best = k;
  }
  if (best == lo || best + 1 >= hi) throw NumericalError("no interior spectral peak found");
  double a = std::log(std::abs(spectrum[best - 1]));
  double b = std::log(std::abs(spectrum[best]));
  double c = std::log(std::abs(spectrum[best + 1]));
  double denom = a - 2.0 * b + c;
  double offset = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
  return (static_cast<double>(best) + offset) / (static_cast<double>(size) * step);
}

double first_peak_time(const std::vector<double>& times, const std::vector<double>& values, double prominence) {
  if (values.size() < 3) return -1.0;
  const double base = values.front();
  for (std::size_t i = 1; i + 1 < values.size(); ++i) {
    if (values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] - base >= prominence) {
      double a = values[i - 1], b = values[i], c = values[i + 1];
      double denom = a - 2.0 * b + c;
      double offset = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
      double step = 0.5 * (times[i + 1] - times[i - 1]);
      return times[i] + offset * step;
    }
  }
  return -1.0;
}

std::string PeakOrder::label(int start) const {
  if (!ordered()) return "none";
  std::string out = std::to_string(start + 1);
  for (int s : sequence) out += ">" + std::to_string(s + 1);
  return out;
}

PeakOrder peak_order(const std::vector<double>& times, const std::vector<std::vector<double>>& traces, int start,
                     double tie_ns) {
  const int n = static_cast<int>(traces.size());
  std::vector<std::pair<double, int>> peaks;
  for (int s = 0; s < n; ++s) {
    if (s == start) continue;
    double t = first_peak_time(times, traces[static_cast<std::size_t>(s)]);
    if (t >= 0.0) peaks.emplace_back(t, s);
  }
  std::sort(peaks.begin(), peaks.end());
  PeakOrder order;
  for (auto [t, s] : peaks) order.sequence.push_back(s);
  if (peaks.empty()) return order;
  if (peaks.size() > 1 && peaks[1].first - peaks[0].first < tie_ns) return order;
  int first = peaks[0].second;
  if (first == (start + 1) % n) order.orientation = +1;
  else if (first == (start + n - 1) % n) order.orientation = -1;
  return order;
}

}  // namespace chiralsim
