// Common aliases, unit conversions and error types.
//
// Internal units: time in nanoseconds, frequencies as angular frequencies in
// rad/ns (hbar = 1). Config files speak GHz/MHz/us; conversions happen at the
// boundary through the helpers below.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace chiralsim {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

namespace units {

/// MHz (cycles per microsecond) to rad/ns.
constexpr double mhz(double value) { return kTwoPi * value * 1e-3; }
/// GHz to rad/ns.
constexpr double ghz(double value) { return kTwoPi * value; }
/// rad/ns back to MHz.
constexpr double to_mhz(double angular) { return angular / kTwoPi * 1e3; }
/// Microseconds to nanoseconds.
constexpr double us(double value) { return value * 1e3; }

}  // namespace units

/// Invalid configuration or arguments. Carries every collected problem.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message)
      : std::runtime_error(message), problems_{message} {}
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
      if (!out.empty()) out += "; ";
      out += item;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

/// Requested operation is not defined for the given basis or state.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Integrator non-convergence, positivity loss, failed detection.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reduce an angle to (-pi, pi].
inline double wrap_phase(double angle) {
  double r = std::remainder(angle, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

}  // namespace chiralsim
