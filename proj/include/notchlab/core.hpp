#pragma once

// Shared constants, error types and small numeric helpers.
//
// Public interfaces take frequencies in Hz (ordinary frequency) and every
// other quantity in SI base units. Angular frequencies only appear inside
// formula evaluation.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace notchlab {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 299'792'458.0;   // m/s
inline constexpr double kHbar = 1.054'571'817e-34;       // J s
inline constexpr cplx kI{0.0, 1.0};

inline constexpr double angular(double f_hz) { return kTwoPi * f_hz; }
inline constexpr double ordinary(double w_rad) { return w_rad / kTwoPi; }

// Error hierarchy. Every failure raised by the library derives from Error so
// the CLI can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition (validation failure).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Evaluation landed inside the guard band of a resonance pole.
class PoleError : public Error {
 public:
  PoleError(const std::string& mode, double f_hz)
      : Error("evaluation within pole guard band of " + mode + " mode at " +
              std::to_string(f_hz) + " Hz"),
        mode_(mode),
        f_hz_(f_hz) {}
  const std::string& mode() const noexcept { return mode_; }
  double frequency() const noexcept { return f_hz_; }

 private:
  std::string mode_;
  double f_hz_;
};

/// Root bracket without a sign change.
class BracketError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: singular system, passivity violation, divergent integral.
class NumericalError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DomainError(what);
}

inline void require_positive(double x, const std::string& name) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError(name + " must be positive and finite (got " + std::to_string(x) + ")");
}

inline void require_nonnegative(double x, const std::string& name) {
  if (!(x >= 0.0) || !std::isfinite(x))
    throw DomainError(name + " must be non-negative and finite (got " + std::to_string(x) + ")");
}

/// Wrap an angle to (-pi, pi].
inline double wrap_phase(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

}  // namespace detail
}  // namespace notchlab
