#pragma once

// Transfer impedances of two quarter-wave resonators coupled either through a
// lumped capacitor or a two-line coupled (multiconductor) section, plus notch
// location helpers.
//
// Geometry convention: both resonators run open end -> "open" segment ->
// coupled section -> "short" segment -> shorted end. Port 1 sits at the open
// end of the readout resonator, port 2 at the open end of the filter.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "notchlab/core.hpp"

namespace notchlab {

using Diagnostics = std::vector<std::string>;

inline void note(Diagnostics* diag, std::string msg) {
  if (diag) diag->push_back(std::move(msg));
}

struct LineParams {
  double z0 = 0.0;  // ohm
  double v = 0.0;   // m/s
  std::optional<double> eps_eff;

  static LineParams from_eps_eff(double z0, double eps_eff) {
    return LineParams{z0, kSpeedOfLight / std::sqrt(eps_eff), eps_eff};
  }

  /// Capacitance to ground per length, c = 1/(Z0 v).
  double c_per_length() const { return 1.0 / (z0 * v); }
  /// Inductance per length, l = Z0/v.
  double l_per_length() const { return z0 / v; }

  void validate() const {
    detail::require_positive(z0, "line.z0");
    detail::require_positive(v, "line.v");
    detail::require(v <= kSpeedOfLight, "line.v exceeds the speed of light");
    if (eps_eff) {
      detail::require_positive(*eps_eff, "line.eps_eff");
      detail::require(std::abs(v * std::sqrt(*eps_eff) - kSpeedOfLight) / kSpeedOfLight < 1e-6,
                      "line.v inconsistent with line.eps_eff");
    }
  }
};

struct MtlCouplerParams {
  double len_c = 0.0;       // m
  double cm_over_c = 0.0;   // c_m / c
  double zm_over_z0 = 1.0;  // sqrt(l_m/c_m) / Z0
  std::optional<double> d;  // ground-strip width, metadata only

  void validate() const {
    detail::require_nonnegative(len_c, "coupler.len_c");
    detail::require(cm_over_c >= 0.0 && cm_over_c < 1.0, "coupler.cm_over_c must lie in [0, 1)");
    detail::require_positive(zm_over_z0, "coupler.zm_over_z0");
  }
};

struct CapacitiveCoupler {
  double c_j = 0.0;  // F

  void validate() const { detail::require_nonnegative(c_j, "coupler.c_j"); }
};

using Coupler = std::variant<MtlCouplerParams, CapacitiveCoupler>;

struct CoupledPairGeometry {
  std::string name;
  double l_r_open = 0.0;
  double l_r_short = 0.0;
  double l_p_open = 0.0;
  double l_p_short = 0.0;
  Coupler coupler = MtlCouplerParams{};
  LineParams line;

  bool is_mtl() const { return std::holds_alternative<MtlCouplerParams>(coupler); }
  const MtlCouplerParams& mtl() const {
    if (!is_mtl()) throw DomainError("geometry '" + name + "' does not use a coupled-line coupler");
    return std::get<MtlCouplerParams>(coupler);
  }
  const CapacitiveCoupler& capacitive() const {
    if (is_mtl()) throw DomainError("geometry '" + name + "' does not use a capacitive coupler");
    return std::get<CapacitiveCoupler>(coupler);
  }

  double coupled_length() const { return is_mtl() ? mtl().len_c : 0.0; }
  double readout_length() const { return l_r_open + coupled_length() + l_r_short; }
  double filter_length() const { return l_p_open + coupled_length() + l_p_short; }

  /// Bare quarter-wave frequencies (Hz).
  double f_r() const { return line.v / (4.0 * readout_length()); }
  double f_p() const { return line.v / (4.0 * filter_length()); }

  /// Same pair with the roles of readout and filter exchanged (ports swapped).
  CoupledPairGeometry mirrored() const {
    CoupledPairGeometry m = *this;
    std::swap(m.l_r_open, m.l_p_open);
    std::swap(m.l_r_short, m.l_p_short);
    return m;
  }

  void validate() const {
    line.validate();
    detail::require_nonnegative(l_r_open, "l_r_open");
    detail::require_nonnegative(l_r_short, "l_r_short");
    detail::require_nonnegative(l_p_open, "l_p_open");
    detail::require_nonnegative(l_p_short, "l_p_short");
    std::visit([](const auto& c) { c.validate(); }, coupler);
    detail::require(readout_length() > 0.0, "total readout length must be positive");
    detail::require(filter_length() > 0.0, "total filter length must be positive");
  }
};

struct EvalOptions {
  /// Evaluations closer than this to a cosine zero of either resonator raise PoleError.
  double pole_guard_hz = 1e3;
};

/// Fundamental quarter-wave resonance v/(4 l).
inline double lambda4_frequency(double length, const LineParams& line) {
  if (!(length > 0.0)) throw DomainError("lambda4_frequency: length must be positive");
  return line.v / (4.0 * length);
}

namespace detail {

// Distance (Hz) from f to the nearest odd multiple of f0, i.e. to a zero of cos(pi f / 2 f0).
inline double distance_to_pole(double f, double f0) {
  const double k = std::round((f / f0 - 1.0) / 2.0);
  const double pole = f0 * (2.0 * std::max(k, 0.0) + 1.0);
  return std::abs(f - pole);
}

inline void check_poles(const CoupledPairGeometry& g, double f, const EvalOptions& opt) {
  require(f > 0.0 && std::isfinite(f), "frequency must be positive");
  if (distance_to_pole(f, g.f_r()) < opt.pole_guard_hz) throw PoleError("readout", f);
  if (distance_to_pole(f, g.f_p()) < opt.pole_guard_hz) throw PoleError("filter", f);
}

inline double pole_denominator(const CoupledPairGeometry& g, double f) {
  return std::cos(kPi * f / (2.0 * g.f_r())) * std::cos(kPi * f / (2.0 * g.f_p()));
}

inline double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

}  // namespace detail

/// Weak-coupling transfer impedance for a general (possibly inhomogeneous)
/// coupled-line section, consonant with the uncoupled line segments.
inline cplx z21_general(const CoupledPairGeometry& g, double f, const EvalOptions& opt = {}) {
  const auto& c = g.mtl();
  detail::check_poles(g, f, opt);
  const double w = angular(f);
  const double z0 = g.line.z0, v = g.line.v;
  const double c_m = c.cm_over_c * g.line.c_per_length();
  const double zm2 = c.zm_over_z0 * c.zm_over_z0;
  const double a_plus = (1.0 + zm2) * detail::sinc(w * c.len_c / v) *
                        std::cos(w * (g.l_r_short + g.l_p_short + c.len_c) / v);
  const double a_minus = (1.0 - zm2) * std::cos(w * (g.l_r_short - g.l_p_short) / v);
  const double im = z0 * z0 * w * c.len_c * c_m * (a_plus - a_minus) / (2.0 * detail::pole_denominator(g, f));
  return {0.0, im};
}

/// Transfer impedance for a lumped coupling capacitor C_J placed between the
/// junctions of the open and short segments.
inline cplx z21_capacitive(const CoupledPairGeometry& g, double f, const EvalOptions& opt = {}) {
  const double c_j = g.capacitive().c_j;
  detail::check_poles(g, f, opt);
  const double w = angular(f);
  const double z0 = g.line.z0, v = g.line.v;
  const double im = -z0 * z0 * std::sin(w * g.l_r_short / v) * std::sin(w * g.l_p_short / v) * w * c_j /
                    detail::pole_denominator(g, f);
  return {0.0, im};
}

/// Notch (anti-resonance of the short-end path) frequency v/(4 (l_r^s + l_c + l_p^s)).
inline double notch_frequency(const CoupledPairGeometry& g) {
  const double path = g.l_r_short + g.mtl().len_c + g.l_p_short;
  if (!(path > 0.0)) throw DomainError("notch_frequency: short-end path length is zero");
  return g.line.v / (4.0 * path);
}

/// Transfer impedance for a coupled section in a homogeneous medium (Z_m = Z_0).
inline cplx z21_homogeneous(const CoupledPairGeometry& g, double f, const EvalOptions& opt = {}) {
  const auto& c = g.mtl();
  if (std::abs(c.zm_over_z0 - 1.0) > 1e-12)
    throw DomainError("z21_homogeneous requires zm_over_z0 = 1");
  detail::check_poles(g, f, opt);
  const double w = angular(f);
  const double im = g.line.z0 * std::sin(w * c.len_c / g.line.v) *
                    std::cos(kPi * f / (2.0 * notch_frequency(g))) / detail::pole_denominator(g, f) *
                    c.cm_over_c;
  return {0.0, im};
}

/// Dispatch on the coupler kind.
inline cplx z21(const CoupledPairGeometry& g, double f, const EvalOptions& opt = {}) {
  return g.is_mtl() ? z21_general(g, f, opt) : z21_capacitive(g, f, opt);
}

/// Pole frequencies of either resonator inside (lo, hi).
inline std::vector<double> poles_in(const CoupledPairGeometry& g, double lo, double hi) {
  std::vector<double> out;
  for (double f0 : {g.f_r(), g.f_p()}) {
    for (double p = f0; p < hi; p += 2.0 * f0)
      if (p > lo) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Root of a real-valued function on [f_lo, f_hi] to within tol (Hz).
/// Known poles inside the bracket, or a converged point whose magnitude
/// exceeds both endpoints, raise PoleError.
inline double find_zero(const std::function<double(double)>& fn, double f_lo, double f_hi, double tol,
                        const std::vector<double>& poles = {}) {
  detail::require(f_lo < f_hi, "find_zero: empty bracket");
  detail::require_positive(tol, "find_zero: tol");
  for (double p : poles)
    if (p > f_lo && p < f_hi) throw PoleError("bracketed", p);
  const double a = fn(f_lo), b = fn(f_hi);
  if (a == 0.0) return f_lo;
  if (b == 0.0) return f_hi;
  if ((a > 0.0) == (b > 0.0)) throw BracketError("find_zero: no sign change on bracket");
  std::uintmax_t max_iter = 200;
  auto stop = [tol](double x, double y) { return std::abs(y - x) <= tol; };
  auto [x0, x1] = boost::math::tools::toms748_solve(fn, f_lo, f_hi, a, b, stop, max_iter);
  const double root = 0.5 * (x0 + x1);
  if (std::abs(fn(root)) > std::max(std::abs(a), std::abs(b))) throw PoleError("bracketed", root);
  return root;
}

/// Imaginary part of z21 as a plain function, for root finding.
inline std::function<double(double)> im_z21_of(const CoupledPairGeometry& g, EvalOptions opt = {}) {
  return [g, opt](double f) { return z21(g, f, opt).imag(); };
}

/// Locate a zero of Im Z21 on [f_lo, f_hi], rejecting brackets that contain a pole.
inline double find_z21_zero(const CoupledPairGeometry& g, double f_lo, double f_hi, double tol = 1.0,
                            const EvalOptions& opt = {}) {
  return find_zero(im_z21_of(g, opt), f_lo, f_hi, tol, poles_in(g, f_lo, f_hi));
}

/// Several coupled sections between the same pair of resonators. Under weak
/// coupling each section contributes independently.
inline cplx z21_multi(const std::vector<CoupledPairGeometry>& sections, double f, const EvalOptions& opt = {}) {
  if (sections.empty()) throw DomainError("z21_multi: no sections");
  const double lr = sections.front().readout_length();
  const double lp = sections.front().filter_length();
  cplx total{};
  for (const auto& s : sections) {
    if (std::abs(s.readout_length() - lr) > 1e-12 * lr || std::abs(s.filter_length() - lp) > 1e-12 * lp)
      throw DomainError("z21_multi: sections must describe the same pair of resonators");
    total += z21(s, f, opt);
  }
  return total;
}

struct CouplingDiagnostic {
  double cm_over_c = 0.0;
  double lm_over_lc = 0.0;
  double k = 1.0;  // sqrt(1 - (l_m/l_c)^2)
  bool weak = true;
};

/// Weak-coupling indicators. Not enforced; `weak` turns false above cm_over_c = 0.1.
inline CouplingDiagnostic coupling_diagnostic(const CoupledPairGeometry& g, Diagnostics* diag = nullptr) {
  const auto& c = g.mtl();
  CouplingDiagnostic d;
  d.cm_over_c = c.cm_over_c;
  d.lm_over_lc = c.zm_over_z0 * c.zm_over_z0 * c.cm_over_c;
  d.k = std::sqrt(std::max(0.0, 1.0 - d.lm_over_lc * d.lm_over_lc));
  d.weak = c.cm_over_c <= 0.1;
  if (!d.weak) note(diag, "cm_over_c = " + std::to_string(c.cm_over_c) + " exceeds the weak-coupling range (0.1)");
  return d;
}

}  // namespace notchlab
