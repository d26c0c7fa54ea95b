#pragma once

// Equivalent lumped circuits for coupled quarter-wave pairs and the exchange
// coupling J between their fundamental modes.

#include <array>
#include <cmath>
#include <variant>

#include "notchlab/mtl.hpp"

namespace notchlab {

/// Parallel LC resonator.
struct LumpedResonator {
  double c = 0.0;  // F
  double l = 0.0;  // H

  double frequency() const { return 1.0 / (kTwoPi * std::sqrt(l * c)); }
  double impedance() const { return std::sqrt(l / c); }
  cplx admittance(double f) const {
    const double w = angular(f);
    return kI * w * c + 1.0 / (kI * w * l);
  }
  void validate() const {
    detail::require_positive(c, "resonator capacitance");
    detail::require_positive(l, "resonator inductance");
  }
};

struct EquivCap {
  double c_j_eff = 0.0;  // F
};

/// Parallel LC coupler branch whose anti-resonance reproduces the notch.
struct NotchLC {
  double c_n = 0.0;  // F
  double l_n = 0.0;  // H

  double frequency() const { return 1.0 / (kTwoPi * std::sqrt(l_n * c_n)); }
  double impedance() const { return std::sqrt(l_n / c_n); }
};

using CouplerBranch = std::variant<EquivCap, NotchLC>;

inline cplx branch_admittance(const CouplerBranch& b, double f) {
  const double w = angular(f);
  if (const auto* cap = std::get_if<EquivCap>(&b)) return kI * w * cap->c_j_eff;
  const auto& n = std::get<NotchLC>(b);
  return kI * w * n.c_n + 1.0 / (kI * w * n.l_n);
}

struct LumpedPair {
  LumpedResonator readout;
  LumpedResonator filter;
  CouplerBranch coupler = EquivCap{};
};

/// Weak-coupling ratio warnings: C_n (or C~_J) above 0.1 C_r,p, L_n below 10 L_r,p.
inline void diagnose(const LumpedPair& pair, Diagnostics* diag) {
  const double c_min = std::min(pair.readout.c, pair.filter.c);
  const double l_max = std::max(pair.readout.l, pair.filter.l);
  if (const auto* n = std::get_if<NotchLC>(&pair.coupler)) {
    if (n->c_n > 0.1 * c_min) note(diag, "coupler capacitance exceeds 0.1 of the resonator capacitance");
    if (n->l_n < 10.0 * l_max) note(diag, "coupler inductance below 10x the resonator inductance");
  } else if (std::get<EquivCap>(pair.coupler).c_j_eff > 0.1 * c_min) {
    note(diag, "coupling capacitance exceeds 0.1 of the resonator capacitance");
  }
}

/// Lumped image of a quarter-wave line of the given length near its fundamental:
/// C = l/(2 Z0 v), L = 8 Z0 l/(pi^2 v). The lumped resonance equals v/(4 l).
inline LumpedResonator map_resonator(double length, const LineParams& line) {
  if (!(length > 0.0)) throw DomainError("map_resonator: length must be positive");
  return {length / (2.0 * line.z0 * line.v), 8.0 * line.z0 * length / (kPi * kPi * line.v)};
}

/// Frequency-independent equivalent coupling capacitance,
/// C~_J = C_J sin(l_r^s w_r / v) sin(l_p^s w_p / v).
inline double equivalent_cap(double c_j, const CoupledPairGeometry& g) {
  const double v = g.line.v;
  return c_j * std::sin(g.l_r_short * angular(g.f_r()) / v) * std::sin(g.l_p_short * angular(g.f_p()) / v);
}

/// Exchange coupling J/2pi (Hz) for a lumped coupling capacitor C_J.
inline double j_capacitive(const CoupledPairGeometry& g, double c_j) {
  detail::require_nonnegative(c_j, "c_j");
  const double wr = angular(g.f_r()), wp = angular(g.f_p());
  const double v = g.line.v;
  const double j = 2.0 / kPi * g.line.z0 * wr * wp * c_j * std::sin(wr * g.l_r_short / v) *
                   std::sin(wp * g.l_p_short / v);
  return ordinary(j);
}

inline double j_capacitive(const CoupledPairGeometry& g) { return j_capacitive(g, g.capacitive().c_j); }

/// Notch branch from matching the value and slope of the distributed transfer
/// impedance at the notch.
inline NotchLC notch_branch(const CoupledPairGeometry& g) {
  const auto& c = g.mtl();
  const double wn = angular(notch_frequency(g));
  const double wr = angular(g.f_r()), wp = angular(g.f_p());
  const double s = std::sin(wn * c.len_c / g.line.v);
  if (c.cm_over_c == 0.0 || s == 0.0)
    throw DomainError("notch_branch: coupler is absent (cm_over_c or len_c is zero), Z_n is unbounded");
  const double num = std::cos(kPi * wn / (2.0 * wr)) * std::cos(kPi * wn / (2.0 * wp));
  const double den = (wr / wn - wn / wr) * (wp / wn - wn / wp);
  if (den == 0.0) throw NumericalError("notch_branch: notch coincides with a resonator mode");
  const double zn = g.line.z0 * 64.0 / (kPi * kPi * kPi) * num / den / (c.cm_over_c * s);
  return {1.0 / (wn * zn), zn / wn};
}

inline LumpedPair lumped_pair(const CoupledPairGeometry& g) {
  LumpedPair p{map_resonator(g.readout_length(), g.line), map_resonator(g.filter_length(), g.line), EquivCap{}};
  if (g.is_mtl())
    p.coupler = notch_branch(g);
  else
    p.coupler = EquivCap{equivalent_cap(g.capacitive().c_j, g)};
  return p;
}

enum class JFormula {
  Expanded,  // leading order in the readout/filter detuning, about their mean
  Exact      // lumped-circuit form using Z_r, Z_p and Z_n directly
};

/// Exchange coupling J/2pi (Hz) for a coupled-line coupler.
inline double j_mtl(const CoupledPairGeometry& g, JFormula form = JFormula::Expanded, Diagnostics* diag = nullptr) {
  const auto& c = g.mtl();
  if (c.cm_over_c == 0.0 || c.len_c == 0.0) return 0.0;
  const double wr = angular(g.f_r()), wp = angular(g.f_p());
  const double wn = angular(notch_frequency(g));
  const double wbar = 0.5 * (wr + wp);
  if (std::abs(wn - wbar) <= 1e-9 * wbar)
    throw NumericalError("j_mtl: notch is degenerate with the mean resonator frequency");
  if (std::abs(wr - wp) > 0.1 * wn)
    note(diag, "readout/filter detuning exceeds 10% of the notch frequency; expansion is inaccurate");

  if (form == JFormula::Expanded) {
    const double x = wbar / wn - wn / wbar;
    const double cs = std::cos(kPi * wn / (2.0 * wbar));
    if (cs == 0.0) throw NumericalError("j_mtl: degenerate notch");
    const double j = wbar * kPi * kPi / 32.0 * x * x * x / (cs * cs) * c.cm_over_c *
                     std::sin(wn * c.len_c / g.line.v);
    return ordinary(j);
  }

  const NotchLC n = notch_branch(g);
  const double zr = 4.0 * g.line.z0 / kPi;
  const double s = std::sqrt(wr * wp);
  const double j = zr / (2.0 * n.impedance()) * s * (s / wn - wn / s);
  return ordinary(j);
}

/// Same formula written directly in terms of lumped elements (for pairs not
/// derived from a geometry). Returns J/2pi in Hz.
inline double j_lumped(const LumpedPair& pair) {
  const double wr = angular(pair.readout.frequency()), wp = angular(pair.filter.frequency());
  const double zrzp = pair.readout.impedance() * pair.filter.impedance();
  if (const auto* cap = std::get_if<EquivCap>(&pair.coupler))
    return ordinary(0.5 * std::sqrt(zrzp) * wr * wp * cap->c_j_eff);
  const auto& n = std::get<NotchLC>(pair.coupler);
  const double wn = angular(n.frequency());
  const double s = std::sqrt(wr * wp);
  return ordinary(std::sqrt(zrzp) / (2.0 * n.impedance()) * s * (s / wn - wn / s));
}

struct TwoPortZ {
  cplx z11, z22, z21;
};

/// Coupled-mode frequencies (Hz) of the lumped pair: the poles of its
/// impedance matrix, from the 2x2 nodal eigenproblem.
inline std::array<double, 2> lumped_mode_frequencies(const LumpedPair& pair) {
  double cc = 0.0, il = 0.0;
  if (const auto* cap = std::get_if<EquivCap>(&pair.coupler)) {
    cc = cap->c_j_eff;
  } else {
    const auto& n = std::get<NotchLC>(pair.coupler);
    cc = n.c_n;
    il = 1.0 / n.l_n;
  }
  // det(K - w^2 C) = 0 with C = [[Cr+cc, -cc], [-cc, Cp+cc]], K = [[1/Lr+il, -il], [-il, 1/Lp+il]].
  const double c11 = pair.readout.c + cc, c22 = pair.filter.c + cc, c12 = -cc;
  const double k11 = 1.0 / pair.readout.l + il, k22 = 1.0 / pair.filter.l + il, k12 = -il;
  const double a = c11 * c22 - c12 * c12;
  const double b = -(k11 * c22 + k22 * c11 - 2.0 * k12 * c12);
  const double cq = k11 * k22 - k12 * k12;
  const double disc = std::sqrt(std::max(0.0, b * b - 4.0 * a * cq));
  const double w2a = (-b - disc) / (2.0 * a), w2b = (-b + disc) / (2.0 * a);
  return {ordinary(std::sqrt(w2a)), ordinary(std::sqrt(w2b))};
}

/// Two-port impedance matrix of the lumped pair by nodal analysis.
inline TwoPortZ z_matrix_lumped(const LumpedPair& pair, double f, const EvalOptions& opt = {}) {
  detail::require(f > 0.0, "frequency must be positive");
  for (double fm : lumped_mode_frequencies(pair))
    if (std::abs(f - fm) < opt.pole_guard_hz) throw PoleError("lumped", f);
  const cplx yr = pair.readout.admittance(f), yp = pair.filter.admittance(f);
  const cplx yc = branch_admittance(pair.coupler, f);
  const cplx det = (yr + yc) * (yp + yc) - yc * yc;
  return {(yp + yc) / det, (yr + yc) / det, yc / det};
}

inline cplx z21_lumped(const LumpedPair& pair, double f, const EvalOptions& opt = {}) {
  return z_matrix_lumped(pair, f, opt).z21;
}

}  // namespace notchlab
