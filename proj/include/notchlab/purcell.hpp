#pragma once

// Purcell-limited qubit relaxation through the readout/filter network and the
// enhancement provided by the notch.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "notchlab/equiv.hpp"

namespace notchlab {

struct QubitCoupling {
  double c_q = 90e-15;   // qubit shunt capacitance (F)
  double c_qr = 0.0;     // qubit-readout coupling capacitance (F)
  double c_ext = 0.0;    // filter-line coupling capacitance (F)
  double z0_line = 50.0; // ohm
  double f_q = 0.0;      // Hz

  void validate() const {
    detail::require_positive(c_q, "c_q");
    detail::require_positive(c_qr, "c_qr");
    detail::require_positive(c_ext, "c_ext");
    detail::require_positive(z0_line, "z0_line");
    detail::require_positive(f_q, "f_q");
  }
};

/// Parallel LC shunt to ground at the readout node.
struct ShuntLC {
  double c_shunt = 0.0;  // F
  double l_shunt = 0.0;  // H

  double screening_frequency() const { return 1.0 / (kTwoPi * std::sqrt(l_shunt * c_shunt)); }
  cplx admittance(double f) const {
    const double w = angular(f);
    return -kI / (w * l_shunt) + kI * w * c_shunt;
  }
  /// Infinite (as a large real) exactly at the screening frequency.
  cplx impedance(double f) const {
    const cplx y = admittance(f);
    return std::abs(y) > 0.0 ? 1.0 / y : cplx{std::numeric_limits<double>::max(), 0.0};
  }
  void validate() const {
    detail::require_positive(c_shunt, "shunt.c_f");
    detail::require_positive(l_shunt, "shunt.l_h");
  }
};

/// Re Y_in seen by the qubit through C_qr, the lossless two-port and C_ext
/// into the line. With a shunt, Z_ext and Z_0 are replaced by their values
/// loaded by the shunt impedance.
inline double re_input_admittance(const TwoPortZ& z, double f, const QubitCoupling& q,
                                  const std::optional<ShuntLC>& shunt = std::nullopt, Diagnostics* diag = nullptr) {
  if (!(f > 0.0)) throw DomainError("re_input_admittance: frequency must be positive");
  const double w = angular(f);
  const cplx z_qr = -kI / (w * q.c_qr);
  cplx z_ext = -kI / (w * q.c_ext);
  double z0 = q.z0_line;
  if (shunt) {
    // Z_ext += Zs/(1+|Zs/Z0|^2), Z0 -> Z0/(1+|Z0/Zs|^2), written via Ys = 1/Zs.
    const cplx ys = shunt->admittance(f);
    const double zy2 = std::norm(q.z0_line * ys);
    z_ext += q.z0_line * q.z0_line * std::conj(ys) / (zy2 + 1.0);
    z0 = q.z0_line / (1.0 + zy2);
  }
  if (std::abs(z.z21) > 0.1 * std::min(std::abs(z.z11), std::abs(z.z22)))
    note(diag, "|Z21| is not small against Z11, Z22; admittance formula is approximate");
  return z0 * std::norm(z.z21) / std::norm((z.z11 + z_qr) * (z.z22 + z_ext + z0));
}

struct T1Result {
  double seconds = 0.0;
  bool notch_limited = false;  // transfer impedance vanishes: relaxation channel closed
};

using TwoPortFn = std::function<TwoPortZ(double)>;

inline T1Result t1_purcell(const TwoPortFn& network, const QubitCoupling& q,
                           const std::optional<ShuntLC>& shunt = std::nullopt, Diagnostics* diag = nullptr) {
  q.validate();
  const TwoPortZ z = network(q.f_q);
  if (std::norm(z.z21) <= 1e-24 * std::abs(z.z11 * z.z22))
    return {std::numeric_limits<double>::infinity(), true};
  const double re_y = re_input_admittance(z, q.f_q, q, shunt, diag);
  if (re_y == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {q.c_q / re_y, false};
}

inline T1Result t1_purcell(const LumpedPair& pair, const QubitCoupling& q,
                           const std::optional<ShuntLC>& shunt = std::nullopt, Diagnostics* diag = nullptr) {
  return t1_purcell([&pair](double f) { return z_matrix_lumped(pair, f); }, q, shunt, diag);
}

/// Geometry-direct network: Z21 from the distributed solution, Z11 and Z22
/// from the lumped images (coupler-independent at weak coupling).
inline T1Result t1_purcell(const CoupledPairGeometry& g, const QubitCoupling& q,
                           const std::optional<ShuntLC>& shunt = std::nullopt, Diagnostics* diag = nullptr) {
  const LumpedPair bare{map_resonator(g.readout_length(), g.line), map_resonator(g.filter_length(), g.line),
                        EquivCap{0.0}};
  auto net = [&](double f) {
    TwoPortZ z = z_matrix_lumped(bare, f);
    z.z21 = z21(g, f);
    return z;
  };
  return t1_purcell(net, q, shunt, diag);
}

/// Ratio of MTL to capacitive Purcell-limited T1 at equal J,
/// xi = 1/4 (w_q/D_qn)^2 (1 - w_n^2/wbar^2)^2. Infinite at the notch.
inline double enhancement_factor(double f_q, double f_n, double f_bar, Diagnostics* diag = nullptr) {
  detail::require_positive(f_q, "f_q");
  detail::require_positive(f_n, "f_n");
  detail::require_positive(f_bar, "f_bar");
  const double d = f_q - f_n;
  if (std::abs(d) > 0.2 * f_n) note(diag, "qubit-notch detuning exceeds 20% of the notch frequency");
  if (d == 0.0) return std::numeric_limits<double>::infinity();
  const double b = 1.0 - (f_n * f_n) / (f_bar * f_bar);
  return 0.25 * (f_q * f_q) / (d * d) * b * b;
}

/// Bandwidth (Hz) around the notch over which the enhancement is at least xi.
inline double enhancement_bandwidth(double xi_target, double f_n, double f_bar) {
  detail::require_positive(xi_target, "xi_target");
  return f_n / std::sqrt(xi_target) * std::abs(1.0 - (f_n * f_n) / (f_bar * f_bar));
}

/// Lumped pair with characteristic impedance z_res per resonator and
/// frequencies f_r, f_p. With f_n set, the coupler is a notch branch sized for
/// exchange coupling j_hz, otherwise a capacitor giving the same J.
inline LumpedPair pair_from_frequencies(double f_r, double f_p, double j_hz, std::optional<double> f_n,
                                        double z_res = 4.0 * 66.0 / kPi) {
  detail::require_positive(f_r, "f_r");
  detail::require_positive(f_p, "f_p");
  detail::require_positive(j_hz, "j");
  detail::require_positive(z_res, "z_res");
  const double wr = angular(f_r), wp = angular(f_p), j = angular(j_hz);
  LumpedPair p{{1.0 / (wr * z_res), z_res / wr}, {1.0 / (wp * z_res), z_res / wp}, EquivCap{}};
  if (f_n) {
    const double wn = angular(*f_n);
    const double s = std::sqrt(wr * wp);
    const double zn = z_res / (2.0 * j) * s * (s / wn - wn / s);
    if (!(zn > 0.0)) throw DomainError("pair_from_frequencies: notch must lie below the resonator pair");
    p.coupler = NotchLC{1.0 / (wn * zn), zn / wn};
  } else {
    p.coupler = EquivCap{2.0 * j / (z_res * wr * wp)};
  }
  return p;
}

/// C_qr giving qubit-readout coupling g (Hz): g = C_qr sqrt(w_q w_r) / (2 sqrt(C_q C_r)).
inline double coupling_capacitance_from_g(double g_hz, double f_q, double c_q, const LumpedResonator& readout) {
  detail::require_positive(g_hz, "g");
  return 2.0 * g_hz * std::sqrt(c_q * readout.c) / std::sqrt(f_q * readout.frequency());
}

/// C_ext giving external linewidth kappa (Hz) of the filter into line z0:
/// kappa = w_p^2 C_ext^2 z0 / C_p.
inline double ext_capacitance_from_linewidth(double kappa_hz, const LumpedResonator& filter, double z0) {
  detail::require_positive(kappa_hz, "kappa");
  const double wp = angular(filter.frequency());
  return std::sqrt(angular(kappa_hz) * filter.c / (z0 * wp * wp));
}

}  // namespace notchlab
