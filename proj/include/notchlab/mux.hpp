#pragma once

// Semi-classical model of N readout/filter resonator pairs sharing one
// readout node with a parallel LC shunt: steady-state reflection, coherent
// field dynamics, normal modes and noise-photon dephasing bounds.
//
// Conventions
//  * Public frequencies, linewidths and couplings are ordinary (Hz).
//  * Frequency-domain reflection coefficients use the engineering e^{+iwt}
//    phasor convention. The coupled-mode equations are written in the
//    input-output convention; the conversion is a complex conjugation done
//    once, inside gamma_filter and system_matrix.
//  * Time-domain amplitudes are in the frame rotating at the drive carrier,
//    mode amplitudes in sqrt(photons), fields in sqrt(photons/s).

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "notchlab/purcell.hpp"

namespace notchlab {

enum class QubitState { g, e };

using JointState = std::vector<QubitState>;

inline JointState parse_joint_state(const std::string& s) {
  JointState out;
  for (char c : s) {
    if (c == 'g' || c == 'G')
      out.push_back(QubitState::g);
    else if (c == 'e' || c == 'E')
      out.push_back(QubitState::e);
    else
      throw DomainError("joint state must be a string over {g, e}, got '" + s + "'");
  }
  return out;
}

inline std::string to_string(const JointState& s) {
  std::string out;
  for (auto q : s) out.push_back(q == QubitState::g ? 'g' : 'e');
  return out;
}

struct ReadoutChannel {
  std::string name;
  double f_r_g = 0.0;     // bare readout frequency, qubit in g
  double chi = 0.0;       // dispersive shift; f_r_e = f_r_g + 2 chi
  double f_p = 0.0;       // bare filter frequency
  double j = 0.0;         // readout-filter exchange coupling
  double kappa_p = 0.0;   // filter external linewidth
  double gamma_r = 0.0;   // internal linewidths
  double gamma_p = 0.0;

  double f_r(QubitState s) const { return s == QubitState::g ? f_r_g : f_r_g + 2.0 * chi; }

  void validate() const {
    detail::require_positive(f_r_g, "channel " + name + ": f_r_g");
    detail::require_positive(f_p, "channel " + name + ": f_p");
    detail::require_positive(kappa_p, "channel " + name + ": kappa_p");
    detail::require_nonnegative(j, "channel " + name + ": j");
    detail::require_nonnegative(gamma_r, "channel " + name + ": gamma_r");
    detail::require_nonnegative(gamma_p, "channel " + name + ": gamma_p");
    detail::require(std::isfinite(chi), "channel " + name + ": chi must be finite");
  }
};

/// Qubit parameters attached to a channel (used for critical photon numbers).
struct QubitInfo {
  double f_q = 0.0;
  double g = 0.0;
  double alpha = 0.0;
  std::optional<double> c_q;
};

struct MuxNetwork {
  std::vector<ReadoutChannel> channels;
  std::optional<ShuntLC> shunt;  // absent: ideal open node (Gamma_shunt = 1)
  double z0_line = 50.0;
  std::vector<std::optional<QubitInfo>> qubits;

  std::size_t size() const { return channels.size(); }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (channels[i].name == name) return i;
    throw DomainError("unknown channel '" + name + "'");
  }

  void validate() const {
    detail::require(!channels.empty() && channels.size() <= 8, "network must have 1 to 8 channels");
    std::set<std::string> names;
    for (const auto& c : channels) {
      c.validate();
      detail::require(names.insert(c.name).second, "duplicate channel name '" + c.name + "'");
    }
    detail::require_positive(z0_line, "z0_line");
    if (shunt) shunt->validate();
    detail::require(qubits.empty() || qubits.size() == channels.size(), "qubit list must match channel list");
  }

  void check_state(const JointState& s) const {
    detail::require(s.size() == channels.size(), "joint state length must equal the channel count");
  }

  JointState ground() const { return JointState(channels.size(), QubitState::g); }
  JointState excited(std::size_t target) const {
    JointState s = ground();
    s.at(target) = QubitState::e;
    return s;
  }
};

// ---------------------------------------------------------------------------
// Frequency domain

/// Reflection off the parallel-LC shunt, (Z_sh - Z0)/(Z_sh + Z0).
inline cplx shunt_reflection(const ShuntLC& shunt, double z0, double f) {
  detail::require(f > 0.0, "shunt_reflection: frequency must be positive");
  const double w = angular(f);
  // Written through the admittance so the screening resonance (Y = 0) is finite.
  const cplx y = -kI / (w * shunt.l_shunt) + kI * w * shunt.c_shunt;
  return (1.0 - z0 * y) / (1.0 + z0 * y);
}

inline cplx shunt_reflection(const MuxNetwork& net, double f) {
  return net.shunt ? shunt_reflection(*net.shunt, net.z0_line, f) : cplx{1.0, 0.0};
}

namespace detail {

// Filter reflection in the input-output convention. Rates may be in any
// consistent unit since the expression is homogeneous of degree zero.
inline cplx gamma_filter_io(const ReadoutChannel& ch, QubitState s, double f_d) {
  const double kp = ch.kappa_p;
  const double dpd = ch.f_p - f_d;
  if (ch.j == 0.0) return 1.0 - 2.0 * kp / (2.0 * kI * dpd + kp + ch.gamma_p);
  const double drd = ch.f_r(s) - f_d;
  const cplx num = 4.0 * kI * kp * (drd - kI * ch.gamma_r / 2.0);
  const cplx den = (2.0 * kI * dpd + kp + ch.gamma_p) * (2.0 * kI * drd + ch.gamma_r) + 4.0 * ch.j * ch.j;
  return 1.0 - num / den;
}

inline cplx admittance_ratio(cplx gamma) { return (1.0 - gamma) / (1.0 + gamma); }

}  // namespace detail

/// State-dependent reflection at one filter resonator (engineering convention).
inline cplx gamma_filter(const ReadoutChannel& ch, QubitState s, double f_d) {
  detail::require(f_d > 0.0, "gamma_filter: frequency must be positive");
  return std::conj(detail::gamma_filter_io(ch, s, f_d));
}

/// Reflection of a signal incident on the multiplexed device (engineering
/// convention): the normalised admittances of shunt and filters add.
inline cplx gamma_incident(const MuxNetwork& net, const JointState& state, double f_d) {
  net.check_state(state);
  detail::require(f_d > 0.0, "gamma_incident: frequency must be positive");
  cplx y = detail::admittance_ratio(shunt_reflection(net, f_d));
  for (std::size_t j = 0; j < net.size(); ++j) {
    const cplx gp = gamma_filter(net.channels[j], state[j], f_d);
    if (gp == cplx{-1.0, 0.0})
      throw NumericalError("gamma_incident: branch '" + net.channels[j].name + "' reflects -1 (composition pole)");
    y += detail::admittance_ratio(gp);
  }
  return (1.0 - y) / (1.0 + y);
}

// ---------------------------------------------------------------------------
// Coupled-mode equations

struct SystemMatrix {
  Eigen::MatrixXcd m;  // 2N x 2N, Hz, [[P, J], [J, R]]
  Eigen::VectorXcd d;  // 2N, drive coupling, sqrt(Hz): lower half zero
  cplx gamma_shunt;    // input-output convention, at the drive frequency
};

/// d/dt (p, r) = -i 2pi M (p, r) + sqrt(2pi) d s_in with M in Hz and d in sqrt(Hz).
/// f_d = 0 gives absolute frequencies. gamma_shunt_override replaces the
/// shunt reflection (input-output convention), e.g. 1 for normal modes.
inline SystemMatrix system_matrix(const MuxNetwork& net, const JointState& state, double f_d,
                                  std::optional<cplx> gamma_shunt_override = std::nullopt) {
  net.check_state(state);
  const auto n = static_cast<Eigen::Index>(net.size());
  const cplx gsh = gamma_shunt_override ? *gamma_shunt_override
                                        : (f_d > 0.0 ? std::conj(shunt_reflection(net, f_d)) : cplx{1.0, 0.0});
  SystemMatrix s{Eigen::MatrixXcd::Zero(2 * n, 2 * n), Eigen::VectorXcd::Zero(2 * n), gsh};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ci = net.channels[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& ck = net.channels[static_cast<std::size_t>(k)];
      s.m(i, k) = -kI * std::sqrt(ci.kappa_p * ck.kappa_p) / 4.0 * (1.0 + gsh);
    }
    s.m(i, i) += (ci.f_p - f_d) - kI * ci.gamma_p / 2.0;
    s.m(i, n + i) = ci.j;
    s.m(n + i, i) = ci.j;
    s.m(n + i, n + i) = (ci.f_r(state[static_cast<std::size_t>(i)]) - f_d) - kI * ci.gamma_r / 2.0;
    s.d(i) = (1.0 + gsh) / 2.0 * std::sqrt(ci.kappa_p);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Drive pulses

enum class EdgeShape { Flat, RaisedCosine };

/// One envelope segment. Flat segments hold `end`; raised-cosine segments
/// move from `start` to `end` along (1 - cos(pi t/T))/2.
struct PulseSegment {
  double duration = 0.0;  // s
  cplx start{};
  cplx end{};
  EdgeShape shape = EdgeShape::Flat;

  cplx at(double t) const {
    if (shape == EdgeShape::Flat) return end;
    const double x = 0.5 * (1.0 - std::cos(kPi * std::clamp(t / duration, 0.0, 1.0)));
    return start + (end - start) * x;
  }
};

struct DrivePulse {
  double f_d = 0.0;  // carrier, Hz
  std::vector<PulseSegment> segments;

  double duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }

  /// Envelope (sqrt(photons/s)) at time t; zero outside the pulse.
  cplx envelope(double t) const {
    double t0 = 0.0;
    for (const auto& s : segments) {
      if (t >= t0 && t < t0 + s.duration) return s.at(t - t0);
      t0 += s.duration;
    }
    return {};
  }

  /// Amplitude of the last flat segment with non-zero drive.
  cplx plateau_amplitude() const {
    for (auto it = segments.rbegin(); it != segments.rend(); ++it)
      if (it->shape == EdgeShape::Flat && std::abs(it->end) > 0.0) return it->end;
    return {};
  }

  void validate() const {
    detail::require(f_d > 0.0, "pulse carrier frequency must be positive");
    for (const auto& s : segments) {
      detail::require_positive(s.duration, "pulse segment duration");
      detail::require(std::isfinite(std::abs(s.start)) && std::isfinite(std::abs(s.end)),
                      "pulse envelope must be bounded");
    }
  }

  static DrivePulse rectangular(double f_d, cplx amplitude, double duration) {
    return {f_d, {{duration, amplitude, amplitude, EdgeShape::Flat}}};
  }

  /// Two-step readout pulse: raised-cosine rise to an overshoot level held for
  /// `flat_top`, raised-cosine step down to the plateau, plateau until
  /// `total` minus the final raised-cosine fall.
  static DrivePulse two_step(double f_d, cplx plateau, double total, double overshoot_ratio = 1.375,
                             double flat_top = 14e-9, double edge = 6e-9) {
    const double rest = total - flat_top - 3.0 * edge;
    detail::require(rest > 0.0, "two_step: total duration too short for the edges");
    const cplx top = plateau * overshoot_ratio;
    return {f_d,
            {{edge, {}, top, EdgeShape::RaisedCosine},
             {flat_top, top, top, EdgeShape::Flat},
             {edge, top, plateau, EdgeShape::RaisedCosine},
             {rest, plateau, plateau, EdgeShape::Flat},
             {edge, plateau, {}, EdgeShape::RaisedCosine}}};
  }
};

struct FieldTraces {
  std::vector<double> t;                  // s
  std::vector<std::vector<cplx>> p;       // [channel][sample], filter amplitudes
  std::vector<std::vector<cplx>> r;       // [channel][sample], readout amplitudes
  std::vector<cplx> s_in;
  std::vector<cplx> s_out;
};

struct PropagateOptions {
  double max_edge_step = 0.1e-9;          // sampling of raised-cosine edges
  std::optional<double> t_end;            // defaults to the pulse duration
  std::optional<cplx> gamma_shunt;        // override (input-output convention)
};

namespace detail {

struct Piece {
  double t0, t1;
  cplx amp;
};

inline std::vector<Piece> piecewise_constant(const DrivePulse& pulse, double max_edge_step) {
  std::vector<Piece> out;
  double t0 = 0.0;
  for (const auto& s : pulse.segments) {
    if (s.shape == EdgeShape::Flat) {
      out.push_back({t0, t0 + s.duration, s.end});
    } else {
      const int n = std::max(1, static_cast<int>(std::ceil(s.duration / max_edge_step - 1e-9)));
      const double h = s.duration / n;
      for (int k = 0; k < n; ++k) out.push_back({t0 + k * h, t0 + (k + 1) * h, s.at((k + 0.5) * h)});
    }
    t0 += s.duration;
  }
  return out;
}

}  // namespace detail

/// Largest growth rate (Hz, Im of eigenvalue) of a system matrix; positive means unstable.
inline double max_growth_rate(const Eigen::MatrixXcd& m) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  double g = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) g = std::max(g, es.eigenvalues()(k).imag());
  return g;
}

/// Steady-state mode amplitudes for constant drive s_in at the carrier.
inline Eigen::VectorXcd steady_state(const SystemMatrix& sys, cplx s_in) {
  // 0 = -i 2pi M x + sqrt(2pi) d s  ->  x = -i M^{-1} d s / sqrt(2pi)
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sys.m);
  return (-kI / std::sqrt(kTwoPi)) * lu.solve(sys.d * s_in);
}

/// Output field from filter amplitudes.
inline cplx output_field(const MuxNetwork& net, const SystemMatrix& sys, const Eigen::VectorXcd& x, cplx s_in) {
  cplx acc{};
  for (std::size_t j = 0; j < net.size(); ++j)
    acc += std::sqrt(kTwoPi * net.channels[j].kappa_p) * x(static_cast<Eigen::Index>(j));
  return sys.gamma_shunt * s_in - (1.0 + sys.gamma_shunt) / 2.0 * acc;
}

/// Integrate the coupled-mode equations from rest under the pulse. The
/// envelope is piecewise constant and each interval is advanced with the
/// exact matrix exponential.
inline FieldTraces propagate(const MuxNetwork& net, const JointState& state, const DrivePulse& pulse, double dt_out,
                             const PropagateOptions& opt = {}) {
  net.check_state(state);
  pulse.validate();
  detail::require_positive(dt_out, "dt_out");
  const SystemMatrix sys = system_matrix(net, state, pulse.f_d, opt.gamma_shunt);
  double kmax = 0.0;
  for (const auto& c : net.channels) kmax = std::max(kmax, c.kappa_p);
  if (max_growth_rate(sys.m) > 1e-6 * kmax) throw NumericalError("propagate: system matrix is not passive");

  const auto n2 = sys.m.rows();
  const Eigen::MatrixXcd a = (-kI * kTwoPi) * sys.m;       // rad/s
  const Eigen::VectorXcd u = steady_state(sys, 1.0);       // response to unit drive
  const double t_end = opt.t_end.value_or(pulse.duration());

  auto pieces = detail::piecewise_constant(pulse, opt.max_edge_step);
  // Breakpoints: union of piece boundaries and output instants.
  const auto n_out = static_cast<std::size_t>(std::floor(t_end / dt_out + 1e-9)) + 1;
  std::vector<double> marks;
  for (std::size_t k = 0; k < n_out; ++k) marks.push_back(static_cast<double>(k) * dt_out);
  for (const auto& p : pieces)
    if (p.t1 < t_end) marks.push_back(p.t1);
  std::sort(marks.begin(), marks.end());

  auto amp_at = [&pieces](double t) -> cplx {
    for (const auto& p : pieces)
      if (t >= p.t0 && t < p.t1) return p.amp;
    return {};
  };

  std::map<long long, Eigen::MatrixXcd> expm_cache;
  auto propagator = [&](double h) -> const Eigen::MatrixXcd& {
    const auto key = static_cast<long long>(std::llround(h * 1e18));
    auto it = expm_cache.find(key);
    if (it == expm_cache.end()) it = expm_cache.emplace(key, (a * h).exp()).first;
    return it->second;
  };

  FieldTraces tr;
  const std::size_t nch = net.size();
  tr.p.assign(nch, {});
  tr.r.assign(nch, {});
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n2);
  std::size_t next_out = 0;
  double t = 0.0;
  auto record = [&](double when) {
    const cplx s = amp_at(when);
    tr.t.push_back(when);
    for (std::size_t j = 0; j < nch; ++j) {
      tr.p[j].push_back(x(static_cast<Eigen::Index>(j)));
      tr.r[j].push_back(x(static_cast<Eigen::Index>(nch + j)));
    }
    tr.s_in.push_back(s);
    tr.s_out.push_back(output_field(net, sys, x, s));
  };
  for (double m : marks) {
    const double h = m - t;
    if (h > 1e-18) {
      const cplx s = amp_at(t + 0.5 * h);
      const Eigen::VectorXcd xss = u * s;
      x = xss + propagator(h) * (x - xss);
      t = m;
    }
    while (next_out < n_out && std::abs(static_cast<double>(next_out) * dt_out - t) < 1e-18 + 1e-12 * dt_out) {
      record(static_cast<double>(next_out) * dt_out);
      ++next_out;
    }
  }
  return tr;
}

struct SeparationResult {
  std::vector<double> t;
  std::vector<double> s;         // |s_out^e - s_out^g|
  std::vector<double> s_target;  // target-filter-only approximation
  double s_ss = 0.0;             // steady state at the plateau amplitude
  double gamma_m = 0.0;          // measurement-induced dephasing rate S_ss^2 / 2 (1/s)
};

/// Output-field separation for a drive targeting one channel; the two
/// propagations differ only in the state of the target qubit.
inline SeparationResult separation(const MuxNetwork& net, std::size_t target, const DrivePulse& pulse, double dt_out,
                                   const PropagateOptions& opt = {}) {
  detail::require(target < net.size(), "separation: target channel out of range");
  const JointState sg = net.ground(), se = net.excited(target);
  auto fut = std::async(std::launch::async, [&] { return propagate(net, se, pulse, dt_out, opt); });
  const FieldTraces g = propagate(net, sg, pulse, dt_out, opt);
  const FieldTraces e = fut.get();

  const SystemMatrix sys = system_matrix(net, sg, pulse.f_d, opt.gamma_shunt);
  const double pref = std::abs((1.0 + sys.gamma_shunt) / 2.0) * std::sqrt(kTwoPi * net.channels[target].kappa_p);
  SeparationResult out;
  out.t = g.t;
  for (std::size_t k = 0; k < g.t.size(); ++k) {
    out.s.push_back(std::abs(e.s_out[k] - g.s_out[k]));
    out.s_target.push_back(pref * std::abs(e.p[target][k] - g.p[target][k]));
  }
  const cplx a = pulse.plateau_amplitude();
  const SystemMatrix sys_e = system_matrix(net, se, pulse.f_d, opt.gamma_shunt);
  const cplx og = output_field(net, sys, steady_state(sys, a), a);
  const cplx oe = output_field(net, sys_e, steady_state(sys_e, a), a);
  out.s_ss = std::abs(oe - og);
  out.gamma_m = out.s_ss * out.s_ss / 2.0;
  return out;
}

// ---------------------------------------------------------------------------
// Normal modes

enum class ModeCharacter { ReadoutLike, FilterLike };

inline const char* to_string(ModeCharacter c) { return c == ModeCharacter::ReadoutLike ? "readout" : "filter"; }

struct NormalMode {
  std::size_t channel = 0;
  std::string channel_name;
  ModeCharacter character = ModeCharacter::ReadoutLike;
  double f_hz = 0.0;
  double kappa_hz = 0.0;
  double channel_weight = 0.0;  // eigenvector weight on the owning channel's (p, r)
  double readout_weight = 0.0;  // fraction of the channel weight on r
  cplx eigenvalue{};            // Hz, absolute frame
  std::vector<double> weights;  // eigenvector weight on every channel, sums to 1
};

/// Complex normal modes of the drive-free network with Gamma_shunt = 1, in
/// absolute frequency. Each channel owns two modes; the one with the larger
/// readout-resonator participation is readout-like. Sorted by channel, then
/// readout-like first.
inline std::vector<NormalMode> normal_modes(const MuxNetwork& net, const JointState& state,
                                            Diagnostics* diag = nullptr) {
  const SystemMatrix sys = system_matrix(net, state, 0.0, cplx{1.0, 0.0});
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(sys.m, true);
  if (es.info() != Eigen::Success) throw NumericalError("normal_modes: eigen-solve failed");
  const std::size_t n = net.size();
  const auto nm = static_cast<std::size_t>(sys.m.rows());

  // weight[k][j]: share of mode k's eigenvector on channel j.
  std::vector<std::vector<double>> weight(nm, std::vector<double>(n));
  std::vector<std::vector<double>> rweight(nm, std::vector<double>(n));
  for (std::size_t k = 0; k < nm; ++k) {
    const auto v = es.eigenvectors().col(static_cast<Eigen::Index>(k));
    const double tot = v.squaredNorm();
    for (std::size_t j = 0; j < n; ++j) {
      const double wp = std::norm(v(static_cast<Eigen::Index>(j)));
      const double wr = std::norm(v(static_cast<Eigen::Index>(n + j)));
      weight[k][j] = (wp + wr) / tot;
      rweight[k][j] = wr / std::max(wp + wr, 1e-300);
    }
  }

  // Greedy assignment by overlap, two modes per channel, ties by frequency proximity.
  struct Cand {
    double w, dist;
    std::size_t k, j;
  };
  std::vector<Cand> cands;
  for (std::size_t k = 0; k < nm; ++k)
    for (std::size_t j = 0; j < n; ++j) {
      const auto& c = net.channels[j];
      const double fk = es.eigenvalues()(static_cast<Eigen::Index>(k)).real();
      const double dist = std::min(std::abs(fk - c.f_p), std::abs(fk - c.f_r(state[j])));
      cands.push_back({weight[k][j], dist, k, j});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (std::abs(a.w - b.w) > 1e-12) return a.w > b.w;
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.k < b.k;
  });
  std::vector<int> owner(nm, -1);
  std::vector<int> load(n, 0);
  for (const auto& c : cands) {
    if (owner[c.k] >= 0 || load[c.j] >= 2) continue;
    owner[c.k] = static_cast<int>(c.j);
    ++load[c.j];
  }

  std::vector<NormalMode> modes;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::size_t> ks;
    for (std::size_t k = 0; k < nm; ++k)
      if (owner[k] == static_cast<int>(j)) ks.push_back(k);
    std::sort(ks.begin(), ks.end(), [&](std::size_t a, std::size_t b) { return rweight[a][j] > rweight[b][j]; });
    if (ks.size() == 2 && std::abs(rweight[ks[0]][j] - rweight[ks[1]][j]) < 0.02)
      note(diag, "channel " + net.channels[j].name + ": readout/filter character ambiguous (participations " +
                     std::to_string(rweight[ks[0]][j]) + ", " + std::to_string(rweight[ks[1]][j]) + ")");
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const std::size_t k = ks[i];
      if (weight[k][j] < 0.5)
        note(diag, "mode at " + std::to_string(es.eigenvalues()(static_cast<Eigen::Index>(k)).real()) +
                       " Hz is delocalised: channel overlap " + std::to_string(weight[k][j]));
      const cplx lam = es.eigenvalues()(static_cast<Eigen::Index>(k));
      modes.push_back({j, net.channels[j].name, i == 0 ? ModeCharacter::ReadoutLike : ModeCharacter::FilterLike,
                       lam.real(), -2.0 * lam.imag(), weight[k][j], rweight[k][j], lam, weight[k]});
    }
  }
  return modes;
}

inline const NormalMode& find_mode(const std::vector<NormalMode>& modes, std::size_t channel, ModeCharacter c) {
  for (const auto& m : modes)
    if (m.channel == channel && m.character == c) return m;
  throw NumericalError("normal mode not found for channel " + std::to_string(channel));
}

struct ModeShifts {
  double chi_r = 0.0;  // Hz
  double chi_p = 0.0;  // Hz
  /// Largest spectator-mode shift as a fraction of |chi_r|.
  double spectator_ratio = 0.0;
};

/// Normal-mode dispersive shifts (f_e - f_g)/2 from flipping only the target qubit.
inline ModeShifts mode_dispersive_shifts(const MuxNetwork& net, std::size_t target) {
  detail::require(target < net.size(), "mode_dispersive_shifts: target out of range");
  const auto mg = normal_modes(net, net.ground());
  const auto me = normal_modes(net, net.excited(target));
  ModeShifts out;
  out.chi_r = 0.5 * (find_mode(me, target, ModeCharacter::ReadoutLike).f_hz -
                     find_mode(mg, target, ModeCharacter::ReadoutLike).f_hz);
  out.chi_p = 0.5 * (find_mode(me, target, ModeCharacter::FilterLike).f_hz -
                     find_mode(mg, target, ModeCharacter::FilterLike).f_hz);
  double worst = 0.0;
  for (std::size_t j = 0; j < net.size(); ++j) {
    if (j == target) continue;
    for (auto c : {ModeCharacter::ReadoutLike, ModeCharacter::FilterLike})
      worst = std::max(worst, 0.5 * std::abs(find_mode(me, j, c).f_hz - find_mode(mg, j, c).f_hz));
  }
  out.spectator_ratio = out.chi_r != 0.0 ? worst / std::abs(out.chi_r) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Dephasing and photon numbers

/// Integral over f of |Gamma^e - Gamma^g|^2 (Hz) for the target qubit.
inline double state_distinguishability_integral(const MuxNetwork& net, std::size_t target) {
  detail::require(target < net.size(), "target out of range");
  const JointState sg = net.ground(), se = net.excited(target);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, kmax = 0.0;
  for (const auto& c : net.channels) {
    lo = std::min({lo, c.f_p, c.f_r_g, c.f_r(QubitState::e)});
    hi = std::max({hi, c.f_p, c.f_r_g, c.f_r(QubitState::e)});
    kmax = std::max({kmax, c.kappa_p, c.j});
  }
  lo = std::max(lo - 20.0 * kmax, 1.0);
  hi += 20.0 * kmax;
  auto integrand = [&](double f) { return std::norm(gamma_incident(net, se, f) - gamma_incident(net, sg, f)); };
  // Wide panels let the error estimate miss peaks, so cut at every resonance
  // and keep panels narrower than the sharpest feature.
  double width = kmax;
  for (const auto& c : net.channels) width = std::min({width, c.kappa_p, std::max(c.j, 1e3)});
  std::vector<double> cuts{lo, hi};
  for (const auto& c : net.channels)
    for (double f : {c.f_r_g, c.f_r(QubitState::e), c.f_p})
      if (f > lo && f < hi) cuts.push_back(f);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double span = cuts[i + 1] - cuts[i];
    if (span <= 0.0) continue;
    const int n = std::max(1, static_cast<int>(std::ceil(span / width)));
    for (int k = 0; k < n; ++k)
      total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          integrand, cuts[i] + span * k / n, cuts[i] + span * (k + 1) / n, 10, 1e-10);
  }
  return total;
}

/// Upper bound on the readout-resonator noise-photon number if all dephasing
/// (rate gamma_phi, 1/s) came from it: n = 2 Gamma_phi / integral.
inline double noise_photon_bound(const MuxNetwork& net, std::size_t target, double gamma_phi) {
  detail::require_nonnegative(gamma_phi, "gamma_phi");
  if (gamma_phi == 0.0) return 0.0;
  const double integral = state_distinguishability_integral(net, target);
  if (!(integral > 1e-30)) throw NumericalError("noise_photon_bound: state-dependent reflection vanishes");
  return 2.0 * gamma_phi / integral;
}

/// n_crit = ((f_r - f_q) / 2g)^2.
inline double critical_photon(double g, double f_q, double f_r) {
  detail::require(f_q != f_r, "critical_photon: qubit and resonator are degenerate");
  detail::require_nonnegative(g, "g");
  const double x = (f_r - f_q) / (2.0 * g);
  return x * x;
}

}  // namespace notchlab
