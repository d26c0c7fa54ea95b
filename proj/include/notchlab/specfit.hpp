#pragma once

// Reflection-phase model of the multiplexed readout and a joint least-squares
// fit of the all-g / all-e spectra to the bare channel parameters.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "notchlab/mux.hpp"

namespace notchlab {

struct PhaseSpectrum {
  std::vector<double> f;      // Hz, strictly increasing
  std::vector<double> phase;  // rad
  bool excited = false;       // all qubits in e

  void validate() const {
    detail::require(f.size() == phase.size(), "spectrum: frequency and phase lengths differ");
    detail::require(!f.empty(), "spectrum is empty");
    for (std::size_t i = 0; i < f.size(); ++i) {
      detail::require(f[i] > 0.0, "spectrum: frequencies must be positive");
      detail::require(i == 0 || f[i] > f[i - 1], "spectrum: frequencies must be strictly increasing");
      detail::require(std::isfinite(phase[i]), "spectrum: phase must be finite");
    }
  }
};

inline JointState uniform_state(std::size_t n, bool excited) {
  return JointState(n, excited ? QubitState::e : QubitState::g);
}

/// arg(Gamma_incident) + theta0 - w tau. Only the arg term is wrapped.
inline double model_phase(const MuxNetwork& net, const JointState& state, double theta0, double tau, double f) {
  detail::require(f > 0.0, "model_phase: frequency must be positive");
  return std::arg(gamma_incident(net, state, f)) + theta0 - angular(f) * tau;
}

/// Net phase winding (rad) of the model across a grid, by unwrapping.
inline double phase_winding(const MuxNetwork& net, const JointState& state, const std::vector<double>& grid) {
  double total = 0.0;
  double prev = model_phase(net, state, 0.0, 0.0, grid.at(0));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = model_phase(net, state, 0.0, 0.0, grid[i]);
    total += detail::wrap_phase(cur - prev);
    prev = cur;
  }
  return total;
}

inline PhaseSpectrum synth_spectrum(const MuxNetwork& net, bool excited, double theta0, double tau,
                                    const std::vector<double>& grid, double noise_sd, std::uint64_t seed) {
  detail::require_nonnegative(noise_sd, "noise_sd");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd > 0.0 ? noise_sd : 1.0);
  PhaseSpectrum s;
  s.excited = excited;
  const JointState st = uniform_state(net.size(), excited);
  for (double f : grid) {
    double ph = model_phase(net, st, theta0, tau, f);
    if (noise_sd > 0.0) ph += noise(rng);
    s.f.push_back(f);
    s.phase.push_back(detail::wrap_phase(ph));
  }
  s.validate();
  return s;
}

/// Per-channel parameter slots, in optimizer order.
enum class FitParam { f_r_g, f_p, j, kappa_p, chi, gamma_r, gamma_p };
inline constexpr int kParamsPerChannel = 7;

struct FitConfig {
  MuxNetwork guess;
  double theta0 = 0.0;  // rad
  double tau = 0.0;     // s
  /// free[channel][slot]; empty means the default mask (internal losses fixed).
  std::vector<std::array<bool, kParamsPerChannel>> free;
  bool fit_theta0 = true;
  bool fit_tau = true;
  double tol = 1e-12;
  int max_evaluations = 20000;
};

struct FitResult {
  MuxNetwork net;
  double theta0 = 0.0;
  double tau = 0.0;
  /// Standard errors in SI units; NaN for fixed or unidentifiable parameters.
  std::vector<std::array<double, kParamsPerChannel>> std_errors;
  double se_theta0 = std::numeric_limits<double>::quiet_NaN();
  double se_tau = std::numeric_limits<double>::quiet_NaN();
  double residual = 0.0;      // root-mean-square circular residual, rad
  bool converged = false;
  bool chi_identified = true; // false when only the g spectrum was given
  Diagnostics warnings;
};

namespace detail {

// Optimizer scaling: frequencies in GHz, rates in MHz, tau in ns.
inline double slot_scale(int slot) { return slot <= 1 ? 1e9 : 1e6; }

inline double& slot_ref(ReadoutChannel& c, int slot) {
  switch (static_cast<FitParam>(slot)) {
    case FitParam::f_r_g: return c.f_r_g;
    case FitParam::f_p: return c.f_p;
    case FitParam::j: return c.j;
    case FitParam::kappa_p: return c.kappa_p;
    case FitParam::chi: return c.chi;
    case FitParam::gamma_r: return c.gamma_r;
    default: return c.gamma_p;
  }
}

inline double slot_get(ReadoutChannel c, int slot) { return slot_ref(c, slot); }

struct FitProblem {
  const PhaseSpectrum* g;
  const PhaseSpectrum* e;  // may be null
  MuxNetwork base;
  double theta0, tau;
  struct Slot {
    int channel;  // -1: theta0, -2: tau
    int slot;
  };
  std::vector<Slot> slots;

  int n_values() const { return static_cast<int>(g->f.size() + (e ? e->f.size() : 0)); }

  void unpack(const Eigen::VectorXd& x, MuxNetwork& net, double& th, double& ta) const {
    net = base;
    th = theta0;
    ta = tau;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto& s = slots[i];
      const double v = x(static_cast<Eigen::Index>(i));
      if (s.channel == -1)
        th = v;
      else if (s.channel == -2)
        ta = v * 1e-9;
      else
        slot_ref(net.channels[static_cast<std::size_t>(s.channel)], s.slot) = v * slot_scale(s.slot);
    }
    // Rates enter squared or as magnitudes; keep the model defined for any sign.
    for (auto& c : net.channels) {
      c.kappa_p = std::abs(c.kappa_p);
      c.j = std::abs(c.j);
      c.gamma_r = std::abs(c.gamma_r);
      c.gamma_p = std::abs(c.gamma_p);
    }
  }

  Eigen::VectorXd pack(const MuxNetwork& net, double th, double ta) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(slots.size()));
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto& s = slots[i];
      double v;
      if (s.channel == -1)
        v = th;
      else if (s.channel == -2)
        v = ta * 1e9;
      else
        v = slot_get(net.channels[static_cast<std::size_t>(s.channel)], s.slot) / slot_scale(s.slot);
      x(static_cast<Eigen::Index>(i)) = v;
    }
    return x;
  }

  void residuals(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    MuxNetwork net;
    double th, ta;
    unpack(x, net, th, ta);
    Eigen::Index k = 0;
    for (const PhaseSpectrum* sp : {g, e}) {
      if (!sp) continue;
      const JointState st = uniform_state(net.size(), sp->excited);
      for (std::size_t i = 0; i < sp->f.size(); ++i) {
        double model;
        try {
          model = model_phase(net, st, th, ta, sp->f[i]);
        } catch (const NumericalError&) {
          model = sp->phase[i] + kPi;  // maximal circular residual at a composition pole
        }
        r(k++) = wrap_phase(sp->phase[i] - model);
      }
    }
  }
};

struct LmFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const FitProblem* prob;
  int inputs() const { return static_cast<int>(prob->slots.size()); }
  int values() const { return prob->n_values(); }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    prob->residuals(x, r);
    return 0;
  }
};

inline double cost(const FitProblem& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd r(p.n_values());
  p.residuals(x, r);
  return r.squaredNorm();
}

/// Plain Nelder-Mead on the sum of squares; used to escape an LM stall.
inline Eigen::VectorXd nelder_mead(const FitProblem& p, Eigen::VectorXd x0, int max_iter, double step) {
  const auto n = x0.size();
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> val(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)](i) += step;
  for (std::size_t i = 0; i < pts.size(); ++i) val[i] = cost(p, pts[i]);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<std::size_t> idx(pts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    const std::size_t best = idx.front(), worst = idx.back(), second = idx[idx.size() - 2];
    if (std::abs(val[worst] - val[best]) <= 1e-14 * (1.0 + std::abs(val[best]))) break;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i != worst) c += pts[i];
    c /= static_cast<double>(n);
    const Eigen::VectorXd xr = c + (c - pts[worst]);
    const double fr = cost(p, xr);
    if (fr < val[best]) {
      const Eigen::VectorXd xe = c + 2.0 * (c - pts[worst]);
      const double fe = cost(p, xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
    } else if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
    } else {
      const Eigen::VectorXd xc = c + 0.5 * (pts[worst] - c);
      const double fc = cost(p, xc);
      if (fc < val[worst]) {
        pts[worst] = xc;
        val[worst] = fc;
      } else {
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
          val[i] = cost(p, pts[i]);
        }
      }
    }
  }
  const auto it = std::min_element(val.begin(), val.end());
  return pts[static_cast<std::size_t>(it - val.begin())];
}

}  // namespace detail

/// Joint fit of the g and (optional) e phase spectra. Without an e spectrum
/// the dispersive shifts are held at the guess and reported unidentified.
inline FitResult fit_reflection(const PhaseSpectrum& spec_g, const PhaseSpectrum* spec_e, const FitConfig& cfg) {
  spec_g.validate();
  detail::require(!spec_g.excited, "fit_reflection: first spectrum must be the all-g spectrum");
  if (spec_e) {
    spec_e->validate();
    detail::require(spec_e->excited, "fit_reflection: second spectrum must be the all-e spectrum");
  }
  cfg.guess.validate();
  detail::require_positive(cfg.tol, "tol");
  detail::require(cfg.max_evaluations > 0, "max_evaluations must be positive");
  const std::size_t n = cfg.guess.size();
  detail::require(cfg.free.empty() || cfg.free.size() == n, "fit mask must have one row per channel");

  detail::FitProblem prob{&spec_g, spec_e, cfg.guess, cfg.theta0, cfg.tau, {}};
  for (std::size_t c = 0; c < n; ++c)
    for (int s = 0; s < kParamsPerChannel; ++s) {
      bool on = cfg.free.empty() ? s <= static_cast<int>(FitParam::chi) : cfg.free[c][static_cast<std::size_t>(s)];
      if (s == static_cast<int>(FitParam::chi) && !spec_e) on = false;
      if (on) prob.slots.push_back({static_cast<int>(c), s});
    }
  if (cfg.fit_theta0) prob.slots.push_back({-1, 0});
  if (cfg.fit_tau) prob.slots.push_back({-2, 0});
  detail::require(!prob.slots.empty(), "fit_reflection: no free parameters");
  detail::require(prob.n_values() > static_cast<int>(prob.slots.size()),
                  "fit_reflection: fewer data points than free parameters");

  Eigen::VectorXd x = prob.pack(cfg.guess, cfg.theta0, cfg.tau);
  if (cfg.fit_theta0) {
    // A delay error rotates every point by roughly the same angle; absorb it
    // into the offset first so the optimizer does not start near the branch cut.
    Eigen::VectorXd r0(prob.n_values());
    prob.residuals(x, r0);
    cplx acc{};
    for (Eigen::Index i = 0; i < r0.size(); ++i) acc += std::polar(1.0, r0(i));
    if (std::abs(acc) > 0.0) x(static_cast<Eigen::Index>(prob.slots.size()) - (cfg.fit_tau ? 2 : 1)) += std::arg(acc);
  }
  detail::LmFunctor fn{&prob};
  Eigen::NumericalDiff<detail::LmFunctor> nd(fn);
  auto run_lm = [&](Eigen::VectorXd& xv) {
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::LmFunctor>> lm(nd);
    lm.parameters.ftol = cfg.tol;
    lm.parameters.xtol = cfg.tol;
    lm.parameters.maxfev = cfg.max_evaluations;
    lm.parameters.factor = 1.0;  // the default initial step lets a good guess jump to another basin
    return lm.minimize(xv);
  };
  auto status = run_lm(x);
  using Status = Eigen::LevenbergMarquardtSpace::Status;
  auto ok = [](Status s) {
    return s == Status::RelativeReductionTooSmall || s == Status::RelativeErrorTooSmall ||
           s == Status::RelativeErrorAndReductionTooSmall || s == Status::CosinusTooSmall ||
           s == Status::FtolTooSmall || s == Status::XtolTooSmall || s == Status::GtolTooSmall;
  };
  FitResult res;
  if (!ok(status)) {
    note(&res.warnings, "Levenberg-Marquardt stalled; restarting from a Nelder-Mead polish");
    x = detail::nelder_mead(prob, x, 20 * static_cast<int>(x.size()) * 10, 1e-3);
    status = run_lm(x);
  }
  res.converged = ok(status);
  if (!res.converged) note(&res.warnings, "fit did not converge; returning best parameters found");

  prob.unpack(x, res.net, res.theta0, res.tau);
  Eigen::VectorXd r(prob.n_values());
  prob.residuals(x, r);
  res.residual = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
  res.chi_identified = spec_e != nullptr;

  // Standard errors from a central-difference Jacobian of the residuals.
  const auto m = x.size();
  Eigen::MatrixXd jac(r.size(), m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd xp = x, xm = x, rp(r.size()), rm(r.size());
    xp(i) += h;
    xm(i) -= h;
    prob.residuals(xp, rp);
    prob.residuals(xm, rm);
    jac.col(i) = (rp - rm) / (2.0 * h);
  }
  const double dof = static_cast<double>(r.size() - m);
  const double s2 = r.squaredNorm() / dof;
  Eigen::MatrixXd cov = (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse() * s2;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  res.std_errors.assign(n, {nan, nan, nan, nan, nan, nan, nan});
  for (std::size_t i = 0; i < prob.slots.size(); ++i) {
    const auto& s = prob.slots[i];
    const double se = std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))));
    if (s.channel == -1)
      res.se_theta0 = se;
    else if (s.channel == -2)
      res.se_tau = se * 1e-9;
    else
      res.std_errors[static_cast<std::size_t>(s.channel)][static_cast<std::size_t>(s.slot)] =
          se * detail::slot_scale(s.slot);
  }
  for (std::size_t i = 0; i < prob.slots.size(); ++i) {
    const auto& s = prob.slots[i];
    if (s.channel < 0) continue;
    const int sl = s.slot;
    if ((sl == static_cast<int>(FitParam::j) || sl == static_cast<int>(FitParam::kappa_p)) &&
        std::abs(x(static_cast<Eigen::Index>(i))) < 1e-6)
      note(&res.warnings, "channel " + res.net.channels[static_cast<std::size_t>(s.channel)].name +
                              ": parameter at its lower bound (zero)");
  }
  return res;
}

}  // namespace notchlab
