#pragma once

// Drive-power calibration from ac Stark shifts and readout error analytics:
// separation and coherence limits, conditional fidelities, single-shot IQ
// analysis with a logistic discriminator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "notchlab/mux.hpp"

namespace notchlab {

// ---------------------------------------------------------------------------
// Power calibration

/// Steady-state readout photon number from an ac Stark shift, n = D_ac / (2 chi).
inline double photons_from_stark(double delta_ac, double chi, Diagnostics* diag = nullptr) {
  if (chi == 0.0) throw DomainError("photons_from_stark: chi must be non-zero");
  const double n = delta_ac / (2.0 * chi);
  if (n < 0.0) note(diag, "Stark shift and dispersive shift have opposite signs; photon number is negative");
  return n;
}

struct IncidentDrive {
  cplx s_in{};    // sqrt(photons/s), input-output convention
  cplx p_in{};    // field incident on the target filter
  double power = 0.0;  // W
};

/// Invert the single-channel steady state: readout amplitude r (sqrt(photons))
/// -> filter input p_in -> device input s_in = p_in (1+G_p)/(1+G_inc), from
/// continuity of the node voltage.
inline IncidentDrive incident_from_resonator(const MuxNetwork& net, std::size_t channel, double f_d, cplx r_target,
                                             const JointState& state) {
  net.check_state(state);
  detail::require(channel < net.size(), "incident_from_resonator: channel out of range");
  detail::require(f_d > 0.0, "incident_from_resonator: drive frequency must be positive");
  const auto& c = net.channels[channel];
  if (r_target == cplx{}) return {};
  if (c.j == 0.0) throw NumericalError("incident_from_resonator: J = 0, readout resonator cannot be driven");
  const double dr = angular(c.f_r(state[channel]) - f_d), dp = angular(c.f_p - f_d);
  const double j = angular(c.j), kp = angular(c.kappa_p), gp = angular(c.gamma_p), gr = angular(c.gamma_r);
  const cplx p = kI * r_target * (kI * dr + gr / 2.0) / j;
  const cplx p_in = ((kI * dp + (kp + gp) / 2.0) * p + kI * j * r_target) / std::sqrt(kp);
  // Input-output convention reflection coefficients.
  const cplx g_inc = std::conj(gamma_incident(net, state, f_d));
  const cplx g_p = std::conj(gamma_filter(c, state[channel], f_d));
  if (std::abs(1.0 + g_inc) < 1e-14) throw NumericalError("incident_from_resonator: node voltage vanishes");
  if (std::abs(1.0 + g_p) < 1e-14) throw NumericalError("incident_from_resonator: filter branch shorts the node");
  IncidentDrive out;
  out.p_in = p_in;
  out.s_in = p_in * (1.0 + g_p) / (1.0 + g_inc);
  out.power = kHbar * angular(f_d) * std::norm(out.s_in);
  return out;
}

inline IncidentDrive incident_from_resonator(const MuxNetwork& net, std::size_t channel, double f_d, cplx r_target) {
  return incident_from_resonator(net, channel, f_d, r_target, net.ground());
}

struct LinearFit {
  double f_q = 0.0;  // intercept, Hz
  double k = 0.0;    // slope, Hz/W
  double se_f_q = 0.0;
  double se_k = 0.0;
};

/// Ordinary least squares f_q_ac = f_q + k P.
inline LinearFit stark_linear_fit(const std::vector<std::pair<double, double>>& points) {
  detail::require(points.size() >= 3, "stark_linear_fit: need at least 3 points");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = points[static_cast<std::size_t>(i)].first;
    y(i) = points[static_cast<std::size_t>(i)].second;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 2) throw NumericalError("stark_linear_fit: powers are all equal (rank deficient)");
  const Eigen::Vector2d beta = qr.solve(y);
  const double s2 = (y - a * beta).squaredNorm() / static_cast<double>(n - 2);
  const Eigen::Matrix2d cov = (a.transpose() * a).inverse() * s2;
  return {beta(0), beta(1), std::sqrt(cov(0, 0)), std::sqrt(cov(1, 1))};
}

/// T1 = 4P / (Omega^2 hbar w_d); omega_drive in Hz.
inline double t1_from_drive(double power, double omega_drive, double f_d) {
  detail::require_nonnegative(power, "power");
  detail::require_positive(omega_drive, "drive amplitude");
  detail::require_positive(f_d, "drive frequency");
  const double om = angular(omega_drive);
  return 4.0 * power / (om * om * kHbar * angular(f_d));
}

enum class RabiTransition { ge, ef };

/// Drive amplitude from a measured Rabi frequency; the e-f transition is sqrt(2) faster.
inline double rabi_to_omega(double f_rabi, RabiTransition t) {
  detail::require_nonnegative(f_rabi, "Rabi frequency");
  return t == RabiTransition::ge ? f_rabi : f_rabi / std::sqrt(2.0);
}

// ---------------------------------------------------------------------------
// Error budget

inline double separation_error(double snr) {
  detail::require(snr >= 0.0, "separation_error: SNR must be non-negative");
  if (std::isinf(snr)) return 0.0;
  return 0.5 * std::erfc(snr / std::sqrt(8.0));
}

struct CoherenceLimits {
  double eps_cl = 0.0;
  double eps_cl_q = 0.0;
};

inline CoherenceLimits coherence_limits(double tau_meas, double tau_buffer, double t1) {
  detail::require_positive(tau_meas, "tau_meas");
  detail::require_nonnegative(tau_buffer, "tau_buffer");
  detail::require(t1 > 0.0, "T1 must be positive");
  if (std::isinf(t1)) return {};
  return {tau_meas / (2.0 * t1), (tau_buffer + tau_meas) / (2.0 * t1)};
}

struct Interval {
  double lo = 0.0, hi = 1.0;
};

/// Wilson score interval for k successes in n trials (z = 1.96 default).
inline Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.96) {
  detail::require(n > 0 && k <= n, "wilson_interval: need 0 <= k <= n, n > 0");
  const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn;
  const double den = 1.0 + z * z / nn;
  const double mid = (p + z * z / (2.0 * nn)) / den;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / den;
  return {std::max(0.0, mid - half), std::min(1.0, mid + half)};
}

/// Outcome counts of the second measurement, conditioned on the first.
struct FidelityCounts {
  // Assignment sequence, first outcome g.
  std::uint64_t no_pi_g2 = 0, no_pi_e2 = 0;  // without pi pulse
  std::uint64_t pi_e2 = 0, pi_g2 = 0;        // with pi pulse
  // QND sequence.
  std::uint64_t qnd_no_pi_g2 = 0, qnd_no_pi_e2 = 0;  // first outcome g, no pi
  std::uint64_t qnd_pi_e2 = 0, qnd_pi_g2 = 0;        // first outcome e, pi
};

struct Fidelities {
  double f = 0.0, f_q = 0.0;
  Interval f_ci, f_q_ci;
  bool has_qnd = false;
};

/// F = [P0(g2|g1) + Ppi(e2|g1)]/2 and F_Q = [P0(g2|g1) + Ppi(e2|e1)]/2 from the
/// respective sequences, with Wilson intervals averaged term-wise.
inline Fidelities fidelities(const FidelityCounts& c) {
  auto cell = [](std::uint64_t ok, std::uint64_t bad, const char* name) {
    if (ok + bad == 0) throw DomainError(std::string("fidelities: empty condition cell ") + name);
    return std::pair{static_cast<double>(ok) / static_cast<double>(ok + bad), wilson_interval(ok, ok + bad)};
  };
  Fidelities out;
  const auto [p0, ci0] = cell(c.no_pi_g2, c.no_pi_e2, "P0(.|g1)");
  const auto [ppi, cipi] = cell(c.pi_e2, c.pi_g2, "Ppi(.|g1)");
  out.f = 0.5 * (p0 + ppi);
  out.f_ci = {0.5 * (ci0.lo + cipi.lo), 0.5 * (ci0.hi + cipi.hi)};
  const std::uint64_t q0 = c.qnd_no_pi_g2 + c.qnd_no_pi_e2, qpi = c.qnd_pi_e2 + c.qnd_pi_g2;
  if (q0 + qpi > 0) {
    const auto [pq0, ciq0] = cell(c.qnd_no_pi_g2, c.qnd_no_pi_e2, "QND P0(.|g1)");
    const auto [pqpi, ciqpi] = cell(c.qnd_pi_e2, c.qnd_pi_g2, "QND Ppi(.|e1)");
    out.f_q = 0.5 * (pq0 + pqpi);
    out.f_q_ci = {0.5 * (ciq0.lo + ciqpi.lo), 0.5 * (ciq0.hi + ciqpi.hi)};
    out.has_qnd = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Single-shot analysis

struct Shot {
  int label = 0;  // prepared state: 0 = g, 1 = e
  double i = 0.0, q = 0.0;
};

struct Gaussian2 {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();

  double mahalanobis2(const Eigen::Vector2d& x) const {
    const Eigen::Vector2d d = x - mean;
    return d.dot(cov.ldlt().solve(d));
  }
};

inline Gaussian2 fit_gaussian(const std::vector<Eigen::Vector2d>& pts) {
  detail::require(pts.size() >= 3, "fit_gaussian: need at least 3 points");
  Gaussian2 g;
  for (const auto& p : pts) g.mean += p;
  g.mean /= static_cast<double>(pts.size());
  g.cov.setZero();
  for (const auto& p : pts) g.cov += (p - g.mean) * (p - g.mean).transpose();
  g.cov /= static_cast<double>(pts.size() - 1);
  if (!(g.cov.determinant() > 1e-18 * g.cov.trace() * g.cov.trace()))
    throw NumericalError("shot_analysis: degenerate covariance");
  return g;
}

/// Squared Mahalanobis radius of the n-sigma confidence ellipse (probability erf(n/sqrt2)).
inline double ellipse_radius2(double n_sigma) {
  return -2.0 * std::log(std::erfc(n_sigma / std::sqrt(2.0)));
}

struct LogisticModel {
  Eigen::Vector3d w = Eigen::Vector3d::Zero();  // intercept, i, q (raw units)
  double decision(const Eigen::Vector2d& x) const { return w(0) + w(1) * x(0) + w(2) * x(1); }
  int predict(const Eigen::Vector2d& x) const { return decision(x) > 0.0 ? 1 : 0; }
};

/// L2-regularised logistic regression by iteratively reweighted least squares
/// on standardised features (penalty 1/2 |w|^2, intercept unpenalised).
inline LogisticModel train_logistic(const std::vector<Eigen::Vector2d>& x, const std::vector<int>& y,
                                    double l2 = 1.0, int max_iter = 100) {
  detail::require(x.size() == y.size() && !x.empty(), "train_logistic: empty or mismatched data");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::Vector2d mu = Eigen::Vector2d::Zero(), sd = Eigen::Vector2d::Zero();
  for (const auto& p : x) mu += p;
  mu /= static_cast<double>(n);
  for (const auto& p : x) sd += (p - mu).cwiseAbs2();
  sd = (sd / static_cast<double>(n)).cwiseSqrt();
  detail::require(sd.minCoeff() > 0.0, "train_logistic: constant feature");
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd t(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& p = x[static_cast<std::size_t>(k)];
    a(k, 0) = 1.0;
    a(k, 1) = (p(0) - mu(0)) / sd(0);
    a(k, 2) = (p(1) - mu(1)) / sd(1);
    t(k) = y[static_cast<std::size_t>(k)];
  }
  Eigen::Vector3d beta = Eigen::Vector3d::Zero();
  const Eigen::Vector3d pen(0.0, l2, l2);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd z = a * beta;
    Eigen::VectorXd p(n), wv(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      p(k) = 1.0 / (1.0 + std::exp(-z(k)));
      wv(k) = std::max(p(k) * (1.0 - p(k)), 1e-12);
    }
    const Eigen::Vector3d grad = a.transpose() * (t - p) - pen.cwiseProduct(beta);
    Eigen::Matrix3d h = a.transpose() * wv.asDiagonal() * a;
    h.diagonal() += pen;
    const Eigen::Vector3d step = h.ldlt().solve(grad);
    beta += step;
    if (step.norm() < 1e-12 * (1.0 + beta.norm())) break;
  }
  LogisticModel m;
  m.w(1) = beta(1) / sd(0);
  m.w(2) = beta(2) / sd(1);
  m.w(0) = beta(0) - m.w(1) * mu(0) - m.w(2) * mu(1);
  return m;
}

struct ShotStats {
  cplx mu_g{}, mu_e{};
  double sigma_g = 0.0, sigma_e = 0.0;  // along the axis through the means
  std::size_t n_g = 0, n_e = 0;
  double snr() const { return std::abs(mu_e - mu_g) / (0.5 * (sigma_g + sigma_e)); }
};

enum class ShotClass {
  Normal,       // correctly assigned, inside the assigned state's ellipse
  Misassigned,  // misassigned, inside both ellipses (circle)
  Diamond,      // misassigned, outside both ellipses
  Triangle      // correctly assigned, outside the assigned state's ellipse
};

struct ShotReport {
  ShotStats stats;
  Gaussian2 g, e;
  LogisticModel model;
  std::size_t n_train = 0, n_test = 0;
  std::array<std::size_t, 2> test_errors{};  // misassigned test shots per prepared state
  std::array<std::size_t, 2> test_counts{};
  double assignment_error = 0.0;        // empirical, mean over prepared states
  double model_assignment_error = 0.0;  // Gaussian mass across the decision line
  std::size_t leakage_suspect = 0;      // test shots outside both outlier ellipses
  std::array<std::size_t, 4> class_counts{};
  std::vector<ShotClass> classes;       // per test shot, in input order
};

struct ShotOptions {
  std::size_t n_train = 20000;  // capped at half the shots
  double outlier_sigma = 4.0;
};

/// Fit bivariate normals per prepared state, train the discriminator on the
/// first n_train shots and classify the rest.
inline ShotReport shot_analysis(const std::vector<Shot>& shots, const ShotOptions& opt = {}) {
  std::vector<Eigen::Vector2d> pg, pe;
  for (const auto& s : shots) {
    detail::require(s.label == 0 || s.label == 1, "shot label must be 0 (g) or 1 (e)");
    (s.label == 0 ? pg : pe).emplace_back(s.i, s.q);
  }
  detail::require(pg.size() >= 100 && pe.size() >= 100, "shot_analysis: need at least 100 shots per state");
  ShotReport rep;
  rep.g = fit_gaussian(pg);
  rep.e = fit_gaussian(pe);

  const Eigen::Vector2d axis = (rep.e.mean - rep.g.mean).normalized();
  auto st = [&](const std::vector<Eigen::Vector2d>& v, const Eigen::Vector2d& m) {
    double acc = 0.0;
    for (const auto& p : v) acc += std::pow(axis.dot(p - m), 2);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
  };
  rep.stats = {{rep.g.mean(0), rep.g.mean(1)}, {rep.e.mean(0), rep.e.mean(1)}, st(pg, rep.g.mean),
               st(pe, rep.e.mean), pg.size(), pe.size()};

  rep.n_train = std::min(opt.n_train, shots.size() / 2);
  std::vector<Eigen::Vector2d> xt;
  std::vector<int> yt;
  for (std::size_t k = 0; k < rep.n_train; ++k) {
    xt.emplace_back(shots[k].i, shots[k].q);
    yt.push_back(shots[k].label);
  }
  detail::require(std::count(yt.begin(), yt.end(), 0) > 0 && std::count(yt.begin(), yt.end(), 1) > 0,
                  "shot_analysis: training split must contain both states");
  rep.model = train_logistic(xt, yt);

  const double r2 = ellipse_radius2(opt.outlier_sigma);
  for (std::size_t k = rep.n_train; k < shots.size(); ++k) {
    const Eigen::Vector2d x(shots[k].i, shots[k].q);
    const int lab = shots[k].label, pred = rep.model.predict(x);
    const bool out_g = rep.g.mahalanobis2(x) > r2, out_e = rep.e.mahalanobis2(x) > r2;
    const bool out_assigned = pred == 0 ? out_g : out_e;
    ++rep.test_counts[static_cast<std::size_t>(lab)];
    ShotClass c = ShotClass::Normal;
    if (pred != lab) {
      ++rep.test_errors[static_cast<std::size_t>(lab)];
      c = (out_g && out_e) ? ShotClass::Diamond : ShotClass::Misassigned;
    } else if (out_assigned) {
      c = ShotClass::Triangle;
    }
    if (out_g && out_e) ++rep.leakage_suspect;
    ++rep.class_counts[static_cast<std::size_t>(c)];
    rep.classes.push_back(c);
  }
  rep.n_test = shots.size() - rep.n_train;
  double err = 0.0;
  for (std::size_t s = 0; s < 2; ++s)
    if (rep.test_counts[s] > 0) err += static_cast<double>(rep.test_errors[s]) / static_cast<double>(rep.test_counts[s]);
  rep.assignment_error = 0.5 * err;

  const Eigen::Vector2d w(rep.model.w(1), rep.model.w(2));
  auto wrong_side = [&](const Gaussian2& gs, int lab) {
    const double m = rep.model.w(0) + w.dot(gs.mean);
    const double s = std::sqrt(w.dot(gs.cov * w));
    const double z = (lab == 0 ? m : -m) / s;
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
  };
  rep.model_assignment_error = 0.5 * (wrong_side(rep.g, 0) + wrong_side(rep.e, 1));
  return rep;
}

}  // namespace notchlab
