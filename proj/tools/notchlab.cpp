// notchlab command-line front end.
//
// Exit codes: 0 success, 2 invalid input (flags, schema, preconditions),
// 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <random>
#include <thread>

#include "notchlab/notchlab.hpp"

using namespace notchlab;

namespace {

struct Options {
  std::string device;
  std::string pair;
  std::string channel;
  std::string state;
  std::string pulse;
  std::string out;
  std::string format;
  std::string input;
  std::string spectrum_g, spectrum_e;
  double fmin = 0.0, fmax = 0.0;
  int points = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;
  double noise = 0.0;
};

unsigned thread_cap() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NOTCHLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw DomainError("NOTCHLAB_THREADS must be a positive integer");
    n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

// Evaluate rows in parallel; output order and content do not depend on the thread count.
template <class Fn>
std::vector<std::vector<double>> sweep(std::size_t n, Fn&& row) {
  std::vector<std::vector<double>> rows(n);
  const unsigned nt = static_cast<unsigned>(std::min<std::size_t>(thread_cap(), std::max<std::size_t>(n, 1)));
  std::vector<std::exception_ptr> errors(nt);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += nt) rows[i] = row(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::vector<double> grid(const Options& o, double lo, double hi, int n) {
  const double a = o.fmin > 0 ? o.fmin : lo, b = o.fmax > 0 ? o.fmax : hi;
  const int m = o.points > 0 ? o.points : n;
  detail::require(a > 0.0 && b > a, "--fmin must be positive and below --fmax");
  detail::require(m >= 2, "--points must be at least 2");
  std::vector<double> f(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) f[static_cast<std::size_t>(i)] = a + (b - a) * i / (m - 1);
  return f;
}

DeviceFile device(const Options& o) {
  detail::require(!o.device.empty(), "--device is required");
  return load_device(o.device);
}

const CoupledPairGeometry& pick_pair(const DeviceFile& d, const std::string& name) {
  if (!name.empty()) return d.pair(name);
  for (const auto& g : d.geometry)
    if (g.is_mtl()) return g;
  throw DomainError("device has no coupled-line geometry; pass --pair");
}

std::size_t pick_channel(const MuxNetwork& net, const std::string& name) {
  detail::require(!net.channels.empty(), "device has no channels");
  return name.empty() ? 0 : net.index_of(name);
}

JointState pick_state(const MuxNetwork& net, const std::string& s) {
  if (s.empty()) return net.ground();
  const auto st = parse_joint_state(s);
  net.check_state(st);
  return st;
}

void warn(const Diagnostics& d) {
  for (const auto& w : d) std::cerr << "warning: " << w << "\n";
}

void emit_text(const Options& o, const std::string& text) {
  if (o.out.empty())
    std::cout << text;
  else
    write_text(o.out, text);
}

void emit(const Options& o, const Table& t, const std::string& dflt = "csv") {
  const std::string f = o.format.empty() ? dflt : o.format;
  detail::require(f == "csv" || f == "json", "--format must be csv or json");
  emit_text(o, f == "csv" ? to_csv(t) : dump_json(to_json(t)));
}

json num(double x) { return std::isfinite(x) ? json(rounded(x)) : json(nullptr); }

// --pulse: inline JSON object or a path to one.
struct PulseSpec {
  DrivePulse pulse;
  double dt = 1e-9;
  std::optional<double> t_end;
  std::string target;
};

PulseSpec parse_pulse(const std::string& arg) {
  detail::require(!arg.empty(), "--pulse is required");
  const std::string text = arg.find('{') != std::string::npos ? arg : read_text(arg);
  const json j = parse_json_text(text, "--pulse");
  detail::check_keys(j, "pulse", {"shape", "f_mhz", "amplitude", "duration_ns"}, {"dt_ns", "t_end_ns", "target"});
  detail::require(j["shape"].is_string(), "pulse.shape must be a string");
  cplx amp;
  if (j["amplitude"].is_array()) {
    detail::require(j["amplitude"].size() == 2, "pulse.amplitude must be a number or [re, im]");
    const json a{{"re", j["amplitude"][0]}, {"im", j["amplitude"][1]}};
    amp = {detail::number(a, "re", "pulse.amplitude"), detail::number(a, "im", "pulse.amplitude")};
  } else {
    amp = detail::number(j, "amplitude", "pulse");
  }
  const double f = detail::positive(j, "f_mhz", "pulse") * 1e6;
  const double dur = detail::positive(j, "duration_ns", "pulse") * 1e-9;
  PulseSpec p;
  const auto shape = j["shape"].get<std::string>();
  if (shape == "rectangular")
    p.pulse = DrivePulse::rectangular(f, amp, dur);
  else if (shape == "two_step")
    p.pulse = DrivePulse::two_step(f, amp, dur);
  else
    throw DomainError("pulse.shape must be 'rectangular' or 'two_step'");
  if (j.contains("dt_ns")) p.dt = detail::positive(j, "dt_ns", "pulse") * 1e-9;
  if (j.contains("t_end_ns")) p.t_end = detail::positive(j, "t_end_ns", "pulse") * 1e-9;
  if (j.contains("target")) {
    detail::require(j["target"].is_string(), "pulse.target must be a channel name");
    p.target = j["target"].get<std::string>();
  }
  return p;
}

// ---------------------------------------------------------------------------

void cmd_notch(const Options& o) {
  const auto d = device(o);
  const auto& g = pick_pair(d, o.pair);
  const double fn = notch_frequency(g);
  const double tol = o.tol > 0 ? o.tol : 1.0;
  double bis = std::numeric_limits<double>::quiet_NaN();
  try {
    bis = find_z21_zero(g, 0.97 * fn, 1.03 * fn, tol);
  } catch (const Error& e) {
    std::cerr << "warning: bisection check skipped: " << e.what() << "\n";
  }
  if (o.format.empty()) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s: notch at %.3f GHz (%s Hz)\n", g.name.c_str(), fn / 1e9, fmt(fn).c_str());
    emit_text(o, buf);
    return;
  }
  Table t;
  t.label_header = "pair";
  t.header = {"notch_hz", "bisection_hz"};
  t.labels = {g.name};
  t.rows = {{fn, bis}};
  emit(o, t);
}

void cmd_z21(const Options& o) {
  const auto d = device(o);
  const auto& g = pick_pair(d, o.pair);
  const auto f = grid(o, 4e9, 14e9, 1001);
  Table t;
  t.header = {"freq_hz", "im_z21_ohm"};
  t.rows = sweep(f.size(), [&](std::size_t i) -> std::vector<double> {
    try {
      return {f[i], z21(g, f[i]).imag()};
    } catch (const PoleError&) {
      return {f[i], std::numeric_limits<double>::quiet_NaN()};
    }
  });
  emit(o, t);
}

void cmd_design(const Options& o) {
  const auto d = device(o);
  Table t;
  t.label_header = "pair";
  t.header = {"f_r_hz", "f_p_hz", "notch_hz", "j_hz", "j_exact_hz", "cm_over_c"};
  for (const auto& g : d.geometry) {
    if (!o.pair.empty() && g.name != o.pair) continue;
    g.validate();
    Diagnostics diag;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> row{g.f_r(), g.f_p(), nan, nan, nan, nan};
    if (g.is_mtl()) {
      coupling_diagnostic(g, &diag);
      row[2] = notch_frequency(g);
      row[3] = j_mtl(g, JFormula::Expanded, &diag);
      row[4] = j_mtl(g, JFormula::Exact);
      row[5] = g.mtl().cm_over_c;
    } else {
      row[3] = j_capacitive(g);
    }
    for (auto& w : diag) w = g.name + ": " + w;
    warn(diag);
    t.labels.push_back(g.name);
    t.rows.push_back(row);
  }
  detail::require(!t.rows.empty(), o.pair.empty() ? "device has no geometry" : "unknown geometry '" + o.pair + "'");
  emit(o, t);
}

void cmd_modes(const Options& o) {
  const auto d = device(o);
  const auto st = pick_state(d.net, o.state);
  Diagnostics diag;
  const auto modes = normal_modes(d.net, st, &diag);
  warn(diag);
  const std::string f = o.format.empty() ? "json" : o.format;
  detail::require(f == "csv" || f == "json", "--format must be csv or json");
  if (f == "json") {
    json arr = json::array();
    for (const auto& m : modes)
      arr.push_back({{"channel", m.channel_name},
                     {"character", to_string(m.character)},
                     {"f_hz", num(m.f_hz)},
                     {"kappa_hz", num(m.kappa_hz)}});
    emit_text(o, dump_json(arr));
  } else {
    Table t;
    t.label_header = "channel,character";
    t.header = {"f_hz", "kappa_hz"};
    for (const auto& m : modes) {
      t.labels.push_back(m.channel_name + "," + to_string(m.character));
      t.rows.push_back({m.f_hz, m.kappa_hz});
    }
    emit(o, t);
  }
}

void cmd_reflect(const Options& o) {
  const auto d = device(o);
  const auto st = pick_state(d.net, o.state);
  detail::require_nonnegative(o.noise, "--noise");
  const auto f = grid(o, 10.0e9, 10.9e9, 901);
  Table t;
  t.header = {"freq_hz", "phase_rad", "re_gamma", "im_gamma"};
  t.rows = sweep(f.size(), [&](std::size_t i) -> std::vector<double> {
    const cplx g = gamma_incident(d.net, st, f[i]);
    return {f[i], std::arg(g), g.real(), g.imag()};
  });
  if (o.noise > 0.0) {
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> n(0.0, o.noise);
    for (auto& r : t.rows) r[1] = detail::wrap_phase(r[1] + n(rng));
  }
  emit(o, t);
}

void cmd_simulate(const Options& o) {
  const auto d = device(o);
  const auto st = pick_state(d.net, o.state);
  const auto p = parse_pulse(o.pulse);
  PropagateOptions opt;
  opt.t_end = p.t_end;
  const auto tr = propagate(d.net, st, p.pulse, p.dt, opt);
  std::vector<std::string> names;
  for (const auto& c : d.net.channels) names.push_back(c.name);
  emit(o, trace_table(tr, names));
}

void cmd_separation(const Options& o) {
  const auto d = device(o);
  const auto p = parse_pulse(o.pulse);
  const std::string target = !o.channel.empty() ? o.channel : p.target;
  detail::require(!target.empty(), "separation needs a target channel (--channel or pulse.target)");
  const std::size_t k = d.net.index_of(target);
  PropagateOptions opt;
  opt.t_end = p.t_end;
  const auto r = separation(d.net, k, p.pulse, p.dt, opt);
  double t90 = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < r.t.size(); ++i)
    if (r.s[i] >= 0.9 * r.s_ss) {
      t90 = r.t[i];
      break;
    }
  Table t;
  t.header = {"time_s", "s", "s_target"};
  for (std::size_t i = 0; i < r.t.size(); ++i) t.rows.push_back({r.t[i], r.s[i], r.s_target[i]});
  const std::string f = o.format.empty() ? "csv" : o.format;
  if (f == "json") {
    json j{{"channel", target}, {"s_ss", num(r.s_ss)}, {"gamma_m_per_s", num(r.gamma_m)}, {"t90_s", num(t90)},
           {"trace", to_json(t)}};
    emit_text(o, dump_json(j));
  } else {
    std::cerr << "s_ss " << fmt(r.s_ss) << ", gamma_m " << fmt(r.gamma_m) << " 1/s, t90 " << fmt(t90) << " s\n";
    emit(o, t);
  }
}

void cmd_purcell(const Options& o) {
  const auto d = device(o);
  const std::size_t k = pick_channel(d.net, o.channel);
  const auto& ch = d.net.channels[k];
  detail::require(k < d.net.qubits.size() && d.net.qubits[k].has_value(),
                  "purcell needs qubit parameters for channel " + ch.name);
  const auto& qi = *d.net.qubits[k];
  const double fn = notch_frequency(pick_pair(d, o.pair));
  const auto mtl = pair_from_frequencies(ch.f_r_g, ch.f_p, ch.j, fn);
  const auto cap = pair_from_frequencies(ch.f_r_g, ch.f_p, ch.j, std::nullopt);
  QubitCoupling q;
  if (qi.c_q) q.c_q = *qi.c_q;
  q.z0_line = d.net.z0_line;
  q.c_qr = coupling_capacitance_from_g(qi.g, qi.f_q, q.c_q, mtl.readout);
  q.c_ext = ext_capacitance_from_linewidth(ch.kappa_p, mtl.filter, q.z0_line);
  const double f_bar = 0.5 * (ch.f_r_g + ch.f_p);
  const auto f = grid(o, 7e9, 9.5e9, 251);
  Table t;
  t.header = {"freq_hz", "t1_mtl_s", "t1_cap_s", "xi", "xi_formula"};
  t.rows = sweep(f.size(), [&](std::size_t i) -> std::vector<double> {
    QubitCoupling qq = q;
    qq.f_q = f[i];
    const double a = t1_purcell(mtl, qq, d.net.shunt).seconds, b = t1_purcell(cap, qq, d.net.shunt).seconds;
    return {f[i], a, b, a / b, enhancement_factor(f[i], fn, f_bar)};
  });
  emit(o, t);
}

void cmd_fit(const Options& o) {
  const auto d = device(o);
  detail::require(!o.spectrum_g.empty(), "fit needs --spectrum-g");
  const auto sg = read_spectrum_csv(o.spectrum_g, false);
  std::optional<PhaseSpectrum> se;
  if (!o.spectrum_e.empty()) se = read_spectrum_csv(o.spectrum_e, true);
  FitConfig cfg;
  cfg.guess = d.net;
  if (o.tol > 0) cfg.tol = o.tol;
  const auto r = fit_reflection(sg, se ? &*se : nullptr, cfg);
  warn(r.warnings);
  DeviceFile fitted = d;
  fitted.net = r.net;
  json j = device_to_json(fitted);
  json se_j = json::object();
  static const char* kSlots[] = {"f_r_g_hz", "f_p_hz", "j_hz", "kappa_p_hz", "chi_hz", "gamma_r_hz", "gamma_p_hz"};
  for (std::size_t c = 0; c < r.net.size(); ++c) {
    json row = json::object();
    for (int s = 0; s < kParamsPerChannel; ++s) row[kSlots[s]] = num(r.std_errors[c][static_cast<std::size_t>(s)]);
    se_j[r.net.channels[c].name] = row;
  }
  se_j["theta0_rad"] = num(r.se_theta0);
  se_j["tau_s"] = num(r.se_tau);
  j["theta0_rad"] = num(r.theta0);
  j["tau_s"] = num(r.tau);
  j["residual"] = num(r.residual);
  j["converged"] = r.converged;
  j["chi_identified"] = r.chi_identified;
  j["stderr"] = se_j;
  emit_text(o, dump_json(j));
}

void cmd_budget(const Options& o) {
  detail::require(!o.input.empty(), "budget needs --input (budget JSON or shots CSV)");
  if (o.input.size() >= 4 && o.input.substr(o.input.size() - 4) == ".csv") {
    const auto rep = shot_analysis(read_shots_csv(o.input));
    json j{{"snr", num(rep.stats.snr())},
           {"eps_sep", num(separation_error(rep.stats.snr()))},
           {"assignment_error", num(rep.assignment_error)},
           {"model_assignment_error", num(rep.model_assignment_error)},
           {"n_train", rep.n_train},
           {"n_test", rep.n_test},
           {"leakage_suspect", rep.leakage_suspect},
           {"misassigned_inside", rep.class_counts[static_cast<int>(ShotClass::Misassigned)]},
           {"diamond", rep.class_counts[static_cast<int>(ShotClass::Diamond)]},
           {"triangle", rep.class_counts[static_cast<int>(ShotClass::Triangle)]}};
    emit_text(o, dump_json(j));
    return;
  }
  const json in = parse_json_text(read_text(o.input), o.input);
  detail::check_keys(in, "budget", {"tau_meas_ns", "channels"}, {"tau_buffer_ns"});
  const double tm = detail::positive(in, "tau_meas_ns", "budget") * 1e-9;
  const double tb = in.contains("tau_buffer_ns") ? detail::nonneg(in, "tau_buffer_ns", "budget") * 1e-9 : 0.0;
  detail::require(in["channels"].is_array(), "budget.channels must be an array");
  json arr = json::array();
  std::size_t i = 0;
  for (const auto& c : in["channels"]) {
    const std::string w = "budget.channels[" + std::to_string(i++) + "]";
    detail::check_keys(c, w, {"name", "snr", "t1_us"}, {"counts"});
    detail::require(c["name"].is_string(), w + ".name must be a string");
    const double snr = detail::nonneg(c, "snr", w);
    const auto cl = coherence_limits(tm, tb, detail::positive(c, "t1_us", w) * 1e-6);
    json row{{"name", c["name"]},
             {"snr", num(snr)},
             {"eps_sep", num(separation_error(snr))},
             {"eps_cl", num(cl.eps_cl)},
             {"eps_cl_q", num(cl.eps_cl_q)}};
    if (c.contains("counts")) {
      const auto& k = c["counts"];
      const std::string wk = w + ".counts";
      detail::check_keys(k, wk, {"no_pi_g2", "no_pi_e2", "pi_e2", "pi_g2"},
                         {"qnd_no_pi_g2", "qnd_no_pi_e2", "qnd_pi_e2", "qnd_pi_g2"});
      auto cnt = [&](const char* key) -> std::uint64_t {
        if (!k.contains(key)) return 0;
        const double v = detail::nonneg(k, key, wk);
        detail::require(v == std::floor(v), wk + "." + key + " must be an integer");
        return static_cast<std::uint64_t>(v);
      };
      const auto fid = fidelities({cnt("no_pi_g2"), cnt("no_pi_e2"), cnt("pi_e2"), cnt("pi_g2"), cnt("qnd_no_pi_g2"),
                                   cnt("qnd_no_pi_e2"), cnt("qnd_pi_e2"), cnt("qnd_pi_g2")});
      row["f"] = num(fid.f);
      row["f_ci"] = {num(fid.f_ci.lo), num(fid.f_ci.hi)};
      if (fid.has_qnd) {
        row["f_q"] = num(fid.f_q);
        row["f_q_ci"] = {num(fid.f_q_ci.lo), num(fid.f_q_ci.hi)};
      }
    }
    arr.push_back(row);
  }
  emit_text(o, dump_json(json{{"tau_meas_s", num(tm)}, {"tau_buffer_s", num(tb)}, {"channels", arr}}));
}

void cmd_calibrate(const Options& o) {
  const auto d = device(o);
  detail::require(!o.input.empty(), "calibrate needs --input (Stark-shift JSON)");
  const json in = parse_json_text(read_text(o.input), o.input);
  detail::check_keys(in, "calibration", {"channel", "f_d_mhz", "points"});
  detail::require(in["channel"].is_string(), "calibration.channel must be a string");
  const std::size_t k = d.net.index_of(in["channel"].get<std::string>());
  const double f_d = detail::positive(in, "f_d_mhz", "calibration") * 1e6;
  detail::require(in["points"].is_array() && !in["points"].empty(), "calibration.points must be a non-empty array");
  Diagnostics diag;
  Table t;
  t.header = {"setting", "delta_ac_hz", "photons", "power_w", "w_per_setting"};
  std::size_t i = 0;
  for (const auto& p : in["points"]) {
    const std::string w = "calibration.points[" + std::to_string(i++) + "]";
    detail::check_keys(p, w, {"setting", "delta_ac_mhz"});
    const double setting = detail::positive(p, "setting", w);
    const double dac = detail::number(p, "delta_ac_mhz", w) * 1e6;
    const double n = photons_from_stark(dac, d.net.channels[k].chi, &diag);
    const auto inc = incident_from_resonator(d.net, k, f_d, std::sqrt(std::max(n, 0.0)));
    t.rows.push_back({setting, dac, n, inc.power, inc.power / setting});
  }
  warn(diag);
  emit(o, t);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"notchlab: readout circuits with intrinsic Purcell notch filters"};
  app.require_subcommand(1, 1);
  Options o;

  auto common = [&](CLI::App* s, bool needs_device = true) {
    if (needs_device) s->add_option("--device", o.device, "device JSON file");
    s->add_option("--out", o.out, "output path (default stdout)");
    s->add_option("--format", o.format, "csv or json");
  };
  auto sweep_flags = [&](CLI::App* s) {
    s->add_option("--fmin", o.fmin, "sweep start (Hz)");
    s->add_option("--fmax", o.fmax, "sweep stop (Hz)");
    s->add_option("--points", o.points, "number of sweep points");
  };

  auto* notch = app.add_subcommand("notch", "notch frequency of a coupled pair");
  common(notch);
  notch->add_option("--pair", o.pair, "geometry name");
  notch->add_option("--tol", o.tol, "bisection tolerance (Hz)");

  auto* z = app.add_subcommand("z21", "transfer impedance sweep");
  common(z);
  z->add_option("--pair", o.pair, "geometry name");
  sweep_flags(z);

  auto* design = app.add_subcommand("design", "resonator, notch and coupling figures per geometry");
  common(design);
  design->add_option("--pair", o.pair, "geometry name");

  auto* modes = app.add_subcommand("modes", "complex normal modes of the readout network");
  common(modes);
  modes->add_option("--state", o.state, "joint qubit state, e.g. gegg");

  auto* reflect = app.add_subcommand("reflect", "reflection spectrum of the readout network");
  common(reflect);
  reflect->add_option("--state", o.state, "joint qubit state");
  reflect->add_option("--noise", o.noise, "Gaussian phase noise (rad)");
  reflect->add_option("--seed", o.seed, "noise seed");
  sweep_flags(reflect);

  auto* sim = app.add_subcommand("simulate", "time-domain mode amplitudes under a drive pulse");
  common(sim);
  sim->add_option("--state", o.state, "joint qubit state");
  sim->add_option("--pulse", o.pulse, "pulse JSON (inline or file)");

  auto* sep = app.add_subcommand("separation", "output-field separation between target qubit states");
  common(sep);
  sep->add_option("--pulse", o.pulse, "pulse JSON (inline or file)");
  sep->add_option("--channel", o.channel, "target channel");

  auto* purcell = app.add_subcommand("purcell", "Purcell T1 with and without the notch versus qubit frequency");
  common(purcell);
  purcell->add_option("--channel", o.channel, "channel (default first)");
  purcell->add_option("--pair", o.pair, "geometry supplying the notch");
  sweep_flags(purcell);

  auto* fit = app.add_subcommand("fit", "fit reflection phase spectra; the device is the initial guess");
  common(fit);
  fit->add_option("--spectrum-g", o.spectrum_g, "all-g spectrum CSV (freq_hz, phase_rad)");
  fit->add_option("--spectrum-e", o.spectrum_e, "all-e spectrum CSV");
  fit->add_option("--tol", o.tol, "optimizer tolerance");
  fit->add_option("--seed", o.seed, "unused by the deterministic optimizer; accepted for scripting");

  auto* budget = app.add_subcommand("budget", "error budget from a budget JSON or labelled shots CSV");
  common(budget, false);
  budget->add_option("--input", o.input, "budget JSON or shots CSV");

  auto* cal = app.add_subcommand("calibrate", "incident power from ac Stark shifts");
  common(cal);
  cal->add_option("--input", o.input, "calibration JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (*notch) cmd_notch(o);
    else if (*z) cmd_z21(o);
    else if (*design) cmd_design(o);
    else if (*modes) cmd_modes(o);
    else if (*reflect) cmd_reflect(o);
    else if (*sim) cmd_simulate(o);
    else if (*sep) cmd_separation(o);
    else if (*purcell) cmd_purcell(o);
    else if (*fit) cmd_fit(o);
    else if (*budget) cmd_budget(o);
    else if (*cal) cmd_calibrate(o);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
