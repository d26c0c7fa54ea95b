#pragma once

// Device files (JSON, lengths in um, frequencies in MHz) and CSV/JSON
// emission. Unit conversion to SI happens here and nowhere else.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "notchlab/metrics.hpp"
#include "notchlab/specfit.hpp"

namespace notchlab {

using json = nlohmann::ordered_json;

struct DeviceFile {
  LineParams line;
  std::vector<CoupledPairGeometry> geometry;
  MuxNetwork net;  // channels, shunt, qubits, z0_line

  const CoupledPairGeometry& pair(const std::string& name) const {
    for (const auto& g : geometry)
      if (g.name == name) return g;
    throw DomainError("unknown geometry '" + name + "'");
  }
};

namespace detail {

inline constexpr double kUm = 1e-6;
inline constexpr double kMHz = 1e6;

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> required,
                       std::initializer_list<const char*> optional = {}) {
  require(obj.is_object(), where + " must be an object");
  std::set<std::string> allowed;
  for (const char* k : required) {
    allowed.insert(k);
    require(obj.contains(k), where + "." + k + " is required");
  }
  for (const char* k : optional) allowed.insert(k);
  for (const auto& [k, v] : obj.items()) require(allowed.count(k) > 0, where + ": unknown key '" + k + "'");
}

inline double number(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  require(v.is_number(), where + "." + key + " must be a number");
  const double x = v.get<double>();
  require(std::isfinite(x), where + "." + key + " must be finite");
  return x;
}

inline double positive(const json& obj, const std::string& key, const std::string& where) {
  const double x = number(obj, key, where);
  require(x > 0.0, where + "." + key + " must be positive (got " + std::to_string(x) + ")");
  return x;
}

inline double nonneg(const json& obj, const std::string& key, const std::string& where) {
  const double x = number(obj, key, where);
  require(x >= 0.0, where + "." + key + " must be non-negative (got " + std::to_string(x) + ")");
  return x;
}

inline double opt_number(const json& obj, const std::string& key, const std::string& where, double dflt) {
  return obj.contains(key) ? number(obj, key, where) : dflt;
}

}  // namespace detail

inline DeviceFile parse_device(const json& j) {
  using namespace detail;
  check_keys(j, "device", {"line"}, {"z0_line_ohm", "shunt", "geometry", "channels", "qubits"});
  DeviceFile d;
  check_keys(j["line"], "line", {"z0_ohm", "v_m_per_s"});
  d.line = {positive(j["line"], "z0_ohm", "line"), positive(j["line"], "v_m_per_s", "line"), std::nullopt};
  d.line.validate();
  d.net.z0_line = j.contains("z0_line_ohm") ? positive(j, "z0_line_ohm", "device") : 50.0;
  if (j.contains("shunt") && !j["shunt"].is_null()) {
    check_keys(j["shunt"], "shunt", {"c_f", "l_h"});
    d.net.shunt = ShuntLC{positive(j["shunt"], "c_f", "shunt"), positive(j["shunt"], "l_h", "shunt")};
  }
  if (j.contains("geometry")) {
    require(j["geometry"].is_array(), "geometry must be an array");
    std::size_t i = 0;
    for (const auto& g : j["geometry"]) {
      const std::string w = "geometry[" + std::to_string(i++) + "]";
      check_keys(g, w, {"name", "l_r_open_um", "l_r_short_um", "l_p_open_um", "l_p_short_um", "coupler"});
      require(g["name"].is_string(), w + ".name must be a string");
      CoupledPairGeometry geo;
      geo.name = g["name"].get<std::string>();
      geo.line = d.line;
      geo.l_r_open = nonneg(g, "l_r_open_um", w) * kUm;
      geo.l_r_short = nonneg(g, "l_r_short_um", w) * kUm;
      geo.l_p_open = nonneg(g, "l_p_open_um", w) * kUm;
      geo.l_p_short = nonneg(g, "l_p_short_um", w) * kUm;
      const auto& c = g["coupler"];
      const std::string wc = w + ".coupler";
      require(c.is_object() && c.contains("type") && c["type"].is_string(), wc + ".type is required");
      const auto type = c["type"].get<std::string>();
      if (type == "capacitive") {
        check_keys(c, wc, {"type", "c_j_f"});
        geo.coupler = CapacitiveCoupler{nonneg(c, "c_j_f", wc)};
      } else if (type == "mtl") {
        check_keys(c, wc, {"type", "len_c_um"}, {"cm_over_c", "c_m_f_per_m", "zm_over_z0", "d_um"});
        require(c.contains("cm_over_c") != c.contains("c_m_f_per_m"),
                wc + ": give exactly one of cm_over_c, c_m_f_per_m");
        MtlCouplerParams m;
        m.len_c = nonneg(c, "len_c_um", wc) * kUm;
        m.cm_over_c = c.contains("cm_over_c") ? nonneg(c, "cm_over_c", wc)
                                              : nonneg(c, "c_m_f_per_m", wc) / d.line.c_per_length();
        require(m.cm_over_c < 1.0, wc + ": mutual capacitance must be below the line capacitance");
        m.zm_over_z0 = c.contains("zm_over_z0") ? positive(c, "zm_over_z0", wc) : 1.0;
        if (c.contains("d_um")) m.d = nonneg(c, "d_um", wc) * kUm;
        geo.coupler = m;
      } else {
        throw DomainError(wc + ".type must be 'mtl' or 'capacitive'");
      }
      require(geo.readout_length() > 0.0 && geo.filter_length() > 0.0, w + ": resonator length must be positive");
      d.geometry.push_back(geo);
    }
  }
  if (j.contains("channels")) {
    require(j["channels"].is_array(), "channels must be an array");
    std::size_t i = 0;
    for (const auto& c : j["channels"]) {
      const std::string w = "channels[" + std::to_string(i++) + "]";
      check_keys(c, w, {"name", "f_r_g_mhz", "f_p_mhz", "j_mhz", "kappa_p_mhz", "chi_mhz"},
                 {"gamma_r_mhz", "gamma_p_mhz"});
      require(c["name"].is_string(), w + ".name must be a string");
      ReadoutChannel ch;
      ch.name = c["name"].get<std::string>();
      ch.f_r_g = positive(c, "f_r_g_mhz", w) * kMHz;
      ch.f_p = positive(c, "f_p_mhz", w) * kMHz;
      ch.j = nonneg(c, "j_mhz", w) * kMHz;
      ch.kappa_p = positive(c, "kappa_p_mhz", w) * kMHz;
      ch.chi = number(c, "chi_mhz", w) * kMHz;
      if (c.contains("gamma_r_mhz")) ch.gamma_r = nonneg(c, "gamma_r_mhz", w) * kMHz;
      if (c.contains("gamma_p_mhz")) ch.gamma_p = nonneg(c, "gamma_p_mhz", w) * kMHz;
      d.net.channels.push_back(ch);
    }
  }
  if (j.contains("qubits")) {
    require(j["qubits"].is_array(), "qubits must be an array");
    std::size_t i = 0;
    for (const auto& q : j["qubits"]) {
      const std::string w = "qubits[" + std::to_string(i++) + "]";
      if (q.is_null()) {
        d.net.qubits.emplace_back();
        continue;
      }
      check_keys(q, w, {"f_q_mhz", "g_mhz"}, {"alpha_mhz", "c_q_f"});
      QubitInfo qi;
      qi.f_q = positive(q, "f_q_mhz", w) * kMHz;
      qi.g = nonneg(q, "g_mhz", w) * kMHz;
      qi.alpha = opt_number(q, "alpha_mhz", w, 0.0) * kMHz;
      if (q.contains("c_q_f")) qi.c_q = positive(q, "c_q_f", w);
      d.net.qubits.push_back(qi);
    }
  }
  if (!d.net.channels.empty()) d.net.validate();
  return d;
}

inline json device_to_json(const DeviceFile& d) {
  using namespace detail;
  json j;
  j["line"] = {{"z0_ohm", d.line.z0}, {"v_m_per_s", d.line.v}};
  j["z0_line_ohm"] = d.net.z0_line;
  if (d.net.shunt) j["shunt"] = {{"c_f", d.net.shunt->c_shunt}, {"l_h", d.net.shunt->l_shunt}};
  j["geometry"] = json::array();
  for (const auto& g : d.geometry) {
    json o = {{"name", g.name},
              {"l_r_open_um", g.l_r_open / kUm},
              {"l_r_short_um", g.l_r_short / kUm},
              {"l_p_open_um", g.l_p_open / kUm},
              {"l_p_short_um", g.l_p_short / kUm}};
    if (g.is_mtl()) {
      const auto& m = g.mtl();
      o["coupler"] = {{"type", "mtl"}, {"len_c_um", m.len_c / kUm}, {"cm_over_c", m.cm_over_c},
                      {"zm_over_z0", m.zm_over_z0}};
      if (m.d) o["coupler"]["d_um"] = *m.d / kUm;
    } else {
      o["coupler"] = {{"type", "capacitive"}, {"c_j_f", g.capacitive().c_j}};
    }
    j["geometry"].push_back(o);
  }
  j["channels"] = json::array();
  for (const auto& c : d.net.channels)
    j["channels"].push_back({{"name", c.name},
                             {"f_r_g_mhz", c.f_r_g / kMHz},
                             {"f_p_mhz", c.f_p / kMHz},
                             {"j_mhz", c.j / kMHz},
                             {"kappa_p_mhz", c.kappa_p / kMHz},
                             {"chi_mhz", c.chi / kMHz},
                             {"gamma_r_mhz", c.gamma_r / kMHz},
                             {"gamma_p_mhz", c.gamma_p / kMHz}});
  j["qubits"] = json::array();
  for (const auto& q : d.net.qubits) {
    if (!q) {
      j["qubits"].push_back(nullptr);
      continue;
    }
    json o = {{"f_q_mhz", q->f_q / kMHz}, {"alpha_mhz", q->alpha / kMHz}, {"g_mhz", q->g / kMHz}};
    if (q->c_q) o["c_q_f"] = *q->c_q;
    j["qubits"].push_back(o);
  }
  return j;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DomainError(what + ": invalid JSON: " + e.what());
  }
}

inline DeviceFile load_device(const std::string& path) {
  return parse_device(parse_json_text(read_text(path), path));
}

// ---------------------------------------------------------------------------
// Emission

/// Nine significant digits, the precision used for every emitted float.
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;  // optional first text column
  std::string label_header;
};

inline std::string to_csv(const Table& t) {
  std::string out;
  if (!t.label_header.empty()) out += t.label_header + (t.header.empty() ? "" : ",");
  for (std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
  out += "\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!t.label_header.empty()) out += t.labels.at(r) + (t.rows[r].empty() ? "" : ",");
    for (std::size_t i = 0; i < t.rows[r].size(); ++i) out += (i ? "," : "") + fmt(t.rows[r][i]);
    out += "\n";
  }
  return out;
}

/// JSON numbers are rounded through fmt so text output is stable.
inline double rounded(double x) { return std::isfinite(x) ? std::stod(fmt(x)) : x; }

inline json to_json(const Table& t) {
  json arr = json::array();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    json o;
    if (!t.label_header.empty()) o[t.label_header] = t.labels.at(r);
    for (std::size_t i = 0; i < t.header.size(); ++i) {
      const double v = t.rows[r][i];
      if (std::isfinite(v))
        o[t.header[i]] = rounded(v);
      else
        o[t.header[i]] = nullptr;
    }
    arr.push_back(o);
  }
  return arr;
}

/// Dump JSON with 9-significant-digit floats and a trailing newline.
inline std::string dump_json(const json& j) {
  // nlohmann prints shortest round-trip doubles; pre-rounded values stay short.
  return j.dump(2) + "\n";
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

/// Trace table: time_s and drive magnitude, then re/im of p and r for each
/// channel, then s_out.
inline Table trace_table(const FieldTraces& tr, const std::vector<std::string>& names) {
  Table t;
  t.header.push_back("time_s");
  t.header.push_back("sin_abs");
  for (const auto& n : names)
    for (const char* col : {"re_p_", "im_p_", "re_r_", "im_r_"}) t.header.push_back(col + n);
  t.header.push_back("re_sout");
  t.header.push_back("im_sout");
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    std::vector<double> row{tr.t[k], std::abs(tr.s_in[k])};
    for (std::size_t c = 0; c < names.size(); ++c) {
      row.push_back(tr.p[c][k].real());
      row.push_back(tr.p[c][k].imag());
      row.push_back(tr.r[c][k].real());
      row.push_back(tr.r[c][k].imag());
    }
    row.push_back(tr.s_out[k].real());
    row.push_back(tr.s_out[k].imag());
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// CSV input

/// Numeric CSV with a header row; returns rows keyed by the expected columns.
inline std::vector<std::vector<double>> read_csv_columns(const std::string& path,
                                                         const std::vector<std::string>& columns) {
  std::istringstream in(read_text(path));
  std::string line;
  detail::require(static_cast<bool>(std::getline(in, line)), path + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> head;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) head.push_back(cell);
  }
  std::vector<std::size_t> idx;
  for (const auto& c : columns) {
    auto it = std::find(head.begin(), head.end(), c);
    detail::require(it != head.end(), path + ": missing column '" + c + "'");
    idx.push_back(static_cast<std::size_t>(it - head.begin()));
  }
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    std::vector<double> row;
    for (std::size_t i : idx) {
      detail::require(i < cells.size(), path + ":" + std::to_string(lineno) + ": too few columns");
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cells[i], &used));
        detail::require(used == cells[i].size(), "trailing characters");
      } catch (const std::exception&) {
        throw DomainError(path + ":" + std::to_string(lineno) + ": '" + cells[i] + "' is not a number");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline PhaseSpectrum read_spectrum_csv(const std::string& path, bool excited) {
  PhaseSpectrum s;
  s.excited = excited;
  for (const auto& r : read_csv_columns(path, {"freq_hz", "phase_rad"})) {
    s.f.push_back(r[0]);
    s.phase.push_back(r[1]);
  }
  s.validate();
  return s;
}

inline std::vector<Shot> read_shots_csv(const std::string& path) {
  std::vector<Shot> shots;
  for (const auto& r : read_csv_columns(path, {"label", "i", "q"})) {
    detail::require(r[0] == 0.0 || r[0] == 1.0, path + ": label must be 0 or 1");
    shots.push_back({static_cast<int>(r[0]), r[1], r[2]});
  }
  return shots;
}

}  // namespace notchlab
