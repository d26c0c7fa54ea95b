#pragma once

#include <random>
#include <string>

#include "notchlab/notchlab.hpp"

namespace testing_support {

inline const notchlab::DeviceFile& reference_device() {
  static const notchlab::DeviceFile d = notchlab::load_device(std::string(NOTCHLAB_DATA) + "/reference_device.json");
  return d;
}

inline notchlab::CoupledPairGeometry mtl_row() { return reference_device().pair("MTL"); }
inline notchlab::CoupledPairGeometry cap_row() { return reference_device().pair("Cap"); }

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Random consonant MTL geometry around the reference dimensions.
inline notchlab::CoupledPairGeometry random_mtl(std::mt19937_64& rng, double zm = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  notchlab::CoupledPairGeometry g = mtl_row();
  g.l_r_open = (500 + 1000 * u(rng)) * 1e-6;
  g.l_p_open = (500 + 1000 * u(rng)) * 1e-6;
  g.l_r_short = (1000 + 1000 * u(rng)) * 1e-6;
  g.l_p_short = (1000 + 1000 * u(rng)) * 1e-6;
  notchlab::MtlCouplerParams m;
  m.len_c = (100 + 400 * u(rng)) * 1e-6;
  m.cm_over_c = 0.01 + 0.06 * u(rng);
  m.zm_over_z0 = zm;
  g.coupler = m;
  return g;
}

inline notchlab::CoupledPairGeometry random_cap(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  notchlab::CoupledPairGeometry g = cap_row();
  g.l_r_open = (200 + 2000 * u(rng)) * 1e-6;
  g.l_p_open = (200 + 2000 * u(rng)) * 1e-6;
  g.l_r_short = (200 + 2000 * u(rng)) * 1e-6;
  g.l_p_short = (200 + 2000 * u(rng)) * 1e-6;
  g.coupler = notchlab::CapacitiveCoupler{(0.2 + 3.0 * u(rng)) * 1e-15};
  return g;
}

/// A frequency at least `guard` (relative) away from every pole of g.
inline double off_pole(const notchlab::CoupledPairGeometry& g, double f, double guard = 1e-3) {
  for (int it = 0; it < 50; ++it) {
    bool ok = true;
    for (double f0 : {g.f_r(), g.f_p()})
      if (notchlab::detail::distance_to_pole(f, f0) < guard * f0) ok = false;
    if (ok) return f;
    f *= 1.0 + 3.0 * guard;
  }
  return f;
}

}  // namespace testing_support
