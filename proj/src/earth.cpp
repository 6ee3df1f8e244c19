#include "se23nav/earth.hpp"

#include <cmath>
#include <stdexcept>

namespace se23nav {

double meridian_radius(double lat, const EarthModel& em) {
  const double s2 = std::sin(lat) * std::sin(lat);
  const double w = 1.0 - em.e2() * s2;
  return em.a * (1.0 - em.e2()) / (w * std::sqrt(w));
}

double normal_radius(double lat, const EarthModel& em) {
  const double s2 = std::sin(lat) * std::sin(lat);
  return em.a / std::sqrt(1.0 - em.e2() * s2);
}

Vec3d geodetic_to_ecef(const Geodetic& g, const EarthModel& em) {
  const double n = normal_radius(g.lat, em);
  const double cl = std::cos(g.lat), sl = std::sin(g.lat);
  return Vec3d((n + g.h) * cl * std::cos(g.lon),
               (n + g.h) * cl * std::sin(g.lon),
               (n * (1.0 - em.e2()) + g.h) * sl);
}

Geodetic ecef_to_geodetic(const Vec3d& p, const EarthModel& em) {
  Geodetic g;
  g.lon = std::atan2(p.y(), p.x());
  const double rho = std::hypot(p.x(), p.y());
  const double z = p.z();
  if (rho < 1e-9) {  // polar axis: latitude is +-pi/2 exactly
    g.lat = (z >= 0.0) ? EIGEN_PI / 2.0 : -EIGEN_PI / 2.0;
    g.h = std::abs(z) - em.b();
    return g;
  }
  // Fixed point on latitude: tan(lat) = z / (rho - e^2 N cos(lat)).
  double lat = std::atan2(z, rho * (1.0 - em.e2()));
  double n = em.a;
  for (int i = 0; i < 64; ++i) {
    n = normal_radius(lat, em);
    const double next = std::atan2(z + em.e2() * n * std::sin(lat), rho);
    const double step = std::abs(next - lat);
    lat = next;
    if (step < 1e-13) break;
  }
  g.lat = lat;
  const double cl = std::cos(lat);
  if (std::abs(cl) > 0.1) {
    g.h = rho / cl - normal_radius(lat, em);
  } else {
    g.h = z / std::sin(lat) - normal_radius(lat, em) * (1.0 - em.e2());
  }
  return g;
}

Mat3d ecef_to_ned_rotation(const Geodetic& g) {
  const double cl = std::cos(g.lat), sl = std::sin(g.lat);
  const double cm = std::cos(g.lon), sm = std::sin(g.lon);
  Mat3d r;
  r << -sl * cm, -sl * sm, cl,   // north
       -sm,      cm,       0.0,  // east
       -cl * cm, -cl * sm, -sl;  // down
  return r;
}

Vec3d gravity(const Vec3d& p, const EarthModel& em) {
  if (p.norm() <= 6.2e6) {
    throw std::domain_error("gravity: position is inside the earth");
  }
  const Geodetic g = ecef_to_geodetic(p, em);
  const double s2 = std::sin(g.lat) * std::sin(g.lat);
  const double gamma0 =
      em.gamma_e * (1.0 + em.somigliana_k * s2) / std::sqrt(1.0 - em.e2() * s2);
  // Free-air style height factor, second order in h/a.
  const double hf = 1.0 -
      2.0 / em.a * (1.0 + em.f + em.m_ratio - 2.0 * em.f * s2) * g.h +
      3.0 * g.h * g.h / (em.a * em.a);
  const double gamma = gamma0 * hf;
  const Mat3d cen = ecef_to_ned_rotation(g);
  return cen.transpose() * Vec3d(0.0, 0.0, gamma);  // along local down
}

Vec3d gravitation(const Vec3d& p, const EarthModel& em) {
  const Vec3d w = em.omega_ie();
  return gravity(p, em) + w.cross(w.cross(p));
}

}  // namespace se23nav
