// WGS-84 earth model: normal gravity, gravitation, geodetic/ECEF conversions and the
// local north-east-down frame. Positions are ECEF meters unless stated otherwise.
//
// Vocabulary: "gravity" g includes the centrifugal term and is what a plumb line
// senses; "gravitation" is the mass attraction alone, g_bar = g + (omega x)^2 p.
// The transformed-state dynamics consume gravitation.

#pragma once

#include "se23nav/liegroup.hpp"

namespace se23nav {

struct Geodetic {
  double lat = 0.0;  // rad
  double lon = 0.0;  // rad
  double h = 0.0;    // m above ellipsoid
};

// WGS-84 defining and derived constants.
struct EarthModel {
  double a = 6378137.0;                  // semi-major axis, m
  double f = 1.0 / 298.257223563;        // flattening
  double omega = 7.292115e-5;            // rotation rate, rad/s
  double gamma_e = 9.7803253359;         // normal gravity at equator, m/s^2
  double somigliana_k = 1.931852652458e-3;
  double m_ratio = 3.449786506841e-3;    // omega^2 a^2 b / GM

  double e2() const { return f * (2.0 - f); }
  double b() const { return a * (1.0 - f); }
  Vec3d omega_ie() const { return Vec3d(0.0, 0.0, omega); }
};

// Closed-form geodetic -> ECEF.
Vec3d geodetic_to_ecef(const Geodetic& g, const EarthModel& em);

// Iterative ECEF -> geodetic (latitude fixed point, tolerance 1e-12 rad, capped
// iteration count). Exact at the poles and on the equatorial plane.
Geodetic ecef_to_geodetic(const Vec3d& p, const EarthModel& em);

// Rows are the unit north, east and down axes at g, i.e. the matrix maps ECEF
// vectors into the local NED frame (C_e^n).
Mat3d ecef_to_ned_rotation(const Geodetic& g);

// Normal gravity (Somigliana with first-order height correction) as an ECEF vector
// along the local down axis. Throws std::domain_error for positions well inside the
// ellipsoid (|p| <= 6.2e6 m) where the geodetic conversion loses meaning.
Vec3d gravity(const Vec3d& p, const EarthModel& em);

// Mass attraction: gravity with the centrifugal acceleration removed,
// g_bar = g + (omega x)(omega x) p.
Vec3d gravitation(const Vec3d& p, const EarthModel& em);

// Meridian and prime-vertical radii of curvature at latitude lat.
double meridian_radius(double lat, const EarthModel& em);
double normal_radius(double lat, const EarthModel& em);

}  // namespace se23nav
