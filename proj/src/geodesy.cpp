#include "relnav/geodesy.hpp"

#include <cmath>
#include <stdexcept>

namespace relnav {
namespace geodesy {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSemiMajor = 6378137.0;           // WGS84 a, m
constexpr double kFlattening = 1.0 / 298.257223563;
constexpr double kScale = 0.9996;                  // central meridian scale k0
constexpr double kFalseEasting = 500000.0;
constexpr double kFalseNorthingSouth = 10000000.0;

double normalize_longitude(double lon_deg) {
  double lon = std::fmod(lon_deg + 180.0, 360.0);
  if (lon < 0.0) lon += 360.0;
  return lon - 180.0;
}

}  // namespace

UtmCoordinate to_utm(const GeodeticPoint& p) {
  const double lon = normalize_longitude(p.longitude_deg);
  const int zone = static_cast<int>(std::floor((lon + 180.0) / 6.0)) % 60 + 1;
  return to_utm(p, zone);
}

UtmCoordinate to_utm(const GeodeticPoint& p, int zone) {
  if (zone < 1 || zone > 60) {
    throw std::invalid_argument("to_utm: zone must lie in 1..60");
  }
  if (p.latitude_deg < -80.0 || p.latitude_deg > 84.0) {
    throw std::invalid_argument("to_utm: latitude outside the UTM band [-80, 84]");
  }

  const double phi = p.latitude_deg * kPi / 180.0;
  const double lon = normalize_longitude(p.longitude_deg);
  const double lon0 = zone * 6.0 - 183.0;
  const double dlon = (lon - lon0) * kPi / 180.0;

  const double f = kFlattening;
  const double n = f / (2.0 - f);
  const double n2 = n * n;
  const double n3 = n2 * n;
  const double n4 = n3 * n;
  const double radius = kSemiMajor / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0);
  const double alpha[4] = {
      n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0,
      13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0,
      61.0 * n3 / 240.0 - 103.0 * n4 / 140.0,
      49561.0 * n4 / 161280.0};

  // Conformal latitude, expressed through its tangent.
  const double e = std::sqrt(f * (2.0 - f));
  const double sphi = std::sin(phi);
  const double t = std::sinh(std::atanh(sphi) - e * std::atanh(e * sphi));

  const double xi_p = std::atan2(t, std::cos(dlon));
  const double eta_p = std::asinh(std::sin(dlon) / std::hypot(t, std::cos(dlon)));

  double xi = xi_p;
  double eta = eta_p;
  for (int j = 1; j <= 4; ++j) {
    xi += alpha[j - 1] * std::sin(2.0 * j * xi_p) * std::cosh(2.0 * j * eta_p);
    eta += alpha[j - 1] * std::cos(2.0 * j * xi_p) * std::sinh(2.0 * j * eta_p);
  }

  UtmCoordinate out;
  out.zone = zone;
  out.north = p.latitude_deg >= 0.0;
  out.easting = kFalseEasting + kScale * radius * eta;
  out.northing = (out.north ? 0.0 : kFalseNorthingSouth) + kScale * radius * xi;
  return out;
}

}  // namespace geodesy
}  // namespace relnav
