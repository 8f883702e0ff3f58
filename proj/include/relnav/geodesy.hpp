#pragma once

namespace relnav {
namespace geodesy {

/// Geodetic position on the WGS84 ellipsoid, in degrees.
/// Latitude must lie in [-80, 84], the band UTM covers.
struct GeodeticPoint {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
};

/// Universal Transverse Mercator coordinate.
struct UtmCoordinate {
  int zone = 0;           ///< 1 to 60
  bool north = true;      ///< hemisphere
  double easting = 0.0;   ///< m, false easting 500000 at the central meridian
  double northing = 0.0;  ///< m, in [0, 1e7)
};

/// \brief Projects a WGS84 geodetic point to UTM.
///
/// Transverse Mercator by the Krueger series in the third flattening to
/// fourth order, scale 0.9996, false easting 500000 m, false northing
/// 10000000 m on the southern hemisphere. Accurate to well under 1 cm
/// anywhere inside the zone. The zone is derived from the longitude.
/// \throws std::invalid_argument when the latitude is outside [-80, 84].
UtmCoordinate to_utm(const GeodeticPoint& p);

/// \brief Projects into a caller-fixed zone, so that a dataset anchored to
///        the zone of its first fix stays in one frame near zone borders.
/// \throws std::invalid_argument for a zone outside 1 to 60 or a latitude
///         outside [-80, 84].
UtmCoordinate to_utm(const GeodeticPoint& p, int zone);

}  // namespace geodesy
}  // namespace relnav
