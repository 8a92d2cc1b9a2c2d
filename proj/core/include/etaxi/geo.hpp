#pragma once

namespace etaxi {

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr double kKmPerMile = 1.609344;

/// Great-circle distance (haversine), kilometers.
double haversine_km(LatLon a, LatLon b);

struct BoundingBox {
  double min_lat = -90.0;
  double max_lat = 90.0;
  double min_lon = -180.0;
  double max_lon = 180.0;

  bool contains(LatLon p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
};

/// Point displaced from `origin` by the given north/east offsets in km
/// (equirectangular; adequate for city-scale fixtures).
LatLon offset_km(LatLon origin, double north_km, double east_km);

}  // namespace etaxi
