#pragma once

#include <vector>

#include "etaxi/road_network.hpp"

namespace etaxi::testing {

inline constexpr LatLon kOrigin{40.75, -73.99};

/// rows x cols grid with two-way edges of `spacing_km`; junction ids are
/// 1 + row * cols + col, row 0 is the southern edge.
inline RoadGraph grid_graph(int rows, int cols, double spacing_km = 1.0) {
  std::vector<Junction> js;
  std::vector<EdgeSpec> es;
  auto id = [&](int r, int c) { return static_cast<JunctionId>(1 + r * cols + c); };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      js.push_back({id(r, c), offset_km(kOrigin, r * spacing_km, c * spacing_km)});
      if (c + 1 < cols) {
        es.push_back({id(r, c), id(r, c + 1), spacing_km});
        es.push_back({id(r, c + 1), id(r, c), spacing_km});
      }
      if (r + 1 < rows) {
        es.push_back({id(r, c), id(r + 1, c), spacing_km});
        es.push_back({id(r + 1, c), id(r, c), spacing_km});
      }
    }
  }
  return RoadGraph(std::move(js), es);
}

/// Two-way straight line of n junctions (ids 1..n).
inline RoadGraph line_graph(int n, double spacing_km = 1.0) { return grid_graph(1, n, spacing_km); }

}  // namespace etaxi::testing
