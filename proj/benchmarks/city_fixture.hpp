#pragma once

#include <memory>

#include "etaxi/estimation.hpp"
#include "etaxi/mdp_solver.hpp"
#include "etaxi/synthetic_city.hpp"

namespace etaxi::bench {

/// Synthetic grid city compiled into a solver instance.
inline std::shared_ptr<const MdpInstance> city_instance(int side, int horizon_min) {
  SyntheticCityConfig cfg;
  cfg.rows = cfg.cols = side;
  cfg.hot_spots = {side + 1, side * side / 2, side * side - side - 2};
  cfg.n_days = 3;
  cfg.discrepancy_rows = cfg.malformed_rows = 0;
  const auto city = generate_synthetic_city(cfg);
  const auto snapped = snap_and_filter(city.trips, city.graph, {}, {});
  const auto samples = to_speed_samples(snapped.trips);
  auto net = label_segment_speeds(city.graph, samples);
  net.set_idling_ratios(idling_ratio_stats(net, samples));
  const auto demand = estimate_demand(snapped.trips, net);
  const StationTable stations(net.graph(), city.stations);
  ModelInputs in;
  in.network = &net;
  in.stations = &stations;
  in.demand = &demand;
  SolverConfig sc;
  sc.horizon_min = horizon_min;
  sc.aggregation_k = static_cast<std::size_t>(side * side);
  return std::make_shared<const MdpInstance>(compile_instance(in, sc));
}

}  // namespace etaxi::bench
