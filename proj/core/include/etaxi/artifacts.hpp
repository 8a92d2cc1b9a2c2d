#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "etaxi/mdp_solver.hpp"
#include "etaxi/road_network.hpp"

namespace etaxi {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
/// 16 lower-case hex digits.
std::string hash_hex(std::uint64_t h);
std::string content_hash(std::string_view bytes);

/// Whole file as bytes; throws IoError.
std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames; throws IoError.
void write_file(const std::filesystem::path& path, std::string_view bytes);
nlohmann::json read_json_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Road graph

/// {junctions: [{id, lat, lon}], edges: [{from, to, km}]}
nlohmann::ordered_json graph_to_json(const RoadGraph& graph);
RoadGraph graph_from_json(const nlohmann::json& j);

/// Node CSV (id, lat, lon) plus edge CSV (from, to, km).
RoadGraph graph_from_csv(std::istream& nodes, std::istream& edges);

/// Reads a graph from `path`: `.json`, or a node CSV whose edges live next to
/// it as `<stem>_edges.csv`.
RoadGraph load_graph(const std::filesystem::path& path);

/// Stations CSV: id, lat, lon, modes (`mode3`, `fast_dc`, or both joined by
/// ';'). Stations are snapped to the nearest junction.
std::vector<ChargingStation> read_stations_csv(std::istream& in, const RoadGraph& graph,
                                               double max_snap_km);

// ---------------------------------------------------------------------------
// Speed network

/// Graph, speed settings, per-edge hourly speeds and hourly idling ratios.
nlohmann::ordered_json network_to_json(const SpeedNetwork& net);
SpeedNetwork network_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Solver artifacts

/// Hash of every table the recurrence reads.
std::string instance_hash(const MdpInstance& m);

/// One row per live or dead state: t, junction, bin, value, best target
/// junction and charging minutes (empty for dead states).
void write_values_csv(std::ostream& out, const Solution& sol);
/// Values in state order; throws DataError on shape mismatch.
std::vector<double> read_values_csv(std::istream& in, const MdpInstance& m);

}  // namespace etaxi
