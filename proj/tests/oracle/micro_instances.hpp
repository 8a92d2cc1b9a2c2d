#pragma once

#include <cstdint>

#include "etaxi/mdp_solver.hpp"

namespace etaxi::testing {

/// Random instance within the brute-force budget: at most 4 nodes, 6 steps of
/// 15 minutes, 3 battery bins and charging durations {0, 15}.
MdpInstance random_micro_instance(std::uint64_t seed);

}  // namespace etaxi::testing
