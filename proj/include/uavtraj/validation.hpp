#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavtraj/config.hpp"

namespace uavtraj {

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Invariant and oracle checks that need no training: AoI recurrence,
/// LoS/NLoS complementarity, replay FIFO eviction, uniform replay sampling,
/// feasibility-mask respect, the reward case table, the partition property
/// of accepting episodes and seeded trace replay.
std::vector<PropertyResult> run_property_suites(const ScenarioConfig& config, std::uint64_t seed);

bool all_passed(const std::vector<PropertyResult>& results);

}  // namespace uavtraj
