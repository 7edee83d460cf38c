#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "uavtraj/config.hpp"
#include "uavtraj/environment.hpp"

namespace uavtraj {

struct TraceStep {
    int slot = 0;
    int action = 0;
    std::vector<int> positions;
    double reward = 0.0;
    double eta = 0.0;
    double aoi = 0.0;
    ConstraintFlags flags;
    bool done = false;

    bool operator==(const TraceStep&) const = default;
};

TraceStep make_trace_step(const WorldState& after, int action, const StepResult& result);

/// Everything needed to re-run an episode: the config, the scenario and
/// episode seeds, and the per-slot records.
struct EpisodeTrace {
    ScenarioConfig config;
    std::uint64_t scenario_seed = 0;
    std::uint64_t episode_seed = 0;
    std::string agent;
    std::vector<TraceStep> steps;
};

/// Line-delimited JSON: a header object, then one object per slot.
void write_trace(const EpisodeTrace& trace, std::ostream& out);
void write_trace(const EpisodeTrace& trace, const std::filesystem::path& path);
EpisodeTrace read_trace(std::istream& in);
EpisodeTrace read_trace(const std::filesystem::path& path);

struct TraceDiff {
    int slot = 0;
    std::string field;
    std::string expected;
    std::string actual;
};

/// Rebuild the scenario, replay the logged actions and report every field
/// that differs from the log.
std::vector<TraceDiff> replay_trace(const EpisodeTrace& trace);

}  // namespace uavtraj
