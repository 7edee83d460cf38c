#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "uavtraj/aoi_tracker.hpp"
#include "uavtraj/channel_model.hpp"
#include "uavtraj/config.hpp"
#include "uavtraj/energy_model.hpp"

namespace uavtraj {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double distance(Point a, Point b);

/// Trajectory points, the links between them and the IoT devices parked at
/// each point. Waypoint `base` is the ground station.
struct WaypointGraph {
    std::vector<Point> positions;
    int base = 0;
    std::vector<std::vector<int>> neighbors;  // sorted, never contains the point itself
    std::vector<int> devices;

    int size() const { return static_cast<int>(positions.size()); }
    int degree(int p) const { return static_cast<int>(neighbors.at(static_cast<std::size_t>(p)).size()); }
    int max_degree() const;
    bool adjacent(int a, int b) const;
    bool connected() const;

    /// Throws std::invalid_argument when an invariant is broken.
    void validate(int total_devices) const;
};

/// Build a graph from explicit points; links join every pair closer than `radius`.
WaypointGraph make_graph(std::vector<Point> positions, int base, double radius, std::vector<int> devices);

/// Random geometric graph: the ground station sits at the centre of the area,
/// the other points are uniform in it, links join pairs within the coverage
/// radius, and the draw repeats until the graph is connected. Devices are
/// spread multinomially over the non-station points.
WaypointGraph generate_graph(const ScenarioConfig& config, std::mt19937_64& rng);

using VisitMask = std::uint64_t;

inline bool visited(VisitMask mask, int p) { return (mask >> p) & 1U; }

/// Joint action encoding. Every UAV picks a slot: 0 hovers, k >= 1 flies to
/// the k-th neighbour of its current waypoint. The joint index is the slot
/// tuple read as a base-(max_degree+1) number with UAV 0 least significant.
class ActionSpace {
public:
    ActionSpace() = default;
    ActionSpace(int uav_count, int slots_per_uav);

    int uav_count() const { return uavs_; }
    int slots_per_uav() const { return slots_; }
    int size() const { return size_; }

    std::vector<int> decode(int index) const;
    int encode(const std::vector<int>& slots) const;

private:
    int uavs_ = 0;
    int slots_ = 0;
    int size_ = 0;
};

/// Immutable description of one scenario instance shared by every episode.
struct Scenario {
    ScenarioConfig config;
    ChannelParams channel;
    PropulsionParams cruise;
    PropulsionParams hover;
    WaypointGraph graph;
    ActionSpace actions;

    std::uint64_t seed = 0;
};

/// Generate the graph from `seed` and derive the action space.
std::shared_ptr<const Scenario> build_scenario(const ScenarioConfig& config, std::uint64_t seed);
std::shared_ptr<const Scenario> build_scenario(const ScenarioConfig& config, WaypointGraph graph,
                                               std::uint64_t seed = 0);

struct JointAction {
    int index = 0;
    std::vector<int> targets;  // per-UAV destination waypoint; equal to the origin when hovering
};

struct ConstraintFlags {
    bool non_overlap = true;  // visited sets only share the ground station
    bool coverage = true;     // all points visited; only evaluated at episode end
    bool energy = true;       // running efficiency at or above its threshold
    bool aoi = true;          // normalized average age at or below its threshold

    bool all() const { return non_overlap && coverage && energy && aoi; }
    bool operator==(const ConstraintFlags&) const = default;
};

/// Per-slot quantities accumulated over an episode for the harness metrics.
struct ServiceCounters {
    double uplink_bits = 0.0;
    double backhaul_bits = 0.0;
    int active_uav_slots = 0;     // UAV-slots with at least one device served
    long served_device_slots = 0; // device-slots with non-zero uplink rate
    int constraint_violations = 0;

    bool operator==(const ServiceCounters&) const = default;
};

struct WorldState {
    int slot = 0;
    std::vector<int> position;
    std::vector<double> height;
    int target = 0;
    std::vector<VisitMask> visits;
    /// Per UAV and waypoint, origin slot of data collected but not yet delivered; -1 if none.
    std::vector<std::vector<int>> pending;
    double eta_step = 0.0;     // normalized fleet efficiency of the last slot
    double eta_sum = 0.0;      // sum of normalized step efficiencies
    double aoi = 0.0;          // normalized average AoI
    AoiTable aoi_table;
    EnergyLedger energy;
    ServiceCounters service;
    ConstraintFlags flags;
    double episode_return = 0.0;
    bool done = false;
    std::mt19937_64 rng;

    /// Mean normalized efficiency over elapsed slots, in [0, 1].
    double eta() const { return slot > 0 ? eta_sum / slot : 0.0; }
    VisitMask covered() const;
};

/// Bit-for-bit comparison, RNG state included.
bool same_state(const WorldState& a, const WorldState& b);

struct StepResult {
    double reward = 0.0;
    bool done = false;
    ConstraintFlags flags;
};

std::vector<JointAction> enumerate_actions(const WorldState& state, const Scenario& scenario);
std::vector<std::uint8_t> feasible_mask(const WorldState& state, const Scenario& scenario);
bool is_feasible(const WorldState& state, const Scenario& scenario, int action_index);
JointAction decode_action(const WorldState& state, const Scenario& scenario, int action_index);

ConstraintFlags check_constraints(const WorldState& state, const Scenario& scenario, bool episode_end);

/// Reward for a post-action state's constraint flags and the slot's efficiency.
/// Broken non-overlap, coverage or efficiency constraints give -alpha1; a
/// lone AoI violation gives 0, and so does a tour that has not yet visited
/// every point; otherwise alpha1 * eta.
double reward(const ConstraintFlags& flags, double eta, double alpha1, bool tour_complete = true);

/// Features in [0, 1]: per-UAV (x/X, y/Y), ground-station (x/X, y/Y),
/// running efficiency and normalized average AoI. Length 2U + 4.
std::vector<double> encode_state(const WorldState& state, const Scenario& scenario);
int feature_length(const Scenario& scenario);

/// Copyable simulator. A copy is an independent clone of the episode.
class Environment {
public:
    explicit Environment(std::shared_ptr<const Scenario> scenario);

    /// Start positions are drawn without replacement, heights uniformly in
    /// the configured band, and the ground station counts as visited by all.
    const WorldState& reset(std::uint64_t episode_seed);

    /// Place UAVs explicitly. Used by tests and the tabular reference.
    const WorldState& reset_at(const std::vector<int>& positions, const std::vector<double>& heights,
                               std::uint64_t episode_seed);

    StepResult step(int action_index);

    const WorldState& state() const { return state_; }
    void restore(const WorldState& state) { state_ = state; }
    const Scenario& scenario() const { return *scenario_; }
    std::shared_ptr<const Scenario> scenario_ptr() const { return scenario_; }

    std::vector<double> features() const { return encode_state(state_, *scenario_); }
    std::vector<std::uint8_t> mask() const { return feasible_mask(state_, *scenario_); }

private:
    std::shared_ptr<const Scenario> scenario_;
    WorldState state_;
};

}  // namespace uavtraj
