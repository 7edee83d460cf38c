#pragma once

#include <optional>
#include <vector>

namespace uavtraj {

struct AoiTraceRow {
    int slot = 0;
    int waypoint = 0;
    int age = 0;
};

/// Age of information per waypoint as seen by the ground station.
///
/// The table advances one slot at a time. A waypoint's age is the current
/// slot minus the origin slot of the freshest update delivered from it;
/// waypoints with no delivery yet age from slot 0. The running sum behind
/// the time-averaged age covers slots 1..slot() and only includes tracked
/// waypoints (everything except the optional excluded one).
class AoiTable {
public:
    AoiTable() = default;
    explicit AoiTable(int waypoint_count, std::optional<int> excluded = std::nullopt);

    int slot() const { return slot_; }
    int waypoint_count() const { return static_cast<int>(last_delivery_.size()); }
    int tracked_count() const { return tracked_; }
    bool tracked(int waypoint) const;

    /// Advance to slot t, which must be slot() + 1.
    void tick(int t);

    /// Register a delivery at slot t of data generated at slot origin.
    /// t earlier than slot() is rejected; t later than slot() ticks forward first.
    /// Data older than the freshest delivered update does not change the age.
    void record_delivery(int waypoint, int t, int origin);
    void record_delivery(int waypoint, int t) { record_delivery(waypoint, t, t); }

    int age(int waypoint) const { return slot_ - last_delivery_.at(static_cast<std::size_t>(waypoint)); }
    int last_delivery(int waypoint) const { return last_delivery_.at(static_cast<std::size_t>(waypoint)); }

    /// Time-averaged age over slots 1..slot() and tracked waypoints.
    /// Throws std::logic_error at slot 0.
    double average_aoi() const;

    /// average_aoi() divided by the average a never-updated waypoint would
    /// have, (slot()+1)/2. Lies in [0, 1]; 0 at slot 0.
    double normalized_average_aoi() const;

    /// Ages of all tracked waypoints at the current slot.
    void append_trace(std::vector<AoiTraceRow>& rows) const;

private:
    double current_age_sum() const;

    int slot_ = 0;
    int tracked_ = 0;
    std::optional<int> excluded_;
    std::vector<int> last_delivery_;
    double completed_sum_ = 0.0;  // sum of ages over slots 1..slot()-1
};

}  // namespace uavtraj
