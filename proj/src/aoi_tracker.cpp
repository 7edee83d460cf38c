#include "uavtraj/aoi_tracker.hpp"

#include <algorithm>
#include <stdexcept>

namespace uavtraj {

AoiTable::AoiTable(int waypoint_count, std::optional<int> excluded)
    : excluded_(excluded)
{
    if (waypoint_count < 1)
        throw std::invalid_argument("AoI table needs at least one waypoint");
    if (excluded && (*excluded < 0 || *excluded >= waypoint_count))
        throw std::invalid_argument("excluded waypoint out of range");
    tracked_ = waypoint_count - (excluded ? 1 : 0);
    if (tracked_ < 1)
        throw std::invalid_argument("AoI table has no tracked waypoints");
    last_delivery_.assign(static_cast<std::size_t>(waypoint_count), 0);
}

bool AoiTable::tracked(int waypoint) const
{
    return !(excluded_ && *excluded_ == waypoint);
}

double AoiTable::current_age_sum() const
{
    if (slot_ == 0)
        return 0.0;
    double sum = 0.0;
    for (int p = 0; p < waypoint_count(); ++p)
        if (tracked(p))
            sum += age(p);
    return sum;
}

void AoiTable::tick(int t)
{
    if (t != slot_ + 1)
        throw std::invalid_argument("AoI table must advance one slot at a time");
    completed_sum_ += current_age_sum();
    slot_ = t;
}

void AoiTable::record_delivery(int waypoint, int t, int origin)
{
    if (waypoint < 0 || waypoint >= waypoint_count())
        throw std::out_of_range("delivery for unknown waypoint");
    if (t < slot_)
        throw std::invalid_argument("delivery timestamp precedes the table's current slot");
    if (origin > t || origin < 0)
        throw std::invalid_argument("delivered data cannot originate after its delivery");
    while (slot_ < t)
        tick(slot_ + 1);
    auto& last = last_delivery_[static_cast<std::size_t>(waypoint)];
    last = std::max(last, origin);
}

double AoiTable::average_aoi() const
{
    if (slot_ < 1)
        throw std::logic_error("average AoI needs at least one elapsed slot");
    return (completed_sum_ + current_age_sum()) / (static_cast<double>(slot_) * tracked_);
}

double AoiTable::normalized_average_aoi() const
{
    if (slot_ < 1)
        return 0.0;
    return std::clamp(average_aoi() / ((slot_ + 1) / 2.0), 0.0, 1.0);
}

void AoiTable::append_trace(std::vector<AoiTraceRow>& rows) const
{
    for (int p = 0; p < waypoint_count(); ++p)
        if (tracked(p))
            rows.push_back({slot_, p, age(p)});
}

}  // namespace uavtraj
