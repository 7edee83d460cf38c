#pragma once

#include <span>
#include <vector>

#include "uavtraj/channel_model.hpp"

namespace uavtraj {

struct PropulsionParams {
    double k1 = 9.26e-4;
    double k2 = 2250.0;
    double gravity = 9.8;
    double velocity = 20.0;
    double acceleration = 0.0;
};

/// Upper bound of the propulsion power at a given cruise state.
double propulsion_power(const PropulsionParams& params);

/// Energy charged for covering `distance` meters; distance times propulsion power.
double mobility_energy(double distance, const PropulsionParams& params);

/// Distance charged for a hop at constant altitude: sqrt(h^2 + |d|^2).
double hop_distance(double horizontal, double height);

enum class BackhaulEnergyMode {
    /// Transmit power multiplied by the backhaul rate.
    power_times_rate,
    /// Transmit power multiplied by the slot duration while the link is up.
    power_times_slot,
};

double backhaul_energy(double rate, const ChannelParams& params,
                       BackhaulEnergyMode mode = BackhaulEnergyMode::power_times_rate,
                       double slot_duration = 1.0);

/// Rates and energies of one UAV during one slot.
struct StepEnergy {
    double backhaul_rate = 0.0;
    double uplink_rate = 0.0;  // summed over served devices
    double backhaul_energy = 0.0;
    double mobility_energy = 0.0;

    double rate() const { return backhaul_rate + uplink_rate; }
    double energy() const { return backhaul_energy + mobility_energy; }
};

/// Rate over energy for one slot. Throws std::domain_error on a zero-energy slot.
double step_efficiency(const StepEnergy& step);

/// Sum of per-slot efficiencies over a window of one UAV's slots.
double energy_efficiency(std::span<const StepEnergy> window);

/// Cumulative energy and efficiency bookkeeping for every UAV of an episode.
/// Fields only grow; record() rejects negative entries.
class EnergyLedger {
public:
    EnergyLedger() = default;
    explicit EnergyLedger(int uav_count);

    void record(int uav, const StepEnergy& step);

    int uav_count() const { return static_cast<int>(totals_.size()); }
    int slots(int uav) const { return totals_.at(uav).slots; }

    double mobility_energy(int uav) const { return totals_.at(uav).mobility_energy; }
    double backhaul_energy(int uav) const { return totals_.at(uav).backhaul_energy; }
    double backhaul_bits(int uav) const { return totals_.at(uav).backhaul_bits; }
    double uplink_bits(int uav) const { return totals_.at(uav).uplink_bits; }

    /// Running sum of per-slot efficiencies for one UAV.
    double efficiency(int uav) const { return totals_.at(uav).efficiency; }
    /// Per-UAV efficiencies summed across the fleet.
    double total_efficiency() const;

private:
    struct Totals {
        int slots = 0;
        double mobility_energy = 0.0;
        double backhaul_energy = 0.0;
        double backhaul_bits = 0.0;
        double uplink_bits = 0.0;
        double efficiency = 0.0;
    };
    std::vector<Totals> totals_;
};

}  // namespace uavtraj
