#include "uavtraj/energy_model.hpp"

#include <cmath>
#include <stdexcept>

namespace uavtraj {

double propulsion_power(const PropulsionParams& params)
{
    if (!(params.velocity > 0.0) || !std::isfinite(params.velocity))
        throw std::invalid_argument("propulsion power needs a positive velocity");
    if (!(params.k1 > 0.0) || !(params.k2 > 0.0) || !(params.gravity > 0.0))
        throw std::invalid_argument("propulsion constants must be positive");
    const double v = params.velocity;
    const double a = params.acceleration;
    const double g = params.gravity;
    return params.k1 * v * v * v + (params.k2 / v) * (1.0 + (a * a) / (g * g));
}

double mobility_energy(double distance, const PropulsionParams& params)
{
    if (!(distance >= 0.0) || !std::isfinite(distance))
        throw std::invalid_argument("mobility energy needs a non-negative distance");
    return distance * propulsion_power(params);
}

double hop_distance(double horizontal, double height)
{
    return std::hypot(height, horizontal);
}

double backhaul_energy(double rate, const ChannelParams& params, BackhaulEnergyMode mode, double slot_duration)
{
    if (!(rate >= 0.0) || !std::isfinite(rate))
        throw std::invalid_argument("backhaul energy needs a non-negative rate");
    if (mode == BackhaulEnergyMode::power_times_slot)
        return rate > 0.0 ? params.tx_power_uav * slot_duration : 0.0;
    return params.tx_power_uav * rate;
}

double step_efficiency(const StepEnergy& step)
{
    const double energy = step.energy();
    if (!(energy > 0.0))
        throw std::domain_error("energy efficiency undefined for a zero-energy slot");
    return step.rate() / energy;
}

double energy_efficiency(std::span<const StepEnergy> window)
{
    double sum = 0.0;
    for (const auto& step : window)
        sum += step_efficiency(step);
    return sum;
}

EnergyLedger::EnergyLedger(int uav_count)
{
    if (uav_count < 1)
        throw std::invalid_argument("energy ledger needs at least one UAV");
    totals_.resize(static_cast<std::size_t>(uav_count));
}

void EnergyLedger::record(int uav, const StepEnergy& step)
{
    if (step.backhaul_rate < 0.0 || step.uplink_rate < 0.0 || step.backhaul_energy < 0.0 ||
        step.mobility_energy < 0.0)
        throw std::invalid_argument("energy ledger entries must be non-negative");
    auto& t = totals_.at(static_cast<std::size_t>(uav));
    t.efficiency += step_efficiency(step);
    t.slots += 1;
    t.mobility_energy += step.mobility_energy;
    t.backhaul_energy += step.backhaul_energy;
    t.backhaul_bits += step.backhaul_rate;
    t.uplink_bits += step.uplink_rate;
}

double EnergyLedger::total_efficiency() const
{
    double sum = 0.0;
    for (const auto& t : totals_)
        sum += t.efficiency;
    return sum;
}

}  // namespace uavtraj
