#include "uavtraj/channel_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace uavtraj {

namespace {

void require_positive(double value, const char* name)
{
    if (!(value > 0.0) || !std::isfinite(value))
        throw std::invalid_argument(std::string("channel parameter must be positive and finite: ") + name);
}

void require_finite(const LinkGeometry& geom)
{
    if (!std::isfinite(geom.horizontal_distance) || !std::isfinite(geom.uav_height) ||
        !std::isfinite(geom.elevation_angle) || !std::isfinite(geom.slant_distance))
        throw std::invalid_argument("link geometry is not finite");
}

double free_space_db(double distance, double frequency, double light_speed)
{
    return 20.0 * std::log10(4.0 * std::numbers::pi * frequency * distance / light_speed);
}

}  // namespace

void ChannelParams::validate() const
{
    require_positive(fc_uplink, "fc_uplink");
    require_positive(fc_mmwave, "fc_mmwave");
    require_positive(bw_uplink, "bw_uplink");
    require_positive(bw_mmwave, "bw_mmwave");
    require_positive(noise_power, "noise_power");
    require_positive(sinr_threshold, "sinr_threshold");
    require_positive(backhaul_range, "backhaul_range");
    require_positive(tx_power_iot, "tx_power_iot");
    require_positive(tx_power_uav, "tx_power_uav");
    require_positive(gain_tx, "gain_tx");
    require_positive(gain_rx, "gain_rx");
    require_positive(light_speed, "light_speed");
    if (!std::isfinite(alpha) || !std::isfinite(alpha_hat) || !std::isfinite(epsilon_los) ||
        !std::isfinite(epsilon_nlos))
        throw std::invalid_argument("environment constants must be finite");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }
double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

LinkGeometry make_geometry(double horizontal_distance, double uav_height)
{
    if (!std::isfinite(horizontal_distance) || !std::isfinite(uav_height) || horizontal_distance < 0.0 ||
        uav_height < 0.0)
        throw std::invalid_argument("link geometry needs finite, non-negative distance and height");
    LinkGeometry geom;
    geom.horizontal_distance = horizontal_distance;
    geom.uav_height = uav_height;
    geom.slant_distance = std::hypot(horizontal_distance, uav_height);
    geom.elevation_angle = std::atan2(uav_height, horizontal_distance);
    return geom;
}

LosProbability los_probability(const LinkGeometry& geom, const ChannelParams& params)
{
    require_finite(geom);
    const double degrees = geom.elevation_angle * 180.0 / std::numbers::pi;
    LosProbability p;
    p.los = 1.0 / (1.0 + params.alpha * std::exp(-params.alpha_hat * (degrees - params.alpha)));
    p.nlos = 1.0 - p.los;
    return p;
}

double path_loss_db(const LinkGeometry& geom, ChannelType type, const ChannelParams& params)
{
    require_finite(geom);
    if (!(geom.slant_distance > 0.0))
        throw std::invalid_argument("path loss undefined at zero distance");
    const double excess = type == ChannelType::los ? params.epsilon_los : params.epsilon_nlos;
    return free_space_db(geom.slant_distance, params.fc_uplink, params.light_speed) + excess;
}

double received_power(const LinkGeometry& geom, ChannelType type, const ChannelParams& params)
{
    return params.tx_power_iot / db_to_linear(path_loss_db(geom, type, params));
}

double weighted_received_power(const UplinkLink& link, const ChannelParams& params)
{
    const double zeta = los_probability(link.geometry, params).of(link.type);
    return received_power(link.geometry, link.type, params) / std::pow(10.0, zeta / 10.0);
}

double uplink_sinr(const UplinkLink& serving, std::span<const UplinkLink> interferers,
                   const ChannelParams& params)
{
    const double signal = weighted_received_power(serving, params);
    double interference = 0.0;
    for (const auto& link : interferers)
        interference += weighted_received_power(link, params);
    const double sinr = signal / (interference + params.noise_power);
    if (!std::isfinite(sinr))
        throw std::invalid_argument("uplink SINR is not finite");
    return sinr;
}

double uplink_rate(double sinr, int device_count, const ChannelParams& params)
{
    if (device_count < 1)
        throw std::invalid_argument("uplink rate needs at least one device");
    if (!std::isfinite(sinr))
        throw std::invalid_argument("uplink rate needs a finite SINR");
    if (!(sinr > params.sinr_threshold))
        return 0.0;
    return params.bw_uplink / device_count * std::log2(1.0 + sinr);
}

double backhaul_received_power(const LinkGeometry& geom, const ChannelParams& params)
{
    require_finite(geom);
    if (!(geom.slant_distance > 0.0))
        throw std::invalid_argument("backhaul power undefined at zero distance");
    double factor = params.light_speed / (4.0 * std::numbers::pi * geom.slant_distance * params.fc_mmwave);
    if (params.backhaul_squared)
        factor *= factor;
    return params.tx_power_uav * params.gain_tx * params.gain_rx * factor;
}

bool within_backhaul_range(const LinkGeometry& geom, const ChannelParams& params)
{
    return geom.horizontal_distance <= params.backhaul_range;
}

double backhaul_rate(const LinkGeometry& geom, const ChannelParams& params)
{
    const double power = backhaul_received_power(geom, params);
    if (!within_backhaul_range(geom, params))
        return 0.0;
    return params.bw_mmwave * std::log2(1.0 + power / (params.bw_mmwave * params.noise_power));
}

}  // namespace uavtraj
