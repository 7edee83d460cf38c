#pragma once

#include <span>
#include <utility>

namespace uavtraj {

/// Link-budget constants for the IoT uplink and the mmWave backhaul.
/// Every quantity is linear (watts, hertz, plain ratios); dB conversions
/// happen at the configuration boundary.
struct ChannelParams {
    double alpha = 9.61;          // environment constant in the LoS probability
    double alpha_hat = 0.16;      // environment constant in the LoS probability
    double epsilon_los = 1.0;     // excess attenuation, dB
    double epsilon_nlos = 20.0;   // excess attenuation, dB
    double fc_uplink = 2e9;
    double fc_mmwave = 28e9;
    double bw_uplink = 20e6;
    double bw_mmwave = 2e9;
    double noise_power = 1e-13;   // -100 dBm
    double sinr_threshold = 3.1622776601683795;  // 5 dB
    double backhaul_range = 300.0;
    double tx_power_iot = 0.1;    // 20 dBm
    double tx_power_uav = 0.1;    // 20 dBm
    double gain_tx = 10.0;        // 10 dBi
    double gain_rx = 10.0;        // 10 dBi
    double light_speed = 3e8;
    /// Square the free-space factor of the backhaul received power.
    bool backhaul_squared = false;

    /// Throws std::invalid_argument when a positivity invariant fails.
    void validate() const;
};

double db_to_linear(double db);
double linear_to_db(double linear);
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Geometry of one air-to-ground link. Build through make_geometry so the
/// derived fields stay consistent.
struct LinkGeometry {
    double horizontal_distance = 0.0;
    double uav_height = 0.0;
    double elevation_angle = 0.0;  // radians
    double slant_distance = 0.0;
};

LinkGeometry make_geometry(double horizontal_distance, double uav_height);

enum class ChannelType { los, nlos };

struct LosProbability {
    double los = 0.0;
    double nlos = 0.0;

    double of(ChannelType type) const { return type == ChannelType::los ? los : nlos; }
};

LosProbability los_probability(const LinkGeometry& geom, const ChannelParams& params);

/// Free-space loss plus the excess attenuation of the given channel type, in dB.
double path_loss_db(const LinkGeometry& geom, ChannelType type, const ChannelParams& params);

/// Received power of an IoT transmission, P_tx divided by the linear path loss.
double received_power(const LinkGeometry& geom, ChannelType type, const ChannelParams& params);

/// A link together with its sampled channel state for one slot.
struct UplinkLink {
    LinkGeometry geometry;
    ChannelType type = ChannelType::los;
};

/// Received power scaled by (10^(zeta/10))^-1, where zeta is the probability
/// of the link's sampled channel type. This is the per-link term that appears
/// both in the numerator and in the interference sum of the uplink SINR.
double weighted_received_power(const UplinkLink& link, const ChannelParams& params);

double uplink_sinr(const UplinkLink& serving, std::span<const UplinkLink> interferers,
                   const ChannelParams& params);

/// Per-device uplink capacity with the uplink band shared equally among
/// device_count devices. Zero unless the SINR clears the threshold.
double uplink_rate(double sinr, int device_count, const ChannelParams& params);

/// Received power at the ground station from a UAV at the given geometry.
double backhaul_received_power(const LinkGeometry& geom, const ChannelParams& params);

/// mmWave backhaul capacity. The range gate uses the horizontal distance to
/// the ground station; the received power uses the slant distance.
double backhaul_rate(const LinkGeometry& geom, const ChannelParams& params);

bool within_backhaul_range(const LinkGeometry& geom, const ChannelParams& params);

}  // namespace uavtraj
