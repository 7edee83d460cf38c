#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uavtraj/channel_model.hpp"
#include "uavtraj/energy_model.hpp"

namespace uavtraj {

/// Every tunable of a scenario and of the learners that run on it.
///
/// Stored as a sectioned key = value text file. Radio quantities are kept in
/// the units people write them in (dBm, dB, dBi) and converted to linear
/// values by channel_params().
struct ScenarioConfig {
    // [scenario]
    int uavs = 3;
    int waypoints = 14;
    int iot_devices = 100;
    double area_x = 1000.0;
    double area_y = 1000.0;
    double height_min = 140.0;
    double height_max = 250.0;
    double coverage_radius = 300.0;

    // [channel]
    double alpha = 9.61;
    double alpha_hat = 0.16;
    double epsilon_los_db = 1.0;
    double epsilon_nlos_db = 20.0;
    double fc_uplink_hz = 2e9;
    double fc_mmwave_hz = 28e9;
    double bw_uplink_hz = 20e6;
    double bw_mmwave_hz = 2e9;
    double noise_dbm = -100.0;
    double sinr_threshold_db = 5.0;
    double backhaul_range_m = 300.0;
    double iot_tx_dbm = 20.0;
    double uav_tx_dbm = 20.0;
    double gain_tx_dbi = 10.0;
    double gain_rx_dbi = 10.0;
    double light_speed = 3e8;
    bool backhaul_squared = false;

    // [energy]
    double k1 = 9.26e-4;
    double k2 = 2250.0;
    double gravity = 9.8;
    double max_velocity = 100.0;
    double max_acceleration = 5.0;
    double cruise_velocity = 20.0;
    double hover_velocity = 1.0;
    double slot_duration = 1.0;
    bool backhaul_energy_per_slot = false;

    // [reward]
    double alpha1 = 1.0;
    double eta_threshold = 0.3;
    double eta_cap = 20000.0;
    double aoi_threshold = 0.7;

    // [episode]
    int horizon = 200;
    bool stop_on_coverage = true;

    // [learning]
    double gamma = 0.7;
    double learning_rate = 1e-3;
    int hidden_units = 100;
    int replay_capacity = 200;
    int batch_size = 32;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.5;
    int target_sync_period = 50;
    int episodes = 100;
    int eval_episodes = 100;

    // [run]
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    ChannelParams channel_params() const;
    PropulsionParams cruise_params() const;
    PropulsionParams hover_params() const;
    BackhaulEnergyMode backhaul_energy_mode() const;

    /// Throws std::invalid_argument naming the first offending key.
    void validate() const;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Parse the sectioned key = value dialect. Keys left out keep their
/// defaults; unknown sections or keys are rejected.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Full serialization, every key written, doubles in shortest round-trip form.
std::string serialize_config(const ScenarioConfig& config);
void save_config(const ScenarioConfig& config, const std::filesystem::path& path);

/// Hex FNV-1a digest of the serialized config.
std::string config_hash(const ScenarioConfig& config);

/// Apply a single "section.key=value" override.
void set_config_value(ScenarioConfig& config, const std::string& dotted_key, const std::string& value);

}  // namespace uavtraj
