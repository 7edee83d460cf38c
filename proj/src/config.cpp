#include "uavtraj/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace uavtraj {

namespace {

using FieldRef = std::variant<int*, double*, bool*, std::vector<std::uint64_t>*>;

struct Field {
    const char* section;
    const char* key;
    FieldRef ref;
};

std::vector<Field> fields_of(ScenarioConfig& c)
{
    return {
        {"scenario", "uavs", &c.uavs},
        {"scenario", "waypoints", &c.waypoints},
        {"scenario", "iot_devices", &c.iot_devices},
        {"scenario", "area_x", &c.area_x},
        {"scenario", "area_y", &c.area_y},
        {"scenario", "height_min", &c.height_min},
        {"scenario", "height_max", &c.height_max},
        {"scenario", "coverage_radius", &c.coverage_radius},

        {"channel", "alpha", &c.alpha},
        {"channel", "alpha_hat", &c.alpha_hat},
        {"channel", "epsilon_los_db", &c.epsilon_los_db},
        {"channel", "epsilon_nlos_db", &c.epsilon_nlos_db},
        {"channel", "fc_uplink_hz", &c.fc_uplink_hz},
        {"channel", "fc_mmwave_hz", &c.fc_mmwave_hz},
        {"channel", "bw_uplink_hz", &c.bw_uplink_hz},
        {"channel", "bw_mmwave_hz", &c.bw_mmwave_hz},
        {"channel", "noise_dbm", &c.noise_dbm},
        {"channel", "sinr_threshold_db", &c.sinr_threshold_db},
        {"channel", "backhaul_range_m", &c.backhaul_range_m},
        {"channel", "iot_tx_dbm", &c.iot_tx_dbm},
        {"channel", "uav_tx_dbm", &c.uav_tx_dbm},
        {"channel", "gain_tx_dbi", &c.gain_tx_dbi},
        {"channel", "gain_rx_dbi", &c.gain_rx_dbi},
        {"channel", "light_speed", &c.light_speed},
        {"channel", "backhaul_squared", &c.backhaul_squared},

        {"energy", "k1", &c.k1},
        {"energy", "k2", &c.k2},
        {"energy", "gravity", &c.gravity},
        {"energy", "max_velocity", &c.max_velocity},
        {"energy", "max_acceleration", &c.max_acceleration},
        {"energy", "cruise_velocity", &c.cruise_velocity},
        {"energy", "hover_velocity", &c.hover_velocity},
        {"energy", "slot_duration", &c.slot_duration},
        {"energy", "backhaul_energy_per_slot", &c.backhaul_energy_per_slot},

        {"reward", "alpha1", &c.alpha1},
        {"reward", "eta_threshold", &c.eta_threshold},
        {"reward", "eta_cap", &c.eta_cap},
        {"reward", "aoi_threshold", &c.aoi_threshold},

        {"episode", "horizon", &c.horizon},
        {"episode", "stop_on_coverage", &c.stop_on_coverage},

        {"learning", "gamma", &c.gamma},
        {"learning", "learning_rate", &c.learning_rate},
        {"learning", "hidden_units", &c.hidden_units},
        {"learning", "replay_capacity", &c.replay_capacity},
        {"learning", "batch_size", &c.batch_size},
        {"learning", "epsilon_start", &c.epsilon_start},
        {"learning", "epsilon_end", &c.epsilon_end},
        {"learning", "epsilon_decay_fraction", &c.epsilon_decay_fraction},
        {"learning", "target_sync_period", &c.target_sync_period},
        {"learning", "episodes", &c.episodes},
        {"learning", "eval_episodes", &c.eval_episodes},

        {"run", "seeds", &c.seeds},
    };
}

std::string format_double(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{})
        throw std::runtime_error("cannot format number");
    return std::string(buf, end);
}

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(const std::string& raw, const std::string& key)
{
    const std::string text = trim(raw);
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw std::invalid_argument("config key " + key + ": cannot parse '" + text + "'");
    return value;
}

std::string to_text(const FieldRef& ref)
{
    return std::visit(
        [](auto* p) -> std::string {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, int>)
                return std::to_string(*p);
            else if constexpr (std::is_same_v<T, double>)
                return format_double(*p);
            else if constexpr (std::is_same_v<T, bool>)
                return *p ? "true" : "false";
            else {
                std::string out;
                for (std::size_t i = 0; i < p->size(); ++i) {
                    if (i)
                        out += ",";
                    out += std::to_string((*p)[i]);
                }
                return out;
            }
        },
        ref);
}

void from_text(const FieldRef& ref, const std::string& raw, const std::string& key)
{
    std::visit(
        [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, int>)
                *p = parse_number<int>(raw, key);
            else if constexpr (std::is_same_v<T, double>)
                *p = parse_number<double>(raw, key);
            else if constexpr (std::is_same_v<T, bool>) {
                const std::string v = trim(raw);
                if (v == "true" || v == "1")
                    *p = true;
                else if (v == "false" || v == "0")
                    *p = false;
                else
                    throw std::invalid_argument("config key " + key + ": expected true/false");
            } else {
                p->clear();
                std::stringstream ss(raw);
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!trim(item).empty())
                        p->push_back(parse_number<std::uint64_t>(item, key));
            }
        },
        ref);
}

Field* find_field(std::vector<Field>& fields, const std::string& section, const std::string& key)
{
    for (auto& f : fields)
        if (section == f.section && key == f.key)
            return &f;
    return nullptr;
}

void require(bool ok, const char* what)
{
    if (!ok)
        throw std::invalid_argument(std::string("invalid config: ") + what);
}

}  // namespace

ChannelParams ScenarioConfig::channel_params() const
{
    ChannelParams p;
    p.alpha = alpha;
    p.alpha_hat = alpha_hat;
    p.epsilon_los = epsilon_los_db;
    p.epsilon_nlos = epsilon_nlos_db;
    p.fc_uplink = fc_uplink_hz;
    p.fc_mmwave = fc_mmwave_hz;
    p.bw_uplink = bw_uplink_hz;
    p.bw_mmwave = bw_mmwave_hz;
    p.noise_power = dbm_to_watts(noise_dbm);
    p.sinr_threshold = db_to_linear(sinr_threshold_db);
    p.backhaul_range = backhaul_range_m;
    p.tx_power_iot = dbm_to_watts(iot_tx_dbm);
    p.tx_power_uav = dbm_to_watts(uav_tx_dbm);
    p.gain_tx = db_to_linear(gain_tx_dbi);
    p.gain_rx = db_to_linear(gain_rx_dbi);
    p.light_speed = light_speed;
    p.backhaul_squared = backhaul_squared;
    return p;
}

PropulsionParams ScenarioConfig::cruise_params() const
{
    return {k1, k2, gravity, cruise_velocity, 0.0};
}

PropulsionParams ScenarioConfig::hover_params() const
{
    return {k1, k2, gravity, hover_velocity, 0.0};
}

BackhaulEnergyMode ScenarioConfig::backhaul_energy_mode() const
{
    return backhaul_energy_per_slot ? BackhaulEnergyMode::power_times_slot
                                    : BackhaulEnergyMode::power_times_rate;
}

void ScenarioConfig::validate() const
{
    require(uavs >= 1, "scenario.uavs must be >= 1");
    require(waypoints >= 2 && waypoints <= 64, "scenario.waypoints must be in [2, 64]");
    require(uavs <= waypoints, "scenario.uavs must not exceed scenario.waypoints");
    require(iot_devices >= 1, "scenario.iot_devices must be >= 1");
    require(area_x > 0 && area_y > 0, "scenario.area_x/area_y must be positive");
    require(height_min > 0 && height_max >= height_min, "scenario heights must satisfy 0 < min <= max");
    require(coverage_radius > 0, "scenario.coverage_radius must be positive");
    channel_params().validate();
    require(k1 > 0 && k2 > 0 && gravity > 0, "energy constants must be positive");
    require(cruise_velocity > 0 && cruise_velocity <= max_velocity, "energy.cruise_velocity must be in (0, max_velocity]");
    require(hover_velocity > 0 && hover_velocity <= max_velocity, "energy.hover_velocity must be in (0, max_velocity]");
    require(slot_duration > 0, "energy.slot_duration must be positive");
    require(alpha1 > 0, "reward.alpha1 must be positive");
    require(eta_cap > 0, "reward.eta_cap must be positive");
    require(eta_threshold >= 0 && eta_threshold <= 1, "reward.eta_threshold must be in [0, 1]");
    require(aoi_threshold >= 0 && aoi_threshold <= 1, "reward.aoi_threshold must be in [0, 1]");
    require(horizon >= 1, "episode.horizon must be >= 1");
    require(gamma >= 0 && gamma <= 1, "learning.gamma must be in [0, 1]");
    require(learning_rate >= 0, "learning.learning_rate must be >= 0");
    require(hidden_units >= 1, "learning.hidden_units must be >= 1");
    require(replay_capacity >= 1, "learning.replay_capacity must be >= 1");
    require(batch_size >= 1, "learning.batch_size must be >= 1");
    require(0 <= epsilon_end && epsilon_end <= epsilon_start && epsilon_start <= 1,
            "learning epsilon bounds must satisfy 0 <= end <= start <= 1");
    require(epsilon_decay_fraction > 0 && epsilon_decay_fraction <= 1,
            "learning.epsilon_decay_fraction must be in (0, 1]");
    require(target_sync_period >= 1, "learning.target_sync_period must be >= 1");
    require(episodes >= 1 && eval_episodes >= 1, "learning episode counts must be >= 1");
    require(!seeds.empty(), "run.seeds must not be empty");
}

ScenarioConfig parse_config(const std::string& text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config syntax error: ") + e.what());
    }
    ScenarioConfig config;
    auto fields = fields_of(config);
    for (const auto& [section, entries] : tree) {
        if (entries.empty())
            throw std::invalid_argument("config key outside any section: " + section);
        for (const auto& [key, value] : entries) {
            Field* f = find_field(fields, section, key);
            if (!f)
                throw std::invalid_argument("unknown config key: " + section + "." + key);
            from_text(f->ref, value.data(), section + "." + key);
        }
    }
    config.validate();
    return config;
}

ScenarioConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& config)
{
    ScenarioConfig copy = config;
    std::string out;
    std::string current;
    for (const auto& f : fields_of(copy)) {
        if (current != f.section) {
            if (!current.empty())
                out += "\n";
            current = f.section;
            out += "[" + current + "]\n";
        }
        out += std::string(f.key) + " = " + to_text(f.ref) + "\n";
    }
    return out;
}

void save_config(const ScenarioConfig& config, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write config file: " + path.string());
    out << serialize_config(config);
}

std::string config_hash(const ScenarioConfig& config)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : serialize_config(config)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void set_config_value(ScenarioConfig& config, const std::string& dotted_key, const std::string& value)
{
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos)
        throw std::invalid_argument("override key must look like section.key: " + dotted_key);
    auto fields = fields_of(config);
    Field* f = find_field(fields, dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
    if (!f)
        throw std::invalid_argument("unknown config key: " + dotted_key);
    from_text(f->ref, value, dotted_key);
}

}  // namespace uavtraj
