#include "uavtraj/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace uavtraj {

namespace {

constexpr int kMaxGraphDraws = 1'000'000;

VisitMask bit(int p) { return VisitMask{1} << p; }

VisitMask all_points(int n) { return n >= 64 ? ~VisitMask{0} : (bit(n) - 1); }

double uniform01(std::mt19937_64& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

ChannelType sample_channel(const LinkGeometry& geom, const ChannelParams& params, std::mt19937_64& rng)
{
    return uniform01(rng) < los_probability(geom, params).los ? ChannelType::los : ChannelType::nlos;
}

}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

int WaypointGraph::max_degree() const
{
    int d = 0;
    for (const auto& n : neighbors)
        d = std::max(d, static_cast<int>(n.size()));
    return d;
}

bool WaypointGraph::adjacent(int a, int b) const
{
    const auto& n = neighbors.at(static_cast<std::size_t>(a));
    return std::binary_search(n.begin(), n.end(), b);
}

bool WaypointGraph::connected() const
{
    if (positions.empty())
        return false;
    std::vector<bool> seen(positions.size(), false);
    std::queue<int> frontier;
    frontier.push(base);
    seen[static_cast<std::size_t>(base)] = true;
    int count = 1;
    while (!frontier.empty()) {
        const int p = frontier.front();
        frontier.pop();
        for (int q : neighbors[static_cast<std::size_t>(p)])
            if (!seen[static_cast<std::size_t>(q)]) {
                seen[static_cast<std::size_t>(q)] = true;
                ++count;
                frontier.push(q);
            }
    }
    return count == size();
}

void WaypointGraph::validate(int total_devices) const
{
    const int n = size();
    if (n < 1 || n > 64)
        throw std::invalid_argument("waypoint graph needs between 1 and 64 points");
    if (base < 0 || base >= n)
        throw std::invalid_argument("ground station is not a waypoint");
    if (static_cast<int>(neighbors.size()) != n || static_cast<int>(devices.size()) != n)
        throw std::invalid_argument("waypoint graph tables have inconsistent sizes");
    for (int p = 0; p < n; ++p) {
        const auto& adj = neighbors[static_cast<std::size_t>(p)];
        if (!std::is_sorted(adj.begin(), adj.end()) || std::adjacent_find(adj.begin(), adj.end()) != adj.end())
            throw std::invalid_argument("neighbour lists must be sorted and unique");
        for (int q : adj) {
            if (q == p)
                throw std::invalid_argument("a waypoint cannot neighbour itself");
            if (q < 0 || q >= n || !adjacent(q, p))
                throw std::invalid_argument("links must be symmetric");
        }
    }
    if (!connected())
        throw std::invalid_argument("waypoint graph is not connected");
    if (std::any_of(devices.begin(), devices.end(), [](int d) { return d < 0; }))
        throw std::invalid_argument("device counts must be non-negative");
    if (std::accumulate(devices.begin(), devices.end(), 0) != total_devices)
        throw std::invalid_argument("device counts do not add up to the configured total");
}

WaypointGraph make_graph(std::vector<Point> positions, int base, double radius, std::vector<int> devices)
{
    WaypointGraph g;
    g.positions = std::move(positions);
    g.base = base;
    g.devices = std::move(devices);
    g.neighbors.assign(g.positions.size(), {});
    for (int a = 0; a < g.size(); ++a)
        for (int b = 0; b < g.size(); ++b)
            if (a != b && distance(g.positions[static_cast<std::size_t>(a)], g.positions[static_cast<std::size_t>(b)]) <= radius)
                g.neighbors[static_cast<std::size_t>(a)].push_back(b);
    return g;
}

WaypointGraph generate_graph(const ScenarioConfig& config, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> ux(0.0, config.area_x);
    std::uniform_real_distribution<double> uy(0.0, config.area_y);
    const int n = config.waypoints;
    for (int attempt = 0; attempt < kMaxGraphDraws; ++attempt) {
        std::vector<Point> pts(static_cast<std::size_t>(n));
        pts[0] = {config.area_x / 2.0, config.area_y / 2.0};
        for (int p = 1; p < n; ++p)
            pts[static_cast<std::size_t>(p)] = {ux(rng), uy(rng)};
        WaypointGraph g = make_graph(std::move(pts), 0, config.coverage_radius, std::vector<int>(static_cast<std::size_t>(n), 0));
        if (!g.connected())
            continue;
        if (n > 1) {
            std::uniform_int_distribution<int> pick(1, n - 1);
            for (int i = 0; i < config.iot_devices; ++i)
                ++g.devices[static_cast<std::size_t>(pick(rng))];
        } else {
            g.devices[0] = config.iot_devices;
        }
        g.validate(config.iot_devices);
        return g;
    }
    throw std::runtime_error("could not draw a connected waypoint graph; increase the coverage radius");
}

ActionSpace::ActionSpace(int uav_count, int slots_per_uav)
    : uavs_(uav_count), slots_(slots_per_uav), size_(1)
{
    if (uav_count < 1 || slots_per_uav < 1)
        throw std::invalid_argument("action space needs at least one UAV and one slot");
    for (int u = 0; u < uav_count; ++u) {
        if (size_ > (1 << 20) / slots_per_uav)
            throw std::invalid_argument("joint action space too large");
        size_ *= slots_per_uav;
    }
}

std::vector<int> ActionSpace::decode(int index) const
{
    if (index < 0 || index >= size_)
        throw std::out_of_range("joint action index out of range");
    std::vector<int> slots(static_cast<std::size_t>(uavs_));
    for (int u = 0; u < uavs_; ++u) {
        slots[static_cast<std::size_t>(u)] = index % slots_;
        index /= slots_;
    }
    return slots;
}

int ActionSpace::encode(const std::vector<int>& slots) const
{
    if (static_cast<int>(slots.size()) != uavs_)
        throw std::invalid_argument("slot tuple has the wrong length");
    int index = 0;
    for (int u = uavs_ - 1; u >= 0; --u) {
        const int s = slots[static_cast<std::size_t>(u)];
        if (s < 0 || s >= slots_)
            throw std::out_of_range("slot out of range");
        index = index * slots_ + s;
    }
    return index;
}

std::shared_ptr<const Scenario> build_scenario(const ScenarioConfig& config, WaypointGraph graph, std::uint64_t seed)
{
    config.validate();
    graph.validate(config.iot_devices);
    if (graph.size() < config.uavs)
        throw std::invalid_argument("more UAVs than waypoints");
    auto s = std::make_shared<Scenario>();
    s->config = config;
    s->config.waypoints = graph.size();
    s->channel = config.channel_params();
    s->cruise = config.cruise_params();
    s->hover = config.hover_params();
    s->actions = ActionSpace(config.uavs, graph.max_degree() + 1);
    s->graph = std::move(graph);
    s->seed = seed;
    return s;
}

std::shared_ptr<const Scenario> build_scenario(const ScenarioConfig& config, std::uint64_t seed)
{
    config.validate();
    std::seed_seq seq{seed, std::uint64_t{0x5CE7A210}};
    std::mt19937_64 rng(seq);
    return build_scenario(config, generate_graph(config, rng), seed);
}

VisitMask WorldState::covered() const
{
    VisitMask m = 0;
    for (VisitMask v : visits)
        m |= v;
    return m;
}

bool same_state(const WorldState& a, const WorldState& b)
{
    if (a.slot != b.slot || a.position != b.position || a.height != b.height || a.target != b.target ||
        a.visits != b.visits || a.pending != b.pending || a.eta_step != b.eta_step || a.eta_sum != b.eta_sum ||
        a.aoi != b.aoi || !(a.service == b.service) || !(a.flags == b.flags) ||
        a.episode_return != b.episode_return || a.done != b.done || a.rng != b.rng)
        return false;
    if (a.aoi_table.slot() != b.aoi_table.slot() || a.aoi_table.waypoint_count() != b.aoi_table.waypoint_count())
        return false;
    for (int p = 0; p < a.aoi_table.waypoint_count(); ++p)
        if (a.aoi_table.last_delivery(p) != b.aoi_table.last_delivery(p))
            return false;
    if (a.energy.uav_count() != b.energy.uav_count())
        return false;
    for (int u = 0; u < a.energy.uav_count(); ++u)
        if (a.energy.efficiency(u) != b.energy.efficiency(u) || a.energy.mobility_energy(u) != b.energy.mobility_energy(u) ||
            a.energy.backhaul_energy(u) != b.energy.backhaul_energy(u))
            return false;
    return true;
}

JointAction decode_action(const WorldState& state, const Scenario& scenario, int action_index)
{
    const auto slots = scenario.actions.decode(action_index);
    JointAction a;
    a.index = action_index;
    a.targets.resize(slots.size());
    for (std::size_t u = 0; u < slots.size(); ++u) {
        const int from = state.position[u];
        const int s = slots[u];
        if (s == 0) {
            a.targets[u] = from;
        } else {
            const auto& adj = scenario.graph.neighbors[static_cast<std::size_t>(from)];
            a.targets[u] = s <= static_cast<int>(adj.size()) ? adj[static_cast<std::size_t>(s - 1)] : -1;
        }
    }
    return a;
}

namespace {

bool targets_feasible(const std::vector<int>& targets, int base, const std::vector<VisitMask>* visits = nullptr)
{
    for (std::size_t u = 0; u < targets.size(); ++u) {
        if (targets[u] < 0)
            return false;
        for (std::size_t v = 0; v < targets.size(); ++v) {
            if (v == u || targets[u] == base)
                continue;
            if (targets[u] == targets[v])
                return false;
            // a point already on another UAV's trajectory stays off limits
            if (visits && visited((*visits)[v], targets[u]))
                return false;
        }
    }
    return true;
}

}  // namespace

bool is_feasible(const WorldState& state, const Scenario& scenario, int action_index)
{
    if (action_index < 0 || action_index >= scenario.actions.size())
        return false;
    return targets_feasible(decode_action(state, scenario, action_index).targets, scenario.graph.base, &state.visits);
}

std::vector<std::uint8_t> feasible_mask(const WorldState& state, const Scenario& scenario)
{
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(scenario.actions.size()), 0);
    for (int i = 0; i < scenario.actions.size(); ++i)
        mask[static_cast<std::size_t>(i)] = is_feasible(state, scenario, i) ? 1 : 0;
    return mask;
}

std::vector<JointAction> enumerate_actions(const WorldState& state, const Scenario& scenario)
{
    std::vector<JointAction> out;
    for (int i = 0; i < scenario.actions.size(); ++i) {
        auto a = decode_action(state, scenario, i);
        if (targets_feasible(a.targets, scenario.graph.base, &state.visits))
            out.push_back(std::move(a));
    }
    return out;
}

ConstraintFlags check_constraints(const WorldState& state, const Scenario& scenario, bool episode_end)
{
    const int base = scenario.graph.base;
    ConstraintFlags f;
    const VisitMask off_base = ~bit(base);
    for (std::size_t u = 0; u < state.visits.size(); ++u)
        for (std::size_t v = u + 1; v < state.visits.size(); ++v) {
            if ((state.visits[u] & state.visits[v] & off_base) != 0)
                f.non_overlap = false;
            if (state.position[u] == state.position[v] && state.position[u] != base)
                f.non_overlap = false;
        }
    f.coverage = !episode_end || state.covered() == all_points(scenario.graph.size());
    f.energy = state.slot == 0 || state.eta() >= scenario.config.eta_threshold;
    f.aoi = state.aoi <= scenario.config.aoi_threshold;
    return f;
}

double reward(const ConstraintFlags& flags, double eta, double alpha1, bool tour_complete)
{
    if (!flags.non_overlap || !flags.coverage || !flags.energy)
        return -alpha1;
    if (!flags.aoi || !tour_complete)
        return 0.0;
    return alpha1 * eta;
}

int feature_length(const Scenario& scenario) { return 2 * scenario.config.uavs + 4; }

std::vector<double> encode_state(const WorldState& state, const Scenario& scenario)
{
    const auto& g = scenario.graph;
    const double ax = scenario.config.area_x;
    const double ay = scenario.config.area_y;
    std::vector<double> f;
    f.reserve(static_cast<std::size_t>(feature_length(scenario)));
    for (int p : state.position) {
        f.push_back(std::clamp(g.positions[static_cast<std::size_t>(p)].x / ax, 0.0, 1.0));
        f.push_back(std::clamp(g.positions[static_cast<std::size_t>(p)].y / ay, 0.0, 1.0));
    }
    f.push_back(std::clamp(g.positions[static_cast<std::size_t>(state.target)].x / ax, 0.0, 1.0));
    f.push_back(std::clamp(g.positions[static_cast<std::size_t>(state.target)].y / ay, 0.0, 1.0));
    f.push_back(std::clamp(state.eta(), 0.0, 1.0));
    f.push_back(std::clamp(state.aoi, 0.0, 1.0));
    return f;
}

Environment::Environment(std::shared_ptr<const Scenario> scenario)
    : scenario_(std::move(scenario))
{
    if (!scenario_)
        throw std::invalid_argument("environment needs a scenario");
}

const WorldState& Environment::reset(std::uint64_t episode_seed)
{
    const auto& sc = *scenario_;
    const int n = sc.graph.size();
    const int uavs = sc.config.uavs;
    if (uavs > n)
        throw std::invalid_argument("more UAVs than waypoints");
    std::seed_seq seq{episode_seed, std::uint64_t{0xE915}};
    std::mt19937_64 rng(seq);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    // partial Fisher-Yates keeps the draw count independent of n - uavs
    for (int i = 0; i < uavs; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<int> starts(order.begin(), order.begin() + uavs);
    std::vector<double> heights(static_cast<std::size_t>(uavs));
    std::uniform_real_distribution<double> uh(sc.config.height_min, sc.config.height_max);
    for (auto& h : heights)
        h = uh(rng);
    reset_at(starts, heights, 0);
    state_.rng = rng;
    return state_;
}

const WorldState& Environment::reset_at(const std::vector<int>& positions, const std::vector<double>& heights,
                                        std::uint64_t episode_seed)
{
    const auto& sc = *scenario_;
    const int n = sc.graph.size();
    const int uavs = sc.config.uavs;
    if (static_cast<int>(positions.size()) != uavs || static_cast<int>(heights.size()) != uavs)
        throw std::invalid_argument("one start position and height per UAV required");
    if (!targets_feasible(positions, sc.graph.base))
        throw std::invalid_argument("UAVs cannot start on the same waypoint");
    WorldState s;
    s.slot = 0;
    s.position = positions;
    s.height = heights;
    s.target = sc.graph.base;
    s.visits.assign(static_cast<std::size_t>(uavs), 0);
    s.pending.assign(static_cast<std::size_t>(uavs), std::vector<int>(static_cast<std::size_t>(n), -1));
    for (int u = 0; u < uavs; ++u) {
        const int p = positions[static_cast<std::size_t>(u)];
        if (p < 0 || p >= n)
            throw std::out_of_range("start waypoint out of range");
        s.visits[static_cast<std::size_t>(u)] = bit(sc.graph.base) | bit(p);
        s.pending[static_cast<std::size_t>(u)][static_cast<std::size_t>(p)] = 0;
    }
    s.aoi_table = AoiTable(n, sc.graph.base);
    s.energy = EnergyLedger(uavs);
    std::seed_seq seq{episode_seed, std::uint64_t{0xE915}};
    s.rng.seed(seq);
    s.flags = check_constraints(s, sc, false);
    state_ = std::move(s);
    return state_;
}

StepResult Environment::step(int action_index)
{
    const auto& sc = *scenario_;
    const auto& g = sc.graph;
    const auto& cfg = sc.config;
    auto& s = state_;
    if (s.done)
        throw std::logic_error("step called on a finished episode");
    if (!is_feasible(s, sc, action_index))
        throw std::invalid_argument("infeasible joint action");
    const JointAction action = decode_action(s, sc, action_index);
    const int uavs = cfg.uavs;
    const int t = s.slot + 1;
    s.slot = t;
    s.aoi_table.tick(t);

    std::vector<StepEnergy> energy(static_cast<std::size_t>(uavs));
    for (int u = 0; u < uavs; ++u) {
        const auto uu = static_cast<std::size_t>(u);
        const int from = s.position[uu];
        const int to = action.targets[uu];
        if (to == from) {
            energy[uu].mobility_energy = propulsion_power(sc.hover) * cfg.slot_duration;
        } else {
            const double d = distance(g.positions[static_cast<std::size_t>(from)], g.positions[static_cast<std::size_t>(to)]);
            energy[uu].mobility_energy = mobility_energy(hop_distance(d, s.height[uu]), sc.cruise);
        }
        s.position[uu] = to;
        s.visits[uu] |= bit(to);
    }

    // Uplink: devices at a waypoint are served by the UAV above it; UAVs over
    // neighbouring occupied waypoints contribute one co-channel interferer each.
    std::vector<UplinkLink> interferers;
    for (int u = 0; u < uavs; ++u) {
        const auto uu = static_cast<std::size_t>(u);
        const int p = s.position[uu];
        const int n_devices = g.devices[static_cast<std::size_t>(p)];
        if (n_devices == 0) {
            s.pending[uu][static_cast<std::size_t>(p)] = t;
            continue;
        }
        UplinkLink serving;
        serving.geometry = make_geometry(0.0, s.height[uu]);
        serving.type = sample_channel(serving.geometry, sc.channel, s.rng);
        interferers.clear();
        for (int v = 0; v < uavs; ++v) {
            const int q = s.position[static_cast<std::size_t>(v)];
            if (v == u || q == p || g.devices[static_cast<std::size_t>(q)] == 0 || !g.adjacent(p, q))
                continue;
            UplinkLink link;
            link.geometry = make_geometry(distance(g.positions[static_cast<std::size_t>(q)], g.positions[static_cast<std::size_t>(p)]),
                                          s.height[uu]);
            link.type = sample_channel(link.geometry, sc.channel, s.rng);
            interferers.push_back(link);
        }
        const double sinr = uplink_sinr(serving, interferers, sc.channel);
        const double rate = uplink_rate(sinr, cfg.iot_devices, sc.channel);
        if (rate > 0.0) {
            energy[uu].uplink_rate = rate * n_devices;
            s.pending[uu][static_cast<std::size_t>(p)] = t;
            s.service.active_uav_slots += 1;
            s.service.served_device_slots += n_devices;
        }
    }

    bool all_in_range = true;
    const Point base = g.positions[static_cast<std::size_t>(g.base)];
    for (int u = 0; u < uavs; ++u) {
        const auto uu = static_cast<std::size_t>(u);
        const auto geom = make_geometry(distance(g.positions[static_cast<std::size_t>(s.position[uu])], base), s.height[uu]);
        if (!within_backhaul_range(geom, sc.channel)) {
            all_in_range = false;
            continue;
        }
        energy[uu].backhaul_rate = backhaul_rate(geom, sc.channel);
        energy[uu].backhaul_energy = backhaul_energy(energy[uu].backhaul_rate, sc.channel, cfg.backhaul_energy_mode(),
                                                     cfg.slot_duration);
        for (int p = 0; p < g.size(); ++p) {
            int& origin = s.pending[uu][static_cast<std::size_t>(p)];
            if (origin >= 0 && s.aoi_table.tracked(p))
                s.aoi_table.record_delivery(p, t, origin);
            origin = -1;
        }
    }

    double raw = 0.0;
    for (int u = 0; u < uavs; ++u) {
        const auto uu = static_cast<std::size_t>(u);
        raw += step_efficiency(energy[uu]);
        s.energy.record(u, energy[uu]);
        s.service.uplink_bits += energy[uu].uplink_rate;
        s.service.backhaul_bits += energy[uu].backhaul_rate;
    }
    s.eta_step = std::min(raw / cfg.eta_cap, 1.0);
    s.eta_sum += s.eta_step;
    s.aoi = s.aoi_table.normalized_average_aoi();

    const bool covered = s.covered() == all_points(g.size());
    s.done = (cfg.stop_on_coverage && covered && all_in_range) || t >= cfg.horizon;
    s.flags = check_constraints(s, sc, s.done);
    if (!s.flags.all())
        s.service.constraint_violations += 1;

    StepResult result;
    result.reward = reward(s.flags, s.eta_step, cfg.alpha1, covered);
    result.done = s.done;
    result.flags = s.flags;
    s.episode_return += result.reward;
    return result;
}

}  // namespace uavtraj
