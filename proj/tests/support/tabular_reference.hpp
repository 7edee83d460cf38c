#pragma once

// Exact tabular Q-learning on a small deterministic instance, used as the
// reference policy for the function-approximation agent.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "uavtraj/agent.hpp"
#include "uavtraj/environment.hpp"

namespace uavtraj::reference {

/// Three mutually linked points: the ground station, a rich point with 80
/// devices and a poor one with 20. Only the station is within backhaul range.
inline std::shared_ptr<const Scenario> three_point_scenario(int horizon = 4)
{
    ScenarioConfig c;
    c.uavs = 1;
    c.waypoints = 3;
    c.iot_devices = 100;
    c.height_min = 250.0;
    c.height_max = 250.0;
    c.coverage_radius = 300.0;
    c.backhaul_range_m = 200.0;
    c.eta_threshold = 0.0;
    c.aoi_threshold = 1.0;
    c.eta_cap = 1e5;
    c.horizon = horizon;
    c.stop_on_coverage = false;
    c.gamma = 0.7;
    auto g = make_graph({{500.0, 500.0}, {750.0, 500.0}, {625.0, 716.5}}, 0, 300.0, {0, 80, 20});
    return build_scenario(c, std::move(g), 1);
}

struct TabularState {
    std::vector<double> features;
    std::vector<std::uint8_t> mask;
    std::vector<double> reward;          // per action
    std::vector<int> next;               // per action, -1 when terminal
    std::vector<double> q;
};

struct TabularSolution {
    std::vector<TabularState> states;
    std::vector<int> starts;  // one per start waypoint
    int sweeps = 0;
    int aliased = 0;  // feature vectors reached with different dynamics

    /// Actions whose value is within tol of the best.
    std::vector<int> greedy_set(std::size_t s, double tol = 1e-9) const
    {
        const auto& st = states[s];
        double best = -INFINITY;
        for (std::size_t a = 0; a < st.q.size(); ++a)
            if (st.mask[a])
                best = std::max(best, st.q[a]);
        std::vector<int> out;
        for (std::size_t a = 0; a < st.q.size(); ++a)
            if (st.mask[a] && st.q[a] >= best - tol)
                out.push_back(static_cast<int>(a));
        return out;
    }
};

/// Enumerate every state reachable from a UAV start at each waypoint, keyed by
/// the agent's feature vector, then apply the Q-learning update with unit step
/// size to every state-action pair until nothing changes.
inline TabularSolution solve_tabular(const std::shared_ptr<const Scenario>& scenario, double gamma)
{
    TabularSolution sol;
    std::map<std::vector<double>, int> index;
    std::vector<Environment> frontier;
    std::vector<WorldState> snapshots;

    auto intern = [&](const Environment& env) {
        auto f = env.features();
        auto it = index.find(f);
        if (it != index.end())
            return it->second;
        const int id = static_cast<int>(sol.states.size());
        index.emplace(f, id);
        TabularState st;
        st.features = std::move(f);
        st.mask = env.mask();
        sol.states.push_back(std::move(st));
        snapshots.push_back(env.state());
        frontier.push_back(env);
        return id;
    };

    Environment root(scenario);
    for (int p = 0; p < scenario->graph.size(); ++p) {
        root.reset_at({p}, {scenario->config.height_min}, 0);
        sol.starts.push_back(intern(root));
    }
    for (std::size_t s = 0; s < sol.states.size(); ++s) {
        const Environment here = frontier[s];
        const auto n = sol.states[s].mask.size();
        std::vector<double> reward(n, 0.0);
        std::vector<int> next(n, -1);
        for (std::size_t a = 0; a < n; ++a) {
            if (!sol.states[s].mask[a])
                continue;
            Environment probe = here;
            const auto r = probe.step(static_cast<int>(a));
            reward[a] = r.reward;
            if (!r.done)
                next[a] = intern(probe);
        }
        sol.states[s].reward = std::move(reward);
        sol.states[s].next = std::move(next);
        sol.states[s].q.assign(n, 0.0);
    }
    // Two histories with equal features but different futures would make the
    // feature vector a non-Markov state; count them.
    for (std::size_t s = 0; s < sol.states.size(); ++s)
        for (std::size_t t = s + 1; t < sol.states.size(); ++t)
            if (sol.states[s].features == sol.states[t].features)
                ++sol.aliased;

    auto value = [&](int s) {
        if (s < 0)
            return 0.0;
        const auto& st = sol.states[static_cast<std::size_t>(s)];
        double best = -INFINITY;
        for (std::size_t a = 0; a < st.q.size(); ++a)
            if (st.mask[a])
                best = std::max(best, st.q[a]);
        return best;
    };
    for (sol.sweeps = 1; sol.sweeps < 10000; ++sol.sweeps) {
        double change = 0.0;
        for (auto& st : sol.states)
            for (std::size_t a = 0; a < st.q.size(); ++a) {
                if (!st.mask[a])
                    continue;
                const double target = st.reward[a] + gamma * value(st.next[a]);
                change = std::max(change, std::abs(target - st.q[a]));
                st.q[a] += 1.0 * (target - st.q[a]);
            }
        if (change < 1e-13)
            break;
    }
    return sol;
}

/// States visited by the tabular greedy policy from every start, in order.
inline std::vector<int> greedy_path_states(const TabularSolution& sol)
{
    std::vector<int> out;
    for (int s : sol.starts) {
        while (s >= 0) {
            if (std::find(out.begin(), out.end(), s) == out.end())
                out.push_back(s);
            const auto& st = sol.states[static_cast<std::size_t>(s)];
            s = st.next[static_cast<std::size_t>(sol.greedy_set(static_cast<std::size_t>(s)).front())];
        }
    }
    return out;
}

struct Agreement {
    int states = 0;
    int agree = 0;
    int strict = 0;  // states with a unique tabular optimum
};

inline Agreement policy_agreement(const TabularSolution& sol, const MlpQNetwork& net, const std::vector<int>& which)
{
    Agreement out;
    for (int si : which) {
        const auto s = static_cast<std::size_t>(si);
        const auto& st = sol.states[s];
        const auto best = sol.greedy_set(s);
        const int pick = masked_argmax(net.forward(st.features), st.mask);
        ++out.states;
        if (best.size() == 1)
            ++out.strict;
        if (std::find(best.begin(), best.end(), pick) != best.end())
            ++out.agree;
    }
    return out;
}

}  // namespace uavtraj::reference
