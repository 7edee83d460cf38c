#include <gtest/gtest.h>

#include <random>
#include <set>

#include "uavtraj/environment.hpp"

using namespace uavtraj;

namespace {

// Triangle b=0 at the centre, points 1 and 2 within link range of b and each other.
std::shared_ptr<const Scenario> triangle(int uavs, std::vector<int> devices = {0, 5, 5})
{
    ScenarioConfig c;
    c.uavs = uavs;
    c.iot_devices = devices[0] + devices[1] + devices[2];
    c.horizon = 20;
    auto g = make_graph({{500, 500}, {700, 500}, {600, 650}}, 0, 300.0, std::move(devices));
    return build_scenario(c, std::move(g), 1);
}

// Points on a line 250 m apart, base at index 0; only consecutive points link.
std::shared_ptr<const Scenario> line(int n, int uavs, double spacing = 250.0)
{
    ScenarioConfig c;
    c.uavs = uavs;
    c.iot_devices = 10 * (n - 1);
    c.horizon = 50;
    std::vector<Point> pts;
    std::vector<int> dev{0};
    for (int i = 0; i < n; ++i)
        pts.push_back({100.0 + spacing * i, 500.0});
    for (int i = 1; i < n; ++i)
        dev.push_back(10);
    return build_scenario(c, make_graph(pts, 0, spacing * 1.1, dev), 1);
}

int random_feasible(const Environment& env, std::mt19937_64& rng)
{
    const auto mask = env.mask();
    std::vector<int> ok;
    for (std::size_t a = 0; a < mask.size(); ++a)
        if (mask[a])
            ok.push_back(static_cast<int>(a));
    return ok.at(std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng));
}

}  // namespace

TEST(Graph, GeneratedGraphHonoursInvariants)
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ScenarioConfig c;
        c.waypoints = 6 + static_cast<int>(seed % 5) * 2;
        std::mt19937_64 rng(seed);
        const auto g = generate_graph(c, rng);
        EXPECT_EQ(g.size(), c.waypoints);
        EXPECT_TRUE(g.connected());
        EXPECT_NO_THROW(g.validate(c.iot_devices));
        EXPECT_EQ(g.devices[static_cast<std::size_t>(g.base)], 0);
        EXPECT_DOUBLE_EQ(g.positions[static_cast<std::size_t>(g.base)].x, c.area_x / 2);
        for (int p = 0; p < g.size(); ++p) {
            const auto& nb = g.neighbors[static_cast<std::size_t>(p)];
            EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
            for (int q : nb) {
                EXPECT_NE(q, p);
                EXPECT_LE(distance(g.positions[static_cast<std::size_t>(p)], g.positions[static_cast<std::size_t>(q)]),
                          c.coverage_radius);
                EXPECT_TRUE(g.adjacent(q, p));
            }
        }
    }
}

TEST(Graph, ValidateRejectsBrokenGraphs)
{
    auto g = make_graph({{0, 0}, {100, 0}, {1000, 0}}, 0, 150.0, {0, 5, 5});
    EXPECT_FALSE(g.connected());
    EXPECT_THROW(g.validate(10), std::invalid_argument);
    auto ok = make_graph({{0, 0}, {100, 0}}, 0, 150.0, {0, 5});
    EXPECT_THROW(ok.validate(6), std::invalid_argument);
    EXPECT_THROW(make_graph({{0, 0}, {100, 0}}, 0, 150.0, {0, -1}).validate(-1), std::invalid_argument);
}

TEST(Actions, EncodeDecodeRoundTrip)
{
    const ActionSpace s(3, 4);
    EXPECT_EQ(s.size(), 64);
    for (int i = 0; i < s.size(); ++i)
        EXPECT_EQ(s.encode(s.decode(i)), i);
    EXPECT_EQ(s.decode(1), (std::vector<int>{1, 0, 0}));
    EXPECT_EQ(s.decode(4), (std::vector<int>{0, 1, 0}));
}

TEST(Actions, SingleUavAtDegreeTwoHasThreeActions)
{
    Environment env(triangle(1));
    env.reset_at({1}, {150.0}, 1);
    EXPECT_EQ(enumerate_actions(env.state(), env.scenario()).size(), 3U);
}

TEST(Actions, TwoUavsCannotMeetOffBase)
{
    // Line 0-1-2: UAVs on 0 and 2 share the sole free neighbour 1.
    auto sc = line(3, 2);
    Environment env(sc);
    env.reset_at({0, 2}, {150.0, 150.0}, 1);
    for (const auto& a : enumerate_actions(env.state(), *sc))
        EXPECT_FALSE(a.targets[0] == 1 && a.targets[1] == 1);
    const int both_there = sc->actions.encode({1, 1});
    EXPECT_FALSE(is_feasible(env.state(), *sc, both_there));
    EXPECT_THROW(env.step(both_there), std::invalid_argument);
}

TEST(Actions, PointOnAnotherTrajectoryIsOffLimits)
{
    auto sc = line(4, 2);
    Environment env(sc);
    env.reset_at({1, 3}, {150.0, 150.0}, 1);
    // UAV 1 has visited 3; UAV 0 may not fly 1 -> 2 -> 3 into it, but 2 is free.
    const int to2 = sc->actions.encode({2, 0});
    ASSERT_TRUE(is_feasible(env.state(), *sc, to2));
    env.step(to2);
    const auto& nb = sc->graph.neighbors[2];
    const int slot3 = static_cast<int>(std::find(nb.begin(), nb.end(), 3) - nb.begin()) + 1;
    EXPECT_FALSE(is_feasible(env.state(), *sc, sc->actions.encode({slot3, 0})));
    // UAV 1 may not enter 2 either, now that UAV 0 has been there.
    const auto& nb3 = sc->graph.neighbors[3];
    const int slot2 = static_cast<int>(std::find(nb3.begin(), nb3.end(), 2) - nb3.begin()) + 1;
    EXPECT_FALSE(is_feasible(env.state(), *sc, sc->actions.encode({0, slot2})));
}

TEST(Actions, EnumerationMatchesBruteForce)
{
    ScenarioConfig c;
    c.uavs = 3;
    c.iot_devices = 40;
    // A 2x3 grid with 250 m spacing: interior degree 3.
    std::vector<Point> pts;
    for (int r = 0; r < 2; ++r)
        for (int k = 0; k < 3; ++k)
            pts.push_back({300.0 + 250.0 * k, 300.0 + 250.0 * r});
    auto sc = build_scenario(c, make_graph(pts, 1, 260.0, {10, 0, 10, 10, 5, 5}), 1);
    Environment env(sc);
    env.reset_at({0, 2, 4}, {150, 150, 150}, 1);
    const auto& g = sc->graph;
    EXPECT_LE(sc->actions.size(), 4 * 4 * 4);
    std::set<std::vector<int>> brute;
    const auto& s = env.state();
    auto options = [&](int u) {
        std::vector<int> o{s.position[static_cast<std::size_t>(u)]};
        for (int q : g.neighbors[static_cast<std::size_t>(s.position[static_cast<std::size_t>(u)])])
            o.push_back(q);
        return o;
    };
    for (int a : options(0))
        for (int b : options(1))
            for (int d : options(2)) {
                const std::vector<int> t{a, b, d};
                bool ok = true;
                for (int u = 0; u < 3; ++u)
                    for (int v = 0; v < 3; ++v)
                        if (u != v && t[u] != g.base &&
                            (t[u] == t[v] || visited(s.visits[static_cast<std::size_t>(v)], t[u])))
                            ok = false;
                if (ok)
                    brute.insert(t);
            }
    std::set<std::vector<int>> enumerated;
    for (const auto& a : enumerate_actions(s, *sc))
        enumerated.insert(a.targets);
    EXPECT_EQ(enumerated, brute);
}

TEST(Constraints, PartitionAndOverlapCases)
{
    auto sc = triangle(2);
    WorldState s;
    s.slot = 5;
    s.position = {0, 0};
    s.visits = {0b011, 0b101};
    s.aoi = 0.1;
    s.eta_sum = 5.0;
    auto f = check_constraints(s, *sc, true);
    EXPECT_TRUE(f.non_overlap);
    EXPECT_TRUE(f.coverage);
    s.visits = {0b011, 0b011};
    f = check_constraints(s, *sc, true);
    EXPECT_FALSE(f.non_overlap);
    EXPECT_FALSE(f.coverage);
    EXPECT_TRUE(check_constraints(s, *sc, false).coverage);
    s.visits = {0b011, 0b101};
    s.position = {1, 1};
    EXPECT_FALSE(check_constraints(s, *sc, false).non_overlap);
}

TEST(Constraints, ThresholdsFromConfig)
{
    auto sc = triangle(1);
    WorldState s;
    s.slot = 4;
    s.position = {0};
    s.visits = {0b111};
    s.eta_sum = 4 * sc->config.eta_threshold;
    s.aoi = sc->config.aoi_threshold;
    EXPECT_TRUE(check_constraints(s, *sc, false).all());
    s.eta_sum -= 1e-9;
    s.aoi += 1e-9;
    const auto f = check_constraints(s, *sc, false);
    EXPECT_FALSE(f.energy);
    EXPECT_FALSE(f.aoi);
}

TEST(Reward, CaseTable)
{
    ConstraintFlags ok;
    EXPECT_DOUBLE_EQ(reward(ok, 0.4, 1.0), 0.4);
    ConstraintFlags overlap;
    overlap.non_overlap = false;
    EXPECT_EQ(reward(overlap, 0.4, 1.0), -1.0);
    ConstraintFlags stale;
    stale.aoi = false;
    EXPECT_EQ(reward(stale, 0.4, 1.0), 0.0);
    EXPECT_EQ(reward(ok, 0.4, 1.0, false), 0.0);
    ConstraintFlags weak;
    weak.energy = false;
    weak.aoi = false;
    EXPECT_EQ(reward(weak, 0.4, 2.0), -2.0);
}

TEST(Reset, SameSeedSameState)
{
    auto sc = build_scenario(ScenarioConfig{}, 3);
    Environment a(sc), b(sc);
    a.reset(42);
    b.reset(42);
    EXPECT_TRUE(same_state(a.state(), b.state()));
    b.reset(43);
    EXPECT_FALSE(same_state(a.state(), b.state()));
}

TEST(Reset, StartsAreDistinctAndHeightsInBand)
{
    auto sc = build_scenario(ScenarioConfig{}, 3);
    Environment env(sc);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto& s = env.reset(seed);
        std::set<int> starts(s.position.begin(), s.position.end());
        EXPECT_EQ(starts.size(), s.position.size());
        for (std::size_t u = 0; u < s.position.size(); ++u) {
            EXPECT_GE(s.height[u], 140.0);
            EXPECT_LE(s.height[u], 250.0);
            EXPECT_TRUE(visited(s.visits[u], sc->graph.base));
            EXPECT_TRUE(visited(s.visits[u], s.position[u]));
        }
        EXPECT_EQ(s.slot, 0);
        EXPECT_EQ(s.aoi_table.slot(), 0);
        EXPECT_EQ(s.energy.slots(0), 0);
    }
}

TEST(Reset, MoreUavsThanWaypointsRejected)
{
    ScenarioConfig c;
    c.uavs = 4;
    c.iot_devices = 10;
    EXPECT_THROW(build_scenario(c, make_graph({{0, 0}, {100, 0}, {200, 0}}, 0, 150.0, {0, 5, 5})),
                 std::invalid_argument);
}

TEST(Step, HoverFarFromBaseChargesNoBackhaul)
{
    auto sc = line(4, 1);
    Environment env(sc);
    env.reset_at({3}, {150.0}, 1);
    env.step(0);
    EXPECT_EQ(env.state().energy.backhaul_energy(0), 0.0);
    EXPECT_NEAR(env.state().energy.mobility_energy(0), propulsion_power(sc->hover) * sc->config.slot_duration, 1e-9);
}

TEST(Step, ArrivalInRangeDeliversCollectedData)
{
    auto sc = line(3, 1);
    Environment env(sc);
    env.reset_at({2}, {150.0}, 1);
    for (int k = 0; k < 3; ++k)
        env.step(0);  // collect at 2, out of range (500 m from base)
    EXPECT_EQ(env.state().aoi_table.age(2), 3);
    const auto& nb = sc->graph.neighbors[2];
    env.step(sc->actions.encode({static_cast<int>(std::find(nb.begin(), nb.end(), 1) - nb.begin()) + 1}));
    // Point 1 is 250 m from base: the freshest data from 2 was collected in slot 3.
    EXPECT_EQ(env.state().aoi_table.age(2), 1);
    EXPECT_GT(env.state().energy.backhaul_energy(0), 0.0);
}

TEST(Step, MobilityEnergyUsesHopDistance)
{
    auto sc = line(3, 1);
    Environment env(sc);
    env.reset_at({1}, {200.0}, 1);
    const auto& nb = sc->graph.neighbors[1];
    env.step(sc->actions.encode({static_cast<int>(std::find(nb.begin(), nb.end(), 2) - nb.begin()) + 1}));
    EXPECT_NEAR(env.state().energy.mobility_energy(0), mobility_energy(hop_distance(250.0, 200.0), sc->cruise), 1e-6);
}

TEST(Step, DeterministicReplay)
{
    auto sc = build_scenario(ScenarioConfig{}, 11);
    Environment a(sc);
    a.reset(5);
    std::mt19937_64 rng(1);
    std::vector<int> actions;
    while (!a.state().done) {
        actions.push_back(random_feasible(a, rng));
        a.step(actions.back());
    }
    Environment b(sc);
    b.reset(5);
    for (int act : actions)
        b.step(act);
    EXPECT_TRUE(same_state(a.state(), b.state()));
    EXPECT_THROW(a.step(0), std::logic_error);
}

TEST(Step, CloneIsIndependent)
{
    auto sc = build_scenario(ScenarioConfig{}, 2);
    Environment env(sc);
    env.reset(9);
    const WorldState before = env.state();
    Environment probe = env;
    probe.step(1 % sc->actions.size());
    probe.step(0);
    EXPECT_TRUE(same_state(env.state(), before));
}

TEST(Step, RewardImageAndAccounting)
{
    auto sc = build_scenario(ScenarioConfig{}, 4);
    Environment env(sc);
    std::mt19937_64 rng(8);
    for (int e = 0; e < 10; ++e) {
        env.reset(100 + e);
        double sum = 0.0;
        VisitMask prev_cover = env.state().covered();
        while (!env.state().done) {
            const double prev_m = env.state().energy.mobility_energy(0);
            const auto r = env.step(random_feasible(env, rng));
            sum += r.reward;
            EXPECT_TRUE(r.reward == -sc->config.alpha1 || (r.reward >= 0.0 && r.reward <= sc->config.alpha1));
            if (r.reward > 0.0)
                EXPECT_TRUE(r.flags.all());
            EXPECT_GE(env.state().energy.mobility_energy(0), prev_m);
            EXPECT_EQ(env.state().covered() & prev_cover, prev_cover);
            prev_cover = env.state().covered();
            EXPECT_GE(env.state().eta_step, 0.0);
            EXPECT_LE(env.state().eta_step, 1.0);
            EXPECT_GE(env.state().aoi, 0.0);
            EXPECT_LE(env.state().aoi, 1.0);
            for (double x : env.features()) {
                EXPECT_GE(x, 0.0);
                EXPECT_LE(x, 1.0);
            }
            EXPECT_TRUE(r.flags.non_overlap);
        }
        EXPECT_DOUBLE_EQ(sum, env.state().episode_return);
    }
}

TEST(Step, DoneAtHorizonOrCoverage)
{
    auto sc = line(3, 1);
    Environment env(sc);
    env.reset_at({1}, {150.0}, 1);
    const auto& nb = sc->graph.neighbors[1];
    const int to2 = sc->actions.encode({static_cast<int>(std::find(nb.begin(), nb.end(), 2) - nb.begin()) + 1});
    auto r = env.step(to2);
    EXPECT_FALSE(r.done);  // everything covered, but 2 is out of backhaul range
    const auto& nb2 = sc->graph.neighbors[2];
    r = env.step(sc->actions.encode({static_cast<int>(std::find(nb2.begin(), nb2.end(), 1) - nb2.begin()) + 1}));
    EXPECT_TRUE(r.done);
    EXPECT_TRUE(r.flags.coverage);

    Environment idle(sc);
    idle.reset_at({2}, {150.0}, 1);
    StepResult last;
    int steps = 0;
    while (!idle.state().done) {
        last = idle.step(0);
        ++steps;
    }
    EXPECT_EQ(steps, sc->config.horizon);
    EXPECT_FALSE(last.flags.coverage);
    EXPECT_EQ(last.reward, -sc->config.alpha1);
}

TEST(Features, ShapeAndEndpoints)
{
    ScenarioConfig c;
    c.uavs = 2;
    c.iot_devices = 10;
    c.area_x = 1000;
    c.area_y = 1000;
    auto sc = build_scenario(c, make_graph({{0, 0}, {200, 0}, {1000, 1000}}, 1, 1500.0, {5, 0, 5}), 1);
    Environment env(sc);
    env.reset_at({0, 1}, {150, 150}, 1);
    const auto f = env.features();
    ASSERT_EQ(static_cast<int>(f.size()), 2 * 2 + 2 + 2);
    EXPECT_EQ(feature_length(*sc), 8);
    EXPECT_EQ(f[0], 0.0);
    EXPECT_EQ(f[1], 0.0);
    WorldState s = env.state();
    s.slot = 2;
    s.eta_sum = 2.0;
    EXPECT_EQ(encode_state(s, *sc)[6], 1.0);
}
