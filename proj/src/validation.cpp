#include "uavtraj/validation.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "uavtraj/agent.hpp"
#include "uavtraj/channel_model.hpp"
#include "uavtraj/environment.hpp"
#include "uavtraj/trace.hpp"

namespace uavtraj {

namespace {

struct Failure {
    std::string what;
};

void expect(bool ok, const std::string& what)
{
    if (!ok)
        throw Failure{what};
}

int random_feasible(const Environment& env, std::mt19937_64& rng)
{
    const auto mask = env.mask();
    std::vector<int> ok;
    for (std::size_t a = 0; a < mask.size(); ++a)
        if (mask[a])
            ok.push_back(static_cast<int>(a));
    return ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng)];
}

std::string aoi_recurrence(const ScenarioConfig& config, std::uint64_t seed)
{
    Environment env(build_scenario(config, seed));
    std::mt19937_64 rng(seed);
    int checked = 0;
    for (int e = 0; e < 5; ++e) {
        env.reset(episode_seed(seed, "validate-aoi", e));
        const auto& g = env.scenario().graph;
        while (!env.state().done) {
            std::vector<int> before;
            for (int p = 0; p < g.size(); ++p)
                before.push_back(env.state().aoi_table.age(p));
            env.step(random_feasible(env, rng));
            for (int p = 0; p < g.size(); ++p) {
                if (!env.state().aoi_table.tracked(p))
                    continue;
                const int age = env.state().aoi_table.age(p);
                const int prev = before[static_cast<std::size_t>(p)];
                expect(age == prev + 1 || age <= prev,
                       "waypoint " + std::to_string(p) + " age went " + std::to_string(prev) + " -> " +
                           std::to_string(age));
                ++checked;
            }
        }
    }
    return std::to_string(checked) + " age transitions";
}

std::string los_complementarity(const ScenarioConfig& config)
{
    const auto params = config.channel_params();
    int checked = 0;
    for (double h : {10.0, 140.0, 250.0, 1000.0})
        for (double d = 0.0; d <= 2000.0; d += 25.0) {
            const auto p = los_probability(make_geometry(d, h), params);
            expect(p.los >= 0.0 && p.los <= 1.0, "LoS probability outside [0, 1]");
            expect(std::abs(p.los + p.nlos - 1.0) < 1e-12, "LoS and NLoS probabilities do not sum to 1");
            ++checked;
        }
    return std::to_string(checked) + " geometries";
}

std::string replay_fifo()
{
    for (std::size_t cap : {1U, 7U, 200U})
        for (std::size_t extra : {0U, 1U, 13U, 450U}) {
            ReplayMemory m(cap);
            for (std::size_t i = 0; i < cap + extra; ++i) {
                Experience e;
                e.action = static_cast<int>(i);
                m.push(e);
            }
            expect(m.size() == cap, "size differs from capacity after overfilling");
            for (std::size_t i = 0; i < cap; ++i)
                expect(m.at(i).action == static_cast<int>(extra + i), "stored order broken after eviction");
        }
    return "12 capacity/overfill combinations";
}

std::string uniform_sampling(std::uint64_t seed)
{
    constexpr std::size_t cap = 200;
    constexpr std::size_t draws = 100000;
    ReplayMemory m(cap);
    for (std::size_t i = 0; i < cap; ++i)
        m.push(Experience{});
    std::mt19937_64 rng(seed);
    std::vector<double> counts(cap, 0.0);
    for (std::size_t i : m.sample_indices(draws, rng))
        counts[i] += 1.0;
    const double expected = static_cast<double>(draws) / cap;
    const double sigma = std::sqrt(expected * (1.0 - 1.0 / cap));
    double chi2 = 0.0;
    for (double c : counts) {
        expect(std::abs(c - expected) <= 5.0 * sigma, "slot frequency outside 5 sigma");
        chi2 += (c - expected) * (c - expected) / expected;
    }
    const double dof = cap - 1;
    // upper tail far beyond the 0.999 quantile (~ dof + 3.1 sqrt(2 dof))
    expect(chi2 < dof + 5.0 * std::sqrt(2.0 * dof), "chi-square statistic too large: " + std::to_string(chi2));
    std::ostringstream s;
    s << "chi2 = " << chi2 << " on " << dof << " dof";
    return s.str();
}

std::string mask_respect(const ScenarioConfig& config, std::uint64_t seed)
{
    auto scenario = build_scenario(config, seed);
    Environment env(scenario);
    const MlpQNetwork net(network_sizes(*scenario), seed);
    std::mt19937_64 rng(seed);
    int checked = 0;
    for (double eps : {0.0, 0.3, 1.0}) {
        env.reset(episode_seed(seed, "validate-mask", checked));
        while (!env.state().done) {
            const auto mask = env.mask();
            for (int k = 0; k < 20; ++k) {
                const int a = select_action(net, env.features(), mask, eps, rng);
                expect(mask[static_cast<std::size_t>(a)] == 1, "masked action selected");
                ++checked;
            }
            env.step(random_feasible(env, rng));
        }
    }
    return std::to_string(checked) + " selections";
}

std::string reward_table()
{
    constexpr double alpha1 = 2.0;
    constexpr double eta = 0.4;
    for (int bits = 0; bits < 16; ++bits) {
        ConstraintFlags f;
        f.non_overlap = bits & 1;
        f.coverage = bits & 2;
        f.energy = bits & 4;
        f.aoi = bits & 8;
        double expected = alpha1 * eta;
        if (!f.non_overlap || !f.coverage || !f.energy)
            expected = -alpha1;
        else if (!f.aoi)
            expected = 0.0;
        expect(reward(f, eta, alpha1) == expected, "reward mismatch for flag combination " + std::to_string(bits));
    }
    return "16 flag combinations";
}

std::string partition_property(const ScenarioConfig& base, std::uint64_t seed)
{
    // Seven points on a line, 100 m apart, ground station in the middle.
    ScenarioConfig cfg = base;
    cfg.uavs = 2;
    cfg.iot_devices = 60;
    cfg.horizon = 30;
    cfg.stop_on_coverage = true;
    cfg.eta_threshold = 0.0;
    cfg.aoi_threshold = 1.0;
    std::vector<Point> pts;
    for (int i = 0; i < 7; ++i)
        pts.push_back({200.0 + 100.0 * i, 500.0});
    auto graph = make_graph(pts, 3, 150.0, {10, 10, 10, 0, 10, 10, 10});
    Environment env(build_scenario(cfg, std::move(graph), seed));
    std::mt19937_64 rng(seed);
    int accepted = 0;
    for (int e = 0; e < 400; ++e) {
        env.reset(episode_seed(seed, "validate-partition", e));
        StepResult last;
        while (!env.state().done)
            last = env.step(random_feasible(env, rng));
        if (!last.flags.all())
            continue;
        ++accepted;
        const auto& s = env.state();
        const VisitMask everything = (VisitMask{1} << 7) - 1;
        VisitMask uni = 0;
        for (std::size_t u = 0; u < s.visits.size(); ++u) {
            uni |= s.visits[u];
            for (std::size_t v = u + 1; v < s.visits.size(); ++v)
                expect((s.visits[u] & s.visits[v]) == (VisitMask{1} << 3), "visited sets share a non-station point");
        }
        expect(uni == everything, "accepting episode left a point unvisited");
    }
    expect(accepted > 0, "no accepting episode found");
    return std::to_string(accepted) + " accepting episodes";
}

std::string seed_replay(const ScenarioConfig& config, std::uint64_t seed)
{
    EpisodeTrace trace;
    trace.config = config;
    trace.scenario_seed = seed;
    trace.episode_seed = episode_seed(seed, "validate-replay", 0);
    trace.agent = "random";
    Environment env(build_scenario(config, seed));
    env.reset(trace.episode_seed);
    std::mt19937_64 rng(seed);
    while (!env.state().done) {
        const int a = random_feasible(env, rng);
        const StepResult r = env.step(a);
        trace.steps.push_back(make_trace_step(env.state(), a, r));
    }
    std::stringstream buffer;
    write_trace(trace, buffer);
    const auto diffs = replay_trace(read_trace(buffer));
    expect(diffs.empty(), std::to_string(diffs.size()) + " diffs, first at slot " +
                              (diffs.empty() ? std::string() : std::to_string(diffs.front().slot) + " field " +
                                                                   diffs.front().field));

    Environment again(build_scenario(config, seed));
    again.reset(trace.episode_seed);
    for (const auto& s : trace.steps)
        again.step(s.action);
    expect(same_state(env.state(), again.state()), "same seed and actions gave a different final state");
    return std::to_string(trace.steps.size()) + " slots replayed";
}

PropertyResult run(const std::string& name, const std::function<std::string()>& body)
{
    PropertyResult r;
    r.name = name;
    try {
        r.detail = body();
        r.passed = true;
    } catch (const Failure& f) {
        r.detail = f.what;
    } catch (const std::exception& e) {
        r.detail = std::string("exception: ") + e.what();
    }
    return r;
}

}  // namespace

std::vector<PropertyResult> run_property_suites(const ScenarioConfig& config, std::uint64_t seed)
{
    config.validate();
    return {
        run("aoi_recurrence", [&] { return aoi_recurrence(config, seed); }),
        run("los_nlos_complementarity", [&] { return los_complementarity(config); }),
        run("replay_fifo_eviction", [] { return replay_fifo(); }),
        run("replay_uniform_sampling", [&] { return uniform_sampling(seed); }),
        run("feasibility_mask_respect", [&] { return mask_respect(config, seed); }),
        run("reward_case_table", [] { return reward_table(); }),
        run("partition_on_accepting_episodes", [&] { return partition_property(config, seed); }),
        run("seed_determinism_replay", [&] { return seed_replay(config, seed); }),
    };
}

bool all_passed(const std::vector<PropertyResult>& results)
{
    for (const auto& r : results)
        if (!r.passed)
            return false;
    return true;
}

}  // namespace uavtraj
