// Command-line front end: train, eval, sweep, validate, replay.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "uavtraj/agent.hpp"
#include "uavtraj/config.hpp"
#include "uavtraj/harness.hpp"
#include "uavtraj/trace.hpp"
#include "uavtraj/validation.hpp"

namespace fs = std::filesystem;
using namespace uavtraj;

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string out = "out";
    std::string agent = "replay";
    std::vector<std::string> overrides;
};

ScenarioConfig load(const Globals& g)
{
    ScenarioConfig cfg = g.config_path.empty() ? ScenarioConfig{} : load_config(g.config_path);
    for (const auto& o : g.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects section.key=value, got " + o);
        set_config_value(cfg, o.substr(0, eq), o.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

nlohmann::json summary_json(const EvaluationSummary& s)
{
    return {{"episodes", s.episodes.size()},
            {"mean_return", s.mean_return},
            {"mean_eta", s.mean_eta},
            {"mean_aoi", s.mean_aoi},
            {"mean_bandwidth_efficiency", s.mean_bandwidth_efficiency},
            {"mean_utilization", s.mean_utilization}};
}

// First evaluation episode of a run, logged for `replay`.
EpisodeTrace record_episode(const ScenarioConfig& cfg, std::uint64_t seed, AgentKind agent, const MlpQNetwork* net)
{
    EpisodeTrace trace;
    trace.config = cfg;
    trace.scenario_seed = seed;
    trace.episode_seed = evaluation_seeds(seed, 1).front();
    trace.agent = to_string(agent);
    Environment env(build_scenario(cfg, seed));
    env.reset(trace.episode_seed);
    if (!net) {
        trace.steps = greedy_baseline(env, cfg.horizon);
        return trace;
    }
    while (!env.state().done) {
        const int a = masked_argmax(net->forward(env.features()), env.mask());
        const StepResult r = env.step(a);
        trace.steps.push_back(make_trace_step(env.state(), a, r));
    }
    return trace;
}

int cmd_train(const Globals& g)
{
    const ScenarioConfig cfg = load(g);
    const AgentKind agent = parse_agent_kind(g.agent);
    const fs::path out(g.out);
    fs::create_directories(out);

    RunOutput run = run_single(cfg, g.seed, agent);
    run.record.experiment = "train";
    RunManifest manifest;
    manifest.config_hash = config_hash(cfg);
    manifest.seed = g.seed;
    manifest.agent = to_string(agent);
    manifest.config = cfg;
    manifest.metrics = run.record;
    if (run.training) {
        run.training->network.save(out / "network.txt");
        write_training_log(run.training->log, out / "training_log.csv");
        manifest.replay_capacity = run.training->replay_capacity;
        manifest.environment_steps = run.training->environment_steps;
        manifest.gradient_steps = run.training->gradient_steps;
        manifest.network_path = (out / "network.txt").string();
    }
    write_manifest(manifest, out / "manifest.json");
    save_config(cfg, out / "config.ini");
    write_trace(record_episode(cfg, g.seed, agent, run.training ? &run.training->network : nullptr),
                out / "trace.jsonl");
    std::cout << summary_json(run.evaluation).dump(2) << '\n';
    return 0;
}

int cmd_eval(const Globals& g, const std::string& network_path, int episodes)
{
    ScenarioConfig cfg = load(g);
    if (episodes > 0)
        cfg.eval_episodes = episodes;
    const auto scenario = build_scenario(cfg, g.seed);
    const auto seeds = evaluation_seeds(g.seed, cfg.eval_episodes);
    EvaluationSummary summary;
    if (network_path.empty()) {
        if (parse_agent_kind(g.agent) != AgentKind::greedy)
            throw std::invalid_argument("eval needs --network unless --agent greedy");
        summary = evaluate_greedy(scenario, seeds);
    } else {
        const auto net = MlpQNetwork::load(fs::path(network_path));
        if (net.sizes() != network_sizes(*scenario))
            throw std::invalid_argument("network shape does not match the scenario; rerun with the --seed and --config "
                                        "of the training run");
        summary = evaluate(net, scenario, seeds);
    }
    std::cout << summary_json(summary).dump(2) << '\n';
    return 0;
}

int cmd_sweep(const Globals& g, const std::string& axis_name, std::vector<double> grid, int seed_count,
              std::vector<std::string> agent_names, std::string experiment, int workers)
{
    const ScenarioConfig cfg = load(g);
    SweepSpec spec;
    spec.axis = parse_sweep_axis(axis_name);
    spec.experiment = experiment.empty() ? axis_name : experiment;
    spec.grid = grid.empty() ? default_grid(spec.axis) : std::move(grid);
    if (!agent_names.empty()) {
        spec.agents.clear();
        for (const auto& a : agent_names)
            spec.agents.push_back(parse_agent_kind(a));
    }
    if (seed_count > 0) {
        for (int i = 0; i < seed_count; ++i)
            spec.seeds.push_back(g.seed + static_cast<std::uint64_t>(i));
    } else {
        spec.seeds = cfg.seeds;
    }
    spec.validate();

    const fs::path out(g.out);
    fs::create_directories(out);
    std::cerr << spec.grid.size() * spec.agents.size() * spec.seeds.size() << " runs\n";
    const auto records = run_experiment(
        cfg, spec,
        [](const MetricsRecord& r) {
            std::cerr << to_string(r.axis) << "=" << r.axis_value << " " << to_string(r.agent) << " seed " << r.seed
                      << (r.failed ? " FAILED: " + r.failure : " eta " + std::to_string(r.mean_eta)) << '\n';
        },
        workers);
    write_records_csv(records, out / (spec.experiment + "_records.csv"));
    write_records_json(records, out / (spec.experiment + "_records.json"));
    const SummaryTable table = aggregate(records);
    write_summary_csv(table, out / (spec.experiment + "_summary.csv"));
    write_summary_json(table, out / (spec.experiment + "_summary.json"));
    write_figure_series(table, out / "series");
    save_config(cfg, out / (spec.experiment + "_config.ini"));
    for (const auto& c : table.empty_cells)
        std::cerr << "empty cell: " << c << '\n';
    return table.empty_cells.empty() ? 0 : 2;
}

int cmd_validate(const Globals& g)
{
    const auto results = run_property_suites(load(g), g.seed);
    for (const auto& r : results)
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    return all_passed(results) ? 0 : 1;
}

int cmd_replay(const std::string& trace_path)
{
    const auto diffs = replay_trace(read_trace(fs::path(trace_path)));
    for (const auto& d : diffs)
        std::cout << "slot " << d.slot << " " << d.field << ": logged " << d.expected << ", replayed " << d.actual
                  << '\n';
    std::cout << diffs.size() << " diffs\n";
    return diffs.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-UAV trajectory simulator and DQN harness"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "Scenario config file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Run seed");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--agent", g.agent, "Agent kind")->check(CLI::IsMember({"replay", "baseline", "greedy"}));
    app.add_option("--set", g.overrides, "Config override section.key=value (repeatable)");

    auto* train = app.add_subcommand("train", "Train one agent and evaluate it");

    auto* eval = app.add_subcommand("eval", "Evaluate a stored network");
    std::string network;
    int episodes = 0;
    eval->add_option("--network", network, "Network file written by train; pass the training run's --seed and config")->check(CLI::ExistingFile);
    eval->add_option("--episodes", episodes, "Evaluation episodes (default from config)");

    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    std::string axis;
    std::vector<double> grid;
    int seed_count = 0;
    std::vector<std::string> agents;
    std::string experiment;
    int workers = 1;
    sweep->add_option("--axis", axis, "waypoints | gamma | aoi_threshold")
        ->required()
        ->check(CLI::IsMember({"waypoints", "gamma", "aoi_threshold"}));
    sweep->add_option("--grid", grid, "Grid values, comma separated (default: the axis' standard grid)")->delimiter(',');
    sweep->add_option("--seeds", seed_count, "Number of seeds starting at --seed (default: config seeds)");
    sweep->add_option("--agents", agents, "Agents to run (default: all three)")->delimiter(',');
    sweep->add_option("--experiment", experiment, "Experiment name used in output files");
    sweep->add_option("--workers", workers, "Concurrent runs")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "Run the invariant and oracle suites");

    auto* replay = app.add_subcommand("replay", "Re-run a logged episode and diff it");
    std::string trace_path;
    replay->add_option("trace", trace_path, "Trace file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train)
            return cmd_train(g);
        if (*eval)
            return cmd_eval(g, network, episodes);
        if (*sweep)
            return cmd_sweep(g, axis, grid, seed_count, agents, experiment, workers);
        if (*validate)
            return cmd_validate(g);
        if (*replay)
            return cmd_replay(trace_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
