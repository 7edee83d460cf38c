#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "uavtraj/agent.hpp"
#include "uavtraj/config.hpp"

namespace uavtraj {

enum class SweepAxis { waypoints, gamma, aoi_threshold };

std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

/// waypoints {6..14 step 2}, gamma {0.4..0.9}, aoi_threshold {0.3, 0.5, 0.7, 0.9}.
std::vector<double> default_grid(SweepAxis axis);

struct SweepSpec {
    std::string experiment;
    SweepAxis axis = SweepAxis::waypoints;
    std::vector<double> grid;
    std::vector<AgentKind> agents{AgentKind::replay_dqn, AgentKind::baseline_dqn, AgentKind::greedy};
    std::vector<std::uint64_t> seeds;

    /// Throws std::invalid_argument for grid values outside the axis range.
    void validate() const;
};

/// Copy of `config` with the swept parameter set to `value`.
ScenarioConfig apply_axis(ScenarioConfig config, SweepAxis axis, double value);

struct MetricsRecord {
    std::string experiment;
    std::string scenario_id;  // config hash
    SweepAxis axis = SweepAxis::waypoints;
    double axis_value = 0.0;
    std::uint64_t seed = 0;
    AgentKind agent = AgentKind::replay_dqn;
    int episodes = 0;
    double mean_return = 0.0;
    double mean_eta = 0.0;
    double mean_aoi = 0.0;
    double mean_bandwidth_efficiency = 0.0;
    double mean_utilization = 0.0;
    bool failed = false;
    std::string failure;

    bool operator==(const MetricsRecord&) const = default;
};

/// Seeds of the evaluation episodes of one run.
std::vector<std::uint64_t> evaluation_seeds(std::uint64_t run_seed, int count);

struct RunOutput {
    MetricsRecord record;
    std::optional<TrainingResult> training;  // empty for the greedy policy
    EvaluationSummary evaluation;
};

/// Build the scenario from the run seed, train if the agent learns, then
/// evaluate on config.eval_episodes episodes. Exceptions propagate.
RunOutput run_single(const ScenarioConfig& config, std::uint64_t seed, AgentKind agent);

using RecordCallback = std::function<void(const MetricsRecord&)>;

/// Every grid point x agent x seed, each an isolated run. A run that throws
/// yields a record with failed = true. Records come back in grid, agent,
/// seed order regardless of `workers`.
std::vector<MetricsRecord> run_experiment(const ScenarioConfig& config, const SweepSpec& spec,
                                          const RecordCallback& on_record = {}, int workers = 1);

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for a single value
};

Stat mean_stddev(const std::vector<double>& values);

struct Bounds {
    double min = 0.0;
    double max = 0.0;

    /// Min-max scaling; a degenerate range maps everything to 1.
    double normalize(double v) const;
};

struct CellSummary {
    double axis_value = 0.0;
    AgentKind agent = AgentKind::replay_dqn;
    int runs = 0;      // successful runs
    int failures = 0;
    Stat reward;
    Stat eta;
    Stat aoi;
    Stat bandwidth_efficiency;
    Stat utilization;
    double normalized_reward = 0.0;
    double normalized_eta = 0.0;
    double normalized_aoi = 0.0;
};

struct SummaryTable {
    std::string experiment;
    SweepAxis axis = SweepAxis::waypoints;
    std::vector<CellSummary> cells;  // sorted by axis value, then agent
    // Normalization ranges over the cell means of the whole experiment.
    Bounds reward_bounds;
    Bounds eta_bounds;
    Bounds aoi_bounds;
    std::vector<std::string> empty_cells;  // cells where every run failed

    const CellSummary* find(double axis_value, AgentKind agent) const;
};

/// Records must all belong to one experiment and axis.
SummaryTable aggregate(const std::vector<MetricsRecord>& records);

// Export. Every writer throws std::runtime_error when the file cannot be written.

std::string csv_escape(const std::string& field);
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

void write_records_csv(const std::vector<MetricsRecord>& records, const std::filesystem::path& path);
std::vector<MetricsRecord> read_records_csv(const std::filesystem::path& path);
void write_records_json(const std::vector<MetricsRecord>& records, const std::filesystem::path& path);

void write_summary_csv(const SummaryTable& table, const std::filesystem::path& path);
void write_summary_json(const SummaryTable& table, const std::filesystem::path& path);

/// Two-column-plus-error series for plotting: axis value, mean, stddev. One
/// file per metric and agent, named <experiment>-<metric>_<axis>_<agent>.csv.
/// Returns the written paths.
std::vector<std::filesystem::path> write_figure_series(const SummaryTable& table, const std::filesystem::path& dir);

void write_training_log(const std::vector<EpisodeLog>& log, const std::filesystem::path& path);

struct RunManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string agent;
    ScenarioConfig config;
    std::size_t replay_capacity = 0;
    long environment_steps = 0;
    long gradient_steps = 0;
    MetricsRecord metrics;
    std::string network_path;
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace uavtraj
