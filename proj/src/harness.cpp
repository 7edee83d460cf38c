#include "uavtraj/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace uavtraj {

namespace {

using nlohmann::json;

bool near(double a, double b) { return std::abs(a - b) < 1e-9; }

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

std::string num(double v)
{
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

const char* const record_header[] = {"experiment", "scenario_id", "axis", "axis_value", "seed",
                                     "agent", "episodes", "mean_return", "mean_eta", "mean_aoi",
                                     "mean_bandwidth_efficiency", "mean_utilization", "failed", "failure"};

json record_json(const MetricsRecord& r)
{
    return {{"experiment", r.experiment},
            {"scenario_id", r.scenario_id},
            {"axis", to_string(r.axis)},
            {"axis_value", r.axis_value},
            {"seed", r.seed},
            {"agent", to_string(r.agent)},
            {"episodes", r.episodes},
            {"mean_return", r.mean_return},
            {"mean_eta", r.mean_eta},
            {"mean_aoi", r.mean_aoi},
            {"mean_bandwidth_efficiency", r.mean_bandwidth_efficiency},
            {"mean_utilization", r.mean_utilization},
            {"failed", r.failed},
            {"failure", r.failure}};
}

json stat_json(const Stat& s) { return {{"mean", s.mean}, {"stddev", s.stddev}}; }
json bounds_json(const Bounds& b) { return {{"min", b.min}, {"max", b.max}}; }

}  // namespace

std::string to_string(SweepAxis axis)
{
    switch (axis) {
    case SweepAxis::waypoints:
        return "waypoints";
    case SweepAxis::gamma:
        return "gamma";
    case SweepAxis::aoi_threshold:
        return "aoi_threshold";
    }
    return "unknown";
}

SweepAxis parse_sweep_axis(const std::string& name)
{
    if (name == "waypoints")
        return SweepAxis::waypoints;
    if (name == "gamma")
        return SweepAxis::gamma;
    if (name == "aoi_threshold")
        return SweepAxis::aoi_threshold;
    throw std::invalid_argument("unknown sweep axis: " + name);
}

std::vector<double> default_grid(SweepAxis axis)
{
    switch (axis) {
    case SweepAxis::waypoints:
        return {6, 8, 10, 12, 14};
    case SweepAxis::gamma:
        return {0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    case SweepAxis::aoi_threshold:
        return {0.3, 0.5, 0.7, 0.9};
    }
    return {};
}

void SweepSpec::validate() const
{
    if (grid.empty())
        throw std::invalid_argument("sweep grid is empty");
    if (agents.empty())
        throw std::invalid_argument("sweep has no agents");
    if (seeds.empty())
        throw std::invalid_argument("sweep has no seeds");
    const auto allowed = default_grid(axis);
    for (double v : grid) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](double a) { return near(a, v); });
        if (!ok)
            throw std::invalid_argument("grid value " + num(v) + " is not valid for axis " + to_string(axis));
    }
}

ScenarioConfig apply_axis(ScenarioConfig config, SweepAxis axis, double value)
{
    switch (axis) {
    case SweepAxis::waypoints:
        config.waypoints = static_cast<int>(std::lround(value));
        break;
    case SweepAxis::gamma:
        config.gamma = value;
        break;
    case SweepAxis::aoi_threshold:
        config.aoi_threshold = value;
        break;
    }
    config.validate();
    return config;
}

std::vector<std::uint64_t> evaluation_seeds(std::uint64_t run_seed, int count)
{
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < count; ++i)
        seeds.push_back(episode_seed(run_seed, "eval", i));
    return seeds;
}

RunOutput run_single(const ScenarioConfig& config, std::uint64_t seed, AgentKind agent)
{
    config.validate();
    const auto scenario = build_scenario(config, seed);
    const auto seeds = evaluation_seeds(seed, config.eval_episodes);

    RunOutput out;
    if (agent == AgentKind::greedy) {
        out.evaluation = evaluate_greedy(scenario, seeds);
    } else {
        out.training = train(scenario, seed, agent);
        out.evaluation = evaluate(out.training->network, scenario, seeds);
    }
    auto& r = out.record;
    r.scenario_id = config_hash(config);
    r.seed = seed;
    r.agent = agent;
    r.episodes = static_cast<int>(out.evaluation.episodes.size());
    r.mean_return = out.evaluation.mean_return;
    r.mean_eta = out.evaluation.mean_eta;
    r.mean_aoi = out.evaluation.mean_aoi;
    r.mean_bandwidth_efficiency = out.evaluation.mean_bandwidth_efficiency;
    r.mean_utilization = out.evaluation.mean_utilization;
    return out;
}

std::vector<MetricsRecord> run_experiment(const ScenarioConfig& config, const SweepSpec& spec,
                                          const RecordCallback& on_record, int workers)
{
    spec.validate();
    struct Job {
        double value;
        AgentKind agent;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double v : spec.grid)
        for (AgentKind a : spec.agents)
            for (std::uint64_t s : spec.seeds)
                jobs.push_back({v, a, s});

    std::vector<MetricsRecord> records(jobs.size());
    std::mutex report;
    auto run_job = [&](std::size_t i) {
        const Job& job = jobs[i];
        MetricsRecord r;
        try {
            const ScenarioConfig cfg = apply_axis(config, spec.axis, job.value);
            r = run_single(cfg, job.seed, job.agent).record;
        } catch (const std::exception& e) {
            r.failed = true;
            r.failure = e.what();
            r.mean_return = r.mean_eta = r.mean_aoi = std::nan("");
            r.mean_bandwidth_efficiency = r.mean_utilization = std::nan("");
        }
        r.experiment = spec.experiment;
        r.axis = spec.axis;
        r.axis_value = job.value;
        r.seed = job.seed;
        r.agent = job.agent;
        records[i] = r;
        if (on_record) {
            std::lock_guard lock(report);
            on_record(r);
        }
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++)
            run_job(i);
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < n; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    return records;
}

Stat mean_stddev(const std::vector<double>& values)
{
    Stat s;
    if (values.empty())
        return s;
    for (double v : values)
        s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

double Bounds::normalize(double v) const
{
    if (!(max > min))
        return 1.0;
    return (v - min) / (max - min);
}

const CellSummary* SummaryTable::find(double axis_value, AgentKind agent) const
{
    for (const auto& c : cells)
        if (near(c.axis_value, axis_value) && c.agent == agent)
            return &c;
    return nullptr;
}

SummaryTable aggregate(const std::vector<MetricsRecord>& records)
{
    SummaryTable table;
    if (records.empty())
        return table;
    table.experiment = records.front().experiment;
    table.axis = records.front().axis;

    std::map<std::pair<double, int>, std::vector<const MetricsRecord*>> cells;
    for (const auto& r : records) {
        if (r.experiment != table.experiment || r.axis != table.axis)
            throw std::invalid_argument("records from different experiments cannot be aggregated together");
        cells[{r.axis_value, static_cast<int>(r.agent)}].push_back(&r);
    }

    for (const auto& [key, rs] : cells) {
        CellSummary c;
        c.axis_value = key.first;
        c.agent = static_cast<AgentKind>(key.second);
        std::vector<double> reward, eta, aoi, bw, util;
        for (const auto* r : rs) {
            if (r->failed) {
                ++c.failures;
                continue;
            }
            ++c.runs;
            reward.push_back(r->mean_return);
            eta.push_back(r->mean_eta);
            aoi.push_back(r->mean_aoi);
            bw.push_back(r->mean_bandwidth_efficiency);
            util.push_back(r->mean_utilization);
        }
        if (c.runs == 0)
            table.empty_cells.push_back(to_string(table.axis) + "=" + num(c.axis_value) + "/" + to_string(c.agent));
        c.reward = mean_stddev(reward);
        c.eta = mean_stddev(eta);
        c.aoi = mean_stddev(aoi);
        c.bandwidth_efficiency = mean_stddev(bw);
        c.utilization = mean_stddev(util);
        table.cells.push_back(c);
    }

    auto bounds_of = [&](auto member) {
        Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (const auto& c : table.cells) {
            if (c.runs == 0)
                continue;
            b.min = std::min(b.min, (c.*member).mean);
            b.max = std::max(b.max, (c.*member).mean);
        }
        if (b.min > b.max)
            b = {};
        return b;
    };
    table.reward_bounds = bounds_of(&CellSummary::reward);
    table.eta_bounds = bounds_of(&CellSummary::eta);
    table.aoi_bounds = bounds_of(&CellSummary::aoi);
    for (auto& c : table.cells) {
        if (c.runs == 0)
            continue;
        c.normalized_reward = table.reward_bounds.normalize(c.reward.mean);
        c.normalized_eta = table.eta_bounds.normalize(c.eta.mean);
        c.normalized_aoi = table.aoi_bounds.normalize(c.aoi.mean);
    }
    return table;
}

std::string csv_escape(const std::string& field)
{
    if (field.find_first_of(",\"\r\n") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + '"';
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' && in.peek() == '\n') {
            continue;
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (quoted)
        throw std::runtime_error("unterminated quoted CSV field");
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_records_csv(const std::vector<MetricsRecord>& records, const std::filesystem::path& path)
{
    auto out = open_out(path);
    bool first = true;
    for (const char* h : record_header) {
        out << (first ? "" : ",") << h;
        first = false;
    }
    out << "\r\n";
    for (const auto& r : records) {
        const std::string fields[] = {r.experiment,
                                      r.scenario_id,
                                      to_string(r.axis),
                                      num(r.axis_value),
                                      std::to_string(r.seed),
                                      to_string(r.agent),
                                      std::to_string(r.episodes),
                                      num(r.mean_return),
                                      num(r.mean_eta),
                                      num(r.mean_aoi),
                                      num(r.mean_bandwidth_efficiency),
                                      num(r.mean_utilization),
                                      r.failed ? "1" : "0",
                                      r.failure};
        first = true;
        for (const auto& f : fields) {
            out << (first ? "" : ",") << csv_escape(f);
            first = false;
        }
        out << "\r\n";
    }
    finish(out, path);
}

std::vector<MetricsRecord> read_records_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    const auto rows = parse_csv(in);
    constexpr std::size_t columns = std::size(record_header);
    if (rows.empty() || rows.front().size() != columns)
        throw std::runtime_error("unexpected records header in " + path.string());
    std::vector<MetricsRecord> records;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f.size() != columns)
            throw std::runtime_error("malformed records row " + std::to_string(i) + " in " + path.string());
        MetricsRecord r;
        r.experiment = f[0];
        r.scenario_id = f[1];
        r.axis = parse_sweep_axis(f[2]);
        r.axis_value = std::stod(f[3]);
        r.seed = std::stoull(f[4]);
        r.agent = parse_agent_kind(f[5]);
        r.episodes = std::stoi(f[6]);
        r.mean_return = std::stod(f[7]);
        r.mean_eta = std::stod(f[8]);
        r.mean_aoi = std::stod(f[9]);
        r.mean_bandwidth_efficiency = std::stod(f[10]);
        r.mean_utilization = std::stod(f[11]);
        r.failed = f[12] == "1";
        r.failure = f[13];
        records.push_back(std::move(r));
    }
    return records;
}

void write_records_json(const std::vector<MetricsRecord>& records, const std::filesystem::path& path)
{
    json arr = json::array();
    for (const auto& r : records)
        arr.push_back(record_json(r));
    auto out = open_out(path);
    out << arr.dump(2) << '\n';
    finish(out, path);
}

void write_summary_csv(const SummaryTable& table, const std::filesystem::path& path)
{
    auto out = open_out(path);
    out << to_string(table.axis)
        << ",agent,runs,failures,reward_mean,reward_std,eta_mean,eta_std,aoi_mean,aoi_std,"
           "bandwidth_efficiency_mean,bandwidth_efficiency_std,utilization_mean,utilization_std,"
           "normalized_reward,normalized_eta,normalized_aoi\r\n";
    for (const auto& c : table.cells) {
        out << num(c.axis_value) << ',' << to_string(c.agent) << ',' << c.runs << ',' << c.failures;
        for (const Stat* s : {&c.reward, &c.eta, &c.aoi, &c.bandwidth_efficiency, &c.utilization})
            out << ',' << num(s->mean) << ',' << num(s->stddev);
        out << ',' << num(c.normalized_reward) << ',' << num(c.normalized_eta) << ',' << num(c.normalized_aoi)
            << "\r\n";
    }
    finish(out, path);
}

void write_summary_json(const SummaryTable& table, const std::filesystem::path& path)
{
    json cells = json::array();
    for (const auto& c : table.cells)
        cells.push_back({{"axis_value", c.axis_value},
                         {"agent", to_string(c.agent)},
                         {"runs", c.runs},
                         {"failures", c.failures},
                         {"reward", stat_json(c.reward)},
                         {"eta", stat_json(c.eta)},
                         {"aoi", stat_json(c.aoi)},
                         {"bandwidth_efficiency", stat_json(c.bandwidth_efficiency)},
                         {"utilization", stat_json(c.utilization)},
                         {"normalized_reward", c.normalized_reward},
                         {"normalized_eta", c.normalized_eta},
                         {"normalized_aoi", c.normalized_aoi}});
    const json doc = {{"experiment", table.experiment},
                      {"axis", to_string(table.axis)},
                      {"normalization",
                       {{"reward", bounds_json(table.reward_bounds)},
                        {"eta", bounds_json(table.eta_bounds)},
                        {"aoi", bounds_json(table.aoi_bounds)}}},
                      {"empty_cells", table.empty_cells},
                      {"cells", cells}};
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

std::vector<std::filesystem::path> write_figure_series(const SummaryTable& table, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    const std::pair<const char*, Stat CellSummary::*> metrics[] = {
        {"reward", &CellSummary::reward},
        {"eta", &CellSummary::eta},
        {"aoi", &CellSummary::aoi},
        {"bandwidth_efficiency", &CellSummary::bandwidth_efficiency},
        {"utilization", &CellSummary::utilization}};
    std::vector<AgentKind> agents;
    for (const auto& c : table.cells)
        if (std::find(agents.begin(), agents.end(), c.agent) == agents.end())
            agents.push_back(c.agent);

    std::vector<std::filesystem::path> written;
    for (const auto& [metric, member] : metrics) {
        for (AgentKind agent : agents) {
            const auto path = dir / (table.experiment + "-" + metric + "_" + to_string(table.axis) + "_" +
                                     to_string(agent) + ".csv");
            auto out = open_out(path);
            out << "# " << to_string(table.axis) << " mean stddev\n";
            for (const auto& c : table.cells)
                if (c.agent == agent && c.runs > 0)
                    out << num(c.axis_value) << ',' << num((c.*member).mean) << ',' << num((c.*member).stddev)
                        << '\n';
            finish(out, path);
            written.push_back(path);
        }
    }
    return written;
}

void write_training_log(const std::vector<EpisodeLog>& log, const std::filesystem::path& path)
{
    auto out = open_out(path);
    out << "episode,seed,steps,return,eta,aoi,non_overlap_violations,coverage_violations,energy_violations,"
           "aoi_violations,epsilon,mean_loss\r\n";
    for (const auto& e : log)
        out << e.episode << ',' << e.seed << ',' << e.steps << ',' << num(e.episode_return) << ',' << num(e.eta)
            << ',' << num(e.aoi) << ',' << e.violations.non_overlap << ',' << e.violations.coverage << ','
            << e.violations.energy << ',' << e.violations.aoi << ',' << num(e.epsilon) << ',' << num(e.mean_loss)
            << "\r\n";
    finish(out, path);
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path)
{
    const auto& c = m.config;
    const json doc = {{"config_hash", m.config_hash},
                      {"seed", m.seed},
                      {"agent", m.agent},
                      {"hyperparameters",
                       {{"gamma", c.gamma},
                        {"learning_rate", c.learning_rate},
                        {"hidden_units", c.hidden_units},
                        {"replay_capacity", m.replay_capacity},
                        {"batch_size", c.batch_size},
                        {"epsilon_start", c.epsilon_start},
                        {"epsilon_end", c.epsilon_end},
                        {"epsilon_decay_fraction", c.epsilon_decay_fraction},
                        {"target_sync_period", c.target_sync_period},
                        {"episodes", c.episodes},
                        {"horizon", c.horizon}}},
                      {"environment_steps", m.environment_steps},
                      {"gradient_steps", m.gradient_steps},
                      {"metrics", record_json(m.metrics)},
                      {"network", m.network_path},
                      {"config", serialize_config(c)}};
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

}  // namespace uavtraj
