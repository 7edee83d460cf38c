#include "uavtraj/trace.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace uavtraj {

namespace {

using nlohmann::json;

json flags_json(const ConstraintFlags& f)
{
    return {{"non_overlap", f.non_overlap}, {"coverage", f.coverage}, {"energy", f.energy}, {"aoi", f.aoi}};
}

ConstraintFlags flags_from(const json& j)
{
    ConstraintFlags f;
    f.non_overlap = j.at("non_overlap").get<bool>();
    f.coverage = j.at("coverage").get<bool>();
    f.energy = j.at("energy").get<bool>();
    f.aoi = j.at("aoi").get<bool>();
    return f;
}

template <class T>
std::string text(const T& v)
{
    return json(v).dump();
}

std::string text(const ConstraintFlags& f) { return flags_json(f).dump(); }

}  // namespace

TraceStep make_trace_step(const WorldState& after, int action, const StepResult& result)
{
    TraceStep s;
    s.slot = after.slot;
    s.action = action;
    s.positions = after.position;
    s.reward = result.reward;
    s.eta = after.eta();
    s.aoi = after.aoi;
    s.flags = result.flags;
    s.done = result.done;
    return s;
}

void write_trace(const EpisodeTrace& trace, std::ostream& out)
{
    const json header = {{"format", "uavtraj-trace"},
                         {"version", 1},
                         {"config", serialize_config(trace.config)},
                         {"scenario_seed", trace.scenario_seed},
                         {"episode_seed", trace.episode_seed},
                         {"agent", trace.agent},
                         {"steps", trace.steps.size()}};
    out << header.dump() << '\n';
    for (const auto& s : trace.steps) {
        const json row = {{"slot", s.slot},     {"action", s.action}, {"positions", s.positions},
                          {"reward", s.reward}, {"eta", s.eta},       {"aoi", s.aoi},
                          {"flags", flags_json(s.flags)}, {"done", s.done}};
        out << row.dump() << '\n';
    }
    if (!out)
        throw std::runtime_error("failed to write trace");
}

void write_trace(const EpisodeTrace& trace, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path.string());
    write_trace(trace, out);
}

EpisodeTrace read_trace(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty trace");
    const json header = json::parse(line);
    if (header.value("format", "") != "uavtraj-trace" || header.value("version", 0) != 1)
        throw std::runtime_error("not a uavtraj trace");

    EpisodeTrace trace;
    trace.config = parse_config(header.at("config").get<std::string>());
    trace.scenario_seed = header.at("scenario_seed").get<std::uint64_t>();
    trace.episode_seed = header.at("episode_seed").get<std::uint64_t>();
    trace.agent = header.at("agent").get<std::string>();
    const auto expected = header.at("steps").get<std::size_t>();

    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const json row = json::parse(line);
        TraceStep s;
        s.slot = row.at("slot").get<int>();
        s.action = row.at("action").get<int>();
        s.positions = row.at("positions").get<std::vector<int>>();
        s.reward = row.at("reward").get<double>();
        s.eta = row.at("eta").get<double>();
        s.aoi = row.at("aoi").get<double>();
        s.flags = flags_from(row.at("flags"));
        s.done = row.at("done").get<bool>();
        trace.steps.push_back(std::move(s));
    }
    if (trace.steps.size() != expected)
        throw std::runtime_error("trace is truncated");
    return trace;
}

EpisodeTrace read_trace(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return read_trace(in);
}

std::vector<TraceDiff> replay_trace(const EpisodeTrace& trace)
{
    std::vector<TraceDiff> diffs;
    Environment env(build_scenario(trace.config, trace.scenario_seed));
    env.reset(trace.episode_seed);
    auto compare = [&](int slot, const char* field, const auto& expected, const auto& actual) {
        if (!(expected == actual))
            diffs.push_back({slot, field, text(expected), text(actual)});
    };
    for (const auto& logged : trace.steps) {
        if (env.state().done) {
            diffs.push_back({logged.slot, "done", "false", "true"});
            break;
        }
        if (!is_feasible(env.state(), env.scenario(), logged.action)) {
            diffs.push_back({logged.slot, "action", text(logged.action), "infeasible"});
            break;
        }
        const StepResult r = env.step(logged.action);
        const TraceStep got = make_trace_step(env.state(), logged.action, r);
        compare(logged.slot, "slot", logged.slot, got.slot);
        compare(logged.slot, "positions", logged.positions, got.positions);
        compare(logged.slot, "reward", logged.reward, got.reward);
        compare(logged.slot, "eta", logged.eta, got.eta);
        compare(logged.slot, "aoi", logged.aoi, got.aoi);
        compare(logged.slot, "flags", logged.flags, got.flags);
        compare(logged.slot, "done", logged.done, got.done);
    }
    return diffs;
}

}  // namespace uavtraj
