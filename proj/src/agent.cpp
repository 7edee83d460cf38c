#include "uavtraj/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace uavtraj {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// TD targets for a set of transitions, evaluated in one batched pass of the
// frozen network.
std::vector<QSample> td_samples(std::span<const Experience* const> transitions, const MlpQNetwork& target_net,
                                double gamma)
{
    std::vector<QSample> out(transitions.size());
    const int inputs = target_net.input_size();
    Eigen::MatrixXd next(inputs, static_cast<Eigen::Index>(transitions.size()));
    for (std::size_t j = 0; j < transitions.size(); ++j)
        for (int i = 0; i < inputs; ++i)
            next(i, static_cast<Eigen::Index>(j)) = transitions[j]->next_state.at(static_cast<std::size_t>(i));
    const Eigen::MatrixXd q = target_net.forward_batch(next);
    for (std::size_t j = 0; j < transitions.size(); ++j) {
        const Experience& e = *transitions[j];
        double y = e.reward;
        if (!e.done) {
            const int best = masked_argmax(q.col(static_cast<Eigen::Index>(j)), e.next_mask);
            y += gamma * q(best, static_cast<Eigen::Index>(j));
        }
        out[j] = {e.state, e.action, y};
    }
    return out;
}

}  // namespace

std::string to_string(AgentKind kind)
{
    switch (kind) {
    case AgentKind::replay_dqn:
        return "replay";
    case AgentKind::baseline_dqn:
        return "baseline";
    case AgentKind::greedy:
        return "greedy";
    }
    return "unknown";
}

AgentKind parse_agent_kind(const std::string& name)
{
    if (name == "replay")
        return AgentKind::replay_dqn;
    if (name == "baseline")
        return AgentKind::baseline_dqn;
    if (name == "greedy")
        return AgentKind::greedy;
    throw std::invalid_argument("unknown agent kind: " + name);
}

ReplayMemory::ReplayMemory(std::size_t capacity)
{
    if (capacity == 0)
        throw std::invalid_argument("replay memory needs a positive capacity");
    buffer_.resize(capacity);
}

void ReplayMemory::push(Experience e)
{
    buffer_[head_] = std::move(e);
    head_ = (head_ + 1) % buffer_.size();
    size_ = std::min(size_ + 1, buffer_.size());
}

const Experience& ReplayMemory::at(std::size_t i) const
{
    if (i >= size_)
        throw std::out_of_range("replay memory index out of range");
    const std::size_t oldest = size_ < buffer_.size() ? 0 : head_;
    return buffer_[(oldest + i) % buffer_.size()];
}

std::vector<std::size_t> ReplayMemory::sample_indices(std::size_t batch, std::mt19937_64& rng) const
{
    if (size_ == 0)
        throw std::logic_error("cannot sample from an empty replay memory");
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    std::vector<std::size_t> idx(batch);
    for (auto& i : idx)
        i = pick(rng);
    return idx;
}

double ExplorationSchedule::at(long step) const
{
    if (step >= decay_steps)
        return end;
    const double frac = static_cast<double>(std::max(step, 0L)) / static_cast<double>(decay_steps);
    return start + (end - start) * frac;
}

int masked_argmax(const Eigen::VectorXd& q, std::span<const std::uint8_t> mask)
{
    int best = -1;
    double best_q = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < q.size(); ++a) {
        if (!mask.empty() && !mask[static_cast<std::size_t>(a)])
            continue;
        if (best < 0 || q(a) > best_q) {
            best = static_cast<int>(a);
            best_q = q(a);
        }
    }
    if (best < 0)
        throw std::invalid_argument("no feasible action in the mask");
    return best;
}

int select_action(const MlpQNetwork& net, std::span<const double> features, std::span<const std::uint8_t> mask,
                  double epsilon, std::mt19937_64& rng)
{
    std::vector<int> feasible;
    for (std::size_t a = 0; a < mask.size(); ++a)
        if (mask[a])
            feasible.push_back(static_cast<int>(a));
    if (feasible.empty())
        throw std::invalid_argument("no feasible action in the mask");
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
        return feasible[pick(rng)];
    }
    return masked_argmax(net.forward(features), mask);
}

void ViolationCounts::add(const ConstraintFlags& f)
{
    non_overlap += f.non_overlap ? 0 : 1;
    coverage += f.coverage ? 0 : 1;
    energy += f.energy ? 0 : 1;
    aoi += f.aoi ? 0 : 1;
}

std::uint64_t episode_seed(std::uint64_t run_seed, const std::string& stream, int index)
{
    std::uint64_t h = splitmix64(run_seed);
    for (unsigned char c : stream)
        h = splitmix64(h ^ c);
    return splitmix64(h ^ static_cast<std::uint64_t>(index));
}

std::vector<int> network_sizes(const Scenario& scenario)
{
    const int hidden = scenario.config.hidden_units;
    return {feature_length(scenario), hidden, hidden, scenario.actions.size()};
}

TrainingResult train(std::shared_ptr<const Scenario> scenario, std::uint64_t seed, AgentKind kind)
{
    if (kind == AgentKind::greedy)
        throw std::invalid_argument("the greedy policy has nothing to train");
    const auto& cfg = scenario->config;
    const bool use_replay = kind == AgentKind::replay_dqn;

    TrainingResult result;
    result.network = MlpQNetwork(network_sizes(*scenario), episode_seed(seed, "init", 0));
    result.replay_capacity = use_replay ? static_cast<std::size_t>(cfg.replay_capacity) : 0;
    MlpQNetwork target = result.network;
    ReplayMemory memory(use_replay ? static_cast<std::size_t>(cfg.replay_capacity) : 1);
    // Separate streams so both variants explore identically when nothing is learned.
    std::mt19937_64 explore_rng(episode_seed(seed, "explore", 0));
    std::mt19937_64 sample_rng(episode_seed(seed, "replay", 0));

    ExplorationSchedule schedule;
    schedule.start = cfg.epsilon_start;
    schedule.end = cfg.epsilon_end;
    schedule.decay_steps = std::max(1L, static_cast<long>(std::lround(cfg.epsilon_decay_fraction * cfg.episodes)));

    const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
    Environment env(scenario);
    for (int e = 0; e < cfg.episodes; ++e) {
        EpisodeLog log;
        log.episode = e;
        log.seed = episode_seed(seed, "train", e);
        env.reset(log.seed);
        log.epsilon = schedule.at(e);
        double loss_sum = 0.0;
        int loss_count = 0;
        while (!env.state().done) {
            Experience ex;
            ex.state = env.features();
            const auto mask = env.mask();
            ex.action = select_action(result.network, ex.state, mask, log.epsilon, explore_rng);
            const StepResult step = env.step(ex.action);
            ex.reward = step.reward;
            ex.done = step.done;
            ex.next_state = env.features();
            if (!step.done)
                ex.next_mask = env.mask();
            log.violations.add(step.flags);
            log.episode_return += step.reward;
            ++log.steps;
            ++result.environment_steps;

            std::vector<QSample> batch;
            if (use_replay) {
                memory.push(std::move(ex));
                if (memory.size() >= batch_size) {
                    std::vector<const Experience*> picked;
                    for (std::size_t i : memory.sample_indices(batch_size, sample_rng))
                        picked.push_back(&memory.at(i));
                    batch = td_samples(picked, target, cfg.gamma);
                }
            } else {
                const Experience* only = &ex;
                batch = td_samples(std::span<const Experience* const>(&only, 1), target, cfg.gamma);
            }
            if (!batch.empty()) {
                try {
                    loss_sum += result.network.sgd_step(batch, cfg.learning_rate);
                } catch (const DivergenceError& err) {
                    std::ostringstream msg;
                    msg << err.what() << " at episode " << e << ", gradient step " << result.gradient_steps
                        << "; minibatch (action, target):";
                    for (const auto& q : batch)
                        msg << " (" << q.action << ", " << q.target << ")";
                    throw DivergenceError(msg.str());
                }
                ++loss_count;
                ++result.gradient_steps;
                if (result.gradient_steps % cfg.target_sync_period == 0)
                    sync_target(result.network, target);
            }
        }
        log.eta = env.state().eta();
        log.aoi = env.state().aoi;
        log.mean_loss = loss_count ? loss_sum / loss_count : 0.0;
        result.log.push_back(log);
    }
    return result;
}

EpisodeMetrics episode_metrics(const WorldState& s, const Scenario& scenario, std::uint64_t seed)
{
    EpisodeMetrics m;
    m.seed = seed;
    m.steps = s.slot;
    m.episode_return = s.episode_return;
    m.eta = s.eta();
    m.aoi = s.aoi;
    if (s.service.active_uav_slots > 0)
        m.bandwidth_efficiency =
            s.service.uplink_bits / (scenario.channel.bw_uplink * s.service.active_uav_slots);
    if (s.slot > 0)
        m.utilization = static_cast<double>(s.service.served_device_slots) /
                        (static_cast<double>(scenario.config.iot_devices) * s.slot);
    return m;
}

EvaluationSummary summarize(std::vector<EpisodeMetrics> episodes)
{
    EvaluationSummary s;
    if (episodes.empty())
        return s;
    for (const auto& m : episodes) {
        s.mean_return += m.episode_return;
        s.mean_eta += m.eta;
        s.mean_aoi += m.aoi;
        s.mean_bandwidth_efficiency += m.bandwidth_efficiency;
        s.mean_utilization += m.utilization;
    }
    const auto n = static_cast<double>(episodes.size());
    s.mean_return /= n;
    s.mean_eta /= n;
    s.mean_aoi /= n;
    s.mean_bandwidth_efficiency /= n;
    s.mean_utilization /= n;
    s.episodes = std::move(episodes);
    return s;
}

EvaluationSummary evaluate(const MlpQNetwork& network, std::shared_ptr<const Scenario> scenario,
                           std::span<const std::uint64_t> episode_seeds)
{
    if (network.input_size() != feature_length(*scenario) || network.output_size() != scenario->actions.size())
        throw std::invalid_argument("network shape does not match the scenario");
    Environment env(scenario);
    std::vector<EpisodeMetrics> episodes;
    for (std::uint64_t seed : episode_seeds) {
        env.reset(seed);
        ViolationCounts violations;
        while (!env.state().done) {
            const auto mask = env.mask();
            const auto features = env.features();
            const int a = masked_argmax(network.forward(features), mask);
            violations.add(env.step(a).flags);
        }
        auto m = episode_metrics(env.state(), *scenario, seed);
        m.violations = violations;
        episodes.push_back(m);
    }
    return summarize(std::move(episodes));
}

int greedy_choice(const Environment& env)
{
    const auto mask = env.mask();
    int best = -1;
    double best_reward = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < mask.size(); ++a) {
        if (!mask[a])
            continue;
        Environment probe = env;
        const double r = probe.step(static_cast<int>(a)).reward;
        if (r > best_reward) {
            best_reward = r;
            best = static_cast<int>(a);
        }
    }
    if (best < 0)
        throw std::logic_error("no feasible joint action");
    return best;
}

std::vector<TraceStep> greedy_baseline(Environment& env, int horizon)
{
    std::vector<TraceStep> trace;
    for (int k = 0; k < horizon && !env.state().done; ++k) {
        const int a = greedy_choice(env);
        const StepResult r = env.step(a);
        trace.push_back(make_trace_step(env.state(), a, r));
    }
    return trace;
}

EvaluationSummary evaluate_greedy(std::shared_ptr<const Scenario> scenario, std::span<const std::uint64_t> episode_seeds)
{
    Environment env(scenario);
    std::vector<EpisodeMetrics> episodes;
    for (std::uint64_t seed : episode_seeds) {
        env.reset(seed);
        const auto trace = greedy_baseline(env, scenario->config.horizon);
        ViolationCounts violations;
        for (const auto& s : trace)
            violations.add(s.flags);
        auto m = episode_metrics(env.state(), *scenario, seed);
        m.violations = violations;
        episodes.push_back(m);
    }
    return summarize(std::move(episodes));
}

}  // namespace uavtraj
