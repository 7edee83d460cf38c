#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uavtraj/environment.hpp"
#include "uavtraj/neural_net.hpp"
#include "uavtraj/trace.hpp"

namespace uavtraj {

enum class AgentKind { replay_dqn, baseline_dqn, greedy };

std::string to_string(AgentKind kind);
AgentKind parse_agent_kind(const std::string& name);

/// One transition (s, a, R, s').
struct Experience {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    std::vector<std::uint8_t> next_mask;
    bool done = false;
};

/// Bounded FIFO of transitions; pushing into a full memory evicts the oldest.
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity);

    void push(Experience e);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return buffer_.size(); }
    bool empty() const { return size_ == 0; }

    /// i = 0 is the oldest stored transition.
    const Experience& at(std::size_t i) const;

    /// Indices (oldest = 0) drawn uniformly with replacement.
    std::vector<std::size_t> sample_indices(std::size_t batch, std::mt19937_64& rng) const;

private:
    std::vector<Experience> buffer_;
    std::size_t head_ = 0;  // next write position
    std::size_t size_ = 0;
};

/// Linear decay from start to end over decay_steps, constant afterwards.
struct ExplorationSchedule {
    double start = 1.0;
    double end = 0.05;
    long decay_steps = 1;

    double at(long step) const;
};

/// Argmax over allowed entries; ties go to the lowest index.
int masked_argmax(const Eigen::VectorXd& q, std::span<const std::uint8_t> mask);

/// Epsilon-greedy choice restricted to the feasibility mask.
int select_action(const MlpQNetwork& net, std::span<const double> features, std::span<const std::uint8_t> mask,
                  double epsilon, std::mt19937_64& rng);

struct ViolationCounts {
    int non_overlap = 0;
    int coverage = 0;
    int energy = 0;
    int aoi = 0;

    void add(const ConstraintFlags& f);
};

struct EpisodeLog {
    int episode = 0;
    std::uint64_t seed = 0;
    int steps = 0;
    double episode_return = 0.0;
    double eta = 0.0;
    double aoi = 0.0;
    ViolationCounts violations;
    double epsilon = 0.0;
    double mean_loss = 0.0;  // 0 when no gradient step happened
};

struct TrainingResult {
    MlpQNetwork network;
    std::vector<EpisodeLog> log;
    long environment_steps = 0;
    long gradient_steps = 0;
    std::size_t replay_capacity = 0;  // 0 for the no-replay variant
};

/// Seed of the i-th episode of a named stream ("train", "eval", ...).
std::uint64_t episode_seed(std::uint64_t run_seed, const std::string& stream, int index);

std::vector<int> network_sizes(const Scenario& scenario);

/// Deep Q-learning with experience replay, a periodically synchronized
/// target network and one SGD step per environment step. The no-replay
/// variant (AgentKind::baseline_dqn) takes the same steps but trains on each
/// transition once, immediately. Hyperparameters come from the scenario's
/// config. Throws DivergenceError on a non-finite loss.
TrainingResult train(std::shared_ptr<const Scenario> scenario, std::uint64_t seed,
                     AgentKind kind = AgentKind::replay_dqn);

/// Outcome of one finished episode.
struct EpisodeMetrics {
    std::uint64_t seed = 0;
    int steps = 0;
    double episode_return = 0.0;
    double eta = 0.0;
    double aoi = 0.0;
    double bandwidth_efficiency = 0.0;
    double utilization = 0.0;
    ViolationCounts violations;
};

EpisodeMetrics episode_metrics(const WorldState& final_state, const Scenario& scenario, std::uint64_t seed);

struct EvaluationSummary {
    double mean_return = 0.0;
    double mean_eta = 0.0;
    double mean_aoi = 0.0;
    double mean_bandwidth_efficiency = 0.0;
    double mean_utilization = 0.0;
    std::vector<EpisodeMetrics> episodes;
};

EvaluationSummary summarize(std::vector<EpisodeMetrics> episodes);

/// Greedy (epsilon = 0) rollouts of a stored network, one episode per seed.
EvaluationSummary evaluate(const MlpQNetwork& network, std::shared_ptr<const Scenario> scenario,
                           std::span<const std::uint64_t> episode_seeds);

/// Index of the feasible joint action with the largest one-step reward,
/// found by stepping clones of the environment. Ties go to the lowest index.
int greedy_choice(const Environment& env);

/// Run the one-step-lookahead policy from the environment's current state
/// until the episode ends or `horizon` steps have been taken.
std::vector<TraceStep> greedy_baseline(Environment& env, int horizon);

/// Greedy-policy counterpart of evaluate().
EvaluationSummary evaluate_greedy(std::shared_ptr<const Scenario> scenario,
                                  std::span<const std::uint64_t> episode_seeds);

}  // namespace uavtraj
