// SPDX-License-Identifier: Apache-2.0
//
// Tilt-control agents. All three kinds share one model across every cell and
// one replay buffer fed by every cell:
//   GAQ   graph attention over the receptive field, then the Q-network
//   DQN   the cell's own 8 features
//   NDQN  own features concatenated with k neighbours' (zero-padded)

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gaq/environment.hpp"
#include "gaq/gat.hpp"
#include "gaq/qnet.hpp"
#include "gaq/replay.hpp"

namespace gaq {

enum class AgentKind { GAQ, DQN, NDQN };

std::string_view to_string(AgentKind kind);
/// Throws ContractError for anything but gaq, dqn, ndqn.
AgentKind parse_agent_kind(std::string_view name);

struct ModelConfig {
    AgentKind kind = AgentKind::GAQ;
    GatConfig gat;
    std::size_t mlp_hidden = 32;
    std::size_t state_neighbors = 5;  // NDQN only

    /// Width of the Q-network input.
    std::size_t input_dim() const;
};

/// Online or target network: optional attention stack plus the MLP head.
class QModel {
public:
    QModel() = default;
    QModel(const ModelConfig& config, Rng& init);

    const ModelConfig& config() const { return config_; }

    /// (batch × actions) for a batch of observations.
    Var forward(Tape& tape, const std::vector<const Observation*>& batch);
    Tensor2 evaluate(const std::vector<const Observation*>& batch);

    /// Q-values for every cell of the environment, (cells × actions).
    Tensor2 evaluate_network(const Environment& env);

    std::vector<std::pair<std::string, Param*>> parameters();
    void copy_values_from(QModel& other);

    GatStack& gat() { return gat_; }
    Mlp& head() { return head_; }

private:
    ModelConfig config_;
    GatStack gat_;
    Mlp head_;
};

/// [self ‖ neighbour_1 ‖ … ‖ neighbour_k]: the k neighbours nearest by site
/// distance, written in ascending id order, zero-padded when fewer exist.
std::vector<double> ndqn_state(int i, const CellGraph& graph, const Tensor2& features,
                               std::size_t k);

struct AgentConfig {
    ModelConfig model;
    double gamma = 0.9;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t replay_capacity = 10000;
    std::size_t warmup = 500;
    std::size_t target_sync = 200;
    double per_alpha = 0.6;
    double per_beta = 0.4;
    double per_eps = 1e-3;
    bool double_q = true;
};

struct StepResult {
    std::vector<std::uint32_t> actions;
    std::vector<double> rewards;
    double mean_reward = 0.0;
};

class Agent {
public:
    /// Parameters drawn from the Init stream of `seed`; ε-greedy draws from
    /// the Agent stream; replay sampling from the Replay stream.
    Agent(AgentConfig config, std::uint64_t seed);

    AgentKind kind() const { return config_.model.kind; }
    const AgentConfig& config() const { return config_; }

    /// One observation per cell of the current snapshot.
    std::vector<Observation> observe(const Environment& env);

    /// ε-greedy tilt indices for every cell.
    std::vector<std::uint32_t> act(const Environment& env, double epsilon);

    /// Observe, act on every cell at once, collect per-cell rewards and append
    /// one transition per cell to the shared buffer.
    StepResult step(Environment& env, double epsilon);

    /// One prioritized double-Q gradient step on the shared parameters.
    /// Returns the batch loss, or nothing while the buffer is below warmup.
    std::optional<double> update();

    void sync_target();

    QModel& online() { return online_; }
    QModel& target() { return target_; }
    ReplayBuffer& replay() { return replay_; }
    std::int64_t updates() const { return updates_; }

private:
    std::shared_ptr<const GatPlan> plan_for(const Environment& env, int cell);

    AgentConfig config_;
    QModel online_;
    QModel target_;
    ReplayBuffer replay_;
    Adam optimizer_;
    Rng act_rng_;
    Rng replay_rng_;
    std::int64_t updates_ = 0;

    // Receptive-field plans are reused until the graph changes.
    CellGraph cached_graph_;
    std::vector<std::shared_ptr<const GatPlan>> plans_;
    std::vector<std::vector<int>> plan_nodes_;
};

/// Greedy or random-tilt policy used during evaluation.
enum class EvalPolicy { Greedy, RandomTilt };

struct EvalResult {
    std::vector<double> step_rewards;  // r̄_t, episode-major
    std::vector<std::pair<double, double>> cdf;  // (value, cumulative fraction)
    double mean = 0.0;
};

/// Empirical CDF: sorted distinct values with fraction of samples ≤ value.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values);

/// Runs `episodes` episodes of `env.config().episode_len` steps each at ε = 0
/// (or random tilts), resetting before every episode.
EvalResult evaluate(Agent* agent, Environment& env, std::size_t episodes, EvalPolicy policy,
                    Rng& policy_rng);

}  // namespace gaq
