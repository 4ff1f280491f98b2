// SPDX-License-Identifier: Apache-2.0

#include "gaq/agent.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace gaq {

std::string_view to_string(AgentKind kind) {
    switch (kind) {
    case AgentKind::GAQ:
        return "gaq";
    case AgentKind::DQN:
        return "dqn";
    case AgentKind::NDQN:
        return "ndqn";
    }
    return "?";
}

AgentKind parse_agent_kind(std::string_view name) {
    if (name == "gaq") return AgentKind::GAQ;
    if (name == "dqn") return AgentKind::DQN;
    if (name == "ndqn") return AgentKind::NDQN;
    throw ContractError(fmt::format("unknown agent kind '{}' (expected gaq, dqn or ndqn)", name));
}

std::size_t ModelConfig::input_dim() const {
    switch (kind) {
    case AgentKind::GAQ:
        return gat.hidden;
    case AgentKind::DQN:
        return kStateDim;
    case AgentKind::NDQN:
        return kStateDim * (state_neighbors + 1);
    }
    return 0;
}

QModel::QModel(const ModelConfig& config, Rng& init) : config_(config) {
    if (config.kind == AgentKind::GAQ) {
        gat_ = GatStack(config.gat, init);
    }
    head_ = Mlp(config.input_dim(), config.mlp_hidden, kActionCount, init);
}

Var QModel::forward(Tape& tape, const std::vector<const Observation*>& batch) {
    if (batch.empty()) {
        throw ContractError("q forward: empty batch");
    }
    if (config_.kind != AgentKind::GAQ) {
        const std::size_t width = config_.input_dim();
        Tensor2 x(batch.size(), width);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const Tensor2& f = batch[b]->features;
            if (f.rows() != 1 || f.cols() != width) {
                throw ContractError(fmt::format("{} observation {} does not match input dim {}",
                                                to_string(config_.kind), f.shape_string(), width));
            }
            std::copy(f.values().begin(), f.values().end(), x.row(b).begin());
        }
        return head_.forward(tape, tape.constant(std::move(x)));
    }

    std::vector<const GatPlan*> plans;
    std::vector<std::uint32_t> target_rows;
    std::size_t rows = 0;
    for (const Observation* o : batch) {
        if (!o->plan || o->features.rows() != o->plan->nodes || o->features.cols() != kStateDim) {
            throw ContractError("gaq observation needs a plan matching its feature rows");
        }
        plans.push_back(o->plan.get());
        target_rows.push_back(static_cast<std::uint32_t>(rows));
        rows += o->features.rows();
    }
    Tensor2 x(rows, kStateDim);
    std::size_t r = 0;
    for (const Observation* o : batch) {
        std::copy(o->features.values().begin(), o->features.values().end(), x.row(r).begin());
        r += o->features.rows();
    }
    const GatPlan merged = batch.size() == 1 ? *plans.front() : concat_plans(plans);
    const Var embedded = gat_.forward(tape, tape.constant(std::move(x)), merged);
    return head_.forward(tape, tape.gather_rows(embedded, std::move(target_rows)));
}

Tensor2 QModel::evaluate(const std::vector<const Observation*>& batch) {
    Tape tape;
    return tape.value(forward(tape, batch));
}

Tensor2 QModel::evaluate_network(const Environment& env) {
    const Tensor2 features = env.features();
    const CellGraph& graph = env.graph();
    switch (config_.kind) {
    case AgentKind::GAQ:
        return head_.evaluate(gat_stack_forward(gat_, graph, features));
    case AgentKind::DQN:
        return head_.evaluate(features);
    case AgentKind::NDQN: {
        Tensor2 x(graph.size(), config_.input_dim());
        for (std::size_t i = 0; i < graph.size(); ++i) {
            const auto s = ndqn_state(static_cast<int>(i), graph, features, config_.state_neighbors);
            std::copy(s.begin(), s.end(), x.row(i).begin());
        }
        return head_.evaluate(x);
    }
    }
    throw ContractError("unknown agent kind");
}

std::vector<std::pair<std::string, Param*>> QModel::parameters() {
    std::vector<std::pair<std::string, Param*>> out;
    if (config_.kind == AgentKind::GAQ) {
        out = gat_.parameters("gat.");
    }
    auto head = head_.parameters("q.");
    out.insert(out.end(), head.begin(), head.end());
    return out;
}

void QModel::copy_values_from(QModel& other) {
    auto mine = parameters();
    auto theirs = other.parameters();
    if (mine.size() != theirs.size()) {
        throw ContractError("copy_values_from: model layouts differ");
    }
    for (std::size_t k = 0; k < mine.size(); ++k) {
        if (mine[k].second->value.rows() != theirs[k].second->value.rows() ||
            mine[k].second->value.cols() != theirs[k].second->value.cols()) {
            throw DimensionError(fmt::format("copy_values_from: {} shape differs", mine[k].first));
        }
        mine[k].second->value = theirs[k].second->value;
    }
}

std::vector<double> ndqn_state(int i, const CellGraph& graph, const Tensor2& features,
                               std::size_t k) {
    std::vector<double> out(kStateDim * (k + 1), 0.0);
    auto put = [&](std::size_t slot, int cell) {
        const auto row = features.row(static_cast<std::size_t>(cell));
        std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(slot * kStateDim));
    };
    put(0, i);
    const auto chosen = graph.nearest_neighbors(i, k);
    for (std::size_t s = 0; s < chosen.size(); ++s) {
        put(s + 1, chosen[s]);
    }
    return out;
}

Agent::Agent(AgentConfig config, std::uint64_t seed)
    : config_(config),
      replay_(config.replay_capacity, config.per_alpha, config.per_beta, config.per_eps),
      optimizer_(config.learning_rate),
      act_rng_(stream(seed, Stream::Agent)),
      replay_rng_(stream(seed, Stream::Replay)) {
    Rng init = stream(seed, Stream::Init);
    online_ = QModel(config.model, init);
    target_ = online_;
}

std::shared_ptr<const GatPlan> Agent::plan_for(const Environment& env, int cell) {
    if (plans_.empty() || !(cached_graph_ == env.graph())) {
        cached_graph_ = env.graph();
        plans_.assign(cached_graph_.size(), nullptr);
        plan_nodes_.assign(cached_graph_.size(), {});
    }
    auto& slot = plans_[static_cast<std::size_t>(cell)];
    if (!slot) {
        EgoPlan ego = ego_plan(cached_graph_, cell, config_.model.gat.layers);
        plan_nodes_[static_cast<std::size_t>(cell)] = std::move(ego.nodes);
        slot = std::make_shared<const GatPlan>(std::move(ego.plan));
    }
    return slot;
}

std::vector<Observation> Agent::observe(const Environment& env) {
    const Tensor2 features = env.features();
    const std::size_t n = env.cell_count();
    std::vector<Observation> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int cell = static_cast<int>(i);
        switch (kind()) {
        case AgentKind::GAQ: {
            auto plan = plan_for(env, cell);
            const auto& nodes = plan_nodes_[i];
            Tensor2 local(nodes.size(), kStateDim);
            for (std::size_t r = 0; r < nodes.size(); ++r) {
                const auto src = features.row(static_cast<std::size_t>(nodes[r]));
                std::copy(src.begin(), src.end(), local.row(r).begin());
            }
            out[i] = Observation{std::move(local), std::move(plan)};
            break;
        }
        case AgentKind::DQN:
            out[i] = Observation{Tensor2::row_vector(features.row(i)), nullptr};
            break;
        case AgentKind::NDQN:
            out[i] = Observation{
                Tensor2::row_vector(
                    ndqn_state(cell, env.graph(), features, config_.model.state_neighbors)),
                nullptr};
            break;
        }
    }
    return out;
}

std::vector<std::uint32_t> Agent::act(const Environment& env, double epsilon) {
    const Tensor2 q = online_.evaluate_network(env);
    std::vector<std::uint32_t> actions(q.rows());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        actions[i] = static_cast<std::uint32_t>(select_action(q.row(i), epsilon, act_rng_));
    }
    return actions;
}

StepResult Agent::step(Environment& env, double epsilon) {
    auto states = observe(env);
    StepResult result;
    result.actions = act(env, epsilon);
    std::vector<double> tilts(result.actions.begin(), result.actions.end());
    env.apply_actions(tilts);
    result.rewards = env.rewards();
    auto next_states = observe(env);
    double total = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        total += result.rewards[i];
        replay_.push(Transition{std::move(states[i]), result.actions[i], result.rewards[i],
                                std::move(next_states[i])});
    }
    result.mean_reward = total / static_cast<double>(states.size());
    return result;
}

std::optional<double> Agent::update() {
    if (replay_.size() < std::max<std::size_t>(config_.warmup, 1)) {
        return std::nullopt;
    }
    const ReplaySample batch = replay_.sample(config_.batch_size, replay_rng_);

    std::vector<const Observation*> states, next_states;
    std::vector<std::uint32_t> actions;
    std::vector<double> rewards;
    for (const Transition* t : batch.items) {
        states.push_back(&t->state);
        next_states.push_back(&t->next_state);
        actions.push_back(t->action);
        rewards.push_back(t->reward);
    }

    // Targets come from separate tapes that are never differentiated.
    const Tensor2 next_online = online_.evaluate(next_states);
    const Tensor2 next_target = target_.evaluate(next_states);
    const auto y = td_targets(rewards, next_online, next_target, config_.gamma, config_.double_q);

    Tape tape;
    const Var q = online_.forward(tape, states);
    const Var q_taken = tape.pick(q, actions);
    const Var loss = tape.squared_error(q_taken, Tensor2::column(y), Tensor2::column(batch.weights));

    auto named = online_.parameters();
    std::vector<Param*> params;
    params.reserve(named.size());
    for (auto& [name, p] : named) {
        p->zero_grad();
        params.push_back(p);
    }
    tape.backward(loss);
    optimizer_.step(params);

    std::vector<double> td(y.size());
    const Tensor2& q_now = tape.value(q_taken);
    for (std::size_t j = 0; j < y.size(); ++j) {
        td[j] = y[j] - q_now[j];
    }
    replay_.update_priorities(batch.slots, td);

    ++updates_;
    if (config_.target_sync > 0 && updates_ % static_cast<std::int64_t>(config_.target_sync) == 0) {
        sync_target();
    }
    return tape.value(loss)[0];
}

void Agent::sync_target() { target_.copy_values_from(online_); }

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
    std::vector<std::pair<double, double>> out;
    if (values.empty()) {
        return out;
    }
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k + 1 < values.size() && values[k + 1] == values[k]) {
            continue;
        }
        out.emplace_back(values[k], static_cast<double>(k + 1) / n);
    }
    return out;
}

EvalResult evaluate(Agent* agent, Environment& env, std::size_t episodes, EvalPolicy policy,
                    Rng& policy_rng) {
    if (policy == EvalPolicy::Greedy && agent == nullptr) {
        throw ContractError("evaluate: greedy policy needs an agent");
    }
    EvalResult result;
    const auto steps = static_cast<std::size_t>(env.config().episode_len);
    result.step_rewards.reserve(episodes * steps);
    std::vector<double> tilts(env.cell_count());
    for (std::size_t ep = 0; ep < episodes; ++ep) {
        env.reset();
        for (std::size_t s = 0; s < steps; ++s) {
            if (policy == EvalPolicy::Greedy) {
                const auto actions = agent->act(env, 0.0);
                std::copy(actions.begin(), actions.end(), tilts.begin());
            } else {
                for (double& t : tilts) {
                    t = static_cast<double>(policy_rng.index(kTiltActions));
                }
            }
            env.apply_actions(tilts);
            const auto r = env.rewards();
            double total = 0.0;
            for (double v : r) {
                total += v;
            }
            result.step_rewards.push_back(total / static_cast<double>(r.size()));
        }
    }
    double sum = 0.0;
    for (double v : result.step_rewards) {
        sum += v;
    }
    result.mean = result.step_rewards.empty() ? 0.0 : sum / static_cast<double>(result.step_rewards.size());
    result.cdf = empirical_cdf(result.step_rewards);
    return result;
}

}  // namespace gaq
