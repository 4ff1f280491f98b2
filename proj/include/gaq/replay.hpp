// SPDX-License-Identifier: Apache-2.0
//
// Proportional prioritized replay over a fixed-capacity ring.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "gaq/gat.hpp"
#include "gaq/rng.hpp"
#include "gaq/tensor.hpp"

namespace gaq {

/// What one agent sees for one cell. Graph agents carry the receptive field
/// (features of every node in it, target row first, plus the attention
/// plan); flat agents carry a single (1 × input) row and no plan.
struct Observation {
    Tensor2 features;
    std::shared_ptr<const GatPlan> plan;
};

struct Transition {
    Observation state;
    std::uint32_t action = 0;
    double reward = 0.0;
    Observation next_state;
};

/// Binary-indexed sum tree over leaf weights.
class SumTree {
public:
    explicit SumTree(std::size_t capacity);

    void set(std::size_t leaf, double weight);
    double get(std::size_t leaf) const { return nodes_[leaf + base_]; }
    double total() const { return nodes_[1]; }
    /// Leaf whose cumulative range contains `mass` (0 <= mass < total).
    std::size_t find(double mass) const;

private:
    std::size_t base_;
    std::vector<double> nodes_;
};

struct ReplaySample {
    std::vector<std::size_t> slots;
    std::vector<double> weights;  // importance weights, max-normalised in the batch
    std::vector<const Transition*> items;
};

class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, double alpha, double beta, double priority_eps);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return size_ == 0; }

    /// New items enter with the largest priority seen so far.
    void push(Transition t);

    /// `batch` draws with replacement, P(j) = p_j^α / Σ_k p_k^α.
    /// Throws std::logic_error on an empty buffer.
    ReplaySample sample(std::size_t batch, Rng& rng) const;

    /// p_j ← |δ_j| + ε for the given slots.
    void update_priorities(std::span<const std::size_t> slots, std::span<const double> td_errors);

    double priority(std::size_t slot) const { return priorities_.at(slot); }
    double probability(std::size_t slot) const;
    const Transition& at(std::size_t slot) const { return items_.at(slot); }

private:
    void set_priority(std::size_t slot, double p);

    std::size_t capacity_;
    double alpha_, beta_, eps_;
    std::size_t size_ = 0;
    std::size_t next_ = 0;
    double max_priority_ = 1.0;
    std::vector<Transition> items_;
    std::vector<double> priorities_;
    SumTree tree_;
};

}  // namespace gaq
