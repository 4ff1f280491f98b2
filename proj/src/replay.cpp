// SPDX-License-Identifier: Apache-2.0

#include "gaq/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace gaq {

SumTree::SumTree(std::size_t capacity) : base_(1) {
    while (base_ < capacity) {
        base_ *= 2;
    }
    nodes_.assign(2 * base_, 0.0);
}

void SumTree::set(std::size_t leaf, double weight) {
    std::size_t i = leaf + base_;
    nodes_[i] = weight;
    for (i /= 2; i >= 1; i /= 2) {
        nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
    }
}

std::size_t SumTree::find(double mass) const {
    std::size_t i = 1;
    while (i < base_) {
        const double left = nodes_[2 * i];
        if (mass < left || nodes_[2 * i + 1] <= 0.0) {
            i = 2 * i;
        } else {
            mass -= left;
            i = 2 * i + 1;
        }
    }
    return i - base_;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, double alpha, double beta, double priority_eps)
    : capacity_(capacity),
      alpha_(alpha),
      beta_(beta),
      eps_(priority_eps),
      priorities_(capacity, 0.0),
      tree_(capacity) {
    if (capacity == 0) {
        throw ContractError("replay buffer capacity must be positive");
    }
    if (!(priority_eps > 0.0)) {
        throw ContractError("replay priority epsilon must be positive");
    }
    items_.reserve(capacity);
}

void ReplayBuffer::set_priority(std::size_t slot, double p) {
    priorities_[slot] = p;
    tree_.set(slot, std::pow(p, alpha_));
    max_priority_ = std::max(max_priority_, p);
}

void ReplayBuffer::push(Transition t) {
    if (size_ < capacity_) {
        items_.push_back(std::move(t));
        ++size_;
    } else {
        items_[next_] = std::move(t);
    }
    set_priority(next_, max_priority_);
    next_ = (next_ + 1) % capacity_;
}

double ReplayBuffer::probability(std::size_t slot) const {
    if (slot >= size_) {
        throw std::out_of_range(fmt::format("replay slot {} outside size {}", slot, size_));
    }
    return tree_.get(slot) / tree_.total();
}

ReplaySample ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
    if (empty()) {
        throw std::logic_error("cannot sample from an empty replay buffer");
    }
    ReplaySample out;
    out.slots.reserve(batch);
    out.weights.reserve(batch);
    out.items.reserve(batch);
    const double total = tree_.total();
    const double n = static_cast<double>(size_);
    double max_weight = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        std::size_t slot = tree_.find(rng.uniform() * total);
        slot = std::min(slot, size_ - 1);
        const double p = tree_.get(slot) / total;
        const double w = std::pow(n * p, -beta_);
        max_weight = std::max(max_weight, w);
        out.slots.push_back(slot);
        out.weights.push_back(w);
        out.items.push_back(&items_[slot]);
    }
    for (double& w : out.weights) {
        w /= max_weight;
    }
    return out;
}

void ReplayBuffer::update_priorities(std::span<const std::size_t> slots,
                                     std::span<const double> td_errors) {
    if (slots.size() != td_errors.size()) {
        throw DimensionError("update_priorities: slot and error counts differ");
    }
    for (std::size_t k = 0; k < slots.size(); ++k) {
        if (slots[k] >= size_) {
            throw std::out_of_range(fmt::format("replay slot {} outside size {}", slots[k], size_));
        }
        set_priority(slots[k], std::abs(td_errors[k]) + eps_);
    }
}

}  // namespace gaq
