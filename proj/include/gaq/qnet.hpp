// SPDX-License-Identifier: Apache-2.0
//
// Q-network, exploration schedule, action selection, TD targets and the
// optimizer used by every agent kind.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gaq/rng.hpp"
#include "gaq/tape.hpp"

namespace gaq {

inline constexpr std::size_t kActionCount = 16;

/// in → hidden → hidden → actions, ReLU between layers, linear head.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::size_t in_dim, std::size_t hidden, std::size_t out_dim, Rng& init);

    std::size_t in_dim() const { return in_dim_; }
    std::size_t out_dim() const { return out_dim_; }

    /// x is (batch × in_dim); returns (batch × out_dim).
    Var forward(Tape& tape, Var x);
    Tensor2 evaluate(const Tensor2& x);

    std::vector<std::pair<std::string, Param*>> parameters(const std::string& prefix);

private:
    std::size_t in_dim_ = 0;
    std::size_t out_dim_ = 0;
    Param w1_, b1_, w2_, b2_, w3_, b3_;
};

/// ε decays linearly from `start` at t = 0 to `end` at t = horizon/2 and
/// stays at `end` afterwards.
struct EpsilonSchedule {
    double start = 1.0;
    double end = 1e-2;
    std::int64_t horizon = 20000;

    double operator()(std::int64_t t) const;
};

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// ε-greedy: uniform action with probability ε, greedy otherwise. Always
/// consumes exactly one uniform draw plus one index draw when exploring.
std::size_t select_action(std::span<const double> q_values, double epsilon, Rng& rng);

/// y_j = r_j + γ · Q_target(s'_j, argmax_a Q_online(s'_j, a)) when
/// `double_q`, else r_j + γ · max_a Q_target(s'_j, a).
std::vector<double> td_targets(std::span<const double> rewards, const Tensor2& next_online,
                               const Tensor2& next_target, double gamma, bool double_q);

/// Adaptive-moment gradient descent over a fixed list of parameters.
class Adam {
public:
    explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8);

    void step(std::span<Param* const> params);
    std::int64_t steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<Tensor2> m_, v_;
};

}  // namespace gaq
