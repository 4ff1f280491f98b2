// SPDX-License-Identifier: Apache-2.0

#include "gaq/qnet.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace gaq {

namespace {

Param glorot_param(std::size_t out, std::size_t in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Tensor2 t(out, in);
    for (double& v : t.values()) {
        v = rng.uniform(-limit, limit);
    }
    return Param(std::move(t));
}

}  // namespace

Mlp::Mlp(std::size_t in_dim, std::size_t hidden, std::size_t out_dim, Rng& init)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      w1_(glorot_param(hidden, in_dim, init)),
      b1_(Tensor2(1, hidden)),
      w2_(glorot_param(hidden, hidden, init)),
      b2_(Tensor2(1, hidden)),
      w3_(glorot_param(out_dim, hidden, init)),
      b3_(Tensor2(1, out_dim)) {}

Var Mlp::forward(Tape& tape, Var x) {
    if (tape.value(x).cols() != in_dim_) {
        throw ContractError(fmt::format("q-network expects {} inputs, got {}", in_dim_,
                                        tape.value(x).shape_string()));
    }
    Var h = tape.relu(tape.add_bias(tape.linear(x, tape.param(w1_)), tape.param(b1_)));
    h = tape.relu(tape.add_bias(tape.linear(h, tape.param(w2_)), tape.param(b2_)));
    return tape.add_bias(tape.linear(h, tape.param(w3_)), tape.param(b3_));
}

Tensor2 Mlp::evaluate(const Tensor2& x) {
    Tape tape;
    return tape.value(forward(tape, tape.constant(x)));
}

std::vector<std::pair<std::string, Param*>> Mlp::parameters(const std::string& prefix) {
    return {{prefix + "w1", &w1_}, {prefix + "b1", &b1_}, {prefix + "w2", &w2_},
            {prefix + "b2", &b2_}, {prefix + "w3", &w3_}, {prefix + "b3", &b3_}};
}

double EpsilonSchedule::operator()(std::int64_t t) const {
    const double half = static_cast<double>(horizon) / 2.0;
    if (t <= 0) {
        return start;
    }
    if (static_cast<double>(t) >= half) {
        return end;
    }
    return start + (end - start) * (static_cast<double>(t) / half);
}

std::size_t argmax(std::span<const double> values) {
    return static_cast<std::size_t>(
        std::distance(values.begin(), std::max_element(values.begin(), values.end())));
}

std::size_t select_action(std::span<const double> q_values, double epsilon, Rng& rng) {
    if (q_values.empty()) {
        throw ContractError("select_action: no action values");
    }
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw ContractError(fmt::format("select_action: epsilon {} outside [0,1]", epsilon));
    }
    if (rng.uniform() < epsilon) {
        return static_cast<std::size_t>(rng.index(q_values.size()));
    }
    return argmax(q_values);
}

std::vector<double> td_targets(std::span<const double> rewards, const Tensor2& next_online,
                               const Tensor2& next_target, double gamma, bool double_q) {
    if (next_online.rows() != rewards.size() || next_target.rows() != rewards.size() ||
        next_online.cols() != next_target.cols()) {
        throw DimensionError(fmt::format("td_targets: {} rewards, online {}, target {}",
                                         rewards.size(), next_online.shape_string(),
                                         next_target.shape_string()));
    }
    std::vector<double> y(rewards.size());
    for (std::size_t j = 0; j < rewards.size(); ++j) {
        const auto target_row = next_target.row(j);
        const double bootstrap = double_q ? target_row[argmax(next_online.row(j))]
                                          : target_row[argmax(target_row)];
        y[j] = rewards[j] + gamma * bootstrap;
    }
    return y;
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Adam::step(std::span<Param* const> params) {
    if (m_.empty()) {
        for (const Param* p : params) {
            m_.emplace_back(p->value.rows(), p->value.cols());
            v_.emplace_back(p->value.rows(), p->value.cols());
        }
    }
    if (m_.size() != params.size()) {
        throw ContractError("Adam: parameter list changed between steps");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Param& p = *params[k];
        Tensor2& m = m_[k];
        Tensor2& v = v_[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
            p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
}

}  // namespace gaq
