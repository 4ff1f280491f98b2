// SPDX-License-Identifier: Apache-2.0

#include "gaq/gat.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

namespace gaq {

namespace {

Tensor2 glorot(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out,
               Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor2 t(rows, cols);
    for (double& v : t.values()) {
        v = rng.uniform(-limit, limit);
    }
    return t;
}

std::shared_ptr<NeighborIndex> closed_index(const CellGraph& graph) {
    auto index = std::make_shared<NeighborIndex>();
    std::vector<std::uint32_t> row;
    for (std::size_t i = 0; i < graph.size(); ++i) {
        row.clear();
        for (int j : graph.closed_neighborhood(static_cast<int>(i))) {
            row.push_back(static_cast<std::uint32_t>(j));
        }
        index->add_row(row);
    }
    return index;
}

// Single-target plan over `rows` rows where row 0 attends over all rows.
GatPlan star_plan(std::size_t rows) {
    auto index = std::make_shared<NeighborIndex>();
    std::vector<std::uint32_t> all(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        all[r] = static_cast<std::uint32_t>(r);
    }
    index->add_row(all);
    for (std::size_t r = 1; r < rows; ++r) {
        index->add_row({});
    }
    return GatPlan{.nodes = rows, .layers = {index}};
}

}  // namespace

GatPlan full_graph_plan(const CellGraph& graph, std::size_t layers) {
    GatPlan plan{.nodes = graph.size()};
    auto index = closed_index(graph);
    plan.layers.assign(layers, index);
    return plan;
}

EgoPlan ego_plan(const CellGraph& graph, int target, std::size_t layers) {
    const auto hops = graph.hop_distances(target);
    EgoPlan ego;
    for (std::size_t h = 0; h <= layers; ++h) {
        for (std::size_t v = 0; v < hops.size(); ++v) {
            if (hops[v] == static_cast<int>(h)) {
                ego.nodes.push_back(static_cast<int>(v));
            }
        }
    }
    std::unordered_map<int, std::uint32_t> local;
    for (std::size_t r = 0; r < ego.nodes.size(); ++r) {
        local.emplace(ego.nodes[r], static_cast<std::uint32_t>(r));
    }

    ego.plan.nodes = ego.nodes.size();
    std::vector<std::uint32_t> row;
    for (std::size_t l = 0; l < layers; ++l) {
        // Layer l (0-based) output is needed on nodes within layers-1-l hops.
        const int reach = static_cast<int>(layers - 1 - l);
        auto index = std::make_shared<NeighborIndex>();
        for (int v : ego.nodes) {
            row.clear();
            if (hops[static_cast<std::size_t>(v)] <= reach) {
                for (int j : graph.closed_neighborhood(v)) {
                    row.push_back(local.at(j));
                }
            }
            index->add_row(row);
        }
        ego.plan.layers.push_back(std::move(index));
    }
    return ego;
}

GatPlan concat_plans(const std::vector<const GatPlan*>& plans) {
    GatPlan out;
    if (plans.empty()) {
        return out;
    }
    const std::size_t n_layers = plans.front()->layers.size();
    std::vector<std::shared_ptr<NeighborIndex>> merged(n_layers);
    for (auto& m : merged) {
        m = std::make_shared<NeighborIndex>();
    }
    std::uint32_t offset = 0;
    for (const GatPlan* p : plans) {
        if (p->layers.size() != n_layers) {
            throw ContractError("concat_plans: layer count mismatch");
        }
        for (std::size_t l = 0; l < n_layers; ++l) {
            const NeighborIndex& src = *p->layers[l];
            NeighborIndex& dst = *merged[l];
            const std::uint32_t base = static_cast<std::uint32_t>(dst.sources.size());
            for (std::uint32_t s : src.sources) {
                dst.sources.push_back(s + offset);
            }
            for (std::size_t t = 1; t < src.offsets.size(); ++t) {
                dst.offsets.push_back(base + src.offsets[t]);
            }
        }
        offset += static_cast<std::uint32_t>(p->nodes);
    }
    out.nodes = offset;
    out.layers.assign(merged.begin(), merged.end());
    return out;
}

GatStack::GatStack(const GatConfig& config, Rng& init) : config_(config) {
    if (config.layers == 0 || config.heads == 0 || config.hidden == 0 || config.in_dim == 0) {
        throw ContractError("GatStack: all dimensions must be positive");
    }
    std::size_t in = config.in_dim;
    for (std::size_t l = 0; l < config.layers; ++l) {
        GatLayer layer{.in_dim = in, .out_dim = config.hidden};
        for (std::size_t m = 0; m < config.heads; ++m) {
            GatHead head;
            head.weight = Param(glorot(config.hidden, in, in, config.hidden, init));
            head.attention = Param(glorot(1, 2 * config.hidden, 2 * config.hidden, 1, init));
            layer.heads.push_back(std::move(head));
        }
        layers_.push_back(std::move(layer));
        in = config.hidden;
    }
}

Var gat_layer(Tape& tape, GatLayer& layer, Var features,
              const std::shared_ptr<const NeighborIndex>& index, bool activate,
              std::vector<Var>* alpha_out) {
    const Tensor2& h = tape.value(features);
    if (h.cols() != layer.in_dim) {
        throw DimensionError(fmt::format("gat layer expects {} input features, got {}",
                                         layer.in_dim, h.shape_string()));
    }
    if (index->outputs() != h.rows()) {
        throw DimensionError(fmt::format("gat layer: plan has {} rows, features {}",
                                         index->outputs(), h.shape_string()));
    }
    const auto targets = index->edge_targets();
    std::vector<Var> heads;
    heads.reserve(layer.heads.size());
    for (auto& head : layer.heads) {
        const Var z = tape.linear(features, tape.param(head.weight));
        const Var pair = tape.concat_cols(tape.gather_rows(z, targets),
                                          tape.gather_rows(z, index->sources));
        const Var logits = tape.leaky_relu(tape.linear(pair, tape.param(head.attention)),
                                           kLeakySlope);
        const Var alpha = tape.segment_softmax(logits, index);
        if (alpha_out) {
            alpha_out->push_back(alpha);
        }
        heads.push_back(tape.segment_aggregate(alpha, z, index));
    }
    const Var out = tape.sum(heads);
    return activate ? tape.elu(out) : out;
}

Var GatStack::forward(Tape& tape, Var features, const GatPlan& plan, GatTrace* trace) {
    if (plan.layers.size() != layers_.size()) {
        throw ContractError(fmt::format("gat forward: plan has {} layers, stack has {}",
                                        plan.layers.size(), layers_.size()));
    }
    if (tape.value(features).rows() != plan.nodes) {
        throw ContractError(fmt::format("gat forward: plan covers {} nodes, features {}",
                                        plan.nodes, tape.value(features).shape_string()));
    }
    if (trace) {
        trace->alpha.assign(layers_.size(), {});
    }
    Var h = features;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const bool last = l + 1 == layers_.size();
        h = gat_layer(tape, layers_[l], h, plan.layers[l], !last,
                      trace ? &trace->alpha[l] : nullptr);
    }
    return h;
}

std::vector<std::pair<std::string, Param*>> GatStack::parameters(const std::string& prefix) {
    std::vector<std::pair<std::string, Param*>> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        for (std::size_t m = 0; m < layers_[l].heads.size(); ++m) {
            auto& head = layers_[l].heads[m];
            out.emplace_back(fmt::format("{}l{}.h{}.W", prefix, l, m), &head.weight);
            out.emplace_back(fmt::format("{}l{}.h{}.a", prefix, l, m), &head.attention);
        }
    }
    return out;
}

std::vector<double> attention_coefficients(const Tensor2& h, GatHead& head) {
    if (h.rows() == 0) {
        throw DomainError("attention_coefficients: empty neighbourhood");
    }
    GatLayer single{.in_dim = h.cols(), .out_dim = head.weight.value.rows()};
    single.heads.push_back(head);
    Tape tape;
    std::vector<Var> alpha;
    const GatPlan plan = star_plan(h.rows());
    gat_layer(tape, single, tape.constant(h), plan.layers[0], false, &alpha);
    const auto values = tape.value(alpha.front()).values();
    return {values.begin(), values.end()};
}

Tensor2 gat_layer_forward(const Tensor2& h, GatLayer& layer, bool activate) {
    if (h.rows() == 0) {
        throw DomainError("gat_layer_forward: empty neighbourhood");
    }
    Tape tape;
    const GatPlan plan = star_plan(h.rows());
    const Var out = gat_layer(tape, layer, tape.constant(h), plan.layers[0], activate);
    return Tensor2::row_vector(tape.value(out).row(0));
}

Tensor2 gat_stack_forward(GatStack& stack, const CellGraph& graph, const Tensor2& features) {
    if (features.rows() != graph.size()) {
        throw ContractError(fmt::format("gat_stack_forward: {} feature rows for {} cells",
                                        features.rows(), graph.size()));
    }
    Tape tape;
    const GatPlan plan = full_graph_plan(graph, stack.layers().size());
    return tape.value(stack.forward(tape, tape.constant(features), plan));
}

std::vector<EdgeAttention> attention_strengths(GatStack& stack, const CellGraph& graph,
                                               const Tensor2& features, std::size_t layer) {
    if (layer >= stack.layers().size()) {
        throw ContractError(fmt::format("attention_strengths: no layer {}", layer));
    }
    Tape tape;
    GatTrace trace;
    const GatPlan plan = full_graph_plan(graph, stack.layers().size());
    stack.forward(tape, tape.constant(features), plan, &trace);

    const NeighborIndex& index = *plan.layers[layer];
    const auto& heads = trace.alpha[layer];
    std::vector<EdgeAttention> out;
    out.reserve(index.edges());
    for (std::size_t t = 0; t < index.outputs(); ++t) {
        for (std::size_t e = index.offsets[t]; e < index.offsets[t + 1]; ++e) {
            double mean = 0.0;
            for (Var a : heads) {
                mean += tape.value(a)[e];
            }
            out.push_back({static_cast<int>(t), static_cast<int>(index.sources[e]),
                           mean / static_cast<double>(heads.size())});
        }
    }
    return out;
}

}  // namespace gaq
