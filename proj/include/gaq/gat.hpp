// SPDX-License-Identifier: Apache-2.0
//
// Multi-head graph attention. For target i and head m:
//
//   α_ij = softmax_{j ∈ N+i} LeakyReLU(aᵀ [W h_i ‖ W h_j])
//   h'_i = Σ_m Σ_{j ∈ N+i} α^m_ij W^m h_j
//
// Heads are summed. Inner layers pass through an ELU; the last layer is
// linear so the Q-network sees an unbounded embedding.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gaq/graph.hpp"
#include "gaq/rng.hpp"
#include "gaq/tape.hpp"

namespace gaq {

struct GatConfig {
    std::size_t in_dim = kStateDim;
    std::size_t hidden = 16;
    std::size_t heads = 6;
    std::size_t layers = 2;
};

struct GatHead {
    Param weight;     // hidden × in
    Param attention;  // 1 × 2·hidden: [self half | neighbour half]
};

struct GatLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<GatHead> heads;
};

/// Which rows attend over which. Layer l's index has one output row per
/// input node (row-aligned), so layer l+1 can read layer l by node index.
/// Rows whose output is never needed have empty neighbourhoods and stay zero.
struct GatPlan {
    std::size_t nodes = 0;
    std::vector<std::shared_ptr<const NeighborIndex>> layers;
};

/// Every node attends over its closed neighbourhood at every layer.
GatPlan full_graph_plan(const CellGraph& graph, std::size_t layers);

/// Receptive field of one cell: the nodes within `layers` hops, target first,
/// then by (hop, id), with only the rows each layer actually needs.
struct EgoPlan {
    std::vector<int> nodes;  // global cell ids, local row order
    GatPlan plan;
};

EgoPlan ego_plan(const CellGraph& graph, int target, std::size_t layers);

/// Disjoint union of plans; row offsets follow input order.
GatPlan concat_plans(const std::vector<const GatPlan*>& plans);

/// Per-head attention coefficients recorded during a forward pass:
/// alpha[layer][head] is an (edges × 1) node.
struct GatTrace {
    std::vector<std::vector<Var>> alpha;
};

class GatStack {
public:
    GatStack() = default;
    /// Glorot-uniform initialisation from `init`.
    GatStack(const GatConfig& config, Rng& init);

    const GatConfig& config() const { return config_; }
    std::size_t out_dim() const { return config_.hidden; }
    std::vector<GatLayer>& layers() { return layers_; }
    const std::vector<GatLayer>& layers() const { return layers_; }

    /// Records the stack on `tape`. `features` is (plan.nodes × in_dim);
    /// returns (plan.nodes × hidden).
    Var forward(Tape& tape, Var features, const GatPlan& plan, GatTrace* trace = nullptr);

    std::vector<std::pair<std::string, Param*>> parameters(const std::string& prefix);

private:
    GatConfig config_;
    std::vector<GatLayer> layers_;
};

/// Records one layer. `activate` applies the inter-layer ELU.
Var gat_layer(Tape& tape, GatLayer& layer, Var features,
              const std::shared_ptr<const NeighborIndex>& index, bool activate,
              std::vector<Var>* alpha_out = nullptr);

/// α over N+i for one head. Rows of `h` are the closed neighbourhood, target
/// in row 0. Throws DomainError if `h` has no rows.
std::vector<double> attention_coefficients(const Tensor2& h, GatHead& head);

/// Output of a single layer at the target (row 0 of `h`), as a (1 × out_dim)
/// row. Throws DimensionError if `h` does not match the layer input width.
Tensor2 gat_layer_forward(const Tensor2& h, GatLayer& layer, bool activate);

/// s'_i for every cell of the graph, (cells × hidden).
Tensor2 gat_stack_forward(GatStack& stack, const CellGraph& graph, const Tensor2& features);

struct EdgeAttention {
    int src = 0;  // attending cell i
    int dst = 0;  // attended cell j ∈ N+i
    double strength = 0.0;  // mean over heads of α_ij
};

/// Mean-over-heads attention at `layer` (0-based) for every (i, j ∈ N+i).
std::vector<EdgeAttention> attention_strengths(GatStack& stack, const CellGraph& graph,
                                               const Tensor2& features, std::size_t layer);

}  // namespace gaq
