// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode gradients over a closed vocabulary of primitives. A Tape records
// one forward pass; backward() replays it in reverse and accumulates dLoss/dp
// into every Param that was bound with Tape::param().

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "gaq/tensor.hpp"

namespace gaq {

/// A learnable tensor with its gradient accumulator (same shape).
struct Param {
    Tensor2 value;
    Tensor2 grad;

    Param() = default;
    explicit Param(Tensor2 v) : value(std::move(v)), grad(value.rows(), value.cols()) {}

    void zero_grad() { grad.fill(0.0); }
};

/// Handle to a node on a tape.
struct Var {
    std::uint32_t id = UINT32_MAX;
};

/// Compressed neighbor lists. Output row t aggregates over
/// sources[offsets[t] .. offsets[t+1]); each such position is one edge.
struct NeighborIndex {
    std::vector<std::uint32_t> offsets{0};
    std::vector<std::uint32_t> sources;

    std::size_t outputs() const { return offsets.size() - 1; }
    std::size_t edges() const { return sources.size(); }

    /// Appends one output row whose neighborhood is `row_sources`.
    void add_row(std::span<const std::uint32_t> row_sources);

    /// Target row of every edge, expanded to length edges().
    std::vector<std::uint32_t> edge_targets() const;
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    Var constant(Tensor2 value);
    Var param(Param& p);

    /// x · wᵀ with x (n × in) and w (out × in).
    Var linear(Var x, Var w);
    /// Adds a (1 × cols) row to every row of x.
    Var add_bias(Var x, Var bias);
    /// Elementwise sum of same-shaped terms.
    Var sum(std::span<const Var> terms);

    Var leaky_relu(Var x, double slope);
    Var relu(Var x);
    Var elu(Var x);

    Var gather_rows(Var x, std::vector<std::uint32_t> rows);
    Var concat_cols(Var a, Var b);

    /// Softmax of an (edges × 1) logit column within each output row's segment.
    Var segment_softmax(Var logits, std::shared_ptr<const NeighborIndex> index);
    /// out[t] = Σ_e weights[e] · values[sources[e]] over the segment of t.
    Var segment_aggregate(Var weights, Var values, std::shared_ptr<const NeighborIndex> index);

    /// Selects x[r, cols[r]] for every row, giving (rows × 1).
    Var pick(Var x, std::vector<std::uint32_t> cols);
    /// mean_j weight_j · (target_j − pred_j)² as a (1 × 1) node. Target and
    /// weight are constants: no gradient flows into them.
    Var squared_error(Var pred, Tensor2 target, Tensor2 weight);

    const Tensor2& value(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    /// Accumulates dLoss/dp into every bound Param. Throws ContractError if
    /// the loss is not (1 × 1).
    void backward(Var loss);

private:
    enum class Op : std::uint8_t {
        Constant,
        Param,
        Linear,
        AddBias,
        Sum,
        LeakyRelu,
        Relu,
        Elu,
        GatherRows,
        ConcatCols,
        SegmentSoftmax,
        SegmentAggregate,
        Pick,
        SquaredError,
    };

    struct Node {
        Op op;
        Tensor2 value;
        std::vector<std::uint32_t> inputs;
        Param* param = nullptr;
        double scalar = 0.0;
        std::vector<std::uint32_t> index;
        std::shared_ptr<const NeighborIndex> neighbors;
        Tensor2 target;
        Tensor2 weight;
    };

    Var push(Node node);
    const Node& node(Var v) const;

    std::vector<Node> nodes_;
};

}  // namespace gaq
