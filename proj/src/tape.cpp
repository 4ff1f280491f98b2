// SPDX-License-Identifier: Apache-2.0

#include "gaq/tape.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace gaq {

void NeighborIndex::add_row(std::span<const std::uint32_t> row_sources) {
    sources.insert(sources.end(), row_sources.begin(), row_sources.end());
    offsets.push_back(static_cast<std::uint32_t>(sources.size()));
}

std::vector<std::uint32_t> NeighborIndex::edge_targets() const {
    std::vector<std::uint32_t> out(edges());
    for (std::size_t t = 0; t < outputs(); ++t) {
        std::fill(out.begin() + offsets[t], out.begin() + offsets[t + 1],
                  static_cast<std::uint32_t>(t));
    }
    return out;
}

Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
    if (v.id >= nodes_.size()) {
        throw ContractError(fmt::format("tape: unknown node {}", v.id));
    }
    return nodes_[v.id];
}

const Tensor2& Tape::value(Var v) const { return node(v).value; }

Var Tape::constant(Tensor2 value) {
    Node n{.op = Op::Constant, .value = std::move(value)};
    return push(std::move(n));
}

Var Tape::param(Param& p) {
    Node n{.op = Op::Param, .value = p.value, .param = &p};
    return push(std::move(n));
}

Var Tape::linear(Var x, Var w) {
    Node n{.op = Op::Linear, .value = matmul_transposed(value(x), value(w)), .inputs = {x.id, w.id}};
    return push(std::move(n));
}

Var Tape::add_bias(Var x, Var bias) {
    const Tensor2& xv = value(x);
    const Tensor2& bv = value(bias);
    if (bv.rows() != 1 || bv.cols() != xv.cols()) {
        throw DimensionError(fmt::format("add_bias: bias {} does not fit {}", bv.shape_string(),
                                         xv.shape_string()));
    }
    Tensor2 out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < out.cols(); ++c) {
            row[c] += bv[c];
        }
    }
    Node n{.op = Op::AddBias, .value = std::move(out), .inputs = {x.id, bias.id}};
    return push(std::move(n));
}

Var Tape::sum(std::span<const Var> terms) {
    if (terms.empty()) {
        throw ContractError("sum: no terms");
    }
    Tensor2 out = value(terms[0]);
    std::vector<std::uint32_t> ids{terms[0].id};
    for (std::size_t t = 1; t < terms.size(); ++t) {
        const Tensor2& v = value(terms[t]);
        if (v.rows() != out.rows() || v.cols() != out.cols()) {
            throw DimensionError(
                fmt::format("sum: {} vs {}", out.shape_string(), v.shape_string()));
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            out[i] += v[i];
        }
        ids.push_back(terms[t].id);
    }
    Node n{.op = Op::Sum, .value = std::move(out), .inputs = std::move(ids)};
    return push(std::move(n));
}

Var Tape::leaky_relu(Var x, double slope) {
    Node n{.op = Op::LeakyRelu,
           .value = gaq::leaky_relu(value(x), slope),
           .inputs = {x.id},
           .scalar = slope};
    return push(std::move(n));
}

Var Tape::relu(Var x) {
    Tensor2 out = value(x);
    for (double& v : out.values()) {
        v = v > 0.0 ? v : 0.0;
    }
    Node n{.op = Op::Relu, .value = std::move(out), .inputs = {x.id}};
    return push(std::move(n));
}

Var Tape::elu(Var x) {
    Tensor2 out = value(x);
    for (double& v : out.values()) {
        v = v > 0.0 ? v : std::expm1(v);
    }
    Node n{.op = Op::Elu, .value = std::move(out), .inputs = {x.id}};
    return push(std::move(n));
}

Var Tape::gather_rows(Var x, std::vector<std::uint32_t> rows) {
    const Tensor2& xv = value(x);
    Tensor2 out(rows.size(), xv.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= xv.rows()) {
            throw DimensionError(fmt::format("gather_rows: row {} outside {}", rows[r],
                                             xv.shape_string()));
        }
        auto src = xv.row(rows[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    Node n{.op = Op::GatherRows, .value = std::move(out), .inputs = {x.id}, .index = std::move(rows)};
    return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
    const Tensor2& av = value(a);
    const Tensor2& bv = value(b);
    if (av.rows() != bv.rows()) {
        throw DimensionError(
            fmt::format("concat_cols: {} vs {}", av.shape_string(), bv.shape_string()));
    }
    Tensor2 out(av.rows(), av.cols() + bv.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        auto dst = out.row(r);
        std::copy(av.row(r).begin(), av.row(r).end(), dst.begin());
        std::copy(bv.row(r).begin(), bv.row(r).end(), dst.begin() + av.cols());
    }
    Node n{.op = Op::ConcatCols, .value = std::move(out), .inputs = {a.id, b.id}};
    return push(std::move(n));
}

Var Tape::segment_softmax(Var logits, std::shared_ptr<const NeighborIndex> index) {
    const Tensor2& lv = value(logits);
    if (lv.cols() != 1 || lv.rows() != index->edges()) {
        throw DimensionError(fmt::format("segment_softmax: logits {} for {} edges",
                                         lv.shape_string(), index->edges()));
    }
    Tensor2 out(lv.rows(), 1);
    for (std::size_t t = 0; t < index->outputs(); ++t) {
        const std::size_t lo = index->offsets[t];
        const std::size_t hi = index->offsets[t + 1];
        if (lo == hi) {
            continue;
        }
        auto alpha = neighborhood_softmax(lv.values().subspan(lo, hi - lo));
        std::copy(alpha.begin(), alpha.end(), out.values().begin() + lo);
    }
    Node n{.op = Op::SegmentSoftmax,
           .value = std::move(out),
           .inputs = {logits.id},
           .neighbors = std::move(index)};
    return push(std::move(n));
}

Var Tape::segment_aggregate(Var weights, Var values, std::shared_ptr<const NeighborIndex> index) {
    const Tensor2& wv = value(weights);
    const Tensor2& vv = value(values);
    if (wv.cols() != 1 || wv.rows() != index->edges()) {
        throw DimensionError(fmt::format("segment_aggregate: weights {} for {} edges",
                                         wv.shape_string(), index->edges()));
    }
    Tensor2 out(index->outputs(), vv.cols());
    for (std::size_t t = 0; t < index->outputs(); ++t) {
        auto dst = out.row(t);
        for (std::size_t e = index->offsets[t]; e < index->offsets[t + 1]; ++e) {
            const std::uint32_t s = index->sources[e];
            if (s >= vv.rows()) {
                throw DimensionError(fmt::format("segment_aggregate: source {} outside {}", s,
                                                 vv.shape_string()));
            }
            const double w = wv[e];
            auto src = vv.row(s);
            for (std::size_t c = 0; c < vv.cols(); ++c) {
                dst[c] += w * src[c];
            }
        }
    }
    Node n{.op = Op::SegmentAggregate,
           .value = std::move(out),
           .inputs = {weights.id, values.id},
           .neighbors = std::move(index)};
    return push(std::move(n));
}

Var Tape::pick(Var x, std::vector<std::uint32_t> cols) {
    const Tensor2& xv = value(x);
    if (cols.size() != xv.rows()) {
        throw DimensionError(
            fmt::format("pick: {} indices for {}", cols.size(), xv.shape_string()));
    }
    Tensor2 out(xv.rows(), 1);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        if (cols[r] >= xv.cols()) {
            throw DimensionError(fmt::format("pick: column {} outside {}", cols[r],
                                             xv.shape_string()));
        }
        out[r] = xv(r, cols[r]);
    }
    Node n{.op = Op::Pick, .value = std::move(out), .inputs = {x.id}, .index = std::move(cols)};
    return push(std::move(n));
}

Var Tape::squared_error(Var pred, Tensor2 target, Tensor2 weight) {
    const Tensor2& pv = value(pred);
    if (pv.cols() != 1 || target.rows() != pv.rows() || target.cols() != 1 ||
        weight.rows() != pv.rows() || weight.cols() != 1 || pv.rows() == 0) {
        throw DimensionError(fmt::format("squared_error: pred {}, target {}, weight {}",
                                         pv.shape_string(), target.shape_string(),
                                         weight.shape_string()));
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < pv.rows(); ++j) {
        const double diff = target[j] - pv[j];
        acc += weight[j] * diff * diff;
    }
    Node n{.op = Op::SquaredError,
           .value = Tensor2(1, 1, acc / static_cast<double>(pv.rows())),
           .inputs = {pred.id},
           .target = std::move(target),
           .weight = std::move(weight)};
    return push(std::move(n));
}

void Tape::backward(Var loss) {
    const Tensor2& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw ContractError(fmt::format("backward: loss must be 1x1, got {}", lv.shape_string()));
    }

    std::vector<Tensor2> grads(loss.id + 1);
    grads[loss.id] = Tensor2(1, 1, 1.0);
    auto grad_of = [&](std::uint32_t id) -> Tensor2& {
        if (grads[id].empty() && !nodes_[id].value.empty()) {
            grads[id] = Tensor2(nodes_[id].value.rows(), nodes_[id].value.cols());
        }
        return grads[id];
    };

    for (std::uint32_t id = loss.id + 1; id-- > 0;) {
        if (grads[id].empty()) {
            continue;
        }
        const Node& n = nodes_[id];
        const Tensor2& g = grads[id];
        switch (n.op) {
        case Op::Constant:
            break;
        case Op::Param:
            for (std::size_t i = 0; i < g.size(); ++i) {
                n.param->grad[i] += g[i];
            }
            break;
        case Op::Linear: {
            const Tensor2& x = nodes_[n.inputs[0]].value;
            const Tensor2& w = nodes_[n.inputs[1]].value;
            // dX = dY · W ; dW = dYᵀ · X
            Tensor2& gx = grad_of(n.inputs[0]);
            Tensor2& gw = grad_of(n.inputs[1]);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                auto gy = g.row(r);
                auto xr = x.row(r);
                auto gxr = gx.row(r);
                for (std::size_t o = 0; o < g.cols(); ++o) {
                    const double go = gy[o];
                    if (go == 0.0) {
                        continue;
                    }
                    auto wo = w.row(o);
                    auto gwo = gw.row(o);
                    for (std::size_t i = 0; i < x.cols(); ++i) {
                        gxr[i] += go * wo[i];
                        gwo[i] += go * xr[i];
                    }
                }
            }
            break;
        }
        case Op::AddBias: {
            Tensor2& gx = grad_of(n.inputs[0]);
            Tensor2& gb = grad_of(n.inputs[1]);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                for (std::size_t c = 0; c < g.cols(); ++c) {
                    gx(r, c) += g(r, c);
                    gb[c] += g(r, c);
                }
            }
            break;
        }
        case Op::Sum:
            for (std::uint32_t in : n.inputs) {
                Tensor2& gi = grad_of(in);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gi[i] += g[i];
                }
            }
            break;
        case Op::LeakyRelu: {
            const Tensor2& x = nodes_[n.inputs[0]].value;
            Tensor2& gx = grad_of(n.inputs[0]);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += x[i] >= 0.0 ? g[i] : n.scalar * g[i];
            }
            break;
        }
        case Op::Relu: {
            const Tensor2& x = nodes_[n.inputs[0]].value;
            Tensor2& gx = grad_of(n.inputs[0]);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (x[i] > 0.0) {
                    gx[i] += g[i];
                }
            }
            break;
        }
        case Op::Elu: {
            const Tensor2& x = nodes_[n.inputs[0]].value;
            Tensor2& gx = grad_of(n.inputs[0]);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += x[i] > 0.0 ? g[i] : g[i] * std::exp(x[i]);
            }
            break;
        }
        case Op::GatherRows: {
            Tensor2& gx = grad_of(n.inputs[0]);
            for (std::size_t r = 0; r < n.index.size(); ++r) {
                auto dst = gx.row(n.index[r]);
                auto src = g.row(r);
                for (std::size_t c = 0; c < src.size(); ++c) {
                    dst[c] += src[c];
                }
            }
            break;
        }
        case Op::ConcatCols: {
            Tensor2& ga = grad_of(n.inputs[0]);
            Tensor2& gb = grad_of(n.inputs[1]);
            const std::size_t split = ga.cols();
            for (std::size_t r = 0; r < g.rows(); ++r) {
                for (std::size_t c = 0; c < split; ++c) {
                    ga(r, c) += g(r, c);
                }
                for (std::size_t c = 0; c < gb.cols(); ++c) {
                    gb(r, c) += g(r, split + c);
                }
            }
            break;
        }
        case Op::SegmentSoftmax: {
            Tensor2& gz = grad_of(n.inputs[0]);
            const Tensor2& alpha = n.value;
            const auto& idx = *n.neighbors;
            for (std::size_t t = 0; t < idx.outputs(); ++t) {
                double dot = 0.0;
                for (std::size_t e = idx.offsets[t]; e < idx.offsets[t + 1]; ++e) {
                    dot += alpha[e] * g[e];
                }
                for (std::size_t e = idx.offsets[t]; e < idx.offsets[t + 1]; ++e) {
                    gz[e] += alpha[e] * (g[e] - dot);
                }
            }
            break;
        }
        case Op::SegmentAggregate: {
            const Tensor2& w = nodes_[n.inputs[0]].value;
            const Tensor2& v = nodes_[n.inputs[1]].value;
            Tensor2& gw = grad_of(n.inputs[0]);
            Tensor2& gv = grad_of(n.inputs[1]);
            const auto& idx = *n.neighbors;
            for (std::size_t t = 0; t < idx.outputs(); ++t) {
                auto gt = g.row(t);
                for (std::size_t e = idx.offsets[t]; e < idx.offsets[t + 1]; ++e) {
                    const std::uint32_t s = idx.sources[e];
                    auto vs = v.row(s);
                    auto gvs = gv.row(s);
                    double dw = 0.0;
                    for (std::size_t c = 0; c < gt.size(); ++c) {
                        dw += gt[c] * vs[c];
                        gvs[c] += w[e] * gt[c];
                    }
                    gw[e] += dw;
                }
            }
            break;
        }
        case Op::Pick: {
            Tensor2& gx = grad_of(n.inputs[0]);
            for (std::size_t r = 0; r < n.index.size(); ++r) {
                gx(r, n.index[r]) += g[r];
            }
            break;
        }
        case Op::SquaredError: {
            const Tensor2& p = nodes_[n.inputs[0]].value;
            Tensor2& gp = grad_of(n.inputs[0]);
            const double scale = 2.0 * g[0] / static_cast<double>(p.rows());
            for (std::size_t j = 0; j < p.rows(); ++j) {
                gp[j] += scale * n.weight[j] * (p[j] - n.target[j]);
            }
            break;
        }
        }
        // Intermediate gradients are dead once propagated.
        if (n.op != Op::Param) {
            grads[id] = Tensor2();
        }
    }
}

}  // namespace gaq
