// SPDX-License-Identifier: Apache-2.0

#include "gaq/graph.hpp"

#include <algorithm>
#include <deque>
#include <ostream>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace gaq {

namespace {

// Candidates sorted by (site distance, id).
std::vector<int> ranked_by_distance(int i, std::span<const int> candidates,
                                    std::span<const Vec2> positions) {
    std::vector<int> ranked(candidates.begin(), candidates.end());
    const Vec2 origin = positions[static_cast<std::size_t>(i)];
    std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
        const double da = distance(origin, positions[static_cast<std::size_t>(a)]);
        const double db = distance(origin, positions[static_cast<std::size_t>(b)]);
        return da < db || (da == db && a < b);
    });
    return ranked;
}

}  // namespace

CellGraph CellGraph::build(std::span<const Cell> cells, int k) {
    if (cells.empty()) {
        throw ContractError("build_graph: no cells");
    }
    if (k < 0) {
        throw ContractError(fmt::format("build_graph: k must be >= 0, got {}", k));
    }
    const std::size_t n = cells.size();
    CellGraph g;
    g.positions_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (cells[i].id != static_cast<int>(i)) {
            throw ContractError("build_graph: cell ids must be 0..N-1 in order");
        }
        g.positions_[i] = cells[i].position;
    }

    std::vector<std::set<int>> adj(n);
    auto link = [&](int a, int b) {
        adj[static_cast<std::size_t>(a)].insert(b);
        adj[static_cast<std::size_t>(b)].insert(a);
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (cells[i].site_id == cells[j].site_id) {
                link(static_cast<int>(i), static_cast<int>(j));
            }
        }
    }
    std::vector<int> others;
    others.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        others.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                others.push_back(static_cast<int>(j));
            }
        }
        const auto ranked = ranked_by_distance(static_cast<int>(i), others, g.positions_);
        const std::size_t take = std::min(ranked.size(), static_cast<std::size_t>(k));
        for (std::size_t r = 0; r < take; ++r) {
            link(static_cast<int>(i), ranked[r]);
        }
    }

    g.adjacency_.resize(n);
    std::size_t directed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        g.adjacency_[i].assign(adj[i].begin(), adj[i].end());
        directed += adj[i].size();
    }
    g.edge_count_ = directed / 2;
    return g;
}

void CellGraph::check(int i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= adjacency_.size()) {
        throw std::out_of_range(fmt::format("cell graph has no node {}", i));
    }
}

const std::vector<int>& CellGraph::neighbors(int i) const {
    check(i);
    return adjacency_[static_cast<std::size_t>(i)];
}

bool CellGraph::adjacent(int i, int j) const {
    const auto& n = neighbors(i);
    return std::binary_search(n.begin(), n.end(), j);
}

std::vector<int> CellGraph::closed_neighborhood(int i) const {
    const auto& n = neighbors(i);
    std::vector<int> out;
    out.reserve(n.size() + 1);
    out.push_back(i);
    out.insert(out.end(), n.begin(), n.end());
    return out;
}

std::vector<int> CellGraph::nearest_neighbors(int i, std::size_t k) const {
    auto ranked = ranked_by_distance(i, neighbors(i), positions_);
    if (ranked.size() > k) {
        ranked.resize(k);
    }
    std::sort(ranked.begin(), ranked.end());
    return ranked;
}

std::vector<std::pair<int, int>> CellGraph::edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(edge_count_);
    for (std::size_t i = 0; i < adjacency_.size(); ++i) {
        for (int j : adjacency_[i]) {
            if (static_cast<int>(i) < j) {
                out.emplace_back(static_cast<int>(i), j);
            }
        }
    }
    return out;
}

double CellGraph::site_distance(int i, int j) const {
    check(i);
    check(j);
    return distance(positions_[static_cast<std::size_t>(i)], positions_[static_cast<std::size_t>(j)]);
}

std::vector<int> CellGraph::hop_distances(int source) const {
    check(source);
    std::vector<int> hops(adjacency_.size(), -1);
    std::deque<int> queue{source};
    hops[static_cast<std::size_t>(source)] = 0;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int w : adjacency_[static_cast<std::size_t>(v)]) {
            if (hops[static_cast<std::size_t>(w)] < 0) {
                hops[static_cast<std::size_t>(w)] = hops[static_cast<std::size_t>(v)] + 1;
                queue.push_back(w);
            }
        }
    }
    return hops;
}

void CellGraph::write_edge_csv(std::ostream& out) const {
    out << "src,dst,distance_m\n";
    for (const auto& [i, j] : edges()) {
        fmt::print(out, "{},{},{}\n", i, j, site_distance(i, j));
    }
}

}  // namespace gaq
