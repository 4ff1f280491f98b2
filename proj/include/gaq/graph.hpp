// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "gaq/netsim.hpp"

namespace gaq {

/// Undirected relation graph over cells. Edges join cells on the same site
/// and each cell to its k nearest other cells (site-to-site distance, ties to
/// the lower id), symmetrised by union. Immutable once built.
class CellGraph {
public:
    CellGraph() = default;

    static CellGraph build(std::span<const Cell> cells, int k);

    std::size_t size() const { return adjacency_.size(); }
    std::size_t edge_count() const { return edge_count_; }

    /// N_i in ascending id order. Throws std::out_of_range for unknown ids.
    const std::vector<int>& neighbors(int i) const;
    std::size_t degree(int i) const { return neighbors(i).size(); }
    bool adjacent(int i, int j) const;

    /// N_{+i}: i first, then its neighbours by ascending id.
    std::vector<int> closed_neighborhood(int i) const;

    /// Up to k neighbours of i nearest by site distance (ties to lower id),
    /// returned in ascending id order.
    std::vector<int> nearest_neighbors(int i, std::size_t k) const;

    /// Undirected edges (i < j), lexicographic.
    std::vector<std::pair<int, int>> edges() const;

    double site_distance(int i, int j) const;

    /// BFS hop counts from `source`; unreachable nodes get -1.
    std::vector<int> hop_distances(int source) const;

    /// Edge list CSV: src,dst,distance_m (one row per undirected edge).
    void write_edge_csv(std::ostream& out) const;

    bool operator==(const CellGraph& other) const { return adjacency_ == other.adjacency_; }

private:
    void check(int i) const;

    std::vector<std::vector<int>> adjacency_;
    std::vector<Vec2> positions_;
    std::size_t edge_count_ = 0;
};

}  // namespace gaq
