// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "gaq/graph.hpp"
#include "gaq/netsim.hpp"
#include "gaq/rng.hpp"

namespace gaq {

/// Mean over N_{+i} of the per-cell mean user SINR (dB).
double reward(int i, const NetworkSnapshot& snapshot, const CellGraph& graph);

/// Episodic tilt-control environment. Topology (ring count) is fixed; each
/// reset draws a new intersite distance, drops fresh users, randomises the
/// tilts and rebuilds the relation graph.
class Environment {
public:
    Environment(SimConfig config, Rng rng);

    void reset();

    /// Replaces every cell's tilt at once and recomputes the snapshot once.
    /// Tilts must lie in [0, 15] degrees; otherwise DomainError and no change.
    void apply_actions(std::span<const double> tilts_deg);

    /// Rebuilds the relation graph with a different k (evaluation on denser
    /// graphs); also changes future resets.
    void set_neighbors(int k);

    const SimConfig& config() const { return config_; }
    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<Vec2>& users() const { return users_; }
    const NetworkSnapshot& snapshot() const { return snapshot_; }
    const CellGraph& graph() const { return graph_; }
    double intersite() const { return intersite_; }
    double radius() const { return layout_radius(config_.n_rings, intersite_); }
    std::size_t cell_count() const { return cells_.size(); }

    std::vector<CellState> states() const;
    /// cells × 8 learning features.
    Tensor2 features() const;
    std::vector<double> rewards() const;

private:
    SimConfig config_;
    Rng rng_;
    double intersite_ = 0.0;
    std::vector<Cell> cells_;
    std::vector<Vec2> users_;
    CellGraph graph_;
    NetworkSnapshot snapshot_;
};

}  // namespace gaq
