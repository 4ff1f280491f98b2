// SPDX-License-Identifier: Apache-2.0

#include "gaq/environment.hpp"

#include <cmath>

#include <fmt/format.h>

namespace gaq {

double reward(int i, const NetworkSnapshot& snapshot, const CellGraph& graph) {
    const auto hood = graph.closed_neighborhood(i);
    double total = 0.0;
    for (int j : hood) {
        total += snapshot.cell_mean_sinr_db.at(static_cast<std::size_t>(j));
    }
    return total / static_cast<double>(hood.size());
}

Environment::Environment(SimConfig config, Rng rng) : config_(config), rng_(rng) {
    config_.validate();
    reset();
}

void Environment::reset() {
    intersite_ = rng_.uniform(config_.intersite_min, config_.intersite_max);
    cells_ = make_cells(hex_layout(config_.n_rings, intersite_));
    users_ = place_users(config_, intersite_, rng_);
    for (auto& c : cells_) {
        c.tilt_deg = static_cast<double>(rng_.index(kTiltActions));
    }
    graph_ = CellGraph::build(cells_, config_.neighbors_k);
    snapshot_ = compute_snapshot(cells_, users_, config_);
}

void Environment::apply_actions(std::span<const double> tilts_deg) {
    if (tilts_deg.size() != cells_.size()) {
        throw ContractError(fmt::format("apply_actions: {} tilts for {} cells", tilts_deg.size(),
                                        cells_.size()));
    }
    for (std::size_t i = 0; i < tilts_deg.size(); ++i) {
        const double t = tilts_deg[i];
        if (!std::isfinite(t) || t < 0.0 || t > kMaxTiltDeg) {
            throw DomainError(fmt::format("apply_actions: tilt {} for cell {} outside [0, {}]", t,
                                          i, kMaxTiltDeg));
        }
    }
    for (std::size_t i = 0; i < tilts_deg.size(); ++i) {
        cells_[i].tilt_deg = tilts_deg[i];
    }
    snapshot_ = compute_snapshot(cells_, users_, config_);
}

void Environment::set_neighbors(int k) {
    config_.neighbors_k = k;
    config_.validate();
    graph_ = CellGraph::build(cells_, k);
}

std::vector<CellState> Environment::states() const {
    std::vector<CellState> out;
    out.reserve(cells_.size());
    for (const auto& c : cells_) {
        out.push_back(cell_state(c, snapshot_));
    }
    return out;
}

Tensor2 Environment::features() const {
    Tensor2 out(cells_.size(), kStateDim);
    const double r = radius();
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const auto f = cell_state(cells_[i], snapshot_).features(r);
        std::copy(f.begin(), f.end(), out.row(i).begin());
    }
    return out;
}

std::vector<double> Environment::rewards() const {
    std::vector<double> out(cells_.size());
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        out[i] = reward(static_cast<int>(i), snapshot_, graph_);
    }
    return out;
}

}  // namespace gaq
