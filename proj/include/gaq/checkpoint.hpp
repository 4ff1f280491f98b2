// SPDX-License-Identifier: Apache-2.0
//
// Checkpoints are JSON documents holding the agent kind, model shape, the
// simulator config the model was trained under, the step counter and every
// parameter tensor of the online and target networks. Doubles are written
// in shortest round-trip form, so save → load is bit-exact.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "gaq/agent.hpp"
#include "gaq/netsim.hpp"

namespace gaq {

inline constexpr int kCheckpointVersion = 1;

class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    ModelConfig model;
    SimConfig sim;
    std::int64_t step = 0;
    QModel online;
    QModel target;
};

void save_checkpoint(const std::filesystem::path& path, Agent& agent, const SimConfig& sim,
                     std::int64_t step);

/// Throws LoadError on unreadable files, version or shape mismatches.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Agent with the checkpoint's weights in both networks.
Agent restore_agent(Checkpoint& checkpoint, std::uint64_t seed);

}  // namespace gaq
