// SPDX-License-Identifier: Apache-2.0
//
// Run configuration files. Flat YAML mapping; every key is optional and
// defaults to the full-scale profile, unknown keys are errors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gaq/agent.hpp"
#include "gaq/netsim.hpp"

namespace gaq {

/// Bad configuration. what() reads "<source>:<line>: <message>" whenever the
/// problem can be pinned to a line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    SimConfig sim;
    AgentConfig agent;
    std::int64_t steps = 20000;          // T
    std::int64_t checkpoint_every = 5000;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string output_dir;

    /// Throws ConfigError on the first violated constraint.
    void validate() const;
};

RunConfig parse_run_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

}  // namespace gaq
