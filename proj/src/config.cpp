// SPDX-License-Identifier: Apache-2.0

#include "gaq/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace gaq {

namespace {

using Setter = std::function<void(RunConfig&, const YAML::Node&)>;

template <typename T>
Setter field(T RunConfig::*member) {
    return [member](RunConfig& c, const YAML::Node& n) { c.*member = n.as<T>(); };
}

template <typename T>
Setter sim_field(T SimConfig::*member) {
    return [member](RunConfig& c, const YAML::Node& n) { c.sim.*member = n.as<T>(); };
}

template <typename T>
Setter agent_field(T AgentConfig::*member) {
    return [member](RunConfig& c, const YAML::Node& n) { c.agent.*member = n.as<T>(); };
}

template <typename T>
Setter gat_field(T GatConfig::*member) {
    return [member](RunConfig& c, const YAML::Node& n) { c.agent.model.gat.*member = n.as<T>(); };
}

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        // Environment
        {"n_rings", sim_field(&SimConfig::n_rings)},
        {"users", sim_field(&SimConfig::users)},
        {"neighbors_k", sim_field(&SimConfig::neighbors_k)},
        {"intersite_range",
         [](RunConfig& c, const YAML::Node& n) {
             const auto range = n.as<std::vector<double>>();
             if (range.size() != 2) {
                 throw YAML::RepresentationException(n.Mark(), "expected [min, max]");
             }
             c.sim.intersite_min = range[0];
             c.sim.intersite_max = range[1];
         }},
        {"antenna_height", sim_field(&SimConfig::antenna_height)},
        {"ue_height", sim_field(&SimConfig::ue_height)},
        {"frequency", sim_field(&SimConfig::frequency)},
        {"traffic_volume", sim_field(&SimConfig::traffic_volume)},
        {"noise_power", sim_field(&SimConfig::noise_power)},
        {"tx_power", sim_field(&SimConfig::tx_power)},
        {"episode_len", sim_field(&SimConfig::episode_len)},
        {"seed", sim_field(&SimConfig::seed)},
        // Training
        {"steps", field(&RunConfig::steps)},
        {"checkpoint_every", field(&RunConfig::checkpoint_every)},
        {"seeds", field(&RunConfig::seeds)},
        {"output_dir", field(&RunConfig::output_dir)},
        {"gamma", agent_field(&AgentConfig::gamma)},
        {"learning_rate", agent_field(&AgentConfig::learning_rate)},
        {"batch_size", agent_field(&AgentConfig::batch_size)},
        {"replay_capacity", agent_field(&AgentConfig::replay_capacity)},
        {"warmup", agent_field(&AgentConfig::warmup)},
        {"target_sync", agent_field(&AgentConfig::target_sync)},
        {"per_alpha", agent_field(&AgentConfig::per_alpha)},
        {"per_beta", agent_field(&AgentConfig::per_beta)},
        {"per_eps", agent_field(&AgentConfig::per_eps)},
        {"double_q", agent_field(&AgentConfig::double_q)},
        // Model
        {"gat_hidden", gat_field(&GatConfig::hidden)},
        {"gat_heads", gat_field(&GatConfig::heads)},
        {"gat_layers", gat_field(&GatConfig::layers)},
        {"mlp_hidden",
         [](RunConfig& c, const YAML::Node& n) { c.agent.model.mlp_hidden = n.as<std::size_t>(); }},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters()) {
            k.push_back(name);
        }
        return k;
    }();
    return keys;
}

void RunConfig::validate() const {
    try {
        sim.validate();
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (steps <= 0) fail(fmt::format("steps must be > 0, got {}", steps));
    if (steps % sim.episode_len != 0) {
        fail(fmt::format("steps ({}) must be a multiple of episode_len ({})", steps,
                         sim.episode_len));
    }
    if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
    if (seeds.empty()) fail("seeds must list at least one seed");
    if (!(agent.gamma >= 0.0 && agent.gamma < 1.0)) fail("gamma must lie in [0, 1)");
    if (!(agent.learning_rate >= 0.0)) fail("learning_rate must be >= 0");
    if (agent.batch_size == 0) fail("batch_size must be > 0");
    if (agent.replay_capacity == 0) fail("replay_capacity must be > 0");
    if (!(agent.per_alpha >= 0.0) || !(agent.per_beta >= 0.0)) fail("per_alpha/per_beta must be >= 0");
    if (!(agent.per_eps > 0.0)) fail("per_eps must be > 0");
    const auto& g = agent.model.gat;
    if (g.hidden == 0 || g.heads == 0 || g.layers == 0) fail("gat dimensions must be > 0");
    if (agent.model.mlp_hidden == 0) fail("mlp_hidden must be > 0");
}

RunConfig parse_run_config(std::string_view text, std::string_view source) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg));
    }
    RunConfig config;
    if (root.IsNull()) {
        config.validate();
        return config;
    }
    if (!root.IsMap()) {
        throw ConfigError(fmt::format("{}:{}: top level must be a key: value mapping", source,
                                      root.Mark().line + 1));
    }
    std::map<std::string, const Setter*> lookup;
    for (const auto& [name, setter] : setters()) {
        lookup.emplace(name, &setter);
    }
    for (const auto& entry : root) {
        const auto key = entry.first.as<std::string>();
        const int line = entry.first.Mark().line + 1;
        const auto it = lookup.find(key);
        if (it == lookup.end()) {
            throw ConfigError(fmt::format("{}:{}: unknown key '{}'", source, line, key));
        }
        try {
            (*it->second)(config, entry.second);
        } catch (const YAML::Exception& e) {
            throw ConfigError(
                fmt::format("{}:{}: bad value for '{}': {}", source, line, key, e.msg));
        }
    }
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", source, e.what()));
    }
    config.agent.model.state_neighbors = static_cast<std::size_t>(config.sim.neighbors_k);
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("{}: cannot open config file", path.string()));
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str(), path.string());
}

}  // namespace gaq
