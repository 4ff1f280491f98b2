// SPDX-License-Identifier: Apache-2.0

#include "gaq/checkpoint.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

namespace gaq {

namespace {

using nlohmann::json;

json sim_to_json(const SimConfig& s) {
    return {{"n_rings", s.n_rings},
            {"users", s.users},
            {"neighbors_k", s.neighbors_k},
            {"intersite_min", s.intersite_min},
            {"intersite_max", s.intersite_max},
            {"antenna_height", s.antenna_height},
            {"ue_height", s.ue_height},
            {"frequency", s.frequency},
            {"traffic_volume", s.traffic_volume},
            {"noise_power", s.noise_power},
            {"tx_power", s.tx_power},
            {"episode_len", s.episode_len},
            {"seed", s.seed}};
}

SimConfig sim_from_json(const json& j) {
    SimConfig s;
    s.n_rings = j.at("n_rings").get<int>();
    s.users = j.at("users").get<int>();
    s.neighbors_k = j.at("neighbors_k").get<int>();
    s.intersite_min = j.at("intersite_min").get<double>();
    s.intersite_max = j.at("intersite_max").get<double>();
    s.antenna_height = j.at("antenna_height").get<double>();
    s.ue_height = j.at("ue_height").get<double>();
    s.frequency = j.at("frequency").get<double>();
    s.traffic_volume = j.at("traffic_volume").get<double>();
    s.noise_power = j.at("noise_power").get<double>();
    s.tx_power = j.at("tx_power").get<double>();
    s.episode_len = j.at("episode_len").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

json params_to_json(QModel& model) {
    json out = json::object();
    for (auto& [name, p] : model.parameters()) {
        out[name] = {{"rows", p->value.rows()},
                     {"cols", p->value.cols()},
                     {"data", std::vector<double>(p->value.values().begin(),
                                                  p->value.values().end())}};
    }
    return out;
}

void params_from_json(QModel& model, const json& j, const char* which) {
    auto named = model.parameters();
    if (j.size() != named.size()) {
        throw LoadError(fmt::format("checkpoint {} network has {} tensors, model expects {}",
                                    which, j.size(), named.size()));
    }
    for (auto& [name, p] : named) {
        if (!j.contains(name)) {
            throw LoadError(fmt::format("checkpoint {} network lacks tensor '{}'", which, name));
        }
        const json& t = j.at(name);
        const auto rows = t.at("rows").get<std::size_t>();
        const auto cols = t.at("cols").get<std::size_t>();
        if (rows != p->value.rows() || cols != p->value.cols()) {
            throw LoadError(fmt::format("tensor '{}' is ({}x{}), model expects {}", name, rows,
                                        cols, p->value.shape_string()));
        }
        *p = Param(Tensor2(rows, cols, t.at("data").get<std::vector<double>>()));
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Agent& agent, const SimConfig& sim,
                     std::int64_t step) {
    const ModelConfig& m = agent.config().model;
    json doc = {
        {"format", "gaq-checkpoint"},
        {"version", kCheckpointVersion},
        {"agent", std::string(to_string(m.kind))},
        {"step", step},
        {"model",
         {{"in_dim", m.gat.in_dim},
          {"gat_hidden", m.gat.hidden},
          {"gat_heads", m.gat.heads},
          {"gat_layers", m.gat.layers},
          {"mlp_hidden", m.mlp_hidden},
          {"state_neighbors", m.state_neighbors},
          {"input_dim", m.input_dim()}}},
        {"sim", sim_to_json(sim)},
        {"online", params_to_json(agent.online())},
        {"target", params_to_json(agent.target())},
    };
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write checkpoint {}", path.string()));
    }
    out << doc.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw LoadError(fmt::format("{}: cannot open checkpoint", path.string()));
    }
    try {
        const json doc = json::parse(in);
        if (doc.at("format") != "gaq-checkpoint") {
            throw LoadError(fmt::format("{}: not a checkpoint file", path.string()));
        }
        if (doc.at("version").get<int>() != kCheckpointVersion) {
            throw LoadError(fmt::format("{}: unsupported checkpoint version {}", path.string(),
                                        doc.at("version").get<int>()));
        }
        Checkpoint cp;
        const json& m = doc.at("model");
        cp.model.kind = parse_agent_kind(doc.at("agent").get<std::string>());
        cp.model.gat.in_dim = m.at("in_dim").get<std::size_t>();
        cp.model.gat.hidden = m.at("gat_hidden").get<std::size_t>();
        cp.model.gat.heads = m.at("gat_heads").get<std::size_t>();
        cp.model.gat.layers = m.at("gat_layers").get<std::size_t>();
        cp.model.mlp_hidden = m.at("mlp_hidden").get<std::size_t>();
        cp.model.state_neighbors = m.at("state_neighbors").get<std::size_t>();
        if (cp.model.input_dim() != m.at("input_dim").get<std::size_t>()) {
            throw LoadError(fmt::format("{}: recorded input_dim disagrees with model shape",
                                        path.string()));
        }
        cp.sim = sim_from_json(doc.at("sim"));
        cp.step = doc.at("step").get<std::int64_t>();

        Rng scratch(0);
        cp.online = QModel(cp.model, scratch);
        cp.target = QModel(cp.model, scratch);
        params_from_json(cp.online, doc.at("online"), "online");
        params_from_json(cp.target, doc.at("target"), "target");
        return cp;
    } catch (const json::exception& e) {
        throw LoadError(fmt::format("{}: malformed checkpoint: {}", path.string(), e.what()));
    } catch (const ContractError& e) {
        throw LoadError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

Agent restore_agent(Checkpoint& checkpoint, std::uint64_t seed) {
    AgentConfig config;
    config.model = checkpoint.model;
    Agent agent(config, seed);
    agent.online().copy_values_from(checkpoint.online);
    agent.target().copy_values_from(checkpoint.target);
    return agent;
}

}  // namespace gaq
