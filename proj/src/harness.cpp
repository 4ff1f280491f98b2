// SPDX-License-Identifier: Apache-2.0

#include "gaq/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gaq/checkpoint.hpp"

namespace gaq {

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    }
    return out;
}

void require_finite(double v, const char* what, std::int64_t t) {
    if (!std::isfinite(v)) {
        throw std::runtime_error(fmt::format("non-finite {} at t={}", what, t));
    }
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name, const fs::path& source) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        throw ContractError(fmt::format("{}: no column '{}'", source.string(), name));
    }
};

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    return cells;
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot read {}", path.string()));
    }
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) {
        throw ContractError(fmt::format("{}: empty file", path.string()));
    }
    table.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto cells = split_line(line);
        if (cells.size() != table.header.size()) {
            throw ContractError(fmt::format("{}: row {} has {} fields, header has {}",
                                            path.string(), table.rows.size() + 2, cells.size(),
                                            table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

fs::path metrics_path(const fs::path& run) {
    return fs::is_directory(run) ? run / "metrics.csv" : run;
}

}  // namespace

double tail_mean(const std::vector<MetricRow>& rows, std::size_t window) {
    if (rows.empty()) {
        return 0.0;
    }
    const std::size_t n = std::min(window, rows.size());
    double sum = 0.0;
    for (std::size_t i = rows.size() - n; i < rows.size(); ++i) {
        sum += rows[i].mean_reward;
    }
    return sum / static_cast<double>(n);
}

TrainSummary train(const RunConfig& config, AgentKind kind, std::uint64_t seed,
                   const fs::path& out, std::ostream* progress) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();

    AgentConfig agent_config = config.agent;
    agent_config.model.kind = kind;
    agent_config.model.state_neighbors = static_cast<std::size_t>(config.sim.neighbors_k);
    Environment env(config.sim, stream(seed, Stream::Environment));
    Agent agent(agent_config, seed);
    const EpsilonSchedule schedule{1.0, 1e-2, config.steps};

    fs::create_directories(out);
    auto csv = open_out(out / "metrics.csv");
    csv << "t,mean_reward,loss,epsilon,intersite_m\n";

    TrainSummary summary;
    summary.metrics.reserve(static_cast<std::size_t>(config.steps));
    for (std::int64_t t = 0; t < config.steps; ++t) {
        if (t > 0 && t % config.sim.episode_len == 0) {
            env.reset();
        }
        MetricRow row;
        row.t = t;
        row.epsilon = schedule(t);
        row.intersite_m = env.intersite();
        row.mean_reward = agent.step(env, row.epsilon).mean_reward;
        row.loss = agent.update().value_or(0.0);
        require_finite(row.mean_reward, "reward", t);
        require_finite(row.loss, "loss", t);
        csv << fmt::format("{},{},{},{},{}\n", row.t, row.mean_reward, row.loss, row.epsilon,
                           row.intersite_m);
        summary.metrics.push_back(row);

        const std::int64_t done = t + 1;
        if (config.checkpoint_every > 0 && done % config.checkpoint_every == 0 &&
            done != config.steps) {
            save_checkpoint(out / fmt::format("ckpt_{}.json", done), agent, config.sim, done);
        }
        if (progress != nullptr && done % 1000 == 0) {
            *progress << fmt::format("{} seed {}: step {}/{} reward {:.3f} eps {:.3f}\n",
                                     to_string(kind), seed, done, config.steps,
                                     tail_mean(summary.metrics, 1000), row.epsilon);
            progress->flush();
        }
    }
    csv.close();
    save_checkpoint(out / "final.json", agent, config.sim, config.steps);

    summary.final_mean = tail_mean(summary.metrics);
    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const nlohmann::json meta = {
        {"agent", std::string(to_string(kind))},
        {"seed", seed},
        {"steps", config.steps},
        {"cells", env.cell_count()},
        {"neighbors_k", config.sim.neighbors_k},
        {"final500_mean_reward", summary.final_mean},
        {"wall_seconds", summary.wall_seconds},
    };
    open_out(out / "run.json") << meta.dump(2) << '\n';
    return summary;
}

EvalResult run_eval(const EvalOptions& options, const fs::path& out) {
    if (options.episodes == 0) {
        throw ContractError("eval needs at least one episode");
    }
    Checkpoint cp = load_checkpoint(options.checkpoint);
    if (cp.model.kind == AgentKind::NDQN &&
        cp.model.state_neighbors != static_cast<std::size_t>(options.neighbors)) {
        throw LoadError(fmt::format(
            "ndqn checkpoint was trained with {} neighbours; its input width cannot take {}",
            cp.model.state_neighbors, options.neighbors));
    }
    SimConfig sim = cp.sim;
    sim.neighbors_k = options.neighbors;
    sim.validate();

    Agent agent = restore_agent(cp, options.seed);
    Environment env(sim, stream(options.seed, Stream::Environment));
    Rng policy_rng = stream(options.seed, Stream::Agent);
    EvalResult result = evaluate(&agent, env, options.episodes, options.policy, policy_rng);

    fs::create_directories(out);
    auto rewards = open_out(out / "eval_rewards.csv");
    rewards << "episode,step,mean_reward\n";
    const auto steps = static_cast<std::size_t>(sim.episode_len);
    for (std::size_t k = 0; k < result.step_rewards.size(); ++k) {
        require_finite(result.step_rewards[k], "reward", static_cast<std::int64_t>(k));
        rewards << fmt::format("{},{},{}\n", k / steps, k % steps, result.step_rewards[k]);
    }
    auto cdf = open_out(out / "eval_cdf.csv");
    cdf << "value,cumulative_fraction\n";
    for (const auto& [value, fraction] : result.cdf) {
        cdf << fmt::format("{},{}\n", value, fraction);
    }
    return result;
}

std::vector<EdgeAttention> export_attention(const fs::path& checkpoint, const RunConfig& config,
                                            std::uint64_t seed, const fs::path& out,
                                            std::size_t layer) {
    Checkpoint cp = load_checkpoint(checkpoint);
    if (cp.model.kind != AgentKind::GAQ) {
        throw ContractError(fmt::format("export-attention needs a gaq checkpoint, got {}",
                                        to_string(cp.model.kind)));
    }
    if (layer >= cp.model.gat.layers) {
        throw ContractError(fmt::format("layer {} out of range, model has {}", layer,
                                        cp.model.gat.layers));
    }
    Environment env(config.sim, stream(seed, Stream::Environment));
    auto edges = attention_strengths(cp.online.gat(), env.graph(), env.features(), layer);

    fs::create_directories(out);
    auto nodes = open_out(out / "nodes.csv");
    nodes << "cell_id,x,y,azimuth\n";
    for (const Cell& c : env.cells()) {
        nodes << fmt::format("{},{},{},{}\n", c.id, c.position.x, c.position.y, c.azimuth_deg);
    }
    auto edge_csv = open_out(out / "edges.csv");
    edge_csv << "src,dst,strength\n";
    for (const auto& e : edges) {
        require_finite(e.strength, "attention", e.src);
        edge_csv << fmt::format("{},{},{}\n", e.src, e.dst, e.strength);
    }
    return edges;
}

std::vector<AggregateRow> aggregate(
    const std::vector<std::vector<std::pair<std::int64_t, double>>>& runs) {
    if (runs.empty()) {
        throw ContractError("aggregate needs at least one run");
    }
    const auto& grid = runs.front();
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].size() != grid.size()) {
            throw ContractError(fmt::format("run {} has {} steps, run 0 has {}", r,
                                            runs[r].size(), grid.size()));
        }
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (runs[r][k].first != grid[k].first) {
                throw ContractError(fmt::format("run {} row {} has t={}, run 0 has t={}", r, k,
                                                runs[r][k].first, grid[k].first));
            }
        }
    }
    const double n = static_cast<double>(runs.size());
    std::vector<AggregateRow> rows(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double sum = 0.0;
        for (const auto& run : runs) {
            sum += run[k].second;
        }
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& run : runs) {
            ss += (run[k].second - mean) * (run[k].second - mean);
        }
        rows[k] = {grid[k].first, mean, runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0,
                   runs.size()};
    }
    return rows;
}

std::vector<AggregateRow> aggregate_runs(const std::vector<fs::path>& runs, const fs::path& out_csv,
                                         const std::string& column) {
    std::vector<std::vector<std::pair<std::int64_t, double>>> series;
    for (const auto& run : runs) {
        const fs::path path = metrics_path(run);
        const CsvTable table = read_csv(path);
        const std::size_t tc = table.column("t", path);
        const std::size_t vc = table.column(column, path);
        auto& s = series.emplace_back();
        for (const auto& row : table.rows) {
            s.emplace_back(std::stoll(row[tc]), std::stod(row[vc]));
        }
    }
    auto rows = aggregate(series);
    if (out_csv.has_parent_path()) {
        fs::create_directories(out_csv.parent_path());
    }
    auto out = open_out(out_csv);
    out << "t,mean,std,runs\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{}\n", r.t, r.mean, r.std, r.runs);
    }
    return rows;
}

std::vector<MetricRow> read_metrics(const fs::path& csv) {
    const CsvTable table = read_csv(csv);
    const std::size_t t = table.column("t", csv);
    const std::size_t r = table.column("mean_reward", csv);
    const std::size_t l = table.column("loss", csv);
    const std::size_t e = table.column("epsilon", csv);
    const std::size_t d = table.column("intersite_m", csv);
    std::vector<MetricRow> rows;
    rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        rows.push_back({std::stoll(row[t]), std::stod(row[r]), std::stod(row[l]),
                        std::stod(row[e]), std::stod(row[d])});
    }
    return rows;
}

}  // namespace gaq
