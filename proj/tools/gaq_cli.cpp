// SPDX-License-Identifier: Apache-2.0
//
// gaq: train, evaluate and inspect tilt-control agents.
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gaq/checkpoint.hpp"
#include "gaq/config.hpp"
#include "gaq/harness.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --out wins, then GAQ_OUTPUT_DIR, then the config's output_dir.
gaq::fs::path resolve_out(const std::string& flag, const std::string& from_config) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("GAQ_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    if (!from_config.empty()) {
        return from_config;
    }
    throw UsageError("no output directory: pass --out, set GAQ_OUTPUT_DIR or output_dir");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-attention Q-learning for antenna tilt control"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    std::string agent_name = "gaq";
    std::uint64_t seed = 1;
    std::optional<std::int64_t> steps;

    auto* train = app.add_subcommand("train", "train one agent with one seed");
    train->add_option("--config", config_path, "YAML run config")->required();
    train->add_option("--agent", agent_name, "gaq, dqn or ndqn")
        ->check(CLI::IsMember({"gaq", "dqn", "ndqn"}));
    train->add_option("--seed", seed, "run seed");
    train->add_option("--out", out, "output directory");
    train->add_option("--steps", steps, "override the configured step count");

    std::string checkpoint;
    int neighbors = 5;
    std::size_t episodes = 100;
    std::string policy = "greedy";
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
    eval->add_option("--neighbors", neighbors, "k for the evaluation graph");
    eval->add_option("--episodes", episodes, "episodes to run")->check(CLI::PositiveNumber);
    eval->add_option("--seed", seed, "evaluation seed");
    eval->add_option("--policy", policy, "greedy or random")
        ->check(CLI::IsMember({"greedy", "random"}));
    eval->add_option("--out", out, "output directory");

    std::size_t layer = 0;
    auto* attention = app.add_subcommand("export-attention", "dump mean-over-heads attention");
    attention->add_option("--checkpoint", checkpoint, "GAQ checkpoint JSON")->required();
    attention->add_option("--config", config_path, "YAML run config")->required();
    attention->add_option("--seed", seed, "snapshot seed");
    attention->add_option("--layer", layer, "attention layer, 0-based");
    attention->add_option("--out", out, "output directory");

    std::vector<std::string> runs;
    std::string column = "mean_reward";
    auto* aggregate = app.add_subcommand("aggregate", "mean/std curves across runs");
    aggregate->add_option("runs", runs, "run directories or metrics.csv files")->required();
    aggregate->add_option("--column", column, "metric column");
    aggregate->add_option("--out", out, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (train->parsed()) {
            gaq::RunConfig config = gaq::load_run_config(config_path);
            if (steps) {
                config.steps = *steps;
                config.validate();
            }
            const auto dir = resolve_out(out, config.output_dir);
            const auto kind = gaq::parse_agent_kind(agent_name);
            const auto summary = gaq::train(config, kind, seed, dir, &std::cerr);
            fmt::print("{} seed {}: final-500 mean reward {:.4f} dB, {:.1f} s -> {}\n",
                       agent_name, seed, summary.final_mean, summary.wall_seconds, dir.string());
        } else if (eval->parsed()) {
            const auto dir = resolve_out(out, "");
            gaq::EvalOptions options{checkpoint, neighbors, episodes, seed,
                                     policy == "random" ? gaq::EvalPolicy::RandomTilt
                                                        : gaq::EvalPolicy::Greedy};
            const auto result = gaq::run_eval(options, dir);
            fmt::print("{} episodes, k={}: mean reward {:.4f} dB -> {}\n", episodes, neighbors,
                       result.mean, dir.string());
        } else if (attention->parsed()) {
            const gaq::RunConfig config = gaq::load_run_config(config_path);
            const auto dir = resolve_out(out, config.output_dir);
            const auto edges = gaq::export_attention(checkpoint, config, seed, dir, layer);
            fmt::print("{} attention entries -> {}\n", edges.size(), dir.string());
        } else if (aggregate->parsed()) {
            const auto rows = gaq::aggregate_runs({runs.begin(), runs.end()}, out, column);
            fmt::print("{} rows over {} runs -> {}\n", rows.size(), runs.size(), out);
        }
    } catch (const gaq::ConfigError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kUsageError;
    } catch (const UsageError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kUsageError;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kRuntimeError;
    }
    return 0;
}
