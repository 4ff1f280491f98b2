// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration behind the CLI: seeded training runs, checkpoint
// evaluation, attention export and multi-run aggregation. Every function
// writes CSV files into a caller-chosen directory.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gaq/agent.hpp"
#include "gaq/config.hpp"

namespace gaq {

namespace fs = std::filesystem;

/// One metrics.csv row.
struct MetricRow {
    std::int64_t t = 0;
    double mean_reward = 0.0;
    double loss = 0.0;
    double epsilon = 0.0;
    double intersite_m = 0.0;
};

struct TrainSummary {
    std::vector<MetricRow> metrics;
    double final_mean = 0.0;  // mean r̄ over the last min(500, T) steps
    double wall_seconds = 0.0;
};

/// Mean of the last `window` mean_reward values (all of them if fewer).
double tail_mean(const std::vector<MetricRow>& rows, std::size_t window = 500);

/// Trains `kind` for config.steps steps. Writes metrics.csv, ckpt_<t>.json
/// every checkpoint_every steps, final.json and run.json into `out`.
/// `progress`, when given, receives a line every 1000 steps.
TrainSummary train(const RunConfig& config, AgentKind kind, std::uint64_t seed,
                   const fs::path& out, std::ostream* progress = nullptr);

struct EvalOptions {
    fs::path checkpoint;
    int neighbors = 5;
    std::size_t episodes = 100;
    std::uint64_t seed = 0;
    EvalPolicy policy = EvalPolicy::Greedy;
};

/// Writes eval_rewards.csv (episode,step,mean_reward) and eval_cdf.csv
/// (value,cumulative_fraction).
EvalResult run_eval(const EvalOptions& options, const fs::path& out);

/// Writes nodes.csv (cell_id,x,y,azimuth) and edges.csv (src,dst,strength)
/// for one snapshot drawn from `config.sim` under `seed`. Edges cover every
/// (i, j ∈ N+i), self included. GAQ checkpoints only.
std::vector<EdgeAttention> export_attention(const fs::path& checkpoint, const RunConfig& config,
                                            std::uint64_t seed, const fs::path& out,
                                            std::size_t layer = 0);

/// Per-step mean and sample standard deviation of a metric column.
struct AggregateRow {
    std::int64_t t = 0;
    double mean = 0.0;
    double std = 0.0;
    std::size_t runs = 0;
};

/// Each run is a list of (t, value). Grids must match exactly, otherwise
/// ContractError naming the first mismatch.
std::vector<AggregateRow> aggregate(const std::vector<std::vector<std::pair<std::int64_t, double>>>& runs);

/// Reads `column` from each run's metrics.csv (a directory or the file
/// itself) and writes t,mean,std,runs to `out_csv`.
std::vector<AggregateRow> aggregate_runs(const std::vector<fs::path>& runs, const fs::path& out_csv,
                                         const std::string& column = "mean_reward");

std::vector<MetricRow> read_metrics(const fs::path& csv);

}  // namespace gaq
