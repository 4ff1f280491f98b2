#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "gaq/config.hpp"
#include "gaq/harness.hpp"
#include "gaq/environment.hpp"
#include "gaq/rng.hpp"
#include "gaq/tensor.hpp"

using namespace gaq;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "gaq_test_harness" / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> rows_of(const fs::path& p) {
    std::vector<std::vector<std::string>> out;
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            cells.push_back(c);
        }
        out.push_back(cells);
    }
    return out;
}

void write(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

RunConfig tiny_config() {
    return parse_run_config(
        "n_rings: 1\nusers: 40\nsteps: 60\ncheckpoint_every: 20\nwarmup: 40\nbatch_size: 8\n",
        "tiny");
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GAQ_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config: defaults and overrides") {
    const RunConfig d = parse_run_config("", "empty");
    CHECK(d.steps == 20000);
    CHECK(d.sim.n_rings == 2);
    CHECK(d.sim.users == 1000);
    CHECK(d.agent.batch_size == 64);
    CHECK(d.seeds == std::vector<std::uint64_t>{1, 2, 3});

    const RunConfig c = parse_run_config(
        "n_rings: 1\nneighbors_k: 3\nseeds: [4, 5]\ndouble_q: false\nintersite_range: [400, 800]\n");
    CHECK(c.sim.intersite_min == 400.0);
    CHECK(c.sim.intersite_max == 800.0);
    CHECK(c.sim.n_rings == 1);
    CHECK(c.agent.model.state_neighbors == 3);
    CHECK(c.seeds == std::vector<std::uint64_t>{4, 5});
    CHECK_FALSE(c.agent.double_q);
}

TEST_CASE("config: line-level diagnostics") {
    auto message = [](const std::string& text) {
        try {
            parse_run_config(text, "run.yaml");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("users: 10\nuser_count: 5\n") == "run.yaml:2: unknown key 'user_count'");
    CHECK(message("steps: 40\nusers: many\n").rfind("run.yaml:2: bad value for 'users'", 0) == 0);
    CHECK(message("steps: [1, 2\n").rfind("run.yaml:", 0) == 0);
    CHECK(message("steps: 30\n").find("multiple of episode_len") != std::string::npos);
    CHECK(message("- a\n- b\n").find("mapping") != std::string::npos);
    CHECK(message("users: 10\nintersite_range: [300]\n").rfind("run.yaml:2: bad value for 'intersite_range'", 0) == 0);
    CHECK(message("intersite_range: [900, 400]\n").find("intersite") != std::string::npos);
    CHECK_THROWS_AS(load_run_config("/nonexistent/run.yaml"), ConfigError);
}

TEST_CASE("config: shipped profiles parse") {
    const RunConfig desk = load_run_config(fs::path(GAQ_SOURCE_DIR) / "configs/desk.yaml");
    CHECK(desk.sim.n_rings == 1);
    CHECK(desk.sim.users == 200);
    CHECK(desk.steps == 5000);
    CHECK(desk.sim.neighbors_k == 5);
    const RunConfig full = load_run_config(fs::path(GAQ_SOURCE_DIR) / "configs/full.yaml");
    CHECK(full.sim.n_rings == 2);
    CHECK(full.sim.users == 1000);
    CHECK(full.steps == 20000);
}

TEST_CASE("train writes metrics, checkpoints and sidecar") {
    const auto out = fresh_dir("train");
    const auto summary = train(tiny_config(), AgentKind::GAQ, 3, out);
    CHECK(summary.metrics.size() == 60);
    CHECK(fs::exists(out / "metrics.csv"));
    CHECK(fs::exists(out / "ckpt_20.json"));
    CHECK(fs::exists(out / "ckpt_40.json"));
    CHECK(fs::exists(out / "final.json"));
    CHECK(fs::exists(out / "run.json"));

    const auto rows = read_metrics(out / "metrics.csv");
    REQUIRE(rows.size() == 60);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        CHECK(rows[t].t == static_cast<std::int64_t>(t));
        CHECK(std::isfinite(rows[t].mean_reward));
        CHECK(std::isfinite(rows[t].loss));
        CHECK(rows[t].intersite_m >= 300.0);
        CHECK(rows[t].intersite_m <= 1500.0);
        if (t % 20 != 0) {
            CHECK(rows[t].intersite_m == rows[t - 1].intersite_m);
        }
    }
    CHECK(rows[0].epsilon == 1.0);
    CHECK(rows[0].loss == 0.0);
    CHECK(rows[59].loss > 0.0);
    CHECK(slurp(out / "metrics.csv").rfind("t,mean_reward,loss,epsilon,intersite_m\n", 0) == 0);
    CHECK(slurp(out / "run.json").find("wall_seconds") != std::string::npos);
}

TEST_CASE("train is reproducible byte for byte") {
    const auto a = fresh_dir("repro_a");
    const auto b = fresh_dir("repro_b");
    train(tiny_config(), AgentKind::NDQN, 5, a);
    train(tiny_config(), AgentKind::NDQN, 5, b);
    CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
    CHECK(slurp(a / "final.json") == slurp(b / "final.json"));
    const auto c = fresh_dir("repro_c");
    train(tiny_config(), AgentKind::NDQN, 6, c);
    CHECK(slurp(a / "metrics.csv") != slurp(c / "metrics.csv"));
}

TEST_CASE("eval writes rewards and a proper CDF") {
    const auto run = fresh_dir("eval_run");
    train(tiny_config(), AgentKind::GAQ, 1, run);
    for (int k : {5, 10, 20}) {
        const auto out = fresh_dir("eval_" + std::to_string(k));
        const auto res = run_eval({run / "final.json", k, 1, 4, EvalPolicy::Greedy}, out);
        CHECK(res.step_rewards.size() == 20);
        const auto rewards = rows_of(out / "eval_rewards.csv");
        CHECK(rewards.size() == 20);
        const auto cdf = rows_of(out / "eval_cdf.csv");
        REQUIRE_FALSE(cdf.empty());
        double prev_v = -1e300, prev_f = 0.0;
        for (const auto& row : cdf) {
            const double v = std::stod(row[0]);
            const double f = std::stod(row[1]);
            CHECK(v > prev_v);
            CHECK(f >= prev_f);
            prev_v = v;
            prev_f = f;
        }
        CHECK(prev_f == 1.0);
        CHECK(cdf.size() <= 20);
    }
}

TEST_CASE("eval: ndqn checkpoints are tied to their neighbour count") {
    const auto run = fresh_dir("ndqn_run");
    train(tiny_config(), AgentKind::NDQN, 1, run);
    CHECK_NOTHROW(run_eval({run / "final.json", 5, 1, 1, EvalPolicy::Greedy}, fresh_dir("n5")));
    CHECK_THROWS(run_eval({run / "final.json", 10, 1, 1, EvalPolicy::Greedy}, fresh_dir("n10")));
}

TEST_CASE("export-attention: normalised, complete, same-site present") {
    const auto run = fresh_dir("attn_run");
    const RunConfig cfg = tiny_config();
    train(cfg, AgentKind::GAQ, 2, run);
    const auto out = fresh_dir("attn");
    const auto edges = export_attention(run / "final.json", cfg, 11, out);
    const auto nodes = rows_of(out / "nodes.csv");
    CHECK(nodes.size() == 21);
    const auto rows = rows_of(out / "edges.csv");
    CHECK(rows.size() == edges.size());

    Environment env(cfg.sim, stream(11, Stream::Environment));
    const CellGraph& g = env.graph();
    CHECK(rows.size() == 2 * g.edge_count() + g.size());
    std::map<int, double> sums;
    std::size_t same_site = 0;
    for (const auto& r : rows) {
        const int src = std::stoi(r[0]);
        const int dst = std::stoi(r[1]);
        sums[src] += std::stod(r[2]);
        if (src != dst && src / 3 == dst / 3) {
            ++same_site;
        }
    }
    for (const auto& [cell, s] : sums) {
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
    CHECK(sums.size() == 21);
    CHECK(same_site == 7 * 6);

    const auto dqn_run = fresh_dir("attn_dqn");
    train(cfg, AgentKind::DQN, 2, dqn_run);
    CHECK_THROWS_AS(export_attention(dqn_run / "final.json", cfg, 1, fresh_dir("attn_bad")),
                    ContractError);
}

TEST_CASE("aggregate") {
    const auto single = aggregate({{{0, 1.0}, {1, 2.0}}});
    for (const auto& r : single) {
        CHECK(r.std == 0.0);
    }
    const auto two = aggregate({{{0, 1.0}, {1, 1.0}}, {{0, 3.0}, {1, 3.0}}});
    for (const auto& r : two) {
        CHECK(r.mean == 2.0);
        CHECK(r.std == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
        CHECK(r.runs == 2);
    }
    CHECK_THROWS_AS(aggregate({{{0, 1.0}, {1, 1.0}}, {{0, 1.0}, {2, 1.0}}}), ContractError);
    CHECK_THROWS_AS(aggregate({{{0, 1.0}}, {{0, 1.0}, {1, 1.0}}}), ContractError);
    CHECK_THROWS_AS(aggregate({}), ContractError);

    const auto dir = fresh_dir("agg");
    write(dir / "a/metrics.csv", "t,mean_reward,loss,epsilon,intersite_m\n0,1,0,1,500\n1,1,0,1,500\n");
    write(dir / "b/metrics.csv", "t,mean_reward,loss,epsilon,intersite_m\n0,3,0,1,500\n1,3,0,1,500\n");
    write(dir / "c/metrics.csv", "t,mean_reward,loss,epsilon,intersite_m\n0,3,0,1,500\n2,3,0,1,500\n");
    const auto rows = aggregate_runs({dir / "a", dir / "b"}, dir / "out.csv");
    CHECK(rows.size() == 2);
    CHECK(slurp(dir / "out.csv").rfind("t,mean,std,runs\n0,2,1.4142135623730951,2\n", 0) == 0);
    CHECK_THROWS_AS(aggregate_runs({dir / "a", dir / "c"}, dir / "bad.csv"), ContractError);
}

TEST_CASE("cli: exit codes and output rules") {
    const auto cfg = fresh_dir("cli_cfg") / "tiny.yaml";
    write(cfg, "n_rings: 1\nusers: 40\nsteps: 40\ncheckpoint_every: 0\nwarmup: 20\nbatch_size: 8\n");
    const auto out = fresh_dir("cli_out");

    CHECK(run_cli("") == 1);
    CHECK(run_cli("train --config " + cfg.string() + " --agent sarsa --out " + out.string()) == 1);

    const auto missing_out = fresh_dir("cli_missing");
    CHECK(run_cli("train --config /nonexistent.yaml --agent gaq --out " + missing_out.string()) == 1);
    CHECK_FALSE(fs::exists(missing_out));

    const auto bad = fresh_dir("cli_badcfg") / "bad.yaml";
    write(bad, "users: 10\nfrobnicate: 1\n");
    CHECK(run_cli("train --config " + bad.string() + " --out " + out.string()) == 1);
    CHECK_FALSE(fs::exists(out));

    CHECK(run_cli("train --config " + cfg.string() + " --agent dqn --seed 2 --out " + out.string()) == 0);
    CHECK(fs::exists(out / "metrics.csv"));
    CHECK(rows_of(out / "metrics.csv").size() == 40);

    const auto smoke = fresh_dir("cli_steps");
    CHECK(run_cli("train --config " + cfg.string() + " --steps 20 --out " + smoke.string()) == 0);
    CHECK(rows_of(smoke / "metrics.csv").size() == 20);

    const auto env_out = fresh_dir("cli_env");
    CHECK(run_cli("eval --checkpoint " + (out / "final.json").string() + " --episodes 1") == 1);
    setenv("GAQ_OUTPUT_DIR", env_out.c_str(), 1);
    CHECK(run_cli("eval --checkpoint " + (out / "final.json").string() + " --episodes 1") == 0);
    unsetenv("GAQ_OUTPUT_DIR");
    CHECK(fs::exists(env_out / "eval_cdf.csv"));

    CHECK(run_cli("eval --checkpoint /nonexistent.json --out " + env_out.string()) == 2);
    CHECK(run_cli("aggregate " + out.string() + " --out " + (env_out / "agg.csv").string()) == 0);
}
