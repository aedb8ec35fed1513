#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hsrl/bench.hpp"
#include "hsrl/error.hpp"
#include "hsrl/io.hpp"

using namespace hsrl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory, removed on scope exit.
struct TempDir
{
    fs::path path;

    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("hsrl_bench_" + name))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(HSRL_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_error_path(const json& j)
{
    try {
        config_from_json(j);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<none>";
}

json minimal_config()
{
    return {{"dataset_dir", "data"}, {"output_dir", "out"}};
}

GenerateSpec small_mazes(int count, int train)
{
    GenerateSpec s;
    s.kind = TaskKind::Maze;
    s.count = count;
    s.size = 8;
    s.density = 0.3;
    s.train_count = train;
    s.seed = 5;
    return s;
}

}  // namespace

TEST_CASE("config errors name the field path")
{
    json j = minimal_config();
    j["search"] = {{"tau", "hot"}};
    CHECK(config_error_path(j) == "search.tau");

    j = minimal_config();
    j["search"] = {{"tauu", 1.0}};
    CHECK(config_error_path(j) == "search.tauu");

    j = minimal_config();
    j["train"] = {{"lr_schedule", "linear"}};
    CHECK(config_error_path(j) == "train.lr_schedule");

    j = minimal_config();
    j["reward"] = {{"anchors_expected", -1}};
    CHECK(config_error_path(j) == "reward.anchors_expected");

    j = minimal_config();
    j["seeds"] = json::array();
    CHECK(config_error_path(j) == "seeds");
    j["seeds"] = {3, -1};
    CHECK(config_error_path(j) == "seeds");

    j = minimal_config();
    j["task"] = "sokoban";
    CHECK(config_error_path(j) == "task");

    CHECK(config_error_path(json{{"output_dir", "out"}}) == "dataset_dir");
    CHECK(config_error_path(minimal_config()) == "<none>");
}

TEST_CASE("config round trip and hash")
{
    json j = minimal_config();
    j["seeds"] = {1, 2};
    j["search"] = {{"gamma", 0.3}, {"group_size", 4}};
    j["reward"] = {{"anchors_expected", 3}, {"length_mode", "waypoint_count"}};
    j["planner"] = {{"proposal", "greedy"}};
    ExperimentConfig cfg = config_from_json(j);
    CHECK(cfg.search.gamma == 0.3);
    CHECK(cfg.search.group_size == 4);
    CHECK(cfg.reward.anchors_expected == 3);
    CHECK(cfg.proposal == ProposalMode::Greedy);

    ExperimentConfig back = config_from_json(config_to_json(cfg));
    CHECK(config_to_json(back) == config_to_json(cfg));
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(config_hash(cfg).size() == 16);

    // key order in the source text does not matter
    auto a = json::parse(R"({"dataset_dir":"d","output_dir":"o","search":{"tau":0.5,"gamma":0.2}})");
    auto b = json::parse(R"({"search":{"gamma":0.2,"tau":0.5},"output_dir":"o","dataset_dir":"d"})");
    CHECK(config_hash(config_from_json(a)) == config_hash(config_from_json(b)));

    auto c = json::parse(R"({"dataset_dir":"d","output_dir":"o","search":{"tau":0.6,"gamma":0.2}})");
    CHECK(config_hash(config_from_json(a)) != config_hash(config_from_json(c)));
}

TEST_CASE("load_config resolves paths next to the file")
{
    TempDir dir("cfg");
    write_file(dir.path / "exp.json", minimal_config().dump());
    ExperimentConfig cfg = load_config(dir.path / "exp.json");
    CHECK(cfg.dataset_path() == dir.path / "data");
    CHECK(cfg.output_path() == dir.path / "out");
    CHECK_THROWS_AS(load_config(dir.path / "nope.json"), Error);
}

TEST_CASE("datasets round trip")
{
    TempDir dir("data");
    const fs::path out = dir.path / "mazes";
    generate_dataset(small_mazes(6, 4), out);
    auto train = load_split(out, "train");
    auto test = load_split(out, "test");
    CHECK(train.size() == 4);
    CHECK(test.size() == 2);
    CHECK(train[0].task.id == "maze-0000");
    CHECK(test[1].task.id == "maze-0005");
    for (const auto& inst : train) {
        Instance again = instance_from_json(instance_to_json(inst)["instance"], TaskKind::Maze, inst.task.id);
        CHECK(again.task.summary() == inst.task.summary());
    }

    // identical spec, identical bytes
    const fs::path out2 = dir.path / "mazes2";
    generate_dataset(small_mazes(6, 4), out2);
    CHECK(read_file(out / "test" / "maze-0005.json") == read_file(out2 / "test" / "maze-0005.json"));

    CHECK_THROWS_AS(generate_dataset(small_mazes(6, 4), out), ConfigError);
    CHECK_THROWS_AS(generate_dataset(small_mazes(0, 0), dir.path / "empty"), ConfigError);
    CHECK_FALSE(fs::exists(dir.path / "empty"));
}

TEST_CASE("blocksworld splits use their step ranges")
{
    TempDir dir("blocks");
    GenerateSpec s;
    s.kind = TaskKind::Blocksworld;
    s.count = 10;
    s.train_count = 5;
    s.blocks = 4;
    s.train_steps = {1, 2};
    s.test_steps = {3, 3};
    generate_dataset(s, dir.path / "b");
    for (const auto& inst : load_split(dir.path / "b", "train"))
        CHECK(optimal_length(inst.task) <= 2);
    for (const auto& inst : load_split(dir.path / "b", "test"))
        CHECK(optimal_length(inst.task) <= 3);
}

TEST_CASE("checkpoints")
{
    Checkpoint c;
    c.params.weights << 1.0, -2.0, 0.5, 3.0;
    c.train_step = 42;
    Checkpoint back = checkpoint_from_json(checkpoint_to_json(c));
    CHECK(back.params.weights == c.params.weights);
    CHECK(back.train_step == 42);

    json bad = checkpoint_to_json(c);
    bad["weights"] = {1.0, 2.0};
    CHECK_THROWS_AS(checkpoint_from_json(bad), Error);
}

TEST_CASE("evaluation is complete with the oracle and independent of worker count")
{
    TempDir dir("eval");
    generate_dataset(small_mazes(12, 0), dir.path / "data");
    ExperimentConfig cfg = config_from_json(minimal_config());
    cfg.base_dir = dir.path;
    cfg.seeds = {0, 1};

    cfg.workers = 1;
    EvalReport one = evaluate(cfg, {});
    cfg.workers = 3;
    EvalReport three = evaluate(cfg, {});

    REQUIRE(one.rows.size() == 24);
    CHECK(one.cr == 1.0);
    CHECK(one.optimal <= one.cr);
    for (std::size_t i = 0; i < one.rows.size(); ++i) {
        CHECK(one.rows[i].instance_id == three.rows[i].instance_id);
        CHECK(one.rows[i].seed == three.rows[i].seed);
        CHECK(one.rows[i].outcome.plan_length == three.rows[i].outcome.plan_length);
        CHECK(one.rows[i].wall_ms == 0.0);
    }

    write_evaluation(cfg, one, utc_timestamp(), cfg.output_path());
    const std::string csv = read_file(cfg.output_path() / "results.csv");
    CHECK(csv.rfind("instance_id,seed,solved,plan_len,optimal_len,d,errors,max_errors,expansions_used,wall_ms,config_hash",
                    0) == 0);
    CHECK(csv.find(config_hash(cfg)) != std::string::npos);
    json metrics = json::parse(read_file(cfg.output_path() / "metrics.json"));
    CHECK(metrics["n"] == 24);
    CHECK(metrics["cr"] == 1.0);
    CHECK(fs::exists(cfg.output_path() / "buckets.csv"));
    CHECK(fs::exists(cfg.output_path() / "manifest.json"));
}

TEST_CASE("empty test split is an error")
{
    TempDir dir("emptytest");
    generate_dataset(small_mazes(3, 3), dir.path / "data");
    ExperimentConfig cfg = config_from_json(minimal_config());
    cfg.base_dir = dir.path;
    CHECK_THROWS_AS(evaluate(cfg, {}), ConfigError);
}

TEST_CASE("gtb result tables")
{
    TempDir dir("gtb");
    write_file(dir.path / "perfect.csv", "d,plan_len,errors,optimal_len,max_errors\n0,20,0,20,10\n");
    auto perfect = read_gtb_rows(dir.path / "perfect.csv");
    CHECK(gtb_score(perfect).score == doctest::Approx(100.0));

    write_file(dir.path / "mixed.csv", "instance_id,d,plan_len,errors,optimal_len,max_errors\n"
                                       "a,0,20,0,20,10\nb,2,20,5,20,10\n");
    CHECK(gtb_score(read_gtb_rows(dir.path / "mixed.csv")).score == doctest::Approx(75.0));

    write_file(dir.path / "missing.csv", "d,plan_len,errors,optimal_len\n0,20,0,20\n");
    CHECK_THROWS_AS(read_gtb_rows(dir.path / "missing.csv"), ConfigError);

    write_file(dir.path / "junk.csv", "d,plan_len,errors,optimal_len,max_errors\nx,20,0,20,10\n");
    CHECK_THROWS_AS(read_gtb_rows(dir.path / "junk.csv"), ConfigError);

    CHECK(run_cli("score-gtb " + (dir.path / "perfect.csv").string()) == 0);
    CHECK(run_cli("score-gtb " + (dir.path / "missing.csv").string()) == 2);
}

TEST_CASE("cli exit codes")
{
    TempDir dir("cli");
    CHECK(run_cli("generate maze --count 0 --out " + (dir.path / "zero").string()) == 2);
    CHECK_FALSE(fs::exists(dir.path / "zero"));
    CHECK(run_cli("generate sokoban --out " + (dir.path / "x").string()) == 2);
    CHECK(run_cli("no-such-command") == 2);

    write_file(dir.path / "exp.json", json{{"dataset_dir", "missing"}, {"output_dir", "out"}}.dump());
    CHECK(run_cli("train --config " + (dir.path / "exp.json").string()) == 2);
    CHECK(run_cli("evaluate --config " + (dir.path / "exp.json").string()) == 2);

    write_file(dir.path / "bad.json", R"({"dataset_dir":"d","output_dir":"o","search":{"gamma":"x"}})");
    CHECK(run_cli("evaluate --config " + (dir.path / "bad.json").string()) == 2);

    write_file(dir.path / "map.txt", "S..\n.#.\n..G");
    CHECK(run_cli("plan --map " + (dir.path / "map.txt").string()) == 0);
    CHECK(run_cli("dump-tree --map " + (dir.path / "map.txt").string() + " --iterations 2") == 0);
}

TEST_CASE("training writes checkpoints and resume continues the step counter")
{
    TempDir dir("train");
    generate_dataset(small_mazes(6, 3), dir.path / "data");
    json j = minimal_config();
    j["search"] = {{"max_iterations", 3}, {"group_size", 4}};
    j["train"] = {{"probe_count", 2}, {"probe_samples", 1}};
    write_file(dir.path / "exp.json", j.dump());

    REQUIRE(run_cli("train --config " + (dir.path / "exp.json").string()) == 0);
    const fs::path ckpt = dir.path / "out" / "checkpoint-0.json";
    REQUIRE(fs::exists(ckpt));
    CHECK(fs::exists(dir.path / "out" / "train_log-0.csv"));
    CHECK(fs::exists(dir.path / "out" / "manifest.json"));
    const auto first = load_checkpoint(ckpt).train_step;
    CHECK(first > 0);

    REQUIRE(run_cli("train --config " + (dir.path / "exp.json").string() + " --resume") == 0);
    CHECK(load_checkpoint(ckpt).train_step > first);

    // evaluating with the checkpoint leaves it untouched
    const std::string before = read_file(ckpt);
    CHECK(run_cli("evaluate --config " + (dir.path / "exp.json").string() + " --checkpoint " + ckpt.string()) == 0);
    CHECK(read_file(ckpt) == before);
}
