// hsrl: dataset generation, training, evaluation and inspection.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 runtime error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsrl/bench.hpp"
#include "hsrl/error.hpp"
#include "hsrl/oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsage = 2;
constexpr int kRuntime = 3;

std::string remote_url()
{
    const char* v = std::getenv("HSRL_REMOTE_URL");
    return v ? v : "";
}

std::pair<int, int> parse_range(const std::string& text, const std::string& flag)
{
    const auto dash = text.find('-');
    try {
        if (dash == std::string::npos) {
            const int v = std::stoi(text);
            return {v, v};
        }
        return {std::stoi(text.substr(0, dash)), std::stoi(text.substr(dash + 1))};
    } catch (const std::exception&) {
        throw hsrl::ConfigError(flag, "expected lo-hi, got '" + text + "'");
    }
}

hsrl::Task load_task(const fs::path& path)
{
    if (!fs::exists(path))
        throw hsrl::ConfigError("map", path.string() + " not found");
    if (path.extension() == ".json") {
        json j = json::parse(hsrl::read_file(path));
        if (j.contains("instance"))  // dataset entry
            j = j.at("instance");
        if (j.contains("objectives"))
            throw hsrl::ConfigError("map", "GTB maps are planned by `evaluate`");
        if (j.contains("blocks"))
            return hsrl::make_blocks_task(hsrl::blocks_from_json(j), path.stem().string());
    }
    return hsrl::make_grid_task(hsrl::load_grid(path), hsrl::TaskKind::Maze, path.stem().string());
}

json plan_json(const hsrl::Plan& plan)
{
    json out = json::array();
    for (const hsrl::Action& a : plan.actions)
        if (const auto* b = std::get_if<hsrl::BlocksAction>(&a))
            out.push_back({b->block, b->dest});
    return out;
}

struct PolicyArgs
{
    std::string checkpoint;
    std::string mode = "synthetic";
    int window_margin = 1;
};

std::unique_ptr<hsrl::Policy> build_policy(const PolicyArgs& args, const hsrl::Task& task)
{
    if (args.mode == "remote") {
        const std::string url = remote_url();
        if (url.empty())
            throw hsrl::ConfigError("HSRL_REMOTE_URL", "must be set for --policy remote");
        return std::make_unique<hsrl::remote::RemotePolicy>(hsrl::remote::Client(url));
    }
    hsrl::SoftmaxPolicyParams params;
    params.feature_version = task.is_grid() ? hsrl::kGridFeatures : hsrl::kBlocksFeatures;
    if (!args.checkpoint.empty()) {
        params = hsrl::load_checkpoint(args.checkpoint).params;
        const int want = task.is_grid() ? hsrl::kGridFeatures : hsrl::kBlocksFeatures;
        if (params.feature_version != want)
            throw hsrl::ConfigError("checkpoint", "feature_version does not match the task");
    }
    return std::make_unique<hsrl::SoftmaxPolicy>(params, args.window_margin);
}

void add_policy_flags(CLI::App* cmd, PolicyArgs& args)
{
    cmd->add_option("--checkpoint", args.checkpoint, "Synthetic-policy checkpoint JSON");
    cmd->add_option("--policy", args.mode, "Waypoint policy")->check(CLI::IsMember({"synthetic", "remote"}));
    cmd->add_option("--window-margin", args.window_margin, "Synthetic-policy candidate window")
        ->check(CLI::NonNegativeNumber);
}

int run(int argc, char** argv)
{
    CLI::App app{"Hierarchical search-and-RL planner: generate, train, evaluate, plan"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write a seeded dataset (maze, floorplan, blocksworld, gtb)");
    std::string gen_kind;
    hsrl::GenerateSpec spec;
    std::string split, train_steps = "1-6", test_steps = "7-10", out_dir;
    spec.count = 100;
    gen->add_option("kind", gen_kind, "Task family")
        ->required()
        ->check(CLI::IsMember({"maze", "floorplan", "blocksworld", "gtb"}));
    gen->add_option("--count", spec.count, "Number of instances");
    gen->add_option("--size", spec.size, "Grid side length");
    gen->add_option("--density", spec.density, "Obstacle density");
    gen->add_option("--split", split, "train/test counts, e.g. 668/422 (default 60% train)");
    gen->add_option("--seed", spec.seed, "Master seed");
    gen->add_option("--min-manhattan", spec.min_manhattan, "Minimum start/goal distance");
    gen->add_option("--blocks", spec.blocks, "Blocksworld block count");
    gen->add_option("--train-steps", train_steps, "Blocksworld walk lengths for the train split (lo-hi)");
    gen->add_option("--test-steps", test_steps, "Blocksworld walk lengths for the test split (lo-hi)");
    gen->add_option("--objectives", spec.objectives, "GTB objectives per map");
    gen->add_option("--max-errors", spec.max_errors, "GTB error budget");
    gen->add_option("--out", out_dir, "Output directory (default data/<kind>)");

    // train
    auto* tr = app.add_subcommand("train", "Run M-GRPO training for every configured seed");
    std::string config_path;
    bool resume = false;
    tr->add_option("--config", config_path, "Experiment config JSON")->required();
    tr->add_flag("--resume", resume, "Continue from existing checkpoints");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Plan every test instance per seed and write metrics");
    std::string eval_checkpoint;
    bool record_timing = false;
    std::optional<int> eval_workers;
    ev->add_option("--config", config_path, "Experiment config JSON")->required();
    ev->add_option("--checkpoint", eval_checkpoint, "Synthetic-policy checkpoint JSON");
    ev->add_option("--workers", eval_workers, "Override the configured worker count")->check(CLI::PositiveNumber);
    ev->add_flag("--record-timing", record_timing, "Write measured wall_ms instead of 0");

    // plan
    auto* pl = app.add_subcommand("plan", "Plan one instance and print the stitched plan");
    std::string map_path;
    PolicyArgs policy_args;
    std::uint64_t seed = 0;
    bool greedy = false, no_merging = false;
    std::string low_level = "oracle";
    hsrl::PlannerConfig planner;
    pl->add_option("--map", map_path, "Text grid, grid JSON or Blocksworld JSON")->required();
    add_policy_flags(pl, policy_args);
    pl->add_option("--seed", seed, "Sampling seed");
    pl->add_flag("--greedy", greedy, "Take the most likely waypoint at every step");
    pl->add_option("--margin", planner.margin, "Sub-environment margin")->check(CLI::NonNegativeNumber);
    pl->add_option("--max-depth", planner.max_depth, "Maximum intermediate states")->check(CLI::NonNegativeNumber);
    pl->add_option("--temperature", planner.temperature, "Sampling temperature")->check(CLI::PositiveNumber);
    pl->add_flag("--no-merging", no_merging, "Fail instead of merging unsolvable sub-tasks");
    pl->add_option("--low-level", low_level, "Sub-task solver")->check(CLI::IsMember({"oracle", "remote"}));

    // score-gtb
    auto* sg = app.add_subcommand("score-gtb", "Score a results CSV with the GTB normalisation");
    std::string results_path;
    sg->add_option("results", results_path, "CSV with d, plan_len, errors, optimal_len, max_errors")->required();

    // dump-tree
    auto* dt = app.add_subcommand("dump-tree", "Run search iterations on one instance and print the tree");
    int iterations = 10;
    hsrl::SearchConfig search;
    dt->add_option("--map", map_path, "Text grid, grid JSON or Blocksworld JSON")->required();
    add_policy_flags(dt, policy_args);
    dt->add_option("--seed", seed, "Search seed");
    dt->add_option("--iterations", iterations, "Expansion iterations")->check(CLI::NonNegativeNumber);
    dt->add_option("--group-size", search.group_size, "Samples per expansion")->check(CLI::Range(2, 1024));
    dt->add_option("--max-depth", search.max_depth, "Maximum intermediate states")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kUsage;
    }

    if (gen->parsed()) {
        spec.kind = *hsrl::task_kind_from_string(gen_kind);
        if (!split.empty()) {
            const auto slash = split.find('/');
            try {
                if (slash == std::string::npos)
                    throw std::invalid_argument("no slash");
                spec.train_count = std::stoi(split.substr(0, slash));
                const int test = std::stoi(split.substr(slash + 1));
                if (spec.train_count < 0 || test < 0 || spec.train_count + test != spec.count)
                    throw hsrl::ConfigError("split", "train + test must equal --count");
            } catch (const std::logic_error&) {
                throw hsrl::ConfigError("split", "expected TRAIN/TEST, got '" + split + "'");
            }
        } else {
            spec.train_count = spec.count * 3 / 5;
        }
        spec.train_steps = parse_range(train_steps, "train-steps");
        spec.test_steps = parse_range(test_steps, "test-steps");
        const fs::path out = out_dir.empty() ? fs::path("data") / gen_kind : fs::path(out_dir);
        hsrl::generate_dataset(spec, out);
        std::cout << "wrote " << spec.count << " instances to " << out.string() << "\n";
        return 0;
    }

    if (tr->parsed()) {
        hsrl::ExperimentConfig cfg = hsrl::load_config(config_path);
        hsrl::train_experiment(cfg, {resume, remote_url()});
        std::cout << "training output in " << cfg.output_path().string() << "\n";
        return 0;
    }

    if (ev->parsed()) {
        const std::string started = hsrl::utc_timestamp();
        hsrl::ExperimentConfig cfg = hsrl::load_config(config_path);
        if (eval_workers)
            cfg.workers = *eval_workers;
        hsrl::EvalOptions opts;
        if (!eval_checkpoint.empty())
            opts.checkpoint = eval_checkpoint;
        opts.remote_url = remote_url();
        opts.record_timing = record_timing;
        hsrl::EvalReport report = hsrl::evaluate(cfg, opts);
        hsrl::write_evaluation(cfg, report, started, cfg.output_path());
        std::cout << hsrl::metrics_json(report).dump() << "\n";
        return 0;
    }

    if (pl->parsed()) {
        const hsrl::Task task = load_task(map_path);
        planner.merging = !no_merging;
        const auto policy = build_policy(policy_args, task);
        std::unique_ptr<hsrl::LowLevelSolver> solver;
        if (low_level == "remote") {
            if (remote_url().empty())
                throw hsrl::ConfigError("HSRL_REMOTE_URL", "must be set for --low-level remote");
            solver = std::make_unique<hsrl::RemoteSolver>(hsrl::remote::Client(remote_url()));
        } else {
            solver = std::make_unique<hsrl::OracleSolver>(planner.blocks_max_depth);
        }
        hsrl::Rng rng(seed);
        auto result = hsrl::hsrl_plan(task, *policy, *solver, planner,
                                      greedy ? hsrl::ProposalMode::Greedy : hsrl::ProposalMode::Sampled, rng);
        const int opt = hsrl::optimal_length(task, planner.blocks_max_depth);
        if (!result) {
            std::cerr << "no plan found\n";
            return kRuntime;
        }
        json waypoints = json::array();
        for (const hsrl::State& s : result->waypoints.states)
            waypoints.push_back(hsrl::format_state(s));
        json report = {{"waypoints", waypoints},
                       {"subtask_lengths", result->per_subtask_lengths},
                       {"expansions_used", result->expansions_used},
                       {"optimal_length", opt == hsrl::kUnreachable ? json(nullptr) : json(opt)}};
        if (task.is_grid())
            std::cout << hsrl::move_string(result->plan) << "\n";
        else
            std::cout << plan_json(result->plan).dump() << "\n";
        std::cout << report.dump() << "\n";
        return 0;
    }

    if (sg->parsed()) {
        const auto rows = hsrl::read_gtb_rows(results_path);
        const hsrl::GtbScore score = hsrl::gtb_score(rows);
        json per_map = json::array();
        for (const hsrl::GtbResult& r : score.per_map)
            per_map.push_back(r.normalized);
        std::cout << json{{"per_map", per_map}, {"gtb_score", score.score}, {"clamped", score.clamped}}.dump() << "\n";
        if (score.clamped > 0)
            std::cerr << score.clamped << " map(s) clamped to [0, 1]\n";
        return 0;
    }

    if (dt->parsed()) {
        const hsrl::Task task = load_task(map_path);
        hsrl::validate(search);
        const auto policy = build_policy(policy_args, task);
        const hsrl::OracleSolver solver;
        const hsrl::PlannerConfig planner_cfg;
        const hsrl::RewardConfig reward;
        const int opt = hsrl::optimal_length(task);
        hsrl::SearchTree tree(task, seed);
        for (int it = 0; it < iterations; ++it) {
            const hsrl::NodeId leaf = hsrl::select_leaf(tree, search);
            if (tree.is_terminal(leaf, search)) {
                hsrl::backpropagate(tree, leaf,
                                    hsrl::simulate_to_goal(tree, {{leaf}, {}}, opt, solver, planner_cfg, reward));
                continue;
            }
            std::vector<hsrl::Trajectory> group;
            try {
                group = hsrl::expand_group(tree, leaf, *policy, search);
            } catch (const hsrl::EmptyCandidateSet&) {
                continue;
            }
            const auto outcomes = hsrl::simulate_group(tree, group, opt, solver, planner_cfg, reward);
            for (std::size_t g = 0; g < group.size(); ++g)
                hsrl::backpropagate(tree, group[g].nodes.back(), outcomes[g].reward);
        }
        hsrl::dump_tree(tree, std::cout);
        return 0;
    }
    return kUsage;
}

}  // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const hsrl::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const hsrl::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const hsrl::InvalidInstance& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
}
