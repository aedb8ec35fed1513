#include "hsrl/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "hsrl/error.hpp"
#include "hsrl/generate.hpp"
#include "hsrl/oracles.hpp"

#ifndef HSRL_CODE_VERSION
#define HSRL_CODE_VERSION "unknown"
#endif

namespace hsrl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Typed, path-aware access to one JSON object; finish() rejects unknown keys.
class Fields
{
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
    }

    std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void get(const std::string& key, int& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number_integer())
                throw ConfigError(full(key), "must be an integer");
            out = v->get<int>();
        }
    }
    void get(const std::string& key, double& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number())
                throw ConfigError(full(key), "must be a number");
            out = v->get<double>();
        }
    }
    void get(const std::string& key, bool& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_boolean())
                throw ConfigError(full(key), "must be true or false");
            out = v->get<bool>();
        }
    }
    void get(const std::string& key, std::string& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_string())
                throw ConfigError(full(key), "must be a string");
            out = v->get<std::string>();
        }
    }

    template <typename E>
    void get_enum(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> names)
    {
        std::string s;
        get(key, s);
        if (s.empty())
            return;
        std::string allowed;
        for (const auto& [name, value] : names) {
            if (s == name) {
                out = value;
                return;
            }
            allowed += allowed.empty() ? name : std::string(", ") + name;
        }
        throw ConfigError(full(key), "must be one of: " + allowed);
    }

    void finish() const
    {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key()))
                throw ConfigError(full(item.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

constexpr std::initializer_list<std::pair<const char*, LrSchedule>> kSchedules{{"cosine", LrSchedule::Cosine},
                                                                                {"constant", LrSchedule::Constant}};
constexpr std::initializer_list<std::pair<const char*, LengthPenaltyMode>> kLengthModes{
    {"stitched_plan", LengthPenaltyMode::StitchedPlan}, {"waypoint_count", LengthPenaltyMode::WaypointCount}};
constexpr std::initializer_list<std::pair<const char*, PolicyMode>> kPolicyModes{{"synthetic", PolicyMode::Synthetic},
                                                                                 {"remote", PolicyMode::Remote}};
constexpr std::initializer_list<std::pair<const char*, LowLevelMode>> kLowLevelModes{{"oracle", LowLevelMode::Oracle},
                                                                                     {"remote", LowLevelMode::Remote}};
constexpr std::initializer_list<std::pair<const char*, ProposalMode>> kProposalModes{
    {"sampled", ProposalMode::Sampled}, {"greedy", ProposalMode::Greedy}};

template <typename E>
std::string enum_name(E value, std::initializer_list<std::pair<const char*, E>> names)
{
    for (const auto& [name, v] : names)
        if (v == value)
            return name;
    return "?";
}

void read_search(const json& j, SearchConfig& s)
{
    Fields f(j, "search");
    f.get("tau", s.tau);
    f.get("gamma", s.gamma);
    f.get("u_max", s.u_max);
    f.get("c_uct", s.c_uct);
    f.get("group_size", s.group_size);
    f.get("max_iterations", s.max_iterations);
    f.get("max_depth", s.max_depth);
    f.get("rollout_budget", s.rollout_budget);
    f.get("temperature", s.temperature);
    f.get("recompute_priors", s.recompute_priors);
    f.finish();
}

void read_train(const json& j, TrainConfig& t, int& probe_count)
{
    Fields f(j, "train");
    f.get("learning_rate", t.learning_rate);
    f.get_enum("lr_schedule", t.lr_schedule, kSchedules);
    f.get("adam_beta1", t.adam_beta1);
    f.get("adam_beta2", t.adam_beta2);
    f.get("adam_epsilon", t.adam_epsilon);
    f.get("epochs", t.epochs);
    f.get("batch_size", t.batch_size);
    f.get("clip_epsilon", t.clip_epsilon);
    f.get("kl_coefficient", t.kl_coefficient);
    f.get("generations_m", t.generations_m);
    f.get("sample_temperature", t.sample_temperature);
    f.get("probe_every", t.probe_every);
    f.get("probe_samples", t.probe_samples);
    f.get("probe_count", probe_count);
    f.finish();
    if (probe_count < 0)
        throw ConfigError("train.probe_count", "must be >= 0");
    if (t.probe_every < 0)
        throw ConfigError("train.probe_every", "must be >= 0");
    if (t.probe_samples < 1)
        throw ConfigError("train.probe_samples", "must be >= 1");
}

void read_reward(const json& j, RewardConfig& r)
{
    Fields f(j, "reward");
    f.get("parse_fail_penalty", r.parse_fail_penalty);
    f.get("power", r.power);
    f.get("anchor_alpha", r.anchor_alpha);
    if (const json* v = f.find("anchors_expected"); v && !v->is_null()) {
        if (!v->is_number_integer() || v->get<int>() < 0)
            throw ConfigError("reward.anchors_expected", "must be null or a non-negative integer");
        r.anchors_expected = v->get<int>();
    }
    f.get("basic_quality", r.basic_quality);
    f.get("length_penalty_per_step", r.length_penalty_per_step);
    f.get("failure_reward", r.failure_reward);
    f.get_enum("length_mode", r.length_mode, kLengthModes);
    f.finish();
    if (!(r.power > 0.0))
        throw ConfigError("reward.power", "must be > 0");
}

void read_planner(const json& j, ExperimentConfig& cfg)
{
    Fields f(j, "planner");
    PlannerConfig& p = cfg.planner;
    f.get("margin", p.margin);
    f.get("max_depth", p.max_depth);
    f.get("merging", p.merging);
    f.get("blocks_max_depth", p.blocks_max_depth);
    f.get("subtask_budget", p.subtask_budget);
    f.get("temperature", p.temperature);
    f.get_enum("low_level", cfg.low_level, kLowLevelModes);
    f.get_enum("proposal", cfg.proposal, kProposalModes);
    f.finish();
    if (p.margin < 0)
        throw ConfigError("planner.margin", "must be >= 0");
    if (p.max_depth < 0)
        throw ConfigError("planner.max_depth", "must be >= 0");
    if (p.blocks_max_depth < 1)
        throw ConfigError("planner.blocks_max_depth", "must be >= 1");
    if (p.subtask_budget < 1)
        throw ConfigError("planner.subtask_budget", "must be >= 1");
    if (!(p.temperature > 0.0))
        throw ConfigError("planner.temperature", "must be > 0");
}

void read_policy(const json& j, ExperimentConfig& cfg)
{
    Fields f(j, "policy");
    f.get_enum("mode", cfg.policy_mode, kPolicyModes);
    f.get("window_margin", cfg.window_margin);
    f.get("max_tokens", cfg.max_tokens);
    f.finish();
    if (cfg.window_margin < 0)
        throw ConfigError("policy.window_margin", "must be >= 0");
    if (cfg.max_tokens < 1)
        throw ConfigError("policy.max_tokens", "must be >= 1");
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

std::string instance_file_id(TaskKind kind, int index)
{
    std::ostringstream s;
    s << to_string(kind) << '-' << std::setw(4) << std::setfill('0') << index;
    return s.str();
}

Instance make_instance(TaskKind kind, std::string id, std::uint64_t seed, const GenerateSpec& spec, bool train_split)
{
    switch (kind) {
    case TaskKind::Maze:
        return {make_grid_task(generate_maze(spec.size, spec.size, spec.density, seed, {spec.min_manhattan}), kind,
                               std::move(id)),
                std::nullopt};
    case TaskKind::Floorplan:
        return {make_grid_task(generate_floorplan(spec.size, seed, spec.min_manhattan), kind, std::move(id)),
                std::nullopt};
    case TaskKind::Blocksworld: {
        const auto [lo, hi] = train_split ? spec.train_steps : spec.test_steps;
        Rng rng(mix_seed(seed, 0xb10c));
        const int steps = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
        return {make_blocks_task(generate_blocksworld(spec.blocks, steps, seed), std::move(id)), std::nullopt};
    }
    case TaskKind::Gtb: {
        GtbMap map = generate_gtb(seed, {spec.size, spec.size, spec.density, spec.objectives, spec.max_errors});
        return {make_grid_task(map.grid, kind, std::move(id)), map};
    }
    }
    throw Error("unknown task kind");
}

void check_spec(const GenerateSpec& s)
{
    if (s.count < 1)
        throw ConfigError("count", "must be >= 1");
    if (s.train_count > s.count)
        throw ConfigError("split", "train part exceeds count");
    const bool grid = s.kind != TaskKind::Blocksworld;
    if (grid && s.size < 2)
        throw ConfigError("size", "must be >= 2");
    if (grid && !(s.density >= 0.0 && s.density < 1.0))
        throw ConfigError("density", "must lie in [0, 1)");
    if (s.kind == TaskKind::Blocksworld) {
        if (s.blocks < 2)
            throw ConfigError("blocks", "must be >= 2");
        for (auto [lo, hi] : {s.train_steps, s.test_steps})
            if (lo < 1 || hi < lo)
                throw ConfigError("steps", "range must be lo-hi with 1 <= lo <= hi");
    }
    if (s.kind == TaskKind::Gtb && (s.objectives < 1 || s.max_errors < 0))
        throw ConfigError("objectives", "need >= 1 objectives and max_errors >= 0");
}

std::string csv_optimal(int length)
{
    return length == kUnreachable ? "-1" : std::to_string(length);
}

std::unique_ptr<Policy> make_policy(const ExperimentConfig& cfg, const std::optional<fs::path>& checkpoint,
                                    const std::string& remote_url)
{
    if (cfg.policy_mode == PolicyMode::Remote) {
        if (remote_url.empty())
            throw ConfigError("HSRL_REMOTE_URL", "must be set for the remote policy");
        return std::make_unique<remote::RemotePolicy>(remote::Client(remote_url), cfg.max_tokens);
    }
    SoftmaxPolicyParams params;
    params.feature_version = cfg.task == TaskKind::Blocksworld ? kBlocksFeatures : kGridFeatures;
    if (checkpoint) {
        Checkpoint c = load_checkpoint(*checkpoint);
        if (c.params.feature_version != params.feature_version)
            throw ConfigError("checkpoint", "feature_version does not match the task");
        params = c.params;
    }
    return std::make_unique<SoftmaxPolicy>(params, cfg.window_margin);
}

std::unique_ptr<LowLevelSolver> make_solver(const ExperimentConfig& cfg, const std::string& remote_url)
{
    if (cfg.low_level == LowLevelMode::Remote) {
        if (remote_url.empty())
            throw ConfigError("HSRL_REMOTE_URL", "must be set for the remote low-level solver");
        return std::make_unique<RemoteSolver>(remote::Client(remote_url), cfg.max_tokens);
    }
    return std::make_unique<OracleSolver>(cfg.planner.blocks_max_depth);
}

void run_gtb(const Instance& inst, const Policy& policy, const LowLevelSolver& solver, const ExperimentConfig& cfg,
             Rng& rng, ResultRow& row)
{
    const GtbMap& map = *inst.gtb;
    EpisodeOutcome& o = row.outcome;
    o.max_errors = map.max_errors;

    // reference length: the A* tour through the objectives in order
    Position from = map.grid.start();
    o.optimal_length = 0;
    for (Position obj : map.objectives) {
        const int len = from == obj ? 0 : astar_grid(map.grid, from, obj).length;
        if (len == kUnreachable)
            throw InvalidInstance("objective unreachable");
        o.optimal_length += len;
        from = obj;
    }

    Position pos = map.grid.start();
    std::size_t pending = 0;
    while (pending < map.objectives.size()) {
        const Position obj = map.objectives[pending];
        if (pos == obj) {
            ++pending;
            continue;
        }
        GridMap leg = map.grid;
        leg.set_start(pos);
        leg.set_goal(obj);
        const Task task = make_grid_task(leg, TaskKind::Gtb, inst.task.id + "#" + std::to_string(pending));
        auto plan = hsrl_plan(task, policy, solver, cfg.planner, cfg.proposal, rng);
        if (!plan)
            break;
        row.expansions_used += plan->expansions_used;
        bool over_budget = false;
        for (const Action& a : plan->plan.actions) {
            GtbStepResult step = gtb_step(map, pos, std::get<GridAction>(a), o.errors, pending);
            pos = step.pos;
            o.errors = step.errors;
            ++o.plan_length;
            if (step.objective_hit)
                ++pending;
            if (o.errors > map.max_errors) {
                over_budget = true;
                break;
            }
        }
        if (over_budget || (pending < map.objectives.size() && map.objectives[pending] == obj))
            break;
    }
    o.solved = pending == map.objectives.size();
    o.final_distance = o.solved ? 0 : manhattan(pos, map.objectives[pending]);
}

json read_json_file(const fs::path& path)
{
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
    }
}

}  // namespace

// ---- configuration ---------------------------------------------------------

ExperimentConfig config_from_json(const json& j)
{
    ExperimentConfig cfg;
    Fields f(j, "");
    std::string task;
    f.get("task", task);
    if (!task.empty()) {
        auto kind = task_kind_from_string(task);
        if (!kind)
            throw ConfigError("task", "must be one of: maze, floorplan, blocksworld, gtb");
        cfg.task = *kind;
    }
    f.get("dataset_dir", cfg.dataset_dir);
    f.get("output_dir", cfg.output_dir);
    f.get("workers", cfg.workers);
    if (const json* seeds = f.find("seeds")) {
        if (!seeds->is_array() || seeds->empty())
            throw ConfigError("seeds", "must be a non-empty list of integers");
        cfg.seeds.clear();
        for (const json& s : *seeds) {
            if (!s.is_number_integer() || s.get<std::int64_t>() < 0)
                throw ConfigError("seeds", "must be a non-empty list of non-negative integers");
            cfg.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    if (const json* v = f.find("search"))
        read_search(*v, cfg.search);
    if (const json* v = f.find("train"))
        read_train(*v, cfg.train, cfg.probe_count);
    if (const json* v = f.find("reward"))
        read_reward(*v, cfg.reward);
    if (const json* v = f.find("planner"))
        read_planner(*v, cfg);
    if (const json* v = f.find("policy"))
        read_policy(*v, cfg);
    f.finish();

    if (cfg.dataset_dir.empty())
        throw ConfigError("dataset_dir", "is required");
    if (cfg.output_dir.empty())
        throw ConfigError("output_dir", "is required");
    if (cfg.workers < 1)
        throw ConfigError("workers", "must be >= 1");
    validate(cfg.search);
    validate(cfg.train);
    return cfg;
}

json config_to_json(const ExperimentConfig& c)
{
    const SearchConfig& s = c.search;
    const TrainConfig& t = c.train;
    const RewardConfig& r = c.reward;
    const PlannerConfig& p = c.planner;
    json seeds = json::array();
    for (auto seed : c.seeds)
        seeds.push_back(seed);
    return {
        {"task", std::string(to_string(c.task))},
        {"dataset_dir", c.dataset_dir},
        {"output_dir", c.output_dir},
        {"workers", c.workers},
        {"seeds", seeds},
        {"search",
         {{"tau", s.tau},
          {"gamma", s.gamma},
          {"u_max", s.u_max},
          {"c_uct", s.c_uct},
          {"group_size", s.group_size},
          {"max_iterations", s.max_iterations},
          {"max_depth", s.max_depth},
          {"rollout_budget", s.rollout_budget},
          {"temperature", s.temperature},
          {"recompute_priors", s.recompute_priors}}},
        {"train",
         {{"learning_rate", t.learning_rate},
          {"lr_schedule", enum_name(t.lr_schedule, kSchedules)},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_epsilon", t.adam_epsilon},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"clip_epsilon", t.clip_epsilon},
          {"kl_coefficient", t.kl_coefficient},
          {"generations_m", t.generations_m},
          {"sample_temperature", t.sample_temperature},
          {"probe_every", t.probe_every},
          {"probe_samples", t.probe_samples},
          {"probe_count", c.probe_count}}},
        {"reward",
         {{"parse_fail_penalty", r.parse_fail_penalty},
          {"power", r.power},
          {"anchor_alpha", r.anchor_alpha},
          {"anchors_expected", r.anchors_expected ? json(*r.anchors_expected) : json(nullptr)},
          {"basic_quality", r.basic_quality},
          {"length_penalty_per_step", r.length_penalty_per_step},
          {"failure_reward", r.failure_reward},
          {"length_mode", enum_name(r.length_mode, kLengthModes)}}},
        {"planner",
         {{"margin", p.margin},
          {"max_depth", p.max_depth},
          {"merging", p.merging},
          {"blocks_max_depth", p.blocks_max_depth},
          {"subtask_budget", p.subtask_budget},
          {"temperature", p.temperature},
          {"low_level", enum_name(c.low_level, kLowLevelModes)},
          {"proposal", enum_name(c.proposal, kProposalModes)}}},
        {"policy",
         {{"mode", enum_name(c.policy_mode, kPolicyModes)},
          {"window_margin", c.window_margin},
          {"max_tokens", c.max_tokens}}},
    };
}

ExperimentConfig load_config(const fs::path& path)
{
    if (!fs::exists(path))
        throw ConfigError(path.string(), "config file not found");
    ExperimentConfig cfg = config_from_json(read_json_file(path));
    cfg.base_dir = path.parent_path();
    return cfg;
}

std::string config_hash(const ExperimentConfig& cfg)
{
    return hex64(fnv1a(config_to_json(cfg).dump()));
}

// ---- datasets ----------------------------------------------------------------

json instance_to_json(const Instance& inst)
{
    json body;
    if (inst.gtb)
        body = gtb_to_json(*inst.gtb);
    else if (inst.task.is_grid())
        body = grid_to_json(inst.task.grid());
    else
        body = blocks_to_json(inst.task.blocks());
    return {{"id", inst.task.id}, {"task", std::string(to_string(inst.task.kind))}, {"instance", body}};
}

Instance instance_from_json(const json& j, TaskKind kind, std::string id)
{
    switch (kind) {
    case TaskKind::Maze:
    case TaskKind::Floorplan:
        return {make_grid_task(grid_from_json(j), kind, std::move(id)), std::nullopt};
    case TaskKind::Blocksworld:
        return {make_blocks_task(blocks_from_json(j), std::move(id)), std::nullopt};
    case TaskKind::Gtb: {
        GtbMap map = gtb_from_json(j);
        return {make_grid_task(map.grid, kind, std::move(id)), map};
    }
    }
    throw Error("unknown task kind");
}

void generate_dataset(const GenerateSpec& spec, const fs::path& dir)
{
    check_spec(spec);
    if (fs::exists(dir) && !fs::is_empty(dir))
        throw ConfigError("out", dir.string() + " exists and is not empty");

    const fs::path staging = dir.string() + ".partial";
    fs::remove_all(staging);
    try {
        const int train_count = std::max(spec.train_count, 0);
        json index = {{"task", std::string(to_string(spec.kind))},
                      {"seed", spec.seed},
                      {"train", json::array()},
                      {"test", json::array()}};
        for (int i = 0; i < spec.count; ++i) {
            const bool train = i < train_count;
            const std::string id = instance_file_id(spec.kind, i);
            const Instance inst = make_instance(spec.kind, id, mix_seed(spec.seed, static_cast<std::uint64_t>(i)),
                                                spec, train);
            const std::string rel = std::string(train ? "train/" : "test/") + id + ".json";
            write_file(staging / rel, instance_to_json(inst).dump(1) + "\n");
            index[train ? "train" : "test"].push_back(rel);
        }
        write_file(staging / "index.json", index.dump(1) + "\n");
        if (fs::exists(dir))
            fs::remove(dir);
        fs::create_directories(dir.parent_path().empty() ? fs::path(".") : dir.parent_path());
        fs::rename(staging, dir);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

std::vector<Instance> load_split(const fs::path& dir, const std::string& split)
{
    const fs::path index_path = dir / "index.json";
    if (!fs::exists(index_path))
        throw ConfigError("dataset_dir", "no index.json in " + dir.string());
    const json index = read_json_file(index_path);
    auto kind = task_kind_from_string(index.value("task", ""));
    if (!kind)
        throw ConfigError("dataset_dir", "index.json has an unknown task");
    std::vector<Instance> out;
    if (!index.contains(split))
        return out;
    for (const json& rel : index.at(split)) {
        const json entry = read_json_file(dir / rel.get<std::string>());
        out.push_back(instance_from_json(entry.at("instance"), *kind, entry.at("id").get<std::string>()));
    }
    return out;
}

// ---- checkpoints -----------------------------------------------------------

json checkpoint_to_json(const Checkpoint& c)
{
    return {{"feature_version", c.params.feature_version},
            {"weights", std::vector<double>(c.params.weights.data(), c.params.weights.data() + c.params.weights.size())},
            {"train_step", c.train_step}};
}

Checkpoint checkpoint_from_json(const json& j)
{
    Checkpoint c;
    try {
        c.params.feature_version = j.at("feature_version").get<int>();
        const auto w = j.at("weights").get<std::vector<double>>();
        if (static_cast<int>(w.size()) != kFeatureCount)
            throw ConfigError("checkpoint.weights", "expected " + std::to_string(kFeatureCount) + " weights");
        c.params.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        c.train_step = j.value("train_step", std::int64_t{0});
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint", e.what());
    }
    return c;
}

Checkpoint load_checkpoint(const fs::path& path)
{
    if (!fs::exists(path))
        throw ConfigError("checkpoint", path.string() + " not found");
    return checkpoint_from_json(read_json_file(path));
}

// ---- evaluation ------------------------------------------------------------

ResultRow evaluate_instance(const Instance& inst, std::uint64_t seed, const Policy& policy,
                            const LowLevelSolver& solver, const ExperimentConfig& cfg)
{
    ResultRow row;
    row.instance_id = inst.task.id;
    row.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    // keyed by id so results do not depend on sweep order or worker count
    Rng rng(mix_seed(seed, fnv1a(inst.task.id)));
    try {
        if (inst.gtb) {
            run_gtb(inst, policy, solver, cfg, rng, row);
        } else {
            EpisodeOutcome& o = row.outcome;
            o.optimal_length = optimal_length(inst.task, cfg.planner.blocks_max_depth);
            o.final_distance = state_distance(inst.task.start(), inst.task.goal());
            if (auto plan = hsrl_plan(inst.task, policy, solver, cfg.planner, cfg.proposal, rng)) {
                o.solved = true;
                o.plan_length = plan->plan.length();
                o.final_distance = 0;
                row.expansions_used = plan->expansions_used;
            }
        }
    } catch (const std::exception& e) {
        row.outcome.solved = false;
        row.failure = e.what();
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

EvalReport evaluate(const ExperimentConfig& cfg, const EvalOptions& opts)
{
    const std::vector<Instance> instances = load_split(cfg.dataset_path(), "test");
    if (instances.empty())
        throw ConfigError("dataset_dir", "the test split is empty");
    const auto policy = make_policy(cfg, opts.checkpoint, opts.remote_url);
    const auto solver = make_solver(cfg, opts.remote_url);

    const std::size_t jobs = instances.size() * cfg.seeds.size();
    std::vector<ResultRow> rows(jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < jobs;) {
            const Instance& inst = instances[k / cfg.seeds.size()];
            rows[k] = evaluate_instance(inst, cfg.seeds[k % cfg.seeds.size()], *policy, *solver, cfg);
        }
    };
    const int n_workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(jobs)));
    std::vector<std::thread> pool;
    for (int w = 1; w < n_workers; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    if (!opts.record_timing)
        for (ResultRow& r : rows)
            r.wall_ms = 0.0;
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.instance_id, a.seed) < std::tie(b.instance_id, b.seed);
    });

    EvalReport report;
    std::vector<EpisodeOutcome> outcomes;
    for (const ResultRow& r : rows) {
        EpisodeOutcome o = r.outcome;
        if (o.optimal_length == kUnreachable)
            o.optimal_length = 0;
        outcomes.push_back(o);
    }
    report.rows = std::move(rows);
    report.cr = completion_rate(outcomes);
    report.optimal = optimal_rate(outcomes);
    report.top5 = top5_accuracy(outcomes);
    report.gtb = gtb_score(outcomes).score;
    return report;
}

json metrics_json(const EvalReport& r)
{
    return {{"cr", r.cr}, {"or", r.optimal}, {"gtb_score", r.gtb}, {"top5", r.top5}, {"n", r.rows.size()}};
}

void write_evaluation(const ExperimentConfig& cfg, const EvalReport& report, const std::string& started_at,
                      const fs::path& out_dir)
{
    const std::string hash = config_hash(cfg);
    std::ostringstream csv;
    csv << "instance_id,seed,solved,plan_len,optimal_len,d,errors,max_errors,expansions_used,wall_ms,config_hash\n";
    for (const ResultRow& r : report.rows) {
        const EpisodeOutcome& o = r.outcome;
        csv << r.instance_id << ',' << r.seed << ',' << (o.solved ? 1 : 0) << ',' << o.plan_length << ','
            << csv_optimal(o.optimal_length) << ',' << o.final_distance << ',' << o.errors << ',' << o.max_errors
            << ',' << r.expansions_used << ',' << std::fixed << std::setprecision(3) << r.wall_ms
            << std::defaultfloat << ',' << hash << '\n';
    }
    write_file(out_dir / "results.csv", csv.str());

    struct Bucket
    {
        int n = 0, solved = 0, optimal = 0;
    };
    std::map<int, Bucket> buckets;
    for (const ResultRow& r : report.rows) {
        Bucket& b = buckets[r.outcome.optimal_length == kUnreachable ? -1 : r.outcome.optimal_length];
        ++b.n;
        b.solved += r.outcome.solved ? 1 : 0;
        b.optimal += r.outcome.solved && r.outcome.plan_length == r.outcome.optimal_length ? 1 : 0;
    }
    std::ostringstream bucket_csv;
    bucket_csv << "optimal_len,n,cr,or\n" << std::setprecision(6);
    for (const auto& [len, b] : buckets)
        bucket_csv << len << ',' << b.n << ',' << static_cast<double>(b.solved) / b.n << ','
                   << static_cast<double>(b.optimal) / b.n << '\n';
    write_file(out_dir / "buckets.csv", bucket_csv.str());

    write_file(out_dir / "metrics.json", metrics_json(report).dump(2) + "\n");

    json failures = json::array();
    for (const ResultRow& r : report.rows)
        if (!r.failure.empty())
            failures.push_back({{"instance_id", r.instance_id}, {"seed", r.seed}, {"error", r.failure}});
    json manifest = {{"command", "evaluate"},
                     {"config_hash", hash},
                     {"config", config_to_json(cfg)},
                     {"code_version", HSRL_CODE_VERSION},
                     {"started_at", started_at},
                     {"finished_at", utc_timestamp()},
                     {"metrics", metrics_json(report)},
                     {"failures", failures}};
    write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---- training ----------------------------------------------------------------

void train_experiment(const ExperimentConfig& cfg, const TrainRunOptions& opts)
{
    const std::string started_at = utc_timestamp();
    std::vector<Task> tasks;
    for (Instance& inst : load_split(cfg.dataset_path(), "train"))
        tasks.push_back(std::move(inst.task));
    if (tasks.empty())
        throw ConfigError("dataset_dir", "the train split is empty");
    std::vector<Task> probe;
    for (Instance& inst : load_split(cfg.dataset_path(), "test")) {
        if (static_cast<int>(probe.size()) >= cfg.probe_count)
            break;
        probe.push_back(std::move(inst.task));
    }

    const fs::path out = cfg.output_path();
    fs::create_directories(out);
    json runs = json::array();
    for (std::uint64_t seed : cfg.seeds) {
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        const std::string suffix = "-" + std::to_string(seed);
        TrainingLog log;
        json run = {{"seed", seed}};
        if (cfg.policy_mode == PolicyMode::Remote) {
            if (opts.remote_url.empty())
                throw ConfigError("HSRL_REMOTE_URL", "must be set for the remote policy");
            remote::RemotePolicy policy(remote::Client(opts.remote_url), cfg.max_tokens);
            log = train_remote(tasks, policy, cfg.search, tc, cfg.reward, cfg.planner);
        } else {
            const fs::path ckpt_path = out / ("checkpoint" + suffix + ".json");
            SoftmaxPolicyParams init;
            init.feature_version = cfg.task == TaskKind::Blocksworld ? kBlocksFeatures : kGridFeatures;
            TrainOptions options;
            options.probe = probe;
            if (opts.resume && fs::exists(ckpt_path)) {
                Checkpoint c = load_checkpoint(ckpt_path);
                init = c.params;
                options.start_step = c.train_step;
            }
            TrainResult result = train(tasks, SoftmaxPolicy(init, cfg.window_margin), cfg.search, tc, cfg.reward,
                                       cfg.planner, options);
            write_file(ckpt_path, checkpoint_to_json({result.params, result.train_step}).dump(2) + "\n");
            run["checkpoint"] = ckpt_path.filename().string();
            run["train_step"] = result.train_step;
            run["resumed_from"] = options.start_step;
            log = std::move(result.log);
        }
        std::ostringstream csv;
        log.write_csv(csv);
        write_file(out / ("train_log" + suffix + ".csv"), csv.str());
        run["log"] = "train_log" + suffix + ".csv";
        run["iterations"] = log.rows.size();
        run["skipped"] = log.skipped;
        if (!log.rows.empty() && log.rows.back().probe_or)
            run["final_probe_or"] = *log.rows.back().probe_or;
        runs.push_back(run);
    }
    json manifest = {{"command", "train"},
                     {"config_hash", config_hash(cfg)},
                     {"config", config_to_json(cfg)},
                     {"code_version", HSRL_CODE_VERSION},
                     {"started_at", started_at},
                     {"finished_at", utc_timestamp()},
                     {"runs", runs}};
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
}

// ---- GTB scoring -----------------------------------------------------------

std::vector<EpisodeOutcome> read_gtb_rows(const fs::path& csv)
{
    if (!fs::exists(csv))
        throw ConfigError("results", csv.string() + " not found");
    std::istringstream in(read_file(csv));
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream s(line);
        while (std::getline(s, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        return cells;
    };
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("results", "empty file");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    const std::vector<std::string> header = split(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i)
        col[header[i]] = i;
    for (const char* need : {"d", "plan_len", "errors", "optimal_len", "max_errors"})
        if (!col.count(need))
            throw ConfigError(std::string("results.") + need, "missing column");

    std::vector<EpisodeOutcome> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const std::vector<std::string> cells = split(line);
        auto cell = [&](const char* name) {
            const std::size_t i = col.at(name);
            int v = 0;
            const std::string& s = i < cells.size() ? cells[i] : std::string();
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
                throw ConfigError(std::string("results.") + name,
                                  "line " + std::to_string(line_no) + ": not an integer: '" + s + "'");
            return v;
        };
        EpisodeOutcome o;
        o.final_distance = cell("d");
        o.plan_length = cell("plan_len");
        o.errors = cell("errors");
        o.optimal_length = cell("optimal_len");
        o.max_errors = cell("max_errors");
        o.solved = o.final_distance == 0;
        if (o.final_distance < 0)
            throw ConfigError("results.d", "line " + std::to_string(line_no) + ": must be >= 0");
        rows.push_back(o);
    }
    if (rows.empty())
        throw ConfigError("results", "no data rows");
    return rows;
}

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace hsrl
