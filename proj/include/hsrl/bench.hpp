#pragma once

// Operational surface: experiment configuration, dataset files, the
// evaluation sweep, the training driver and GTB scoring of result tables.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsrl/metrics.hpp"
#include "hsrl/mgrpo.hpp"

namespace hsrl {

enum class PolicyMode { Synthetic, Remote };
enum class LowLevelMode { Oracle, Remote };

struct ExperimentConfig
{
    TaskKind task = TaskKind::Maze;
    std::string dataset_dir;  ///< as written; relative to the config file
    std::string output_dir;
    PolicyMode policy_mode = PolicyMode::Synthetic;
    LowLevelMode low_level = LowLevelMode::Oracle;
    ProposalMode proposal = ProposalMode::Sampled;
    std::vector<std::uint64_t> seeds{0};
    int workers = 1;
    int window_margin = 1;  ///< synthetic policy candidate window
    int max_tokens = 64;    ///< remote generations
    int probe_count = 16;   ///< held-out instances probed during training
    SearchConfig search;
    TrainConfig train;
    RewardConfig reward;
    PlannerConfig planner;

    std::filesystem::path base_dir;  ///< directory of the config file (not serialised)

    std::filesystem::path dataset_path() const { return base_dir / dataset_dir; }
    std::filesystem::path output_path() const { return base_dir / output_dir; }
};

/// Missing keys take defaults; unknown keys and bad values throw ConfigError
/// naming the field path (e.g. "search.tau").
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a (hex) of the canonical serialisation; key order in the source file
/// does not matter.
std::string config_hash(const ExperimentConfig& cfg);

// ---- datasets -------------------------------------------------------------

/// One dataset entry. GTB maps also carry the full objective list; their
/// task runs from the start to the last objective.
struct Instance
{
    Task task;
    std::optional<GtbMap> gtb;
};

struct GenerateSpec
{
    TaskKind kind = TaskKind::Maze;
    int count = 0;
    int size = 10;
    double density = 0.4;
    int train_count = -1;  ///< -1: everything goes to the test split
    std::uint64_t seed = 0;
    int min_manhattan = 0;
    int blocks = 5;
    std::pair<int, int> train_steps{1, 6};
    std::pair<int, int> test_steps{7, 10};
    int objectives = 4;
    int max_errors = 10;
};

/// Writes <dir>/{train,test}/<id>.json plus index.json. Nothing is left
/// behind on failure.
void generate_dataset(const GenerateSpec& spec, const std::filesystem::path& dir);

nlohmann::json instance_to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j, TaskKind kind, std::string id);

/// Instances of one split ("train" or "test"), in index order.
std::vector<Instance> load_split(const std::filesystem::path& dir, const std::string& split);

// ---- checkpoints -----------------------------------------------------------

struct Checkpoint
{
    SoftmaxPolicyParams params;
    std::int64_t train_step = 0;
};

nlohmann::json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---- evaluation ------------------------------------------------------------

struct ResultRow
{
    std::string instance_id;
    std::uint64_t seed = 0;
    EpisodeOutcome outcome;
    int expansions_used = 0;
    double wall_ms = 0.0;
    std::string failure;  ///< exception text when the instance could not run
};

struct EvalReport
{
    std::vector<ResultRow> rows;  ///< sorted by (instance_id, seed)
    double cr = 0.0;
    double optimal = 0.0;
    double top5 = 0.0;
    double gtb = 0.0;
};

struct EvalOptions
{
    std::optional<std::filesystem::path> checkpoint;
    std::string remote_url;     ///< required by remote policy / low-level modes
    bool record_timing = false;  ///< otherwise wall_ms is written as 0
};

/// Plans every test instance once per seed and aggregates the metrics.
/// Per-instance failures are recorded as unsolved rows.
EvalReport evaluate(const ExperimentConfig& cfg, const EvalOptions& opts);

/// Runs one instance (all objective legs for GTB maps).
ResultRow evaluate_instance(const Instance& inst, std::uint64_t seed, const Policy& policy,
                            const LowLevelSolver& solver, const ExperimentConfig& cfg);

/// Writes results.csv, metrics.json, buckets.csv (difficulty = optimal
/// length vs CR/OR) and manifest.json into the output directory.
void write_evaluation(const ExperimentConfig& cfg, const EvalReport& report, const std::string& started_at,
                      const std::filesystem::path& out_dir);

nlohmann::json metrics_json(const EvalReport& report);

// ---- training --------------------------------------------------------------

struct TrainRunOptions
{
    bool resume = false;
    std::string remote_url;
};

/// One M-GRPO run per configured seed; writes checkpoint-<seed>.json,
/// train_log-<seed>.csv and manifest.json into the output directory.
void train_experiment(const ExperimentConfig& cfg, const TrainRunOptions& opts);

// ---- GTB scoring -----------------------------------------------------------

/// Reads a CSV with (at least) the columns d, plan_len, errors, optimal_len,
/// max_errors. Throws ConfigError when a column is missing or a cell is
/// not an integer.
std::vector<EpisodeOutcome> read_gtb_rows(const std::filesystem::path& csv);

/// ISO-8601 UTC.
std::string utc_timestamp();

}  // namespace hsrl
