#pragma once

// Two-level planning: a policy proposes waypoints, each consecutive pair is
// solved inside a cropped sub-environment, and unsolvable sub-tasks are
// merged with a neighbour until (at worst) the full task is replanned.

#include <memory>
#include <optional>
#include <vector>

#include "hsrl/policy.hpp"
#include "hsrl/remote.hpp"

namespace hsrl {

enum class ProposalMode { Sampled, Greedy };

struct PlannerConfig
{
    int margin = 2;     ///< sub-environment growth around each waypoint pair
    int max_depth = 6;  ///< maximum number of intermediate states
    bool merging = true;
    int blocks_max_depth = 12;
    int subtask_budget = 3;  ///< attempts per sub-task for stochastic solvers
    double temperature = 1.0;
};

struct WaypointSequence
{
    std::vector<State> states;
    bool includes_endpoints = true;
};

/// Queries the policy from the start until it emits the goal or max_depth
/// intermediate states exist; the goal is appended if it was never emitted.
/// Never fails: the worst case is [start, goal].
WaypointSequence propose_waypoints(const Policy& policy, const Task& task, int max_depth, ProposalMode mode,
                                   double temperature, Rng& rng);

/// Inclusive cell rectangle.
struct GridBox
{
    int row0 = 0, col0 = 0, row1 = 0, col1 = 0;

    bool contains(Position p) const { return p.row >= row0 && p.row <= row1 && p.col >= col0 && p.col <= col1; }
    int rows() const { return row1 - row0 + 1; }
    int cols() const { return col1 - col0 + 1; }
    bool operator==(const GridBox&) const = default;
};

/// Bounding box of {a, b} grown by margin and clipped to the map.
GridBox span_box(const GridMap& map, Position a, Position b, int margin);
GridBox full_box(const GridMap& map);
GridBox box_union(const GridBox& x, const GridBox& y);

struct SubGrid
{
    GridMap map;      ///< local frame; start/goal are the pair endpoints
    Position offset;  ///< global = local + offset
};

SubGrid crop(const GridMap& map, const GridBox& box, Position a, Position b);
SubGrid build_sub_env(const GridMap& map, Position a, Position b, int margin);

/// Restriction of a Blocksworld pair to the blocks that matter. Block ids are
/// renumbered 1..k; to_original maps them back.
struct BlocksSubEnv
{
    BlocksState initial;
    BlocksState target;
    std::vector<int> to_original;  ///< index i holds the original id of block i+1
    std::vector<int> relevant;     ///< original ids: moved blocks plus everything stacked on them
};

BlocksSubEnv build_blocks_sub_env(const BlocksState& initial, const BlocksState& target);

struct SubTask
{
    State from;
    State to;
    std::optional<GridBox> box;  ///< grid tasks only
    bool full_env = false;
    int expansion_level = 0;
};

/// Low-level solver for one sub-task; plans come back in global terms.
class LowLevelSolver
{
public:
    virtual ~LowLevelSolver() = default;
    virtual std::optional<Plan> solve(const Task& task, const SubTask& sub, int budget) const = 0;
};

/// Exact solver (A* on the cropped grid, BFS on the restricted block set).
class OracleSolver : public LowLevelSolver
{
public:
    explicit OracleSolver(int blocks_max_depth = 12) : blocks_max_depth_(blocks_max_depth) {}
    std::optional<Plan> solve(const Task& task, const SubTask& sub, int budget) const override;

private:
    int blocks_max_depth_;
};

/// Sends the sub-environment to a remote policy and validates the returned
/// move sequence by replay, retrying up to `budget` times.
class RemoteSolver : public LowLevelSolver
{
public:
    explicit RemoteSolver(remote::Client client, int max_tokens = 256)
        : client_(std::move(client)), max_tokens_(max_tokens) {}
    std::optional<Plan> solve(const Task& task, const SubTask& sub, int budget) const override;

    /// Prompt text for one sub-task (also used by tests).
    static std::string context_for(const Task& task, const SubTask& sub);

private:
    remote::Client client_;
    int max_tokens_;
};

std::optional<Plan> solve_subtask(const Task& task, const SubTask& sub, const LowLevelSolver& solver, int budget);

std::vector<SubTask> make_subtasks(const Task& task, const WaypointSequence& waypoints, const PlannerConfig& cfg);

/// Merges the failed sub-task with the next one (with the previous one when
/// it is last). A lone remaining sub-task is widened to the full environment.
std::vector<SubTask> expand_and_merge(const Task& task, std::vector<SubTask> tasks, std::size_t failed_index);

struct StitchedPlan
{
    Plan plan;
    std::vector<int> per_subtask_lengths;
    int expansions_used = 0;
    WaypointSequence waypoints;
};

/// Solves the sub-tasks defined by fixed waypoints and stitches the result.
/// The plan is replayed through the environment before it is returned.
std::optional<StitchedPlan> stitch_waypoints(const Task& task, const WaypointSequence& waypoints,
                                             const LowLevelSolver& solver, const PlannerConfig& cfg);

std::optional<StitchedPlan> hsrl_plan(const Task& task, const Policy& policy, const LowLevelSolver& solver,
                                      const PlannerConfig& cfg, ProposalMode mode, Rng& rng);

}  // namespace hsrl
