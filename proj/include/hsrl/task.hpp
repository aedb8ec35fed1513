#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "hsrl/envs.hpp"
#include "hsrl/io.hpp"

namespace hsrl {

/// An intermediate state: a grid cell or a full Blocksworld configuration.
using State = std::variant<Position, BlocksState>;

enum class TaskKind { Maze, Floorplan, Blocksworld, Gtb };

std::string_view to_string(TaskKind kind);
std::optional<TaskKind> task_kind_from_string(std::string_view s);

/// One planning problem as seen by the hierarchical layer.
struct Task
{
    TaskKind kind = TaskKind::Maze;
    std::string id;
    std::variant<GridMap, BlocksInstance> env;

    bool is_grid() const { return std::holds_alternative<GridMap>(env); }
    const GridMap& grid() const { return std::get<GridMap>(env); }
    const BlocksInstance& blocks() const { return std::get<BlocksInstance>(env); }

    State start() const;
    State goal() const;

    /// Canonical, injective serialisation of the environment.
    std::string summary() const;
};

Task make_grid_task(GridMap map, TaskKind kind = TaskKind::Maze, std::string id = {});
Task make_blocks_task(BlocksInstance inst, std::string id = {});

/// Manhattan distance for cells, differing-support count for block states.
int state_distance(const State& a, const State& b);

/// "(r,c)" for cells, "[[1,2],[3]]" for block states.
std::string format_state(const State& s);

/// Inverse of format_state; nullopt if the text is not a well-formed state
/// for this kind of task.
std::optional<State> parse_state(std::string_view text, const Task& task);

/// Optimal plan length for the whole task (A* or Blocksworld BFS).
int optimal_length(const Task& task, int blocks_max_depth = 12);

}  // namespace hsrl
