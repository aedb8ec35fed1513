#pragma once

// Exact solvers: ground truth for rewards, the optimality metric, and
// low-level sub-task solving.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>

#include "hsrl/envs.hpp"

namespace hsrl {

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct OptimalResult
{
    std::optional<Plan> plan;  ///< present iff length is finite
    int length = kUnreachable;
    std::int64_t expanded = 0;
    bool depth_limited = false;  ///< search stopped at its depth cap, not exhaustion

    bool reachable() const { return length != kUnreachable; }
};

/// Shortest 4-connected path with a Manhattan heuristic. Equal-f nodes are
/// expanded FIFO and neighbours are generated Up, Down, Left, Right, so the
/// returned plan is reproducible. Blocked or out-of-bounds endpoints are
/// reported as unreachable.
OptimalResult astar_grid(const GridMap& map, Position from, Position to);

/// Breadth-first reference solver; same contract as astar_grid.
OptimalResult bfs_grid(const GridMap& map, Position from, Position to);

/// Minimum-length move sequence by breadth-first search over canonical
/// states; unreachable within max_depth yields kUnreachable with the
/// depth_limited flag set.
OptimalResult blocks_optimal(const BlocksState& initial, const BlocksState& goal, int max_depth = 12);

/// Sum of |drow| + |dcol| over consecutive points; 0 for a single point.
int manhattan_path_sum(std::span<const Position> points);

}  // namespace hsrl
