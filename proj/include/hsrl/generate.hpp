#pragma once

// Seeded instance generators. Every generator is a pure function of its
// arguments; the same seed gives a bitwise-identical instance.

#include <cstdint>
#include <utility>

#include "hsrl/envs.hpp"
#include "hsrl/io.hpp"

namespace hsrl {

struct MazeOptions
{
    int min_manhattan = 0;  ///< minimum start/goal distance
    int max_attempts = 1000;
};

/// Places exactly round(density * width * height) obstacles uniformly, then
/// resamples start/goal among free cells until A* connects them. Throws
/// UnsolvableGeneration after max_attempts draws.
GridMap generate_maze(int width, int height, double obstacle_density, std::uint64_t seed, MazeOptions opts = {});

/// Random initial state plus a random walk of exactly plan_length legal moves
/// that never revisits a state (in particular never undoes the last move).
BlocksInstance generate_blocksworld(int block_count, int plan_length, std::uint64_t seed);

/// Room-and-corridor layout (recursive division with door gaps). Start and
/// goal are drawn from cells A* can connect.
GridMap generate_floorplan(int size, std::uint64_t seed, int min_manhattan = 0);

struct GtbOptions
{
    int width = 24;
    int height = 24;
    double density = 0.25;
    int objectives = 4;
    int max_errors = 10;
};

/// Objectives are drawn from the start cell's connected component; consecutive
/// objectives are distinct.
GtbMap generate_gtb(std::uint64_t seed, GtbOptions opts = {});

}  // namespace hsrl
