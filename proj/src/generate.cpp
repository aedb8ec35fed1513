#include "hsrl/generate.hpp"

#include <cmath>
#include <deque>
#include <set>

#include "hsrl/error.hpp"
#include "hsrl/oracles.hpp"
#include "hsrl/rng.hpp"

namespace hsrl {

namespace {

std::vector<Position> free_cells(const GridMap& map)
{
    std::vector<Position> out;
    for (int r = 0; r < map.height(); ++r)
        for (int c = 0; c < map.width(); ++c)
            if (!map.is_obstacle({r, c}))
                out.push_back({r, c});
    return out;
}

std::vector<Position> component_of(const GridMap& map, Position seed)
{
    std::vector<bool> seen(static_cast<std::size_t>(map.width()) * map.height(), false);
    std::vector<Position> out;
    std::deque<Position> queue{seed};
    seen[map.index(seed)] = true;
    while (!queue.empty()) {
        Position p = queue.front();
        queue.pop_front();
        out.push_back(p);
        for (Direction d : kDirections) {
            Position n = step(p, d);
            if (map.is_free(n) && !seen[map.index(n)]) {
                seen[map.index(n)] = true;
                queue.push_back(n);
            }
        }
    }
    return out;
}

}  // namespace

GridMap generate_maze(int width, int height, double obstacle_density, std::uint64_t seed, MazeOptions opts)
{
    if (width <= 0 || height <= 0 || width * height < 2)
        throw InvalidInstance("maze needs at least two cells");
    if (!(obstacle_density >= 0.0 && obstacle_density < 1.0))
        throw InvalidInstance("obstacle density must lie in [0, 1)");
    const int cells = width * height;
    const int count = static_cast<int>(std::lround(obstacle_density * cells));
    if (count > cells - 2)
        throw InvalidInstance("density leaves no room for start and goal");

    Rng rng(seed);
    std::vector<Position> all;
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            all.push_back({r, c});
    // partial Fisher-Yates: the first `count` entries become obstacles
    for (int i = 0; i < count; ++i) {
        auto j = static_cast<std::size_t>(i + rng.below(static_cast<std::uint64_t>(cells - i)));
        std::swap(all[i], all[j]);
    }
    GridMap map = GridMap::from_obstacles(width, height, {all.begin(), all.begin() + count}, {0, 0}, {0, 0});
    std::vector<Position> open = free_cells(map);

    for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
        Position s = open[rng.below(open.size())];
        Position g = open[rng.below(open.size())];
        if (s == g || manhattan(s, g) < opts.min_manhattan)
            continue;
        if (!astar_grid(map, s, g).reachable())
            continue;
        map.set_start(s);
        map.set_goal(g);
        return map;
    }
    throw UnsolvableGeneration("no solvable start/goal pair after " + std::to_string(opts.max_attempts) +
                               " attempts (seed " + std::to_string(seed) + ")");
}

BlocksInstance generate_blocksworld(int block_count, int plan_length, std::uint64_t seed)
{
    if (block_count < 2)
        throw InvalidInstance("Blocksworld needs at least two blocks");
    if (plan_length < 1)
        throw InvalidInstance("plan length must be >= 1");
    Rng rng(seed);

    std::vector<int> order(block_count);
    for (int i = 0; i < block_count; ++i)
        order[i] = i + 1;
    rng.shuffle(order);
    std::vector<std::vector<int>> stacks{{order.front()}};
    for (int i = 1; i < block_count; ++i) {
        if (rng.below(2) == 0)
            stacks.push_back({});
        stacks.back().push_back(order[i]);
    }
    const BlocksState initial(std::move(stacks));

    // Restart the walk if it paints itself into a corner (all successors seen).
    for (int attempt = 0; attempt < 1000; ++attempt) {
        BlocksState current = initial;
        std::set<BlocksState> visited{initial};
        bool ok = true;
        for (int stepi = 0; stepi < plan_length && ok; ++stepi) {
            std::vector<BlocksState> options;
            for (const BlocksAction& a : legal_blocks_actions(current)) {
                auto next = apply_blocks_action(current, a);
                if (next && !visited.contains(*next))
                    options.push_back(std::move(*next));
            }
            if (options.empty()) {
                ok = false;
                break;
            }
            current = options[rng.below(options.size())];
            visited.insert(current);
        }
        if (ok)
            return {initial, current};
    }
    throw UnsolvableGeneration("random walk could not reach the requested length");
}

namespace {

void divide(GridMap& map, int r0, int c0, int r1, int c1, Rng& rng)
{
    const int h = r1 - r0 + 1;
    const int w = c1 - c0 + 1;
    if (h < 5 && w < 5)
        return;
    const bool horizontal = (h > w) || (h == w && rng.below(2) == 0);
    if (horizontal && h >= 5) {
        int wall = r0 + 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(h - 4)));
        int door = c0 + static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
        int door_w = 1 + static_cast<int>(rng.below(2));
        for (int c = c0; c <= c1; ++c)
            if (c < door || c >= door + door_w)
                map.set_obstacle({wall, c});
        divide(map, r0, c0, wall - 1, c1, rng);
        divide(map, wall + 1, c0, r1, c1, rng);
    } else if (w >= 5) {
        int wall = c0 + 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(w - 4)));
        int door = r0 + static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
        int door_w = 1 + static_cast<int>(rng.below(2));
        for (int r = r0; r <= r1; ++r)
            if (r < door || r >= door + door_w)
                map.set_obstacle({r, wall});
        divide(map, r0, c0, r1, wall - 1, rng);
        divide(map, r0, wall + 1, r1, c1, rng);
    }
}

}  // namespace

GridMap generate_floorplan(int size, std::uint64_t seed, int min_manhattan)
{
    if (size < 5)
        throw InvalidInstance("floorplan size must be >= 5");
    Rng rng(seed);
    GridMap map(size, size, {0, 0}, {0, 0});
    for (int i = 0; i < size; ++i) {
        map.set_obstacle({0, i});
        map.set_obstacle({size - 1, i});
        map.set_obstacle({i, 0});
        map.set_obstacle({i, size - 1});
    }
    divide(map, 1, 1, size - 2, size - 2, rng);

    // A later wall can seal an earlier door, so not every room is reachable.
    std::vector<Position> open = free_cells(map);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Position s = open[rng.below(open.size())];
        Position g = open[rng.below(open.size())];
        if (s == g || manhattan(s, g) < min_manhattan)
            continue;
        if (!astar_grid(map, s, g).reachable())
            continue;
        map.set_start(s);
        map.set_goal(g);
        return map;
    }
    throw UnsolvableGeneration("floorplan: no solvable start/goal pair");
}

GtbMap generate_gtb(std::uint64_t seed, GtbOptions opts)
{
    if (opts.objectives < 1)
        throw InvalidInstance("GTB map needs at least one objective");
    for (int attempt = 0; attempt < 100; ++attempt) {
        const std::uint64_t sub = mix_seed(seed, static_cast<std::uint64_t>(attempt));
        GridMap grid = generate_maze(opts.width, opts.height, opts.density, sub);
        std::vector<Position> comp = component_of(grid, grid.start());
        if (comp.size() < static_cast<std::size_t>(opts.objectives) + 1)
            continue;
        Rng rng(mix_seed(sub, 0x6b7));
        GtbMap map;
        map.max_errors = opts.max_errors;
        Position prev = grid.start();
        while (static_cast<int>(map.objectives.size()) < opts.objectives) {
            Position p = comp[rng.below(comp.size())];
            if (p == prev)
                continue;
            map.objectives.push_back(p);
            prev = p;
        }
        grid.set_goal(map.objectives.back());
        map.grid = std::move(grid);
        return map;
    }
    throw UnsolvableGeneration("GTB: no map with a large enough component");
}

}  // namespace hsrl
