#include <doctest.h>

#include "hsrl/error.hpp"
#include "hsrl/generate.hpp"
#include "hsrl/oracles.hpp"

using namespace hsrl;

namespace {

int obstacle_count(const GridMap& m)
{
    int n = 0;
    for (int r = 0; r < m.height(); ++r)
        for (int c = 0; c < m.width(); ++c)
            n += m.is_obstacle({r, c}) ? 1 : 0;
    return n;
}

}  // namespace

TEST_CASE("maze obstacle count is rounded density")
{
    CHECK(obstacle_count(generate_maze(5, 5, 0.32, 1)) == 8);
    CHECK(obstacle_count(generate_maze(10, 10, 0.4, 7)) == 40);
    CHECK(obstacle_count(generate_maze(6, 4, 0.0, 3)) == 0);
}

TEST_CASE("mazes are deterministic, valid and solvable")
{
    for (std::uint64_t s = 0; s < 40; ++s) {
        GridMap a = generate_maze(10, 10, 0.4, s, {.min_manhattan = 5});
        GridMap b = generate_maze(10, 10, 0.4, s, {.min_manhattan = 5});
        CHECK(serialize_grid(a) == serialize_grid(b));
        CHECK_NOTHROW(validate_instance(a));
        CHECK(astar_grid(a, a.start(), a.goal()).reachable());
        CHECK(manhattan(a.start(), a.goal()) >= 5);
    }
    CHECK(serialize_grid(generate_maze(10, 10, 0.4, 1)) != serialize_grid(generate_maze(10, 10, 0.4, 2)));
}

TEST_CASE("impossible mazes give up")
{
    CHECK_THROWS_AS(generate_maze(3, 3, 0.9, 0, {.max_attempts = 20}), InvalidInstance);
    CHECK_THROWS_AS(generate_maze(3, 3, 0.0, 0, {.min_manhattan = 10, .max_attempts = 20}), UnsolvableGeneration);
}

TEST_CASE("blocksworld optimum is bounded by the walk length")
{
    for (std::uint64_t s = 0; s < 30; ++s) {
        const int len = 1 + static_cast<int>(s % 5);
        BlocksInstance inst = generate_blocksworld(5, len, s);
        CHECK(inst == generate_blocksworld(5, len, s));
        CHECK(inst.initial.block_count() == 5);
        auto opt = blocks_optimal(inst.initial, inst.goal);
        CHECK(opt.reachable());
        CHECK(opt.length <= len);
        CHECK(opt.length >= 1);  // the walk never returns to its start
    }
}

TEST_CASE("floorplans and gtb maps")
{
    GridMap f = generate_floorplan(16, 4);
    CHECK(serialize_grid(f) == serialize_grid(generate_floorplan(16, 4)));
    CHECK(astar_grid(f, f.start(), f.goal()).reachable());

    GtbMap g = generate_gtb(9, {.width = 12, .height = 12, .objectives = 5});
    CHECK(g.objectives.size() == 5);
    Position from = g.grid.start();
    for (std::size_t i = 0; i < g.objectives.size(); ++i) {
        CHECK(astar_grid(g.grid, from, g.objectives[i]).reachable());
        if (i > 0)
            CHECK(g.objectives[i] != g.objectives[i - 1]);
        from = g.objectives[i];
    }
}
