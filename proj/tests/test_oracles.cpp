#include <doctest.h>

#include <vector>

#include "hsrl/generate.hpp"
#include "hsrl/oracles.hpp"

using namespace hsrl;

namespace {

GridMap wall_column()
{
    std::vector<Position> obstacles;
    for (int r = 0; r < 4; ++r)
        obstacles.push_back({r, 2});
    return GridMap::from_obstacles(5, 5, obstacles, {0, 0}, {0, 4});
}

}  // namespace

TEST_CASE("path around a wall column")
{
    GridMap map = wall_column();
    auto a = astar_grid(map, map.start(), map.goal());
    auto b = bfs_grid(map, map.start(), map.goal());
    CHECK(a.length == 12);
    CHECK(b.length == 12);
    REQUIRE(a.plan);
    CHECK(replay(map, map.start(), *a.plan) == map.goal());
    CHECK(static_cast<int>(a.plan->length()) == 12);
}

TEST_CASE("unreachable and degenerate queries")
{
    std::vector<Position> obstacles;
    for (int r = 0; r < 5; ++r)
        obstacles.push_back({r, 2});
    GridMap cut = GridMap::from_obstacles(5, 5, obstacles, {0, 0}, {0, 4});
    auto r = astar_grid(cut, cut.start(), cut.goal());
    CHECK_FALSE(r.reachable());
    CHECK_FALSE(r.plan);
    CHECK_FALSE(bfs_grid(cut, cut.start(), cut.goal()).reachable());
    CHECK_FALSE(astar_grid(cut, {0, 0}, {2, 2}).reachable());  // blocked endpoint
    CHECK_FALSE(astar_grid(cut, {0, 0}, {9, 9}).reachable());  // out of bounds

    auto same = astar_grid(cut, {1, 1}, {1, 1});
    CHECK(same.length == 0);
    REQUIRE(same.plan);
    CHECK(same.plan->actions.empty());
}

TEST_CASE("astar plans are reproducible and match bfs on random mazes")
{
    for (std::uint64_t s = 0; s < 50; ++s) {
        GridMap m = generate_maze(8, 8, 0.3, s);
        auto a1 = astar_grid(m, m.start(), m.goal());
        auto a2 = astar_grid(m, m.start(), m.goal());
        auto b = bfs_grid(m, m.start(), m.goal());
        CHECK(a1.length == b.length);
        CHECK(move_string(*a1.plan) == move_string(*a2.plan));
    }
}

TEST_CASE("blocks optimum")
{
    auto same = blocks_optimal(BlocksState({{1, 2}}), BlocksState({{1, 2}}));
    CHECK(same.length == 0);

    auto flip = blocks_optimal(BlocksState({{1, 2}}), BlocksState({{2, 1}}));
    CHECK(flip.length == 2);
    REQUIRE(flip.plan);
    CHECK(replay(BlocksState({{1, 2}}), *flip.plan) == BlocksState({{2, 1}}));

    // reversing a 3-tower takes 3 moves: 3->table, 2->3, 1->2
    CHECK(blocks_optimal(BlocksState({{1, 2, 3}}), BlocksState({{3, 2, 1}})).length == 3);

    auto capped = blocks_optimal(BlocksState({{1, 2, 3}}), BlocksState({{3, 2, 1}}), 2);
    CHECK_FALSE(capped.reachable());
    CHECK(capped.depth_limited);
}

TEST_CASE("manhattan path sum")
{
    std::vector<Position> one{{3, 3}};
    CHECK(manhattan_path_sum(one) == 0);
    std::vector<Position> pts{{0, 0}, {2, 3}, {1, 1}};
    CHECK(manhattan_path_sum(pts) == 5 + 3);
    CHECK(manhattan_path_sum(std::span<const Position>{}) == 0);
}
