#include <doctest.h>

#include "hsrl/envs.hpp"
#include "hsrl/error.hpp"

using namespace hsrl;

namespace {

GridAction act(Direction d) { return GridAction{d}; }

}  // namespace

TEST_CASE("grid moves: free, out of bounds, obstacle")
{
    GridMap empty(3, 3, {0, 0}, {2, 2});
    CHECK(apply_grid_action(empty, {0, 0}, act(Direction::Right)) == Position{0, 1});
    CHECK_FALSE(apply_grid_action(empty, {0, 0}, act(Direction::Up)));
    CHECK_FALSE(apply_grid_action(empty, {2, 2}, act(Direction::Right)));

    GridMap blocked = GridMap::from_obstacles(3, 3, {{1, 1}}, {0, 0}, {2, 2});
    CHECK_FALSE(apply_grid_action(blocked, {1, 0}, act(Direction::Right)));
    CHECK(apply_grid_action(blocked, {1, 0}, act(Direction::Down)) == Position{2, 0});
}

TEST_CASE("instance validation")
{
    CHECK_NOTHROW(validate_instance(GridMap(3, 3, {0, 0}, {2, 2})));
    CHECK_THROWS_AS(validate_instance(GridMap(3, 3, {1, 1}, {1, 1})), InvalidInstance);
    CHECK_THROWS_AS(validate_instance(GridMap::from_obstacles(3, 3, {{2, 2}}, {0, 0}, {2, 2})), InvalidInstance);
    CHECK_THROWS_AS(validate_instance(GridMap(3, 3, {0, 0}, {3, 0})), InvalidInstance);
}

TEST_CASE("blocks moves")
{
    const BlocksState tower({{1, 2}});
    auto split = apply_blocks_action(tower, {2, kTable});
    REQUIRE(split);
    CHECK(*split == BlocksState({{1}, {2}}));
    CHECK_FALSE(apply_blocks_action(tower, {1, kTable}));

    auto stacked = apply_blocks_action(BlocksState({{1}, {2}}), {2, 1});
    REQUIRE(stacked);
    CHECK(*stacked == tower);

    // the bottom block of a one-block stack is already on the table
    CHECK_FALSE(apply_blocks_action(BlocksState({{1}, {2}}), {1, kTable}));
    // destination must be a clear block other than the moved one
    CHECK_FALSE(apply_blocks_action(BlocksState({{1, 3}, {2}}), {2, 1}));
    CHECK_FALSE(apply_blocks_action(tower, {2, 2}));
}

TEST_CASE("blocks state is canonical and validated")
{
    CHECK(BlocksState({{3}, {1, 2}}) == BlocksState({{1, 2}, {3}}));
    CHECK(BlocksState({{1}, {}, {2}}).stacks().size() == 2);
    CHECK_THROWS_AS(BlocksState({{1, 1}}), InvalidInstance);
    CHECK_THROWS_AS(BlocksState({{1, 3}}), InvalidInstance);  // ids must be 1..n

    const BlocksState s({{1, 2, 3}, {4}});
    CHECK(s.support(3) == 2);
    CHECK(s.support(1) == kTable);
    CHECK(s.is_top(3));
    CHECK_FALSE(s.is_top(2));
    CHECK(s.block_count() == 4);
}

TEST_CASE("legal blocks actions all apply and are distinct")
{
    const BlocksState s({{1, 2}, {3}, {4, 5}});
    const auto moves = legal_blocks_actions(s);
    // tops 2, 3, 5: each to two other tops, 2 and 5 also to the table
    CHECK(moves.size() == 8);
    for (const BlocksAction& m : moves)
        CHECK(apply_blocks_action(s, m));
}

TEST_CASE("blocks difference counts differing supports")
{
    CHECK(blocks_difference(BlocksState({{1, 2}}), BlocksState({{1, 2}})) == 0);
    CHECK(blocks_difference(BlocksState({{1, 2}}), BlocksState({{1}, {2}})) == 1);
    CHECK(blocks_difference(BlocksState({{1, 2, 3}}), BlocksState({{3, 2, 1}})) == 3);
}

TEST_CASE("gtb steps count errors and objective hits")
{
    GtbMap map;
    map.grid = GridMap::from_obstacles(3, 3, {{1, 1}}, {0, 0}, {2, 2});
    map.objectives = {{0, 1}, {2, 2}};
    map.max_errors = 2;

    auto hit = gtb_step(map, {0, 0}, act(Direction::Right), 0, 0);
    CHECK(hit.objective_hit);
    CHECK(hit.errors == 0);
    CHECK(hit.pos == Position{0, 1});

    auto bump = gtb_step(map, {0, 1}, act(Direction::Down), 1, 1);
    CHECK(bump.pos == Position{0, 1});
    CHECK(bump.errors == 2);
    CHECK_FALSE(bump.objective_hit);

    auto over = gtb_step(map, {0, 0}, act(Direction::Up), map.max_errors, 0);
    CHECK(over.errors == map.max_errors + 1);

    // only the pending objective counts
    CHECK_FALSE(gtb_step(map, {0, 0}, act(Direction::Right), 0, 1).objective_hit);
}

TEST_CASE("move strings and replay")
{
    auto plan = parse_move_string("RRDD");
    REQUIRE(plan);
    CHECK(move_string(*plan) == "RRDD");
    CHECK_FALSE(parse_move_string("RX"));

    GridMap map(3, 3, {0, 0}, {2, 2});
    CHECK(replay(map, {0, 0}, *plan) == Position{2, 2});
    CHECK_FALSE(replay(map, {0, 0}, *parse_move_string("U")));
    CHECK(plan_cells({0, 0}, *plan) == std::vector<Position>{{0, 0}, {0, 1}, {0, 2}, {1, 2}, {2, 2}});

    Plan moves{{BlocksAction{2, kTable}, BlocksAction{1, 2}}};
    CHECK(replay(BlocksState({{1, 2}}), moves) == BlocksState({{2, 1}}));
    CHECK_FALSE(replay(BlocksState({{1, 2}}), Plan{{BlocksAction{1, kTable}}}));
}
