#include "hsrl/envs.hpp"

#include <algorithm>
#include <cstdlib>

#include "hsrl/error.hpp"

namespace hsrl {

Position step(Position p, Direction d)
{
    switch (d) {
    case Direction::Up: return {p.row - 1, p.col};
    case Direction::Down: return {p.row + 1, p.col};
    case Direction::Left: return {p.row, p.col - 1};
    case Direction::Right: return {p.row, p.col + 1};
    }
    return p;
}

char direction_char(Direction d)
{
    switch (d) {
    case Direction::Up: return 'U';
    case Direction::Down: return 'D';
    case Direction::Left: return 'L';
    case Direction::Right: return 'R';
    }
    return '?';
}

std::optional<Direction> direction_from_char(char c)
{
    switch (c) {
    case 'U': return Direction::Up;
    case 'D': return Direction::Down;
    case 'L': return Direction::Left;
    case 'R': return Direction::Right;
    default: return std::nullopt;
    }
}

int manhattan(Position a, Position b)
{
    return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

GridMap::GridMap(int width, int height, Position start, Position goal)
    : width_(width), height_(height), start_(start), goal_(goal)
{
    if (width <= 0 || height <= 0)
        throw InvalidInstance("grid dimensions must be positive");
    blocked_.assign(static_cast<std::size_t>(width) * height, 0);
}

GridMap GridMap::from_obstacles(int width, int height, const std::vector<Position>& obstacles, Position start,
                                Position goal)
{
    GridMap map(width, height, start, goal);
    for (Position p : obstacles) {
        if (!map.in_bounds(p))
            throw InvalidInstance("obstacle out of bounds");
        map.set_obstacle(p);
    }
    return map;
}

std::vector<Position> GridMap::obstacles() const
{
    std::vector<Position> out;
    for (int r = 0; r < height_; ++r)
        for (int c = 0; c < width_; ++c)
            if (is_obstacle({r, c}))
                out.push_back({r, c});
    return out;
}

int GridMap::obstacle_count() const
{
    return static_cast<int>(std::count(blocked_.begin(), blocked_.end(), std::uint8_t{1}));
}

void validate_instance(const GridMap& map)
{
    if (!map.in_bounds(map.start()) || !map.in_bounds(map.goal()))
        throw InvalidInstance("start/goal out of bounds");
    if (map.is_obstacle(map.start()) || map.is_obstacle(map.goal()))
        throw InvalidInstance("start/goal on an obstacle");
    if (map.start() == map.goal())
        throw InvalidInstance("start equals goal");
}

std::optional<Position> apply_grid_action(const GridMap& map, Position pos, GridAction act)
{
    Position next = step(pos, act.direction);
    if (!map.is_free(next))
        return std::nullopt;
    return next;
}

BlocksState::BlocksState(std::vector<std::vector<int>> stacks)
{
    std::erase_if(stacks, [](const auto& s) { return s.empty(); });
    int n = 0;
    for (const auto& s : stacks)
        n += static_cast<int>(s.size());
    std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
    for (const auto& s : stacks)
        for (int b : s) {
            if (b < 1 || b > n || seen[b])
                throw InvalidInstance("block ids must be a permutation of 1..N");
            seen[b] = true;
        }
    std::sort(stacks.begin(), stacks.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    stacks_ = std::move(stacks);
    block_count_ = n;
}

std::pair<int, int> BlocksState::locate(int block) const
{
    for (std::size_t i = 0; i < stacks_.size(); ++i)
        for (std::size_t h = 0; h < stacks_[i].size(); ++h)
            if (stacks_[i][h] == block)
                return {static_cast<int>(i), static_cast<int>(h)};
    return {-1, -1};
}

bool BlocksState::is_top(int block) const
{
    return std::any_of(stacks_.begin(), stacks_.end(), [block](const auto& s) { return s.back() == block; });
}

int BlocksState::support(int block) const
{
    auto [s, h] = locate(block);
    if (s < 0 || h == 0)
        return kTable;
    return stacks_[s][h - 1];
}

std::optional<BlocksState> apply_blocks_action(const BlocksState& state, BlocksAction act)
{
    if (act.block == act.dest || !state.is_top(act.block))
        return std::nullopt;
    if (act.dest != kTable && !state.is_top(act.dest))
        return std::nullopt;
    auto stacks = state.stacks();
    auto [src, h] = state.locate(act.block);
    if (act.dest == kTable && h == 0)
        return std::nullopt;  // already on the table
    stacks[src].pop_back();
    if (act.dest == kTable) {
        stacks.push_back({act.block});
    } else {
        auto [dst, dh] = state.locate(act.dest);
        stacks[dst].push_back(act.block);
    }
    return BlocksState(std::move(stacks));
}

std::vector<BlocksAction> legal_blocks_actions(const BlocksState& state)
{
    std::vector<BlocksAction> out;
    const auto& stacks = state.stacks();
    for (const auto& s : stacks) {
        int top = s.back();
        if (s.size() > 1)
            out.push_back({top, kTable});
        for (const auto& t : stacks)
            if (t.back() != top)
                out.push_back({top, t.back()});
    }
    return out;
}

int blocks_difference(const BlocksState& a, const BlocksState& b)
{
    int diff = 0;
    for (int blk = 1; blk <= a.block_count(); ++blk)
        if (a.support(blk) != b.support(blk))
            ++diff;
    return diff;
}

void validate_gtb(const GtbMap& map)
{
    const GridMap& g = map.grid;
    if (map.objectives.empty())
        throw InvalidInstance("GTB map needs at least one objective");
    if (!g.is_free(g.start()))
        throw InvalidInstance("GTB start must be a free cell");
    for (Position p : map.objectives)
        if (!g.is_free(p))
            throw InvalidInstance("GTB objective out of bounds or on an obstacle");
    if (map.max_errors < 0)
        throw InvalidInstance("max_errors must be non-negative");
}

GtbStepResult gtb_step(const GtbMap& map, Position pos, GridAction act, int errors_so_far,
                       std::size_t pending_objective)
{
    auto next = apply_grid_action(map.grid, pos, act);
    if (!next)
        return {pos, errors_so_far + 1, false};
    bool hit = pending_objective < map.objectives.size() && *next == map.objectives[pending_objective];
    return {*next, errors_so_far, hit};
}

std::string move_string(const Plan& plan)
{
    std::string out;
    out.reserve(plan.length());
    for (const Action& a : plan.actions)
        out.push_back(direction_char(std::get<GridAction>(a).direction));
    return out;
}

std::optional<Plan> parse_move_string(const std::string& moves)
{
    Plan plan;
    for (char c : moves) {
        if (c == ' ' || c == ',' || c == '\n')
            continue;
        auto d = direction_from_char(c);
        if (!d)
            return std::nullopt;
        plan.actions.push_back(GridAction{*d});
    }
    return plan;
}

std::optional<Position> replay(const GridMap& map, Position from, const Plan& plan)
{
    Position p = from;
    for (const Action& a : plan.actions) {
        const auto* g = std::get_if<GridAction>(&a);
        if (!g)
            return std::nullopt;
        auto next = apply_grid_action(map, p, *g);
        if (!next)
            return std::nullopt;
        p = *next;
    }
    return p;
}

std::optional<BlocksState> replay(const BlocksState& from, const Plan& plan)
{
    BlocksState s = from;
    for (const Action& a : plan.actions) {
        const auto* b = std::get_if<BlocksAction>(&a);
        if (!b)
            return std::nullopt;
        auto next = apply_blocks_action(s, *b);
        if (!next)
            return std::nullopt;
        s = std::move(*next);
    }
    return s;
}

std::vector<Position> plan_cells(Position from, const Plan& plan)
{
    std::vector<Position> cells{from};
    for (const Action& a : plan.actions)
        cells.push_back(step(cells.back(), std::get<GridAction>(a).direction));
    return cells;
}

}  // namespace hsrl
