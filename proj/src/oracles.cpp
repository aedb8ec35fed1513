#include "hsrl/oracles.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <queue>
#include <tuple>
#include <vector>

namespace hsrl {

namespace {

Plan reconstruct(const GridMap& map, const std::vector<int>& parent_dir, Position from, Position to)
{
    std::vector<Action> rev;
    Position p = to;
    while (p != from) {
        auto d = static_cast<Direction>(parent_dir[map.index(p)]);
        rev.push_back(GridAction{d});
        // walk back against the move direction
        switch (d) {
        case Direction::Up: p.row += 1; break;
        case Direction::Down: p.row -= 1; break;
        case Direction::Left: p.col += 1; break;
        case Direction::Right: p.col -= 1; break;
        }
    }
    return Plan{{rev.rbegin(), rev.rend()}};
}

bool endpoints_ok(const GridMap& map, Position from, Position to)
{
    return map.is_free(from) && map.is_free(to);
}

}  // namespace

OptimalResult astar_grid(const GridMap& map, Position from, Position to)
{
    OptimalResult result;
    if (!endpoints_ok(map, from, to))
        return result;

    const std::size_t cells = static_cast<std::size_t>(map.width()) * map.height();
    std::vector<int> g(cells, kUnreachable);
    std::vector<int> parent_dir(cells, -1);
    std::vector<bool> closed(cells, false);

    // (f, insertion order, cell); min-heap gives FIFO among equal f
    using Entry = std::tuple<int, std::uint64_t, int, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    std::uint64_t counter = 0;

    g[map.index(from)] = 0;
    open.emplace(manhattan(from, to), counter++, from.row, from.col);
    while (!open.empty()) {
        auto [f, order, r, c] = open.top();
        open.pop();
        Position p{r, c};
        std::size_t pi = map.index(p);
        if (closed[pi])
            continue;
        closed[pi] = true;
        ++result.expanded;
        if (p == to) {
            result.length = g[pi];
            result.plan = reconstruct(map, parent_dir, from, to);
            return result;
        }
        for (Direction d : kDirections) {
            Position n = step(p, d);
            if (!map.is_free(n))
                continue;
            std::size_t ni = map.index(n);
            if (closed[ni] || g[pi] + 1 >= g[ni])
                continue;
            g[ni] = g[pi] + 1;
            parent_dir[ni] = static_cast<int>(d);
            open.emplace(g[ni] + manhattan(n, to), counter++, n.row, n.col);
        }
    }
    return result;
}

OptimalResult bfs_grid(const GridMap& map, Position from, Position to)
{
    OptimalResult result;
    if (!endpoints_ok(map, from, to))
        return result;

    const std::size_t cells = static_cast<std::size_t>(map.width()) * map.height();
    std::vector<int> dist(cells, -1);
    std::vector<int> parent_dir(cells, -1);
    std::deque<Position> queue{from};
    dist[map.index(from)] = 0;
    while (!queue.empty()) {
        Position p = queue.front();
        queue.pop_front();
        ++result.expanded;
        if (p == to) {
            result.length = dist[map.index(p)];
            result.plan = reconstruct(map, parent_dir, from, to);
            return result;
        }
        for (Direction d : kDirections) {
            Position n = step(p, d);
            if (!map.is_free(n) || dist[map.index(n)] >= 0)
                continue;
            dist[map.index(n)] = dist[map.index(p)] + 1;
            parent_dir[map.index(n)] = static_cast<int>(d);
            queue.push_back(n);
        }
    }
    return result;
}

OptimalResult blocks_optimal(const BlocksState& initial, const BlocksState& goal, int max_depth)
{
    OptimalResult result;
    if (initial.block_count() != goal.block_count())
        return result;

    struct Visit
    {
        int parent;
        BlocksAction via;
        int depth;
    };
    std::vector<BlocksState> states{initial};
    std::vector<Visit> visits{{-1, {}, 0}};
    std::map<BlocksState, int> seen{{initial, 0}};

    std::size_t head = 0;
    while (head < states.size()) {
        const int idx = static_cast<int>(head++);
        ++result.expanded;
        if (states[idx] == goal) {
            std::vector<Action> rev;
            for (int i = idx; visits[i].parent >= 0; i = visits[i].parent)
                rev.push_back(visits[i].via);
            result.plan = Plan{{rev.rbegin(), rev.rend()}};
            result.length = visits[idx].depth;
            return result;
        }
        if (visits[idx].depth >= max_depth) {
            result.depth_limited = true;
            continue;
        }
        for (const BlocksAction& a : legal_blocks_actions(states[idx])) {
            auto next = apply_blocks_action(states[idx], a);
            if (!next || seen.contains(*next))
                continue;
            seen.emplace(*next, static_cast<int>(states.size()));
            visits.push_back({idx, a, visits[idx].depth + 1});
            states.push_back(std::move(*next));
        }
    }
    return result;
}

int manhattan_path_sum(std::span<const Position> points)
{
    int sum = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
        sum += manhattan(points[i - 1], points[i]);
    return sum;
}

}  // namespace hsrl
