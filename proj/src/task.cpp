#include "hsrl/task.hpp"

#include <cctype>
#include <charconv>

#include <json.hpp>

#include "hsrl/oracles.hpp"

namespace hsrl {

std::string_view to_string(TaskKind kind)
{
    switch (kind) {
    case TaskKind::Maze: return "maze";
    case TaskKind::Floorplan: return "floorplan";
    case TaskKind::Blocksworld: return "blocksworld";
    case TaskKind::Gtb: return "gtb";
    }
    return "?";
}

std::optional<TaskKind> task_kind_from_string(std::string_view s)
{
    for (TaskKind k : {TaskKind::Maze, TaskKind::Floorplan, TaskKind::Blocksworld, TaskKind::Gtb})
        if (to_string(k) == s)
            return k;
    return std::nullopt;
}

State Task::start() const
{
    if (is_grid())
        return grid().start();
    return blocks().initial;
}

State Task::goal() const
{
    if (is_grid())
        return grid().goal();
    return blocks().goal;
}

std::string Task::summary() const
{
    if (is_grid())
        return serialize_grid(grid());
    return blocks_to_json(blocks()).dump();
}

Task make_grid_task(GridMap map, TaskKind kind, std::string id)
{
    return Task{kind, std::move(id), std::move(map)};
}

Task make_blocks_task(BlocksInstance inst, std::string id)
{
    return Task{TaskKind::Blocksworld, std::move(id), std::move(inst)};
}

int state_distance(const State& a, const State& b)
{
    if (const auto* pa = std::get_if<Position>(&a))
        return manhattan(*pa, std::get<Position>(b));
    return blocks_difference(std::get<BlocksState>(a), std::get<BlocksState>(b));
}

std::string format_state(const State& s)
{
    if (const auto* p = std::get_if<Position>(&s))
        return "(" + std::to_string(p->row) + "," + std::to_string(p->col) + ")";
    return nlohmann::json(std::get<BlocksState>(s).stacks()).dump();
}

namespace {

std::optional<Position> parse_position(std::string_view text)
{
    auto trim = [](std::string_view v) {
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front())))
            v.remove_prefix(1);
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back())))
            v.remove_suffix(1);
        return v;
    };
    text = trim(text);
    if (text.size() < 5 || text.front() != '(' || text.back() != ')')
        return std::nullopt;
    text = text.substr(1, text.size() - 2);
    auto comma = text.find(',');
    if (comma == std::string_view::npos)
        return std::nullopt;
    auto to_int = [&](std::string_view v) -> std::optional<int> {
        v = trim(v);
        int out = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
            return std::nullopt;
        return out;
    };
    auto r = to_int(text.substr(0, comma));
    auto c = to_int(text.substr(comma + 1));
    if (!r || !c)
        return std::nullopt;
    return Position{*r, *c};
}

}  // namespace

std::optional<State> parse_state(std::string_view text, const Task& task)
{
    if (task.is_grid()) {
        auto p = parse_position(text);
        if (!p || !task.grid().in_bounds(*p))
            return std::nullopt;
        return State{*p};
    }
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_array())
        return std::nullopt;
    try {
        BlocksState s(j.get<std::vector<std::vector<int>>>());
        if (s.block_count() != task.blocks().initial.block_count())
            return std::nullopt;
        return State{std::move(s)};
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

int optimal_length(const Task& task, int blocks_max_depth)
{
    if (task.is_grid())
        return astar_grid(task.grid(), task.grid().start(), task.grid().goal()).length;
    return blocks_optimal(task.blocks().initial, task.blocks().goal, blocks_max_depth).length;
}

}  // namespace hsrl
