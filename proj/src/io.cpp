#include "hsrl/io.hpp"

#include <fstream>
#include <sstream>

#include "hsrl/error.hpp"

namespace hsrl {

GridMap parse_grid_text(std::string_view text)
{
    std::vector<std::string> rows;
    std::string current;
    for (char ch : text) {
        if (ch == '\r')
            continue;
        if (ch == '\n') {
            rows.push_back(current);
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    if (!current.empty())
        rows.push_back(current);
    while (!rows.empty() && rows.back().empty())
        rows.pop_back();
    if (rows.empty())
        throw ParseError("empty grid", 1, 1);

    const int width = static_cast<int>(rows.front().size());
    const int height = static_cast<int>(rows.size());
    if (width == 0)
        throw ParseError("empty row", 1, 1);

    std::vector<Position> obstacles;
    std::optional<Position> start, goal;
    for (int r = 0; r < height; ++r) {
        if (static_cast<int>(rows[r].size()) != width)
            throw ParseError("ragged row: expected " + std::to_string(width) + " columns", r + 1,
                             static_cast<int>(std::min<std::size_t>(rows[r].size(), width)) + 1);
        for (int c = 0; c < width; ++c) {
            switch (rows[r][c]) {
            case '.': break;
            case '#': obstacles.push_back({r, c}); break;
            case 'S':
                if (start)
                    throw ParseError("second start cell 'S'", r + 1, c + 1);
                start = Position{r, c};
                break;
            case 'G':
                if (goal)
                    throw ParseError("second goal cell 'G'", r + 1, c + 1);
                goal = Position{r, c};
                break;
            default:
                throw ParseError(std::string("unexpected character '") + rows[r][c] + "'", r + 1, c + 1);
            }
        }
    }
    if (!start)
        throw ParseError("missing start cell 'S'", height, width);
    if (!goal)
        throw ParseError("missing goal cell 'G'", height, width);
    return GridMap::from_obstacles(width, height, obstacles, *start, *goal);
}

std::string serialize_grid(const GridMap& map)
{
    std::string out;
    out.reserve(static_cast<std::size_t>(map.height()) * (map.width() + 1));
    for (int r = 0; r < map.height(); ++r) {
        if (r > 0)
            out.push_back('\n');
        for (int c = 0; c < map.width(); ++c) {
            Position p{r, c};
            if (p == map.start())
                out.push_back('S');
            else if (p == map.goal())
                out.push_back('G');
            else
                out.push_back(map.is_obstacle(p) ? '#' : '.');
        }
    }
    return out;
}

namespace {

using nlohmann::json;

json pos_json(Position p) { return json::array({p.row, p.col}); }

Position pos_from(const json& j, const char* field)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw ConfigError(field, "expected [row, col]");
    return {j[0].get<int>(), j[1].get<int>()};
}

const json& require(const json& j, const char* field)
{
    if (!j.is_object() || !j.contains(field))
        throw ConfigError(field, "missing field");
    return j.at(field);
}

std::vector<Position> positions_from(const json& j, const char* field)
{
    if (!j.is_array())
        throw ConfigError(field, "expected a list of [row, col]");
    std::vector<Position> out;
    for (const auto& e : j)
        out.push_back(pos_from(e, field));
    return out;
}

json obstacles_json(const GridMap& map)
{
    json arr = json::array();
    for (Position p : map.obstacles())
        arr.push_back(pos_json(p));
    return arr;
}

}  // namespace

nlohmann::json grid_to_json(const GridMap& map)
{
    return {{"width", map.width()},
            {"height", map.height()},
            {"obstacles", obstacles_json(map)},
            {"start", pos_json(map.start())},
            {"goal", pos_json(map.goal())}};
}

GridMap grid_from_json(const nlohmann::json& j)
{
    GridMap map = GridMap::from_obstacles(require(j, "width").get<int>(), require(j, "height").get<int>(),
                                          positions_from(require(j, "obstacles"), "obstacles"),
                                          pos_from(require(j, "start"), "start"), pos_from(require(j, "goal"), "goal"));
    validate_instance(map);
    return map;
}

nlohmann::json blocks_to_json(const BlocksInstance& inst)
{
    return {{"blocks", inst.initial.block_count()}, {"initial", inst.initial.stacks()}, {"goal", inst.goal.stacks()}};
}

BlocksInstance blocks_from_json(const nlohmann::json& j)
{
    int n = require(j, "blocks").get<int>();
    BlocksInstance inst{BlocksState(require(j, "initial").get<std::vector<std::vector<int>>>()),
                        BlocksState(require(j, "goal").get<std::vector<std::vector<int>>>())};
    if (inst.initial.block_count() != n || inst.goal.block_count() != n)
        throw ConfigError("blocks", "block count does not match the stacks");
    return inst;
}

nlohmann::json gtb_to_json(const GtbMap& map)
{
    json objectives = json::array();
    for (Position p : map.objectives)
        objectives.push_back(pos_json(p));
    return {{"width", map.grid.width()},
            {"height", map.grid.height()},
            {"obstacles", obstacles_json(map.grid)},
            {"start", pos_json(map.grid.start())},
            {"objectives", objectives},
            {"max_errors", map.max_errors}};
}

GtbMap gtb_from_json(const nlohmann::json& j)
{
    GtbMap map;
    map.objectives = positions_from(require(j, "objectives"), "objectives");
    if (map.objectives.empty())
        throw ConfigError("objectives", "must be non-empty");
    Position start = pos_from(require(j, "start"), "start");
    map.grid = GridMap::from_obstacles(require(j, "width").get<int>(), require(j, "height").get<int>(),
                                       positions_from(require(j, "obstacles"), "obstacles"), start,
                                       map.objectives.back());
    map.max_errors = require(j, "max_errors").get<int>();
    validate_gtb(map);
    return map;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

GridMap load_grid(const std::filesystem::path& path)
{
    std::string text = read_file(path);
    if (path.extension() == ".json")
        return grid_from_json(nlohmann::json::parse(text));
    GridMap map = parse_grid_text(text);
    validate_instance(map);
    return map;
}

}  // namespace hsrl
