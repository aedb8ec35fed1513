#pragma once

// Task environments: 4-connected grids (maze, floorplan, GTB-style traversal)
// and Blocksworld. All values are immutable after construction.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hsrl {

struct Position
{
    int row = 0;
    int col = 0;

    auto operator<=>(const Position&) const = default;
};

enum class Direction : std::uint8_t { Up, Down, Left, Right };

/// Fixed expansion order used everywhere determinism matters.
inline constexpr std::array<Direction, 4> kDirections{Direction::Up, Direction::Down, Direction::Left,
                                                      Direction::Right};

struct GridAction
{
    Direction direction = Direction::Up;

    bool operator==(const GridAction&) const = default;
};

Position step(Position p, Direction d);
char direction_char(Direction d);
std::optional<Direction> direction_from_char(char c);

int manhattan(Position a, Position b);

/// Rectangular 4-connected grid with unit step cost.
class GridMap
{
public:
    GridMap() = default;
    GridMap(int width, int height, Position start, Position goal);

    static GridMap from_obstacles(int width, int height, const std::vector<Position>& obstacles, Position start,
                                  Position goal);

    int width() const { return width_; }
    int height() const { return height_; }
    Position start() const { return start_; }
    Position goal() const { return goal_; }
    void set_start(Position p) { start_ = p; }
    void set_goal(Position p) { goal_ = p; }

    bool in_bounds(Position p) const { return p.row >= 0 && p.col >= 0 && p.row < height_ && p.col < width_; }
    bool is_obstacle(Position p) const { return blocked_[index(p)] != 0; }
    bool is_free(Position p) const { return in_bounds(p) && !is_obstacle(p); }
    void set_obstacle(Position p, bool blocked = true) { blocked_[index(p)] = blocked ? 1 : 0; }

    /// Obstacles in row-major order.
    std::vector<Position> obstacles() const;
    int obstacle_count() const;

    std::size_t index(Position p) const { return static_cast<std::size_t>(p.row) * width_ + p.col; }

    bool operator==(const GridMap&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> blocked_;
    Position start_;
    Position goal_;
};

/// Throws InvalidInstance unless start/goal are distinct free in-bounds cells.
void validate_instance(const GridMap& map);

/// 4-connected successor, or nullopt on a wall or obstacle collision.
std::optional<Position> apply_grid_action(const GridMap& map, Position pos, GridAction act);

inline constexpr int kTable = 0;

struct BlocksAction
{
    int block = 0;
    int dest = kTable;  ///< destination block id, or kTable

    bool operator==(const BlocksAction&) const = default;
};

/// Blocksworld configuration. Stacks are listed bottom to top and kept in
/// canonical order (sorted by bottom block) so equality is structural.
class BlocksState
{
public:
    BlocksState() = default;

    /// Validates and canonicalises; throws InvalidInstance on a bad layout.
    explicit BlocksState(std::vector<std::vector<int>> stacks);

    const std::vector<std::vector<int>>& stacks() const { return stacks_; }
    int block_count() const { return block_count_; }

    bool is_top(int block) const;
    /// Block directly below `block`, or kTable.
    int support(int block) const;
    /// (stack index, height) of a block.
    std::pair<int, int> locate(int block) const;

    auto operator<=>(const BlocksState&) const = default;

private:
    std::vector<std::vector<int>> stacks_;
    int block_count_ = 0;
};

std::optional<BlocksState> apply_blocks_action(const BlocksState& state, BlocksAction act);

/// Every legal move from `state`, in deterministic order.
std::vector<BlocksAction> legal_blocks_actions(const BlocksState& state);

/// Number of blocks whose support differs between two states.
int blocks_difference(const BlocksState& a, const BlocksState& b);

/// Multi-objective traversal map; objectives are visited in listed order.
struct GtbMap
{
    GridMap grid;  ///< start = agent start; goal mirrors the last objective
    std::vector<Position> objectives;
    int max_errors = 0;

    bool operator==(const GtbMap&) const = default;
};

void validate_gtb(const GtbMap& map);

struct GtbStepResult
{
    Position pos;
    int errors = 0;
    bool objective_hit = false;
};

/// Invalid moves keep the position and count one error; entering the pending
/// objective marks it hit.
GtbStepResult gtb_step(const GtbMap& map, Position pos, GridAction act, int errors_so_far,
                       std::size_t pending_objective);

using Action = std::variant<GridAction, BlocksAction>;

struct Plan
{
    std::vector<Action> actions;

    std::size_t length() const { return actions.size(); }
    bool operator==(const Plan&) const = default;
};

/// "UDLR" rendering of a grid plan; throws if the plan holds block moves.
std::string move_string(const Plan& plan);
std::optional<Plan> parse_move_string(const std::string& moves);

/// Replays a grid plan; nullopt if any move is illegal.
std::optional<Position> replay(const GridMap& map, Position from, const Plan& plan);
std::optional<BlocksState> replay(const BlocksState& from, const Plan& plan);

/// Cells visited by a grid plan, including `from`.
std::vector<Position> plan_cells(Position from, const Plan& plan);

}  // namespace hsrl
