#include "hsrl/planner.hpp"

#include <algorithm>
#include <set>

#include "hsrl/error.hpp"
#include "hsrl/oracles.hpp"

namespace hsrl {

WaypointSequence propose_waypoints(const Policy& policy, const Task& task, int max_depth, ProposalMode mode,
                                   double temperature, Rng& rng)
{
    const State goal = task.goal();
    WaypointSequence seq;
    seq.states.push_back(task.start());
    const double temp = mode == ProposalMode::Greedy ? kGreedy : temperature;

    int intermediates = 0;
    while (intermediates < max_depth) {
        std::vector<PolicyOutput> outs;
        try {
            outs = policy.sample(make_context(task, seq.states), 1, temp, rng);
        } catch (const EmptyCandidateSet&) {
            break;
        }
        if (outs.empty() || !outs.front().state)
            break;
        State next = std::move(*outs.front().state);
        if (next == seq.states.back())
            continue;
        seq.states.push_back(std::move(next));
        if (seq.states.back() == goal)
            break;
        ++intermediates;
    }
    if (seq.states.back() != goal)
        seq.states.push_back(goal);
    return seq;
}

GridBox span_box(const GridMap& map, Position a, Position b, int margin)
{
    return {std::max(0, std::min(a.row, b.row) - margin), std::max(0, std::min(a.col, b.col) - margin),
            std::min(map.height() - 1, std::max(a.row, b.row) + margin),
            std::min(map.width() - 1, std::max(a.col, b.col) + margin)};
}

GridBox full_box(const GridMap& map)
{
    return {0, 0, map.height() - 1, map.width() - 1};
}

GridBox box_union(const GridBox& x, const GridBox& y)
{
    return {std::min(x.row0, y.row0), std::min(x.col0, y.col0), std::max(x.row1, y.row1), std::max(x.col1, y.col1)};
}

SubGrid crop(const GridMap& map, const GridBox& box, Position a, Position b)
{
    const Position offset{box.row0, box.col0};
    GridMap sub(box.cols(), box.rows(), {a.row - offset.row, a.col - offset.col},
                {b.row - offset.row, b.col - offset.col});
    for (int r = box.row0; r <= box.row1; ++r)
        for (int c = box.col0; c <= box.col1; ++c)
            if (map.is_obstacle({r, c}))
                sub.set_obstacle({r - offset.row, c - offset.col});
    return {std::move(sub), offset};
}

SubGrid build_sub_env(const GridMap& map, Position a, Position b, int margin)
{
    return crop(map, span_box(map, a, b, margin), a, b);
}

BlocksSubEnv build_blocks_sub_env(const BlocksState& initial, const BlocksState& target)
{
    const int n = initial.block_count();
    std::vector<bool> relevant(static_cast<std::size_t>(n) + 1, false);
    for (int b = 1; b <= n; ++b)
        relevant[b] = initial.support(b) != target.support(b);

    // close under "stacked above a relevant block" in either state
    auto close_over = [&](const BlocksState& s) {
        bool changed = false;
        for (const auto& stack : s.stacks()) {
            bool above = false;
            for (int b : stack) {
                if (above && !relevant[b]) {
                    relevant[b] = true;
                    changed = true;
                }
                above = above || relevant[b];
            }
        }
        return changed;
    };
    while (close_over(initial) | close_over(target)) {
    }

    // keep whole initial stacks that hold a relevant block or the target
    // support of one
    std::vector<bool> keep_stack(initial.stacks().size(), false);
    for (int b = 1; b <= n; ++b) {
        if (!relevant[b])
            continue;
        keep_stack[initial.locate(b).first] = true;
        if (int sup = target.support(b); sup != kTable)
            keep_stack[initial.locate(sup).first] = true;
    }

    BlocksSubEnv env;
    std::vector<int> kept;
    for (std::size_t i = 0; i < keep_stack.size(); ++i)
        if (keep_stack[i])
            kept.insert(kept.end(), initial.stacks()[i].begin(), initial.stacks()[i].end());
    std::sort(kept.begin(), kept.end());
    std::vector<int> to_local(static_cast<std::size_t>(n) + 1, 0);
    for (std::size_t i = 0; i < kept.size(); ++i)
        to_local[kept[i]] = static_cast<int>(i) + 1;

    auto restrict = [&](const BlocksState& s) {
        std::vector<std::vector<int>> stacks;
        for (const auto& stack : s.stacks()) {
            std::vector<int> local;
            for (int b : stack)
                if (to_local[b] != 0)
                    local.push_back(to_local[b]);
            stacks.push_back(std::move(local));
        }
        return BlocksState(std::move(stacks));
    };
    env.initial = restrict(initial);
    env.target = restrict(target);
    env.to_original = kept;
    for (int b = 1; b <= n; ++b)
        if (relevant[b])
            env.relevant.push_back(b);
    return env;
}

namespace {

std::optional<Plan> solve_grid_oracle(const Task& task, const SubTask& sub)
{
    const GridMap& map = task.grid();
    const Position a = std::get<Position>(sub.from);
    const Position b = std::get<Position>(sub.to);
    const GridBox box = sub.full_env || !sub.box ? full_box(map) : *sub.box;
    SubGrid local = crop(map, box, a, b);
    OptimalResult res = astar_grid(local.map, local.map.start(), local.map.goal());
    if (!res.reachable())
        return std::nullopt;
    // moves are translation invariant
    return res.plan;
}

std::optional<Plan> solve_blocks_oracle(const Task&, const SubTask& sub, int max_depth)
{
    const auto& from = std::get<BlocksState>(sub.from);
    const auto& to = std::get<BlocksState>(sub.to);
    if (sub.full_env) {
        OptimalResult res = blocks_optimal(from, to, max_depth);
        return res.plan;
    }
    BlocksSubEnv env = build_blocks_sub_env(from, to);
    OptimalResult res = blocks_optimal(env.initial, env.target, max_depth);
    if (!res.plan)
        return std::nullopt;
    Plan global;
    for (const Action& a : res.plan->actions) {
        BlocksAction m = std::get<BlocksAction>(a);
        m.block = env.to_original[static_cast<std::size_t>(m.block - 1)];
        if (m.dest != kTable)
            m.dest = env.to_original[static_cast<std::size_t>(m.dest - 1)];
        global.actions.push_back(m);
    }
    return global;
}

bool reaches(const Task& task, const SubTask& sub, const Plan& plan)
{
    if (task.is_grid()) {
        auto end = replay(task.grid(), std::get<Position>(sub.from), plan);
        if (!end || *end != std::get<Position>(sub.to))
            return false;
        if (sub.full_env || !sub.box)
            return true;
        // the plan must stay inside the sub-environment
        for (Position p : plan_cells(std::get<Position>(sub.from), plan))
            if (!sub.box->contains(p))
                return false;
        return true;
    }
    auto end = replay(std::get<BlocksState>(sub.from), plan);
    return end && *end == std::get<BlocksState>(sub.to);
}

}  // namespace

std::optional<Plan> OracleSolver::solve(const Task& task, const SubTask& sub, int) const
{
    if (task.is_grid())
        return solve_grid_oracle(task, sub);
    return solve_blocks_oracle(task, sub, blocks_max_depth_);
}

std::string RemoteSolver::context_for(const Task& task, const SubTask& sub)
{
    std::string out = "task=";
    out += to_string(task.kind);
    out += "\nsubtask=";
    if (task.is_grid()) {
        const GridMap& map = task.grid();
        const GridBox box = sub.full_env || !sub.box ? full_box(map) : *sub.box;
        SubGrid local = crop(map, box, std::get<Position>(sub.from), std::get<Position>(sub.to));
        out += "\n";
        out += serialize_grid(local.map);
        out += "\nanswer=moves over U,D,L,R";
    } else {
        out += "\nfrom=" + format_state(sub.from) + "\nto=" + format_state(sub.to);
        out += "\nanswer=JSON list of [block, destination] moves, destination 0 = table";
    }
    return out;
}

std::optional<Plan> RemoteSolver::solve(const Task& task, const SubTask& sub, int budget) const
{
    if (sub.from == sub.to)
        return Plan{};
    const std::string context = context_for(task, sub);
    for (int attempt = 0; attempt < std::max(1, budget); ++attempt) {
        std::vector<remote::Sample> samples;
        try {
            samples = client_.generate({context, 1, 1.0, max_tokens_});
        } catch (const RemoteError&) {
            continue;
        }
        for (const remote::Sample& s : samples) {
            std::optional<Plan> plan;
            if (task.is_grid()) {
                plan = parse_move_string(s.text);
            } else {
                auto j = nlohmann::json::parse(s.text, nullptr, false);
                if (!j.is_discarded() && j.is_array()) {
                    Plan p;
                    bool ok = true;
                    for (const auto& m : j) {
                        if (!m.is_array() || m.size() != 2 || !m[0].is_number_integer() || !m[1].is_number_integer()) {
                            ok = false;
                            break;
                        }
                        p.actions.push_back(BlocksAction{m[0].get<int>(), m[1].get<int>()});
                    }
                    if (ok)
                        plan = std::move(p);
                }
            }
            if (plan && reaches(task, sub, *plan))
                return plan;
        }
    }
    return std::nullopt;
}

std::optional<Plan> solve_subtask(const Task& task, const SubTask& sub, const LowLevelSolver& solver, int budget)
{
    if (sub.from == sub.to)
        return Plan{};
    auto plan = solver.solve(task, sub, budget);
    if (plan && !reaches(task, sub, *plan))
        return std::nullopt;
    return plan;
}

std::vector<SubTask> make_subtasks(const Task& task, const WaypointSequence& waypoints, const PlannerConfig& cfg)
{
    std::vector<SubTask> tasks;
    for (std::size_t i = 1; i < waypoints.states.size(); ++i) {
        SubTask sub{waypoints.states[i - 1], waypoints.states[i], std::nullopt, false, 0};
        if (task.is_grid())
            sub.box = span_box(task.grid(), std::get<Position>(sub.from), std::get<Position>(sub.to), cfg.margin);
        tasks.push_back(std::move(sub));
    }
    return tasks;
}

std::vector<SubTask> expand_and_merge(const Task& task, std::vector<SubTask> tasks, std::size_t failed_index)
{
    if (failed_index >= tasks.size())
        throw Error("expand_and_merge: failed index out of range");
    if (tasks.size() == 1) {
        SubTask& only = tasks.front();
        only.full_env = true;
        if (task.is_grid())
            only.box = full_box(task.grid());
        ++only.expansion_level;
        return tasks;
    }
    const std::size_t first = failed_index + 1 < tasks.size() ? failed_index : failed_index - 1;
    const SubTask& a = tasks[first];
    const SubTask& b = tasks[first + 1];
    SubTask merged{a.from, b.to, std::nullopt, a.full_env || b.full_env,
                   std::max(a.expansion_level, b.expansion_level) + 1};
    if (task.is_grid())
        merged.box = merged.full_env ? full_box(task.grid()) : box_union(*a.box, *b.box);
    tasks[first] = std::move(merged);
    tasks.erase(tasks.begin() + static_cast<std::ptrdiff_t>(first) + 1);
    return tasks;
}

std::optional<StitchedPlan> stitch_waypoints(const Task& task, const WaypointSequence& waypoints,
                                             const LowLevelSolver& solver, const PlannerConfig& cfg)
{
    StitchedPlan out;
    out.waypoints = waypoints;
    std::vector<SubTask> tasks = make_subtasks(task, waypoints, cfg);
    std::vector<Plan> plans;

    std::size_t i = 0;
    while (i < tasks.size()) {
        if (auto plan = solve_subtask(task, tasks[i], solver, cfg.subtask_budget)) {
            plans.push_back(std::move(*plan));
            ++i;
            continue;
        }
        if (!cfg.merging || (tasks.size() == 1 && tasks.front().full_env))
            return std::nullopt;
        const bool backward = tasks.size() > 1 && i + 1 == tasks.size();
        tasks = expand_and_merge(task, std::move(tasks), i);
        ++out.expansions_used;
        if (backward) {
            --i;
            plans.pop_back();
        }
    }

    for (const Plan& p : plans) {
        out.per_subtask_lengths.push_back(static_cast<int>(p.length()));
        out.plan.actions.insert(out.plan.actions.end(), p.actions.begin(), p.actions.end());
    }

    if (task.is_grid()) {
        auto end = replay(task.grid(), task.grid().start(), out.plan);
        if (!end || *end != task.grid().goal())
            return std::nullopt;
    } else {
        auto end = replay(task.blocks().initial, out.plan);
        if (!end || *end != task.blocks().goal)
            return std::nullopt;
    }
    return out;
}

std::optional<StitchedPlan> hsrl_plan(const Task& task, const Policy& policy, const LowLevelSolver& solver,
                                      const PlannerConfig& cfg, ProposalMode mode, Rng& rng)
{
    WaypointSequence wps = propose_waypoints(policy, task, cfg.max_depth, mode, cfg.temperature, rng);
    return stitch_waypoints(task, wps, solver, cfg);
}

}  // namespace hsrl
