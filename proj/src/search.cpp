#include "hsrl/search.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "hsrl/error.hpp"

namespace hsrl {

void validate(const SearchConfig& cfg)
{
    if (!(cfg.tau >= 0.0))
        throw ConfigError("search.tau", "must be >= 0");
    if (!(cfg.gamma >= 0.0))
        throw ConfigError("search.gamma", "must be >= 0");
    if (!(cfg.u_max > 0.0))
        throw ConfigError("search.u_max", "must be > 0");
    if (!(cfg.c_uct > 0.0))
        throw ConfigError("search.c_uct", "must be > 0");
    if (cfg.group_size < 2)
        throw ConfigError("search.group_size", "must be >= 2");
    if (cfg.max_iterations < 0)
        throw ConfigError("search.max_iterations", "must be >= 0");
    if (cfg.max_depth < 1)
        throw ConfigError("search.max_depth", "must be >= 1");
    if (cfg.rollout_budget < 1)
        throw ConfigError("search.rollout_budget", "must be >= 1");
    if (!(cfg.temperature > 0.0))
        throw ConfigError("search.temperature", "must be > 0");
}

SearchTree::SearchTree(const Task& task, std::uint64_t seed) : task_(&task), rng_(seed)
{
    SearchNode root;
    root.state = task.start();
    nodes_.push_back(std::move(root));
}

NodeId SearchTree::child_with_state(NodeId parent, const std::optional<State>& state, const PriorStats& prior)
{
    for (NodeId c : node(parent).children)
        if (node(c).state == state)
            return c;
    SearchNode child;
    child.state = state;
    child.parent = parent;
    child.prior = prior;
    child.depth = node(parent).depth + 1;
    const auto id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(std::move(child));
    node(parent).children.push_back(id);
    return id;
}

std::vector<State> SearchTree::route_to(NodeId id) const
{
    std::vector<State> rev;
    for (NodeId n = id; n != kNoNode; n = node(n).parent)
        rev.push_back(*node(n).state);
    std::vector<State> route = root_prefix_;
    route.insert(route.end(), rev.rbegin(), rev.rend());
    return route;
}

bool SearchTree::is_terminal(NodeId id, const SearchConfig& cfg) const
{
    const SearchNode& n = node(id);
    return !n.state || n.failed || *n.state == task_->goal() || n.depth >= cfg.max_depth;
}

void SearchTree::reroot(NodeId id)
{
    if (id == root())
        return;
    std::vector<State> above = route_to(node(id).parent);
    // preorder copy keeps children in creation order
    std::vector<SearchNode> kept;
    std::vector<std::pair<NodeId, NodeId>> stack{{id, kNoNode}};
    while (!stack.empty()) {
        auto [old_id, new_parent] = stack.back();
        stack.pop_back();
        SearchNode copy = node(old_id);
        const auto new_id = static_cast<NodeId>(kept.size());
        copy.parent = new_parent;
        std::vector<NodeId> old_children = std::move(copy.children);
        copy.children.clear();
        kept.push_back(std::move(copy));
        if (new_parent != kNoNode)
            kept[static_cast<std::size_t>(new_parent)].children.push_back(new_id);
        for (auto it = old_children.rbegin(); it != old_children.rend(); ++it)
            stack.emplace_back(*it, new_id);
    }
    nodes_ = std::move(kept);
    root_prefix_ = std::move(above);
}

double refined_uct_score(const SearchNode& child, const SearchNode& parent, const SearchConfig& cfg)
{
    if (child.visits == 0)
        return std::numeric_limits<double>::infinity();
    const double exploit = child.prior.confidence * child.q();
    const double explore = cfg.c_uct * child.prior.exploration *
                           std::sqrt(std::log(static_cast<double>(parent.visits)) / child.visits);
    return exploit + explore;
}

namespace {

NodeId best_child(const SearchTree& tree, NodeId parent, const SearchConfig& cfg, bool visited_only)
{
    const SearchNode& p = tree.node(parent);
    NodeId best = kNoNode;
    double best_score = -std::numeric_limits<double>::infinity();
    for (NodeId c : p.children) {
        if (visited_only && tree.node(c).visits == 0)
            continue;
        const double s = refined_uct_score(tree.node(c), p, cfg);
        if (best == kNoNode || s > best_score) {
            best = c;
            best_score = s;
        }
    }
    return best;
}

double sequence_logprob(const PolicyOutput& o)
{
    return std::accumulate(o.logprobs.begin(), o.logprobs.end(), 0.0);
}

}  // namespace

NodeId select_leaf(const SearchTree& tree, const SearchConfig& cfg)
{
    NodeId n = tree.root();
    while (!tree.is_terminal(n, cfg) && tree.node(n).expanded && !tree.node(n).children.empty())
        n = best_child(tree, n, cfg, false);
    return n;
}

std::vector<Trajectory> expand_group(SearchTree& tree, NodeId leaf, const Policy& policy, const SearchConfig& cfg)
{
    if (tree.is_terminal(leaf, cfg))
        throw Error("expand_group: leaf is terminal");

    auto propose = [&](NodeId at, int m) {
        PolicyContext ctx = make_context(tree.task(), tree.route_to(at));
        try {
            auto outs = policy.sample(ctx, m, cfg.temperature, tree.rng());
            return std::make_pair(ctx.serialize(), std::move(outs));
        } catch (const EmptyCandidateSet&) {
            tree.node(at).failed = true;
            throw;
        }
    };

    auto [leaf_context, first] = propose(leaf, cfg.group_size);
    tree.node(leaf).expanded = true;

    std::vector<Trajectory> group;
    group.reserve(first.size());
    for (PolicyOutput& out : first) {
        Trajectory traj;
        NodeId at = leaf;
        std::string context = leaf_context;
        PolicyOutput current = std::move(out);
        while (true) {
            const PriorStats prior = make_prior(avg_log_likelihood(current), cfg.tau, cfg.gamma, cfg.u_max);
            const NodeId child = tree.child_with_state(at, current.state, prior);
            traj.decisions.push_back({std::move(context), current.raw_text, sequence_logprob(current),
                                      cfg.temperature, current.candidates, current.choice});
            traj.nodes.push_back(child);
            at = child;
            if (tree.is_terminal(at, cfg))
                break;
            try {
                auto [ctx, outs] = propose(at, 1);
                context = std::move(ctx);
                current = std::move(outs.front());
            } catch (const EmptyCandidateSet&) {
                break;
            }
        }
        group.push_back(std::move(traj));
    }
    return group;
}

std::optional<WaypointSequence> completion_of(const SearchTree& tree, NodeId end)
{
    if (!tree.node(end).state)
        return std::nullopt;
    WaypointSequence seq{tree.route_to(end), true};
    const State goal = tree.task().goal();
    if (seq.states.back() != goal)
        seq.states.push_back(goal);
    return seq;
}

std::vector<CompletionOutcome> simulate_group(const SearchTree& tree, const std::vector<Trajectory>& group,
                                              int optimal_length, const LowLevelSolver& solver,
                                              const PlannerConfig& planner, const RewardConfig& reward)
{
    std::vector<std::optional<WaypointSequence>> completions;
    completions.reserve(group.size());
    for (const Trajectory& t : group)
        completions.push_back(completion_of(tree, t.nodes.back()));
    return score_group(tree.task(), optimal_length, completions, solver, planner, reward);
}

double simulate_to_goal(const SearchTree& tree, const Trajectory& trajectory, int optimal_length,
                        const LowLevelSolver& solver, const PlannerConfig& planner, const RewardConfig& reward)
{
    return simulate_group(tree, {trajectory}, optimal_length, solver, planner, reward).front().reward;
}

void backpropagate(SearchTree& tree, NodeId end, double reward)
{
    if (!std::isfinite(reward))
        throw Error("backpropagate: reward must be finite");
    for (NodeId n = end; n != kNoNode; n = tree.node(n).parent) {
        SearchNode& node = tree.node(n);
        node.visits += 1;
        node.total_return += reward;
    }
}

NodeId advance_root(SearchTree& tree, const SearchConfig& cfg)
{
    const NodeId best = best_child(tree, tree.root(), cfg, true);
    if (best == kNoNode)
        throw NoVisitedChild("root has no visited child");
    tree.reroot(best);
    return tree.root();
}

void refresh_priors(SearchTree& tree, const Policy& policy, const SearchConfig& cfg)
{
    for (std::size_t i = 1; i < tree.node_count(); ++i) {
        const auto id = static_cast<NodeId>(i);
        const SearchNode& n = tree.node(id);
        if (!n.state || n.parent == kNoNode)
            continue;
        PolicyContext ctx = make_context(tree.task(), tree.route_to(n.parent));
        if (auto ell = policy.score(ctx, *n.state, cfg.temperature))
            tree.node(id).prior = make_prior(*ell, cfg.tau, cfg.gamma, cfg.u_max);
    }
}

void dump_tree(const SearchTree& tree, std::ostream& out)
{
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        const SearchNode& n = tree.node(static_cast<NodeId>(i));
        nlohmann::json j = {{"id", i},
                            {"parent", n.parent},
                            {"state", n.state ? format_state(*n.state) : std::string("<unparseable>")},
                            {"N", n.visits},
                            {"W", n.total_return},
                            {"ell", n.prior.ell},
                            {"c", n.prior.confidence},
                            {"u", n.prior.exploration},
                            {"depth", n.depth}};
        out << j.dump() << '\n';
    }
}

}  // namespace hsrl
