#pragma once

// Monte Carlo tree search over intermediate-state sequences. Node selection
// uses a prior-weighted UCT score:
//
//   U(child) = c(child) * Q(child) + C * u(child) * sqrt(ln N(parent) / N(child))
//
// with c = exp(tau * ell) and u = 1 + gamma * clamp(-ell, 0, u_max) frozen
// from the proposing sample's mean log-likelihood ell.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "hsrl/policy.hpp"
#include "hsrl/reward.hpp"

namespace hsrl {

struct SearchConfig
{
    double tau = 1.0;
    double gamma = 0.4;
    double u_max = 5.0;
    double c_uct = 1.414;
    int group_size = 8;
    int max_iterations = 200;
    int max_depth = 6;         ///< intermediate states per sequence
    int rollout_budget = 512;  ///< rollouts per instance before training moves on
    double temperature = 1.0;  ///< sampling temperature during expansion
    bool recompute_priors = false;
};

/// Throws ConfigError on a field outside its domain.
void validate(const SearchConfig& cfg);

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct SearchNode
{
    std::optional<State> state;  ///< nullopt: the proposal did not parse
    NodeId parent = kNoNode;
    std::vector<NodeId> children;  ///< creation order
    int visits = 0;
    double total_return = 0.0;
    PriorStats prior;
    int depth = 0;  ///< intermediate states from the original start
    bool expanded = false;  ///< a group was expanded from this node
    bool failed = false;    ///< the policy had no candidate here

    double q() const { return visits > 0 ? total_return / visits : 0.0; }
};

/// One generation decision made while building a trajectory; enough to
/// re-evaluate its probability under updated parameters.
struct DecisionRecord
{
    std::string context;
    std::string completion;
    double old_logprob = 0.0;  ///< sequence log-probability at sampling time
    double temperature = 1.0;
    std::shared_ptr<const CandidateSet> candidates;  ///< synthetic policy only
    int choice = -1;
};

struct Trajectory
{
    std::vector<NodeId> nodes;  ///< s_1 .. s_T below the expanded leaf
    std::vector<DecisionRecord> decisions;
};

class SearchTree
{
public:
    SearchTree(const Task& task, std::uint64_t seed);

    const Task& task() const { return *task_; }
    NodeId root() const { return 0; }
    const SearchNode& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
    SearchNode& node(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
    std::size_t node_count() const { return nodes_.size(); }
    Rng& rng() { return rng_; }

    /// Child of `parent` holding `state`; duplicates merge into one node.
    NodeId child_with_state(NodeId parent, const std::optional<State>& state, const PriorStats& prior);

    /// States from the original start to `id` (which must hold a state).
    std::vector<State> route_to(NodeId id) const;

    bool is_terminal(NodeId id, const SearchConfig& cfg) const;

    /// Makes `id` the root, discarding everything outside its subtree.
    void reroot(NodeId id);

private:
    const Task* task_;
    std::vector<SearchNode> nodes_;
    std::vector<State> root_prefix_;  ///< states above the current root
    Rng rng_;
};

/// +infinity for an unvisited child.
double refined_uct_score(const SearchNode& child, const SearchNode& parent, const SearchConfig& cfg);

/// Descends by argmax score (ties: creation order) to the first node that is
/// not yet expanded, terminal, or childless.
NodeId select_leaf(const SearchTree& tree, const SearchConfig& cfg);

/// Draws group_size proposals at `leaf` and rolls each one out with single
/// samples down to the goal or max_depth, inserting every state into the
/// tree. Throws EmptyCandidateSet (and marks the leaf failed) when the policy
/// has nothing to propose at the leaf.
std::vector<Trajectory> expand_group(SearchTree& tree, NodeId leaf, const Policy& policy, const SearchConfig& cfg);

/// Full route (start .. goal) ending at `end`, or nullopt when unparseable.
std::optional<WaypointSequence> completion_of(const SearchTree& tree, NodeId end);

/// Stitches and rewards every trajectory of a group.
std::vector<CompletionOutcome> simulate_group(const SearchTree& tree, const std::vector<Trajectory>& group,
                                              int optimal_length, const LowLevelSolver& solver,
                                              const PlannerConfig& planner, const RewardConfig& reward);

/// Reward of a single trajectory (a group of one).
double simulate_to_goal(const SearchTree& tree, const Trajectory& trajectory, int optimal_length,
                        const LowLevelSolver& solver, const PlannerConfig& planner, const RewardConfig& reward);

/// Adds one rollout with `reward` to `end` and every ancestor up to the root.
void backpropagate(SearchTree& tree, NodeId end, double reward);

/// Reroots at the best visited child of the root. Throws NoVisitedChild.
NodeId advance_root(SearchTree& tree, const SearchConfig& cfg);

/// Re-scores every node's prior under the current policy (when it can).
void refresh_priors(SearchTree& tree, const Policy& policy, const SearchConfig& cfg);

/// One JSON object per line: id, parent, state, N, W, ell, c, u, depth.
void dump_tree(const SearchTree& tree, std::ostream& out);

}  // namespace hsrl
