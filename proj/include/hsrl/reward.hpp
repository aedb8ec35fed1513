#pragma once

// Composite completion reward: per-completion anchor quality against the
// optimal path length, group consensus per anchor, an anchor-count penalty,
// a signed power transform, and a penalty on stitched-plan length.

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hsrl/planner.hpp"

namespace hsrl {

enum class LengthPenaltyMode { StitchedPlan, WaypointCount };

struct RewardConfig
{
    double parse_fail_penalty = -10.0;
    double power = 2.0;
    double anchor_alpha = 10.0;
    std::optional<int> anchors_expected;  ///< nullopt: ceil(optimal_length / 3)
    double basic_quality = 10.0;
    double length_penalty_per_step = 3.0;
    double failure_reward = -5.0;
    LengthPenaltyMode length_mode = LengthPenaltyMode::StitchedPlan;
};

int expected_anchors(const RewardConfig& cfg, int optimal_length);

/// r = basic_quality - |dist_sum(route) - reference_length| where route is
/// [start, anchors..., goal] and dist is Manhattan (cells) or the support
/// difference (block states).
double anchor_base_quality(std::span<const State> route, int reference_length, const RewardConfig& cfg);

using AnchorList = std::vector<State>;

/// Mean base quality of the completions containing each anchor. Completions
/// given as nullopt (unparseable) are skipped.
std::map<State, double> anchor_consensus(std::span<const std::optional<AnchorList>> anchors,
                                         std::span<const double> base_quality);

/// z = sum of consensus values - alpha * max(0, |anchors| - expected).
double completion_raw_score(const AnchorList& anchors, const std::map<State, double>& consensus, int anchors_expected,
                            const RewardConfig& cfg);

/// nullopt z is the parse-failure case; otherwise sign(z) |z|^p.
double shaped_reward(std::optional<double> z, const RewardConfig& cfg);

struct RewardInputs
{
    std::optional<double> z;  ///< nullopt: unparseable completion
    bool reached_goal = false;
    int executed_length = 0;
    int optimal_length = 0;
    int anchor_count = 0;
    int anchors_expected = 0;
};

double composite_reward(const RewardInputs& in, const RewardConfig& cfg);

struct CompletionOutcome
{
    double reward = 0.0;
    bool parsed = false;
    bool solved = false;
    int plan_length = 0;
    int expansions_used = 0;
    double base_quality = 0.0;
    double raw_score = 0.0;
};

/// Rewards for one group of completions (full routes start..goal, or nullopt
/// when unparseable). Consensus is taken across the group.
std::vector<CompletionOutcome> score_group(const Task& task, int optimal_length,
                                           std::span<const std::optional<WaypointSequence>> completions,
                                           const LowLevelSolver& solver, const PlannerConfig& planner,
                                           const RewardConfig& cfg);

}  // namespace hsrl
