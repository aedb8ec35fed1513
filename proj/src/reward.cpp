#include "hsrl/reward.hpp"

#include <cmath>
#include <cstdlib>
#include <set>

namespace hsrl {

int expected_anchors(const RewardConfig& cfg, int optimal_length)
{
    if (cfg.anchors_expected)
        return *cfg.anchors_expected;
    return (optimal_length + 2) / 3;
}

double anchor_base_quality(std::span<const State> route, int reference_length, const RewardConfig& cfg)
{
    long sum = 0;
    for (std::size_t i = 1; i < route.size(); ++i)
        sum += state_distance(route[i - 1], route[i]);
    return cfg.basic_quality - static_cast<double>(std::labs(sum - reference_length));
}

std::map<State, double> anchor_consensus(std::span<const std::optional<AnchorList>> anchors,
                                         std::span<const double> base_quality)
{
    std::map<State, std::pair<double, int>> acc;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (!anchors[i])
            continue;
        // membership, not multiplicity
        std::set<State> unique(anchors[i]->begin(), anchors[i]->end());
        for (const State& a : unique) {
            auto& [sum, count] = acc[a];
            sum += base_quality[i];
            ++count;
        }
    }
    std::map<State, double> out;
    for (const auto& [a, sc] : acc)
        out.emplace(a, sc.first / sc.second);
    return out;
}

double completion_raw_score(const AnchorList& anchors, const std::map<State, double>& consensus, int anchors_expected,
                            const RewardConfig& cfg)
{
    double z = 0.0;
    for (const State& a : anchors)
        z += consensus.at(a);
    const int excess = std::max(0, static_cast<int>(anchors.size()) - anchors_expected);
    return z - cfg.anchor_alpha * excess;
}

double shaped_reward(std::optional<double> z, const RewardConfig& cfg)
{
    if (!z)
        return cfg.parse_fail_penalty;
    if (*z == 0.0)
        return 0.0;
    return std::copysign(std::pow(std::abs(*z), cfg.power), *z);
}

double composite_reward(const RewardInputs& in, const RewardConfig& cfg)
{
    if (!in.z)
        return cfg.parse_fail_penalty;
    const double shaped = shaped_reward(in.z, cfg);
    if (!in.reached_goal)
        return cfg.failure_reward + shaped;
    const int excess = cfg.length_mode == LengthPenaltyMode::StitchedPlan
                           ? std::max(0, in.executed_length - in.optimal_length)
                           : std::max(0, in.anchor_count - in.anchors_expected);
    return shaped - cfg.length_penalty_per_step * excess;
}

std::vector<CompletionOutcome> score_group(const Task& task, int optimal_length,
                                           std::span<const std::optional<WaypointSequence>> completions,
                                           const LowLevelSolver& solver, const PlannerConfig& planner,
                                           const RewardConfig& cfg)
{
    const std::size_t m = completions.size();
    std::vector<CompletionOutcome> out(m);
    std::vector<std::optional<AnchorList>> anchors(m);
    std::vector<double> base(m, 0.0);
    const int expected = expected_anchors(cfg, optimal_length);

    for (std::size_t i = 0; i < m; ++i) {
        if (!completions[i])
            continue;
        const auto& states = completions[i]->states;
        out[i].parsed = true;
        anchors[i] = AnchorList(states.begin() + 1, states.end() - 1);
        base[i] = anchor_base_quality(states, optimal_length, cfg);
        out[i].base_quality = base[i];
    }
    const auto consensus = anchor_consensus(anchors, base);

    for (std::size_t i = 0; i < m; ++i) {
        if (!completions[i]) {
            out[i].reward = composite_reward({}, cfg);
            continue;
        }
        RewardInputs in;
        in.z = completion_raw_score(*anchors[i], consensus, expected, cfg);
        in.optimal_length = optimal_length;
        in.anchor_count = static_cast<int>(anchors[i]->size());
        in.anchors_expected = expected;
        if (auto plan = stitch_waypoints(task, *completions[i], solver, planner)) {
            in.reached_goal = true;
            in.executed_length = static_cast<int>(plan->plan.length());
            out[i].solved = true;
            out[i].plan_length = in.executed_length;
            out[i].expansions_used = plan->expansions_used;
        }
        out[i].raw_score = *in.z;
        out[i].reward = composite_reward(in, cfg);
    }
    return out;
}

}  // namespace hsrl
