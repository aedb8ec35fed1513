#include "hsrl/metrics.hpp"

#include <algorithm>

#include "hsrl/error.hpp"

namespace hsrl {

namespace {

template <typename Pred>
double fraction(std::span<const EpisodeOutcome> outcomes, Pred pred)
{
    if (outcomes.empty())
        throw Error("metrics need at least one outcome");
    const auto hits = std::count_if(outcomes.begin(), outcomes.end(), pred);
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

}  // namespace

double gtb_reward_tier(int d)
{
    if (d < 0)
        throw Error("gtb_reward_tier: negative distance");
    if (d == 0)
        return 200.0;
    if (d == 1)
        return 100.0;
    if (d <= 3)
        return 50.0;
    if (d <= 5)
        return 25.0;
    if (d <= 8)
        return -50.0;
    return -100.0;
}

GtbResult gtb_normalize(const EpisodeOutcome& o)
{
    GtbResult r;
    r.reward = gtb_reward_tier(o.final_distance);
    r.r_max = 200.0 - o.optimal_length;
    r.r_min = -100.0 - o.optimal_length - o.max_errors;
    r.delta_r = r.r_max - r.r_min;
    if (!(r.delta_r > 0.0))
        throw DegenerateRange("GTB range is empty");
    const double raw = (r.reward - o.plan_length - o.errors - r.r_min) / r.delta_r;
    r.normalized = std::clamp(raw, 0.0, 1.0);
    r.clamped = r.normalized != raw;
    return r;
}

GtbScore gtb_score(std::span<const EpisodeOutcome> outcomes)
{
    if (outcomes.empty())
        throw Error("gtb_score needs at least one map");
    GtbScore s;
    double sum = 0.0;
    for (const EpisodeOutcome& o : outcomes) {
        s.per_map.push_back(gtb_normalize(o));
        sum += s.per_map.back().normalized;
        s.clamped += s.per_map.back().clamped ? 1 : 0;
    }
    s.score = 100.0 * sum / static_cast<double>(outcomes.size());
    return s;
}

double completion_rate(std::span<const EpisodeOutcome> outcomes)
{
    return fraction(outcomes, [](const EpisodeOutcome& o) { return o.solved; });
}

double optimal_rate(std::span<const EpisodeOutcome> outcomes)
{
    return fraction(outcomes, [](const EpisodeOutcome& o) { return o.solved && o.plan_length == o.optimal_length; });
}

double top5_accuracy(std::span<const EpisodeOutcome> outcomes)
{
    return fraction(outcomes, [](const EpisodeOutcome& o) { return o.final_distance <= 5; });
}

}  // namespace hsrl
