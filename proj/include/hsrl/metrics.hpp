#pragma once

// Aggregate evaluation metrics: completion rate, optimality rate (over all
// instances), Top-5 accuracy and the normalised GTB score.

#include <span>
#include <vector>

namespace hsrl {

struct EpisodeOutcome
{
    bool solved = false;
    int plan_length = 0;
    int optimal_length = 0;
    int final_distance = 0;  ///< Manhattan tiles to the (pending) objective
    int errors = 0;
    int max_errors = 0;
};

struct GtbResult
{
    double reward = 0.0;
    double r_max = 0.0;
    double r_min = 0.0;
    double delta_r = 0.0;
    double normalized = 0.0;  ///< clamped to [0, 1]
    bool clamped = false;
};

/// 200, 100, 50 for d in {2,3}, 25 for {4,5}, -50 for {6,7,8}, -100 beyond.
double gtb_reward_tier(int d);

/// Per-map normalisation; throws DegenerateRange when R_max <= R_min.
GtbResult gtb_normalize(const EpisodeOutcome& outcome);

struct GtbScore
{
    double score = 0.0;  ///< 100 * mean normalised value
    std::vector<GtbResult> per_map;
    int clamped = 0;
};

GtbScore gtb_score(std::span<const EpisodeOutcome> outcomes);

double completion_rate(std::span<const EpisodeOutcome> outcomes);
double optimal_rate(std::span<const EpisodeOutcome> outcomes);
double top5_accuracy(std::span<const EpisodeOutcome> outcomes);

}  // namespace hsrl
