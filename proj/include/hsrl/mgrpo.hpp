#pragma once

// M-GRPO: sibling-relative node advantages over a search group, a clipped
// GRPO surrogate on the per-trajectory advantage, and the outer training
// loop that interleaves tree search with policy updates.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsrl/search.hpp"

namespace hsrl {

struct AdvantageRecord
{
    Eigen::MatrixXd node_q;           ///< M x T_max, Q of s_{m,n}; 0 past a trajectory's end
    Eigen::MatrixXd node_advantages;  ///< M x T_max, Q minus the mean Q of its siblings
    Eigen::VectorXd trajectory_advantages;  ///< mean of each row over its own length
    std::vector<int> lengths;               ///< T_m
};

/// Siblings of s_{m,n} are the depth-n nodes of every trajectory that shares
/// its prefix, i.e. has the same parent node; merged nodes count once per
/// trajectory. There is no division by the standard deviation, so groups of
/// identical trajectories give exactly zero. Throws DegenerateGroup for fewer
/// than two trajectories.
AdvantageRecord fine_grained_advantages(const SearchTree& tree, const std::vector<Trajectory>& group);

enum class LrSchedule { Constant, Cosine };

struct TrainConfig
{
    double learning_rate = 0.05;
    LrSchedule lr_schedule = LrSchedule::Cosine;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int epochs = 1;
    int batch_size = 1;  ///< groups per optimiser step
    double clip_epsilon = 0.2;
    double kl_coefficient = 0.0;
    int generations_m = 8;
    double sample_temperature = 1.0;
    std::uint64_t seed = 0;
    int probe_every = 50;    ///< iterations between probe evaluations (0: only at the end)
    int probe_samples = 4;   ///< sampled plans per probe instance
};

void validate(const TrainConfig& cfg);

/// One trajectory's decisions and its advantage A(tau).
struct TrajectoryBatch
{
    std::vector<DecisionRecord> decisions;
    double advantage = 0.0;
};

/// mean_i mean_t [ min(r A_i, clip(r, 1-eps, 1+eps) A_i) - beta KL_t(pi || pi_old) ],
/// r = pi(choice) / pi_old(choice). Synthetic-policy decisions only.
double grpo_objective(const Eigen::VectorXd& weights, const Eigen::VectorXd& old_weights,
                      std::span<const TrajectoryBatch> batch, const TrainConfig& cfg);

/// Analytic gradient of grpo_objective with respect to `weights`.
Eigen::VectorXd grpo_gradient(const Eigen::VectorXd& weights, const Eigen::VectorXd& old_weights,
                              std::span<const TrajectoryBatch> batch, const TrainConfig& cfg);

struct AdamState
{
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::int64_t step = 0;
};

double scheduled_lr(const TrainConfig& cfg, std::int64_t step, std::int64_t total_steps);

struct UpdateStats
{
    double loss = 0.0;
    double mean_ratio = 1.0;
    double grad_norm = 0.0;
    bool applied = true;  ///< false: non-finite gradient, parameters untouched
};

struct UpdateResult
{
    SoftmaxPolicyParams params;
    UpdateStats stats;
};

/// One Adam step on the negated surrogate, starting from pi_old = `params`.
UpdateResult grpo_update(const SoftmaxPolicyParams& params, std::span<const TrajectoryBatch> batch,
                         const TrainConfig& cfg, AdamState& adam, std::int64_t total_steps = 0);

struct TrainingLogRow
{
    int iteration = 0;
    std::string instance_id;
    double mean_reward = 0.0;
    double mean_abs_advantage = 0.0;
    double loss = 0.0;
    double grad_norm = 0.0;
    std::optional<double> probe_cr;
    std::optional<double> probe_or;
};

struct TrainingLog
{
    std::vector<TrainingLogRow> rows;
    std::vector<std::string> skipped;  ///< instances dropped with the reason

    void write_csv(std::ostream& out) const;
};

struct ProbeResult
{
    double cr = 0.0;
    double optimal_rate = 0.0;
    double mean_reward = 0.0;
};

/// Sampled hierarchical planning on held-out tasks with the exact low-level
/// solver; seeds depend only on `seed` and the task index.
ProbeResult evaluate_probe(const Policy& policy, const std::vector<Task>& probe, const PlannerConfig& planner,
                           const RewardConfig& reward, int samples_per_task, std::uint64_t seed);

struct TrainResult
{
    SoftmaxPolicyParams params;
    TrainingLog log;
    std::int64_t train_step = 0;  ///< optimiser steps taken, including any resumed count
};

struct TrainOptions
{
    std::vector<Task> probe;
    std::int64_t start_step = 0;  ///< resume: optimiser steps already taken
    /// total optimiser steps for the cosine schedule; 0 estimates it from the
    /// instance count and max_depth
    std::int64_t schedule_steps = 0;
};

/// Runs the search-and-update loop for every instance (each for at most
/// search.max_iterations iterations or until the root reaches the goal),
/// repeated for train.epochs passes.
TrainResult train(const std::vector<Task>& instances, const SoftmaxPolicy& initial, const SearchConfig& search,
                  const TrainConfig& train_cfg, const RewardConfig& reward, const PlannerConfig& planner,
                  const TrainOptions& options = {});

/// Same loop against a remote policy; updates are sent to /v1/update with
/// the trajectory advantages. Throws UpdateUnsupported from an
/// inference-only server.
TrainingLog train_remote(const std::vector<Task>& instances, const remote::RemotePolicy& policy,
                         const SearchConfig& search, const TrainConfig& train_cfg, const RewardConfig& reward,
                         const PlannerConfig& planner);

}  // namespace hsrl
