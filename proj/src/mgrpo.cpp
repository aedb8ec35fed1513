#include "hsrl/mgrpo.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "hsrl/error.hpp"
#include "hsrl/math.hpp"
#include "hsrl/oracles.hpp"

namespace hsrl {

AdvantageRecord fine_grained_advantages(const SearchTree& tree, const std::vector<Trajectory>& group)
{
    const auto m = static_cast<Eigen::Index>(group.size());
    if (m < 2)
        throw DegenerateGroup("advantages need at least two trajectories");

    AdvantageRecord rec;
    Eigen::Index t_max = 0;
    for (const Trajectory& t : group) {
        if (t.nodes.empty())
            throw DegenerateGroup("empty trajectory");
        rec.lengths.push_back(static_cast<int>(t.nodes.size()));
        t_max = std::max<Eigen::Index>(t_max, static_cast<Eigen::Index>(t.nodes.size()));
    }
    rec.node_q = Eigen::MatrixXd::Zero(m, t_max);
    rec.node_advantages = Eigen::MatrixXd::Zero(m, t_max);
    rec.trajectory_advantages = Eigen::VectorXd::Zero(m);

    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index n = 0; n < rec.lengths[i]; ++n) {
            const SearchNode& node = tree.node(group[i].nodes[n]);
            if (node.visits < 1)
                throw Error("advantages require backpropagated nodes");
            rec.node_q(i, n) = node.q();
        }

    for (Eigen::Index n = 0; n < t_max; ++n) {
        // sibling sets: trajectories whose depth-n node hangs off the same parent
        // sums are taken relative to the first member so identical siblings
        // give exactly zero
        struct Siblings
        {
            double ref = 0.0, offset_sum = 0.0;
            int count = 0;
        };
        std::map<NodeId, Siblings> by_parent;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (n >= rec.lengths[i])
                continue;
            Siblings& s = by_parent[tree.node(group[i].nodes[n]).parent];
            if (s.count++ == 0)
                s.ref = rec.node_q(i, n);
            s.offset_sum += rec.node_q(i, n) - s.ref;
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            if (n >= rec.lengths[i])
                continue;
            const Siblings& s = by_parent.at(tree.node(group[i].nodes[n]).parent);
            rec.node_advantages(i, n) = (rec.node_q(i, n) - s.ref) - s.offset_sum / s.count;
        }
    }
    for (Eigen::Index i = 0; i < m; ++i)
        rec.trajectory_advantages[i] = rec.node_advantages.row(i).head(rec.lengths[i]).mean();
    return rec;
}

void validate(const TrainConfig& cfg)
{
    if (!(cfg.learning_rate > 0.0))
        throw ConfigError("train.learning_rate", "must be > 0");
    if (!(cfg.adam_beta1 > 0.0 && cfg.adam_beta1 < 1.0))
        throw ConfigError("train.adam_beta1", "must lie in (0, 1)");
    if (!(cfg.adam_beta2 > 0.0 && cfg.adam_beta2 < 1.0))
        throw ConfigError("train.adam_beta2", "must lie in (0, 1)");
    if (cfg.epochs < 0)
        throw ConfigError("train.epochs", "must be >= 0");
    if (cfg.batch_size < 1)
        throw ConfigError("train.batch_size", "must be >= 1");
    if (!(cfg.clip_epsilon > 0.0))
        throw ConfigError("train.clip_epsilon", "must be > 0");
    if (!(cfg.kl_coefficient >= 0.0))
        throw ConfigError("train.kl_coefficient", "must be >= 0");
    if (cfg.generations_m < 2)
        throw ConfigError("train.generations_m", "must be >= 2");
    if (!(cfg.sample_temperature > 0.0))
        throw ConfigError("train.sample_temperature", "must be > 0");
}

namespace {

struct DecisionTerms
{
    double value;
    double ratio;
    Eigen::VectorXd grad;
};

// Surrogate contribution of one decision and its gradient.
DecisionTerms decision_terms(const Eigen::VectorXd& weights, const Eigen::VectorXd& old_weights,
                             const DecisionRecord& d, double advantage, const TrainConfig& cfg, bool want_grad)
{
    if (!d.candidates || d.choice < 0)
        throw Error("GRPO update needs synthetic-policy decisions");
    const Eigen::MatrixXd& f = d.candidates->features;
    const double temp = d.temperature;
    const Eigen::VectorXd log_p = candidate_log_probs(weights, f, temp);
    const double ratio = std::exp(log_p[d.choice] - d.old_logprob);
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
    const double value_unclipped = ratio * advantage;
    const double value_clipped = clipped * advantage;

    DecisionTerms out{std::min(value_unclipped, value_clipped), ratio, Eigen::VectorXd()};

    Eigen::VectorXd log_q;
    if (cfg.kl_coefficient > 0.0) {
        log_q = candidate_log_probs(old_weights, f, temp);
        out.value -= cfg.kl_coefficient * math::kl_divergence(log_p, log_q);
    }
    if (!want_grad)
        return out;

    const Eigen::VectorXd p = log_p.array().exp().matrix();
    const Eigen::VectorXd mean_f = math::expected_features(f, p);
    out.grad = Eigen::VectorXd::Zero(weights.size());
    // the unclipped branch is the active one exactly when it attains the min
    const bool active = advantage >= 0.0 ? ratio <= 1.0 + cfg.clip_epsilon : ratio >= 1.0 - cfg.clip_epsilon;
    if (active)
        out.grad += advantage * ratio * (f.row(d.choice).transpose() - mean_f) / temp;
    if (cfg.kl_coefficient > 0.0) {
        const Eigen::VectorXd w = p.array() * (log_p - log_q).array();
        out.grad -= cfg.kl_coefficient * (f.transpose() * w - w.sum() * mean_f) / temp;
    }
    return out;
}

template <typename Fn>
void for_each_decision(std::span<const TrajectoryBatch> batch, Fn&& fn)
{
    const double per_traj = 1.0 / static_cast<double>(batch.size());
    for (const TrajectoryBatch& t : batch) {
        if (t.decisions.empty())
            continue;
        const double w = per_traj / static_cast<double>(t.decisions.size());
        for (const DecisionRecord& d : t.decisions)
            fn(d, t.advantage, w);
    }
}

}  // namespace

double grpo_objective(const Eigen::VectorXd& weights, const Eigen::VectorXd& old_weights,
                      std::span<const TrajectoryBatch> batch, const TrainConfig& cfg)
{
    double total = 0.0;
    for_each_decision(batch, [&](const DecisionRecord& d, double adv, double w) {
        total += w * decision_terms(weights, old_weights, d, adv, cfg, false).value;
    });
    return total;
}

Eigen::VectorXd grpo_gradient(const Eigen::VectorXd& weights, const Eigen::VectorXd& old_weights,
                              std::span<const TrajectoryBatch> batch, const TrainConfig& cfg)
{
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(weights.size());
    for_each_decision(batch, [&](const DecisionRecord& d, double adv, double w) {
        grad += w * decision_terms(weights, old_weights, d, adv, cfg, true).grad;
    });
    return grad;
}

double scheduled_lr(const TrainConfig& cfg, std::int64_t step, std::int64_t total_steps)
{
    if (cfg.lr_schedule == LrSchedule::Constant || total_steps <= 0)
        return cfg.learning_rate;
    const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
    return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

UpdateResult grpo_update(const SoftmaxPolicyParams& params, std::span<const TrajectoryBatch> batch,
                         const TrainConfig& cfg, AdamState& adam, std::int64_t total_steps)
{
    UpdateResult res{params, {}};
    const Eigen::VectorXd& w = params.weights;

    double ratio_sum = 0.0;
    int ratio_count = 0;
    for_each_decision(batch, [&](const DecisionRecord& d, double adv, double) {
        ratio_sum += decision_terms(w, w, d, adv, cfg, false).ratio;
        ++ratio_count;
    });
    res.stats.mean_ratio = ratio_count > 0 ? ratio_sum / ratio_count : 1.0;
    res.stats.loss = -grpo_objective(w, w, batch, cfg);
    const Eigen::VectorXd grad = -grpo_gradient(w, w, batch, cfg);
    res.stats.grad_norm = grad.norm();
    if (!math::all_finite(grad) || !std::isfinite(res.stats.loss)) {
        res.stats.applied = false;
        return res;
    }

    if (adam.m.size() != w.size()) {
        adam.m = Eigen::VectorXd::Zero(w.size());
        adam.v = Eigen::VectorXd::Zero(w.size());
    }
    const double lr = scheduled_lr(cfg, adam.step, total_steps);
    ++adam.step;
    adam.m = cfg.adam_beta1 * adam.m + (1.0 - cfg.adam_beta1) * grad;
    adam.v = cfg.adam_beta2 * adam.v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.step));
    const Eigen::VectorXd m_hat = adam.m / bc1;
    const Eigen::VectorXd v_hat = adam.v / bc2;
    res.params.weights = w.array() - lr * m_hat.array() / (v_hat.array().sqrt() + cfg.adam_epsilon);
    return res;
}

void TrainingLog::write_csv(std::ostream& out) const
{
    out << "iteration,instance_id,mean_reward,mean_abs_advantage,loss,grad_norm,probe_cr,probe_or\n";
    auto opt = [](const std::optional<double>& v) {
        std::ostringstream s;
        if (v)
            s << std::setprecision(10) << *v;
        return s.str();
    };
    for (const TrainingLogRow& r : rows) {
        out << r.iteration << ',' << r.instance_id << ',' << std::setprecision(10) << r.mean_reward << ','
            << r.mean_abs_advantage << ',' << r.loss << ',' << r.grad_norm << ',' << opt(r.probe_cr) << ','
            << opt(r.probe_or) << '\n';
    }
}

ProbeResult evaluate_probe(const Policy& policy, const std::vector<Task>& probe, const PlannerConfig& planner,
                           const RewardConfig& reward, int samples_per_task, std::uint64_t seed)
{
    ProbeResult res;
    if (probe.empty() || samples_per_task < 1)
        return res;
    OracleSolver solver(planner.blocks_max_depth);
    int total = 0, solved = 0, optimal = 0;
    double reward_sum = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const Task& task = probe[i];
        const int opt = optimal_length(task, planner.blocks_max_depth);
        for (int s = 0; s < samples_per_task; ++s) {
            Rng rng(mix_seed(seed, i * 1000003ULL + static_cast<std::uint64_t>(s)));
            WaypointSequence wps =
                propose_waypoints(policy, task, planner.max_depth, ProposalMode::Sampled, planner.temperature, rng);
            std::vector<std::optional<WaypointSequence>> one{wps};
            CompletionOutcome out = score_group(task, opt, one, solver, planner, reward).front();
            ++total;
            solved += out.solved ? 1 : 0;
            optimal += (out.solved && out.plan_length == opt) ? 1 : 0;
            reward_sum += out.reward;
        }
    }
    res.cr = static_cast<double>(solved) / total;
    res.optimal_rate = static_cast<double>(optimal) / total;
    res.mean_reward = reward_sum / total;
    return res;
}

namespace {

using Updater = std::function<UpdateStats(std::span<const TrajectoryBatch>)>;
using Prober = std::function<std::optional<ProbeResult>()>;

struct LoopSettings
{
    const SearchConfig& search;
    const TrainConfig& train;
    const RewardConfig& reward;
    const PlannerConfig& planner;
};

void run_training(const std::vector<Task>& instances, const Policy& policy, const LoopSettings& s,
                  const Updater& update, const Prober& probe, TrainingLog& log)
{
    if (s.search.max_iterations == 0 || instances.empty())
        return;
    OracleSolver solver(s.planner.blocks_max_depth);
    std::vector<int> optimal(instances.size(), -1);

    std::vector<TrajectoryBatch> pending;
    int pending_groups = 0;
    int iteration = 0;
    double pending_reward = 0.0, pending_adv = 0.0;

    auto flush = [&](const std::string& instance_id, bool force) {
        if (pending_groups == 0 || (!force && pending_groups < s.train.batch_size))
            return;
        UpdateStats stats = update(pending);
        TrainingLogRow row;
        row.iteration = ++iteration;
        row.instance_id = instance_id;
        row.mean_reward = pending_reward / pending_groups;
        row.mean_abs_advantage = pending_adv / pending_groups;
        row.loss = stats.loss;
        row.grad_norm = stats.grad_norm;
        if (!stats.applied)
            log.skipped.push_back(instance_id + ": non-finite gradient at iteration " + std::to_string(iteration));
        if (s.train.probe_every > 0 && iteration % s.train.probe_every == 0)
            if (auto p = probe()) {
                row.probe_cr = p->cr;
                row.probe_or = p->optimal_rate;
            }
        log.rows.push_back(std::move(row));
        pending.clear();
        pending_groups = 0;
        pending_reward = pending_adv = 0.0;
    };

    for (int epoch = 0; epoch < s.train.epochs; ++epoch) {
        for (std::size_t idx = 0; idx < instances.size(); ++idx) {
            const Task& task = instances[idx];
            if (optimal[idx] < 0)
                optimal[idx] = optimal_length(task, s.planner.blocks_max_depth);
            if (optimal[idx] == kUnreachable) {
                if (epoch == 0)
                    log.skipped.push_back(task.id + ": goal unreachable");
                continue;
            }
            SearchTree tree(task, mix_seed(s.train.seed, static_cast<std::uint64_t>(epoch) * 1000003ULL + idx));
            int rollouts = 0;
            for (int it = 0; it < s.search.max_iterations && !tree.is_terminal(tree.root(), s.search) &&
                             rollouts < s.search.rollout_budget;) {
                const NodeId leaf = select_leaf(tree, s.search);
                if (tree.is_terminal(leaf, s.search)) {
                    Trajectory own{{leaf}, {}};
                    backpropagate(tree, leaf,
                                  simulate_to_goal(tree, own, optimal[idx], solver, s.planner, s.reward));
                    ++rollouts;
                } else {
                    std::vector<Trajectory> group;
                    try {
                        group = expand_group(tree, leaf, policy, s.search);
                    } catch (const EmptyCandidateSet&) {
                        break;
                    }
                    auto outcomes = simulate_group(tree, group, optimal[idx], solver, s.planner, s.reward);
                    double reward_sum = 0.0;
                    for (std::size_t g = 0; g < group.size(); ++g) {
                        backpropagate(tree, group[g].nodes.back(), outcomes[g].reward);
                        reward_sum += outcomes[g].reward;
                    }
                    rollouts += static_cast<int>(group.size());
                    if (group.size() >= 2) {
                        AdvantageRecord adv = fine_grained_advantages(tree, group);
                        for (std::size_t g = 0; g < group.size(); ++g)
                            pending.push_back({std::move(group[g].decisions),
                                               adv.trajectory_advantages[static_cast<Eigen::Index>(g)]});
                        pending_adv += adv.trajectory_advantages.cwiseAbs().mean();
                    }
                    pending_reward += reward_sum / static_cast<double>(group.size());
                    ++pending_groups;
                    flush(task.id, false);
                    if (s.search.recompute_priors)
                        refresh_priors(tree, policy, s.search);
                    ++it;
                }
                try {
                    advance_root(tree, s.search);
                } catch (const NoVisitedChild&) {
                    break;
                }
            }
        }
    }
    flush(instances.back().id, true);

    if (!log.rows.empty() && !log.rows.back().probe_cr)
        if (auto p = probe()) {
            log.rows.back().probe_cr = p->cr;
            log.rows.back().probe_or = p->optimal_rate;
        }
}

}  // namespace

TrainResult train(const std::vector<Task>& instances, const SoftmaxPolicy& initial, const SearchConfig& search,
                  const TrainConfig& train_cfg, const RewardConfig& reward, const PlannerConfig& planner,
                  const TrainOptions& options)
{
    validate(search);
    validate(train_cfg);
    SoftmaxPolicy policy = initial;
    SearchConfig scfg = search;
    scfg.group_size = train_cfg.generations_m;
    scfg.temperature = train_cfg.sample_temperature;

    AdamState adam;
    adam.step = options.start_step;
    std::int64_t schedule = options.schedule_steps;
    if (schedule <= 0)
        schedule = options.start_step +
                   static_cast<std::int64_t>(instances.size()) * train_cfg.epochs *
                       std::min(search.max_iterations, search.max_depth + 1) / train_cfg.batch_size;

    TrainResult result;
    Updater update = [&](std::span<const TrajectoryBatch> batch) {
        UpdateResult r = grpo_update(policy.params(), batch, train_cfg, adam, schedule);
        if (r.stats.applied)
            policy.set_params(r.params);
        return r.stats;
    };
    Prober probe = [&]() -> std::optional<ProbeResult> {
        if (options.probe.empty())
            return std::nullopt;
        return evaluate_probe(policy, options.probe, planner, reward, train_cfg.probe_samples,
                              mix_seed(train_cfg.seed, 0x9e0b));
    };
    run_training(instances, policy, {scfg, train_cfg, reward, planner}, update, probe, result.log);
    result.params = policy.params();
    result.train_step = adam.step;
    return result;
}

TrainingLog train_remote(const std::vector<Task>& instances, const remote::RemotePolicy& policy,
                         const SearchConfig& search, const TrainConfig& train_cfg, const RewardConfig& reward,
                         const PlannerConfig& planner)
{
    validate(search);
    validate(train_cfg);
    SearchConfig scfg = search;
    scfg.group_size = train_cfg.generations_m;
    scfg.temperature = train_cfg.sample_temperature;

    TrainingLog log;
    Updater update = [&](std::span<const TrajectoryBatch> batch) {
        remote::UpdateRequest req;
        req.learning_rate = train_cfg.learning_rate;
        for (const TrajectoryBatch& t : batch)
            for (const DecisionRecord& d : t.decisions)
                req.items.push_back({d.context, d.completion, t.advantage});
        UpdateStats stats;
        stats.loss = policy.client().update(req);
        return stats;
    };
    Prober probe = []() -> std::optional<ProbeResult> { return std::nullopt; };
    run_training(instances, policy, {scfg, train_cfg, reward, planner}, update, probe, log);
    return log;
}

}  // namespace hsrl
