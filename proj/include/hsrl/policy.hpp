#pragma once

// High-level policy abstraction: proposes the next intermediate state with
// per-token log-likelihoods, plus the prior statistics derived from them.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsrl/rng.hpp"
#include "hsrl/task.hpp"

namespace hsrl {

struct PolicyContext
{
    const Task* task = nullptr;
    std::vector<State> prefix;  ///< start .. most recent intermediate state

    TaskKind kind() const { return task->kind; }
    const State& current() const { return prefix.back(); }
    State goal() const { return task->goal(); }

    /// Canonical text form sent to remote policies. Injective per task kind.
    std::string serialize() const;
};

PolicyContext make_context(const Task& task, std::vector<State> prefix);

/// Candidates of one synthetic-policy decision with their feature rows.
struct CandidateSet
{
    std::vector<State> states;
    Eigen::MatrixXd features;  ///< states.size() x feature count
    int feature_version = 1;
};

struct PolicyOutput
{
    std::optional<State> state;  ///< nullopt: the sample did not parse
    std::vector<std::string> tokens;
    std::vector<double> logprobs;  ///< nats, each <= 0
    std::string raw_text;

    // synthetic policy only: the decision that produced this sample
    std::shared_ptr<const CandidateSet> candidates;
    int choice = -1;
};

/// Mean per-token log-likelihood.
double avg_log_likelihood(const PolicyOutput& out);

/// c = exp(tau * ell).
double confidence(double ell, double tau);

/// u = 1 + gamma * clamp(-ell, 0, u_max).
double exploration_factor(double ell, double gamma, double u_max);

struct PriorStats
{
    double ell = 0.0;
    double confidence = 1.0;
    double exploration = 1.0;
};

PriorStats make_prior(double ell, double tau, double gamma, double u_max);

/// Temperature 0 selects argmax mode (the zero-temperature limit).
inline constexpr double kGreedy = 0.0;

class Policy
{
public:
    virtual ~Policy() = default;

    /// m proposals for the state following ctx.prefix. Must be safe to call
    /// concurrently. Throws EmptyCandidateSet when nothing can be proposed.
    virtual std::vector<PolicyOutput> sample(const PolicyContext& ctx, int m, double temperature, Rng& rng) const = 0;

    /// Mean log-likelihood of proposing `state`, when the policy can score it.
    virtual std::optional<double> score(const PolicyContext&, const State&, double) const { return std::nullopt; }
};

inline constexpr int kFeatureCount = 4;
inline constexpr int kGridFeatures = 1;
inline constexpr int kBlocksFeatures = 2;

struct SoftmaxPolicyParams
{
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(kFeatureCount);
    int feature_version = kGridFeatures;
};

/// [-dist(cand, goal), -dist(prefix end, cand), obstacle share of the 3x3
/// window around cand (out of bounds counts as blocked), cand == goal].
Eigen::VectorXd grid_features(const GridMap& map, Position prefix_end, Position goal, Position cand);

/// [-diff(cand, goal), -diff(prefix end, cand), share of blocks already in
/// final position, cand == goal].
Eigen::VectorXd blocks_features(const BlocksState& prefix_end, const BlocksState& goal, const BlocksState& cand);

/// Log-probabilities of a temperature-scaled softmax over feature rows.
Eigen::VectorXd candidate_log_probs(const Eigen::VectorXd& weights, const Eigen::MatrixXd& features, double temperature);

/// d/dw log pi(chosen) = (f_chosen - E_pi[f]) / temperature.
Eigen::VectorXd candidate_grad_log_prob(const Eigen::VectorXd& weights, const Eigen::MatrixXd& features, int chosen,
                                        double temperature);

/// Linear-softmax stand-in for a language-model planner. Each candidate is a
/// single token, so its log-likelihood is exactly its log-probability.
class SoftmaxPolicy : public Policy
{
public:
    explicit SoftmaxPolicy(SoftmaxPolicyParams params = {}, int window_margin = 1);

    const SoftmaxPolicyParams& params() const { return params_; }
    void set_params(SoftmaxPolicyParams params) { params_ = std::move(params); }
    int window_margin() const { return window_margin_; }

    /// Grid: free cells in the box spanned by the prefix end and the goal,
    /// grown by the window margin. Blocksworld: states one move from the
    /// prefix end. States already in the prefix are excluded.
    CandidateSet candidates(const PolicyContext& ctx) const;

    struct Distribution
    {
        std::shared_ptr<const CandidateSet> candidates;
        Eigen::VectorXd log_probs;
    };

    /// Throws EmptyCandidateSet. Temperature must be > 0.
    Distribution distribution(const PolicyContext& ctx, double temperature) const;

    std::vector<PolicyOutput> sample(const PolicyContext& ctx, int m, double temperature, Rng& rng) const override;
    std::optional<double> score(const PolicyContext& ctx, const State& state, double temperature) const override;

    Eigen::VectorXd grad_log_prob(const PolicyContext& ctx, const State& chosen, double temperature) const;

private:
    SoftmaxPolicyParams params_;
    int window_margin_;
};

}  // namespace hsrl
