#include "hsrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hsrl/error.hpp"
#include "hsrl/math.hpp"

namespace hsrl {

std::string PolicyContext::serialize() const
{
    std::string out = "task=";
    out += to_string(kind());
    out += "\nenv=\n";
    out += task->summary();
    out += "\nprefix=";
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (i > 0)
            out += ";";
        out += format_state(prefix[i]);
    }
    out += "\ngoal=";
    out += format_state(goal());
    return out;
}

PolicyContext make_context(const Task& task, std::vector<State> prefix)
{
    if (prefix.empty())
        prefix.push_back(task.start());
    return PolicyContext{&task, std::move(prefix)};
}

double avg_log_likelihood(const PolicyOutput& out)
{
    if (out.logprobs.empty())
        return 0.0;
    return std::accumulate(out.logprobs.begin(), out.logprobs.end(), 0.0) / static_cast<double>(out.logprobs.size());
}

double confidence(double ell, double tau)
{
    return std::exp(tau * ell);
}

double exploration_factor(double ell, double gamma, double u_max)
{
    return 1.0 + gamma * std::clamp(-ell, 0.0, u_max);
}

PriorStats make_prior(double ell, double tau, double gamma, double u_max)
{
    return {ell, confidence(ell, tau), exploration_factor(ell, gamma, u_max)};
}

Eigen::VectorXd grid_features(const GridMap& map, Position prefix_end, Position goal, Position cand)
{
    int blocked = 0;
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
            Position p{cand.row + dr, cand.col + dc};
            if (!map.in_bounds(p) || map.is_obstacle(p))
                ++blocked;
        }
    Eigen::VectorXd f(kFeatureCount);
    f << -manhattan(cand, goal), -manhattan(prefix_end, cand), blocked / 9.0, cand == goal ? 1.0 : 0.0;
    return f;
}

namespace {

int well_placed_count(const BlocksState& state, const BlocksState& goal)
{
    int count = 0;
    for (const auto& stack : state.stacks()) {
        // a block is in final position if it and everything beneath it match
        for (std::size_t h = 0; h < stack.size(); ++h) {
            int below = h == 0 ? kTable : stack[h - 1];
            if (goal.support(stack[h]) != below)
                break;
            ++count;
        }
    }
    return count;
}

}  // namespace

Eigen::VectorXd blocks_features(const BlocksState& prefix_end, const BlocksState& goal, const BlocksState& cand)
{
    Eigen::VectorXd f(kFeatureCount);
    f << -blocks_difference(cand, goal), -blocks_difference(prefix_end, cand),
        static_cast<double>(well_placed_count(cand, goal)) / std::max(1, cand.block_count()),
        cand == goal ? 1.0 : 0.0;
    return f;
}

Eigen::VectorXd candidate_log_probs(const Eigen::VectorXd& weights, const Eigen::MatrixXd& features, double temperature)
{
    return math::log_softmax((features * weights) / temperature);
}

Eigen::VectorXd candidate_grad_log_prob(const Eigen::VectorXd& weights, const Eigen::MatrixXd& features, int chosen,
                                        double temperature)
{
    const Eigen::VectorXd p = math::softmax((features * weights) / temperature);
    return (features.row(chosen).transpose() - math::expected_features(features, p)) / temperature;
}

SoftmaxPolicy::SoftmaxPolicy(SoftmaxPolicyParams params, int window_margin)
    : params_(std::move(params)), window_margin_(window_margin)
{
    if (params_.weights.size() != kFeatureCount)
        throw Error("softmax policy expects " + std::to_string(kFeatureCount) + " weights");
}

CandidateSet SoftmaxPolicy::candidates(const PolicyContext& ctx) const
{
    CandidateSet set;
    auto in_prefix = [&](const State& s) { return std::find(ctx.prefix.begin(), ctx.prefix.end(), s) != ctx.prefix.end(); };
    std::vector<Eigen::VectorXd> rows;

    if (ctx.task->is_grid()) {
        set.feature_version = kGridFeatures;
        const GridMap& map = ctx.task->grid();
        const Position cur = std::get<Position>(ctx.current());
        const Position goal = map.goal();
        const int r0 = std::max(0, std::min(cur.row, goal.row) - window_margin_);
        const int r1 = std::min(map.height() - 1, std::max(cur.row, goal.row) + window_margin_);
        const int c0 = std::max(0, std::min(cur.col, goal.col) - window_margin_);
        const int c1 = std::min(map.width() - 1, std::max(cur.col, goal.col) + window_margin_);
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                Position p{r, c};
                if (map.is_obstacle(p) || in_prefix(State{p}))
                    continue;
                set.states.emplace_back(p);
                rows.push_back(grid_features(map, cur, goal, p));
            }
    } else {
        set.feature_version = kBlocksFeatures;
        const auto& cur = std::get<BlocksState>(ctx.current());
        const BlocksState& goal = ctx.task->blocks().goal;
        for (const BlocksAction& a : legal_blocks_actions(cur)) {
            auto next = apply_blocks_action(cur, a);
            if (!next || in_prefix(State{*next}))
                continue;
            rows.push_back(blocks_features(cur, goal, *next));
            set.states.emplace_back(std::move(*next));
        }
    }

    set.features.resize(static_cast<Eigen::Index>(rows.size()), kFeatureCount);
    for (std::size_t i = 0; i < rows.size(); ++i)
        set.features.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return set;
}

SoftmaxPolicy::Distribution SoftmaxPolicy::distribution(const PolicyContext& ctx, double temperature) const
{
    auto set = std::make_shared<CandidateSet>(candidates(ctx));
    if (set->states.empty())
        throw EmptyCandidateSet("no legal candidate after " + format_state(ctx.current()));
    Distribution dist;
    dist.log_probs = candidate_log_probs(params_.weights, set->features, temperature);
    dist.candidates = std::move(set);
    return dist;
}

std::vector<PolicyOutput> SoftmaxPolicy::sample(const PolicyContext& ctx, int m, double temperature, Rng& rng) const
{
    if (m < 1)
        throw Error("sample count must be >= 1");
    if (temperature < 0.0)
        throw Error("temperature must be >= 0");

    std::vector<PolicyOutput> out;
    out.reserve(static_cast<std::size_t>(m));
    auto emit = [&](const std::shared_ptr<const CandidateSet>& set, int idx, double logprob) {
        PolicyOutput o;
        o.state = set->states[static_cast<std::size_t>(idx)];
        o.raw_text = format_state(*o.state);
        o.tokens = {o.raw_text};
        o.logprobs = {logprob};
        o.candidates = set;
        o.choice = idx;
        out.push_back(std::move(o));
    };

    if (temperature == kGreedy) {
        auto set = std::make_shared<CandidateSet>(candidates(ctx));
        if (set->states.empty())
            throw EmptyCandidateSet("no legal candidate after " + format_state(ctx.current()));
        Eigen::Index best = 0;
        (set->features * params_.weights).maxCoeff(&best);
        for (int i = 0; i < m; ++i)
            emit(set, static_cast<int>(best), 0.0);
        return out;
    }

    Distribution dist = distribution(ctx, temperature);
    const Eigen::VectorXd probs = dist.log_probs.array().exp().matrix();
    for (int i = 0; i < m; ++i) {
        double u = rng.uniform();
        Eigen::Index idx = 0;
        const Eigen::Index last = probs.size() - 1;
        while (idx < last && u >= probs[idx]) {
            u -= probs[idx];
            ++idx;
        }
        emit(dist.candidates, static_cast<int>(idx), dist.log_probs[idx]);
    }
    return out;
}

std::optional<double> SoftmaxPolicy::score(const PolicyContext& ctx, const State& state, double temperature) const
{
    if (temperature <= 0.0)
        temperature = 1.0;
    CandidateSet set = candidates(ctx);
    auto it = std::find(set.states.begin(), set.states.end(), state);
    if (it == set.states.end())
        return std::nullopt;
    Eigen::VectorXd lp = candidate_log_probs(params_.weights, set.features, temperature);
    return lp[it - set.states.begin()];
}

Eigen::VectorXd SoftmaxPolicy::grad_log_prob(const PolicyContext& ctx, const State& chosen, double temperature) const
{
    CandidateSet set = candidates(ctx);
    auto it = std::find(set.states.begin(), set.states.end(), chosen);
    if (it == set.states.end())
        throw Error("chosen state is not a candidate: " + format_state(chosen));
    return candidate_grad_log_prob(params_.weights, set.features, static_cast<int>(it - set.states.begin()),
                                   temperature);
}

}  // namespace hsrl
