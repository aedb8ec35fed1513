#include <doctest.h>

#include <cmath>
#include <set>

#include "hsrl/error.hpp"
#include "hsrl/generate.hpp"
#include "hsrl/policy.hpp"

using namespace hsrl;

namespace {

PolicyOutput with_logprobs(std::vector<double> lp)
{
    PolicyOutput out;
    out.logprobs = std::move(lp);
    out.tokens.resize(out.logprobs.size(), "t");
    return out;
}

Task open_task()
{
    return make_grid_task(GridMap(6, 6, {0, 0}, {5, 5}));
}

}  // namespace

TEST_CASE("prior statistics")
{
    CHECK(avg_log_likelihood(with_logprobs({-0.5, -1.5})) == doctest::Approx(-1.0));
    CHECK(avg_log_likelihood(with_logprobs({0.0})) == 0.0);

    CHECK(confidence(0.0, 1.0) == 1.0);
    CHECK(confidence(-1.0, 1.0) == doctest::Approx(0.367879).epsilon(1e-6));
    CHECK(confidence(-7.0, 0.0) == 1.0);

    CHECK(exploration_factor(0.0, 0.4, 5.0) == 1.0);
    CHECK(exploration_factor(-2.0, 0.4, 5.0) == doctest::Approx(1.8));
    CHECK(exploration_factor(-10.0, 0.4, 5.0) == doctest::Approx(3.0));
    CHECK(exploration_factor(0.5, 0.4, 5.0) == 1.0);  // positive ell is clamped

    PriorStats p = make_prior(-2.0, 1.0, 0.4, 5.0);
    CHECK(p.ell == -2.0);
    CHECK(p.confidence == doctest::Approx(std::exp(-2.0)));
    CHECK(p.exploration == doctest::Approx(1.8));
}

TEST_CASE("zero weights give a uniform distribution")
{
    Task task = open_task();
    SoftmaxPolicy policy;
    auto dist = policy.distribution(make_context(task, {task.start()}), 1.0);
    const auto n = static_cast<double>(dist.candidates->states.size());
    REQUIRE(n > 1);
    for (Eigen::Index i = 0; i < dist.log_probs.size(); ++i)
        CHECK(dist.log_probs[i] == doctest::Approx(-std::log(n)));
}

TEST_CASE("four equal candidates give ln(1/4) per sample")
{
    Eigen::MatrixXd f = Eigen::MatrixXd::Random(4, kFeatureCount);
    f.rowwise() = f.row(0);
    Eigen::VectorXd lp = candidate_log_probs(Eigen::VectorXd::Ones(kFeatureCount), f, 1.0);
    for (int i = 0; i < 4; ++i)
        CHECK(lp[i] == doctest::Approx(std::log(0.25)));
}

TEST_CASE("probabilities sum to one and gradients match finite differences")
{
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 6;
        Eigen::MatrixXd f(n, kFeatureCount);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < kFeatureCount; ++k)
                f(i, k) = rng.uniform() * 4 - 2;
        Eigen::VectorXd w(kFeatureCount);
        for (int k = 0; k < kFeatureCount; ++k)
            w[k] = rng.uniform() * 2 - 1;
        const double temp = 0.5 + rng.uniform();

        CHECK(candidate_log_probs(w, f, temp).array().exp().sum() == doctest::Approx(1.0));

        const int chosen = trial % n;
        Eigen::VectorXd g = candidate_grad_log_prob(w, f, chosen, temp);
        const double h = 1e-6;
        for (int k = 0; k < kFeatureCount; ++k) {
            Eigen::VectorXd wp = w, wm = w;
            wp[k] += h;
            wm[k] -= h;
            const double fd =
                (candidate_log_probs(wp, f, temp)[chosen] - candidate_log_probs(wm, f, temp)[chosen]) / (2 * h);
            CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("grid candidates stay in the window and exclude the prefix")
{
    GridMap map = generate_maze(10, 10, 0.3, 11);
    Task task = make_grid_task(map);
    SoftmaxPolicy policy({}, 1);
    auto ctx = make_context(task, {task.start()});
    CandidateSet cs = policy.candidates(ctx);
    const Position s = map.start(), g = map.goal();
    for (const State& st : cs.states) {
        const Position p = std::get<Position>(st);
        CHECK(map.is_free(p));
        CHECK(p != s);
        CHECK(p.row >= std::min(s.row, g.row) - 1);
        CHECK(p.row <= std::max(s.row, g.row) + 1);
        CHECK(p.col >= std::min(s.col, g.col) - 1);
        CHECK(p.col <= std::max(s.col, g.col) + 1);
    }
    CHECK(cs.features.rows() == static_cast<Eigen::Index>(cs.states.size()));
}

TEST_CASE("blocks candidates are one move away")
{
    Task task = make_blocks_task({BlocksState({{1, 2}, {3}}), BlocksState({{3, 2, 1}})});
    SoftmaxPolicy policy;
    CandidateSet cs = policy.candidates(make_context(task, {task.start()}));
    CHECK(cs.states.size() == legal_blocks_actions(task.blocks().initial).size());
    for (const State& st : cs.states)
        CHECK(blocks_difference(task.blocks().initial, std::get<BlocksState>(st)) == 1);
}

TEST_CASE("sampling is reproducible and greedy picks the mode")
{
    Task task = open_task();
    SoftmaxPolicyParams params;
    params.weights << 1.0, 0.2, -1.0, 2.0;
    SoftmaxPolicy policy(params);
    auto ctx = make_context(task, {task.start()});

    Rng a(42), b(42);
    auto sa = policy.sample(ctx, 8, 1.0, a);
    auto sb = policy.sample(ctx, 8, 1.0, b);
    REQUIRE(sa.size() == 8);
    for (int i = 0; i < 8; ++i) {
        CHECK(sa[i].state == sb[i].state);
        REQUIRE(sa[i].logprobs.size() == 1);
        CHECK(sa[i].logprobs[0] <= 0.0);
    }

    Rng r(1);
    auto greedy = policy.sample(ctx, 1, kGreedy, r);
    auto dist = policy.distribution(ctx, 1.0);
    Eigen::Index best;
    dist.log_probs.maxCoeff(&best);
    CHECK(greedy[0].state == dist.candidates->states[best]);
    CHECK(*policy.score(ctx, *greedy[0].state, 1.0) == doctest::Approx(dist.log_probs[best]));
}

TEST_CASE("policy gradient matches the chosen-state finite difference")
{
    Task task = open_task();
    SoftmaxPolicyParams params;
    params.weights << 0.3, -0.2, 0.5, 1.0;
    auto ctx = make_context(task, {task.start()});
    const State chosen = Position{3, 3};
    Eigen::VectorXd g = SoftmaxPolicy(params).grad_log_prob(ctx, chosen, 0.8);
    for (int k = 0; k < kFeatureCount; ++k) {
        SoftmaxPolicyParams p = params, m = params;
        p.weights[k] += 1e-6;
        m.weights[k] -= 1e-6;
        const double fd = (*SoftmaxPolicy(p).score(ctx, chosen, 0.8) - *SoftmaxPolicy(m).score(ctx, chosen, 0.8)) / 2e-6;
        CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("context serialisation is injective")
{
    Task task = open_task();
    std::set<std::string> seen;
    seen.insert(make_context(task, {task.start()}).serialize());
    seen.insert(make_context(task, {task.start(), Position{1, 1}}).serialize());
    seen.insert(make_context(task, {task.start(), Position{1, 2}}).serialize());
    CHECK(seen.size() == 3);
}
