#include <doctest.h>

#include <cmath>
#include <limits>

#include "hsrl/reward.hpp"

using namespace hsrl;

namespace {

RewardConfig spec_defaults()
{
    RewardConfig cfg;
    cfg.anchor_alpha = 0.5;
    cfg.length_penalty_per_step = 0.25;
    return cfg;
}

std::vector<State> route(std::initializer_list<Position> ps)
{
    return std::vector<State>(ps.begin(), ps.end());
}

}  // namespace

TEST_CASE("anchor base quality")
{
    RewardConfig cfg;
    // 8x8 empty map, (0,0) -> (7,7): optimal length 14
    CHECK(anchor_base_quality(route({{0, 0}, {3, 4}, {7, 7}}), 14, cfg) == 10.0);
    // detour of one cell up and back adds 2
    CHECK(anchor_base_quality(route({{0, 0}, {0, 3}, {1, 2}, {7, 7}}), 14, cfg) == doctest::Approx(8.0));
    // out to the far corner and back doubles the path
    CHECK(anchor_base_quality(route({{0, 0}, {7, 7}, {0, 0}, {7, 7}}), 14, cfg) == doctest::Approx(10.0 - 28.0));
}

TEST_CASE("anchor consensus matches a brute-force mean")
{
    std::vector<std::optional<AnchorList>> anchors{AnchorList{Position{1, 1}}, AnchorList{Position{1, 1}, Position{2, 2}},
                                                   std::nullopt};
    std::vector<double> r{8.0, 4.0, -100.0};
    auto cons = anchor_consensus(anchors, r);
    CHECK(cons.at(Position{1, 1}) == doctest::Approx(6.0));
    CHECK(cons.at(Position{2, 2}) == doctest::Approx(4.0));
    CHECK(cons.size() == 2);

    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::optional<AnchorList>> group(8);
        std::vector<double> q(8);
        for (int i = 0; i < 8; ++i) {
            q[i] = rng.uniform() * 20 - 10;
            if (rng.below(6) == 0)
                continue;
            AnchorList a;
            const int n = 1 + static_cast<int>(rng.below(3));
            for (int k = 0; k < n; ++k)
                a.push_back(Position{static_cast<int>(rng.below(3)), static_cast<int>(rng.below(3))});
            group[i] = a;
        }
        auto c = anchor_consensus(group, q);
        for (const auto& [anchor, value] : c) {
            double sum = 0;
            int count = 0;
            for (int i = 0; i < 8; ++i) {
                if (!group[i])
                    continue;
                bool has = false;
                for (const State& s : *group[i])
                    has = has || s == anchor;
                if (has) {
                    sum += q[i];
                    ++count;
                }
            }
            REQUIRE(count > 0);
            CHECK(value == doctest::Approx(sum / count));
        }
    }
}

TEST_CASE("raw score penalises surplus anchors")
{
    RewardConfig cfg = spec_defaults();
    AnchorList six;
    std::map<State, double> cons;
    const double vals[] = {2.0, 1.5, 1.0, 1.0, 2.0, 1.0};  // sums to 8.5
    for (int i = 0; i < 6; ++i) {
        six.push_back(Position{i, 0});
        cons[Position{i, 0}] = vals[i];
    }
    CHECK(completion_raw_score(six, cons, 4, cfg) == doctest::Approx(7.5));
    CHECK(completion_raw_score(six, cons, 6, cfg) == doctest::Approx(8.5));
    CHECK(completion_raw_score(six, cons, 9, cfg) == doctest::Approx(8.5));
}

TEST_CASE("expected anchors default to a third of the optimum")
{
    RewardConfig cfg;
    CHECK(expected_anchors(cfg, 14) == 5);
    CHECK(expected_anchors(cfg, 12) == 4);
    CHECK(expected_anchors(cfg, 0) == 0);
    cfg.anchors_expected = 2;
    CHECK(expected_anchors(cfg, 14) == 2);
}

TEST_CASE("shaped reward")
{
    RewardConfig cfg;
    CHECK(shaped_reward(std::nullopt, cfg) == -10.0);
    CHECK(shaped_reward(-2.0, cfg) == doctest::Approx(-4.0));
    CHECK(shaped_reward(3.0, cfg) == doctest::Approx(9.0));
    CHECK(shaped_reward(0.0, cfg) == 0.0);
    for (double z : {0.3, 1.7, 4.0, 12.5})
        CHECK(shaped_reward(-z, cfg) == doctest::Approx(-shaped_reward(z, cfg)));
}

TEST_CASE("composite reward")
{
    RewardConfig cfg = spec_defaults();
    RewardInputs optimal{2.0, true, 14, 14, 3, 5};
    CHECK(composite_reward(optimal, cfg) == doctest::Approx(4.0));

    RewardInputs longer = optimal;
    longer.executed_length = 18;
    CHECK(composite_reward(optimal, cfg) - composite_reward(longer, cfg) == doctest::Approx(1.0));

    RewardInputs failed{0.0, false, 0, 14, 3, 5};
    CHECK(composite_reward(failed, cfg) == doctest::Approx(-5.0));

    RewardInputs unparsed{std::nullopt, false, 0, 14, 0, 5};
    CHECK(composite_reward(unparsed, cfg) == -10.0);

    // non-increasing in executed length
    double prev = std::numeric_limits<double>::infinity();
    for (int len = 14; len < 40; ++len) {
        RewardInputs in = optimal;
        in.executed_length = len;
        const double r = composite_reward(in, RewardConfig{});
        CHECK(r <= prev);
        prev = r;
    }

    cfg.length_mode = LengthPenaltyMode::WaypointCount;
    RewardInputs many = optimal;
    many.anchor_count = 9;
    CHECK(composite_reward(many, cfg) == doctest::Approx(4.0 - 0.25 * 4));
}

TEST_CASE("default ordering on a 10x10 maze")
{
    // parse-fail < failure < suboptimal success < optimal success, for equal
    // anchor scores and a one-step detour
    RewardConfig cfg;
    const double parse_fail = composite_reward({std::nullopt, false, 0, 18, 0, 6}, cfg);
    const double failure = composite_reward({0.0, false, 0, 18, 2, 6}, cfg);
    const double subopt = composite_reward({1.0, true, 19, 18, 2, 6}, cfg);
    const double optimal = composite_reward({1.0, true, 18, 18, 2, 6}, cfg);
    CHECK(parse_fail < failure);
    CHECK(failure < subopt);
    CHECK(subopt < optimal);
}

TEST_CASE("group scoring ranks an optimal completion above a detour")
{
    Task task = make_grid_task(GridMap(8, 8, {0, 0}, {7, 7}));
    std::vector<std::optional<WaypointSequence>> group{
        WaypointSequence{{task.start(), Position{3, 4}, task.goal()}},
        WaypointSequence{{task.start(), Position{0, 7}, Position{7, 0}, task.goal()}},
        std::nullopt,
    };
    auto out = score_group(task, 14, group, OracleSolver{}, PlannerConfig{}, RewardConfig{});
    REQUIRE(out.size() == 3);
    CHECK(out[0].parsed);
    CHECK(out[0].solved);
    CHECK(out[0].plan_length == 14);
    CHECK(out[0].base_quality == 10.0);
    CHECK(out[1].solved);
    CHECK(out[1].plan_length > 14);
    CHECK(out[0].reward > out[1].reward);
    CHECK_FALSE(out[2].parsed);
    CHECK(out[2].reward == RewardConfig{}.parse_fail_penalty);
}
