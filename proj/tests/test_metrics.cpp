#include <doctest.h>

#include <vector>

#include "hsrl/error.hpp"
#include "hsrl/metrics.hpp"
#include "hsrl/rng.hpp"

using namespace hsrl;

namespace {

EpisodeOutcome solved(int len, int opt)
{
    return {true, len, opt, 0, 0, 10};
}

EpisodeOutcome failed(int d = 3)
{
    return {false, 0, 10, d, 0, 10};
}

}  // namespace

TEST_CASE("completion, optimality and top-5 rates")
{
    std::vector<EpisodeOutcome> four{solved(10, 10), solved(10, 10), failed(), solved(12, 10)};
    CHECK(completion_rate(four) == 0.75);

    std::vector<EpisodeOutcome> none{failed(), failed()};
    CHECK(completion_rate(none) == 0.0);

    std::vector<EpisodeOutcome> three{solved(10, 10), solved(12, 10), failed()};
    CHECK(optimal_rate(three) == doctest::Approx(1.0 / 3));

    std::vector<EpisodeOutcome> all_opt{solved(8, 8), solved(4, 4)};
    CHECK(optimal_rate(all_opt) == completion_rate(all_opt));

    std::vector<EpisodeOutcome> dists{failed(0), failed(5), failed(6)};
    CHECK(top5_accuracy(dists) == doctest::Approx(2.0 / 3));
    CHECK(top5_accuracy(all_opt) == 1.0);

    CHECK_THROWS_AS(completion_rate({}), Error);
    CHECK_THROWS_AS(optimal_rate({}), Error);
    CHECK_THROWS_AS(top5_accuracy({}), Error);
}

TEST_CASE("rate bounds over random outcomes")
{
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<EpisodeOutcome> v(1 + rng.below(20));
        for (auto& o : v) {
            o.solved = rng.below(2) == 1;
            o.optimal_length = 5 + static_cast<int>(rng.below(10));
            o.plan_length = o.optimal_length + static_cast<int>(rng.below(3));
            o.final_distance = o.solved ? 0 : 1 + static_cast<int>(rng.below(10));
        }
        CHECK(optimal_rate(v) <= completion_rate(v));
        CHECK(top5_accuracy(v) >= completion_rate(v));
    }
}

TEST_CASE("gtb tiers")
{
    const int ds[] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 40};
    const double want[] = {200, 100, 50, 50, 25, 25, -50, -50, -50, -100, -100};
    for (int i = 0; i < 11; ++i)
        CHECK(gtb_reward_tier(ds[i]) == want[i]);
    for (int d = 0; d < 30; ++d)
        CHECK(gtb_reward_tier(d + 1) <= gtb_reward_tier(d));
    CHECK_THROWS_AS(gtb_reward_tier(-1), Error);
}

TEST_CASE("gtb normalisation identities")
{
    for (int opt : {1, 12, 57}) {
        for (int emax : {0, 10, 25}) {
            GtbResult perfect = gtb_normalize({true, opt, opt, 0, 0, emax});
            CHECK(perfect.normalized == 1.0);
            CHECK(perfect.r_max == 200.0 - opt);
            CHECK(perfect.r_min == -100.0 - opt - emax);
            CHECK(perfect.delta_r == 300.0 + emax);
            CHECK_FALSE(perfect.clamped);

            GtbResult floor = gtb_normalize({false, opt, opt, 20, emax, emax});
            CHECK(floor.normalized == 0.0);
            CHECK_FALSE(floor.clamped);
        }
    }

    GtbResult mid = gtb_normalize({false, 30, 20, 4, 3, 10});
    CHECK(mid.reward == 25.0);
    CHECK(mid.normalized == doctest::Approx((25.0 - 30 - 3 - (-100.0 - 20 - 10)) / 310.0));

    GtbResult over = gtb_normalize({false, 500, 20, 20, 10, 10});
    CHECK(over.normalized == 0.0);
    CHECK(over.clamped);

    CHECK_THROWS_AS(gtb_normalize({true, 5, 5, 0, 0, -300}), DegenerateRange);
}

TEST_CASE("gtb score is the percentage mean")
{
    // second map normalises to exactly 0.5: R - pl - e - r_min = 155 over 310
    std::vector<EpisodeOutcome> maps{{true, 20, 20, 0, 0, 10}, {false, 20, 20, 2, 5, 10}};
    GtbResult half = gtb_normalize(maps[1]);
    REQUIRE(half.normalized == doctest::Approx(0.5));
    GtbScore s = gtb_score(maps);
    CHECK(s.score == doctest::Approx(75.0));
    CHECK(s.per_map.size() == 2);
    CHECK(s.clamped == 0);
}
