#include <catch2/catch_amalgamated.hpp>

#include <stdexcept>
#include <vector>

#include "mfc/particle_state.hpp"
#include "mfc/rng.hpp"
#include "mfc/strategy.hpp"

using namespace mfc;

namespace {

ParticleSystemState make_state(std::vector<double> levels, std::vector<int> dead = {}) {
    ParticleSystemState s(static_cast<int>(levels.size()));
    s.levels = std::move(levels);
    for (int i : dead) {
        s.alive[i] = 0;
        s.default_times[i] = 0.0;
        ++s.n_defaulted;
    }
    return s;
}

} // namespace

TEST_CASE("zero strategy allocates nothing") {
    auto s = make_state({1.0, 2.0, 3.0});
    StrategyState mem;
    mem.reset(3);
    auto a = evaluate_strategy(ControlStrategy::zero(), s, mem);
    REQUIRE(a == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("uniform strategy splits the budget over the living") {
    StrategyState mem;
    mem.reset(4);

    auto s = make_state({1.0, 1.0, 1.0, 1.0});
    auto a = evaluate_strategy(ControlStrategy::uniform(), s, mem);
    REQUIRE(a == std::vector<double>{0.25, 0.25, 0.25, 0.25});

    auto s1 = make_state({1.0, -0.1, -0.2, -0.3}, {1, 2, 3});
    auto a1 = evaluate_strategy(ControlStrategy::uniform(), s1, mem);
    REQUIRE(a1 == std::vector<double>{1.0, 0.0, 0.0, 0.0}); // sole survivor gets it all

    auto s0 = make_state({-1.0, -1.0, -1.0, -1.0}, {0, 1, 2, 3});
    auto a0 = evaluate_strategy(ControlStrategy::uniform(), s0, mem);
    REQUIRE(a0 == std::vector<double>(4, 0.0));
}

TEST_CASE("threshold strategy flags the first m to reach the target") {
    auto strat = ControlStrategy::threshold(2, 2.0, 0.5);
    StrategyState mem;
    mem.reset(5);

    // Indices 0, 1, 4 are at or above target; only the first two get flagged.
    auto s = make_state({3.0, 2.5, 1.0, 0.5, 2.1});
    auto a = evaluate_strategy(strat, s, mem);
    REQUIRE(a == std::vector<double>{0.5, 0.5, 0.0, 0.0, 0.0});
    REQUIRE(mem.flagged_count == 2);
    REQUIRE(mem.flagged == std::vector<std::uint8_t>{1, 1, 0, 0, 0});

    SECTION("flags persist when a flagged participant falls below the target") {
        s.levels[0] = 0.3;
        auto a2 = evaluate_strategy(strat, s, mem);
        REQUIRE(a2[0] == 0.5);
    }
    SECTION("dead flagged participants receive nothing but keep the flag") {
        s.alive[1] = 0;
        s.default_times[1] = 0.5;
        ++s.n_defaulted;
        auto a2 = evaluate_strategy(strat, s, mem);
        REQUIRE(a2 == std::vector<double>{0.5, 0.0, 0.0, 0.0, 0.0});
        REQUIRE(mem.flagged[1] == 1);
        REQUIRE(mem.flagged_count == 2); // slots stay used: flags are permanent
    }
    SECTION("no third flag is ever granted") {
        s.levels[4] = 10.0;
        evaluate_strategy(strat, s, mem);
        REQUIRE(mem.flagged_count == 2);
        REQUIRE(mem.flagged[4] == 0);
    }
}

TEST_CASE("threshold ties break by particle index") {
    auto strat = ControlStrategy::threshold(3, 1.0, 0.25);
    StrategyState mem;
    mem.reset(6);
    auto s = make_state({5.0, 5.0, 5.0, 5.0, 5.0, 5.0});
    evaluate_strategy(strat, s, mem);
    REQUIRE(mem.flagged == std::vector<std::uint8_t>{1, 1, 1, 0, 0, 0});
}

TEST_CASE("threshold defaults derive from m") {
    auto strat = ControlStrategy::threshold(4);
    REQUIRE(strat.rate_or_default() == 0.25);
    REQUIRE(strat.target_or_default(100) == 25.0);

    auto explicit_strat = ControlStrategy::threshold(4, 7.5, 0.2);
    REQUIRE(explicit_strat.rate_or_default() == 0.2);
    REQUIRE(explicit_strat.target_or_default(100) == 7.5);
}

TEST_CASE("threshold allocation totals stay within the budget") {
    auto strat = ControlStrategy::threshold(5, 0.5, 0.2);
    StrategyState mem;
    mem.reset(8);
    auto s = make_state({1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0});
    auto a = evaluate_strategy(strat, s, mem);
    double total = 0.0;
    for (double x : a) total += x;
    REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(mem.flagged_count == 5);
}

TEST_CASE("threshold construction rejects bad parameters") {
    REQUIRE_THROWS_AS(ControlStrategy::threshold(0), std::invalid_argument);
    REQUIRE_THROWS_AS(ControlStrategy::threshold(2, 1.0, -0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(ControlStrategy::threshold(2, 1.0, 1.5), std::invalid_argument);
    // m * rate must respect the unit budget.
    REQUIRE_THROWS_AS(ControlStrategy::threshold(3, 1.0, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(ControlStrategy::threshold(2, -1.0, 0.5), std::invalid_argument);
    REQUIRE_NOTHROW(ControlStrategy::threshold(2, 1.0, 0.5));
}

TEST_CASE("custom rules pass through when feasible and are rejected otherwise") {
    StrategyState mem;
    mem.reset(3);
    auto s = make_state({1.0, 2.0, -0.5}, {2});

    auto ok = ControlStrategy::custom([](const ParticleSystemState&) {
        return std::vector<double>{0.4, 0.6, 0.0};
    });
    REQUIRE(evaluate_strategy(ok, s, mem) == std::vector<double>{0.4, 0.6, 0.0});

    auto over_budget = ControlStrategy::custom([](const ParticleSystemState&) {
        return std::vector<double>{0.7, 0.7, 0.0};
    });
    REQUIRE_THROWS_AS(evaluate_strategy(over_budget, s, mem), std::invalid_argument);

    auto pays_the_dead = ControlStrategy::custom([](const ParticleSystemState&) {
        return std::vector<double>{0.1, 0.1, 0.1};
    });
    REQUIRE_THROWS_AS(evaluate_strategy(pays_the_dead, s, mem), std::invalid_argument);

    auto negative = ControlStrategy::custom([](const ParticleSystemState&) {
        return std::vector<double>{-0.1, 0.2, 0.0};
    });
    REQUIRE_THROWS_AS(evaluate_strategy(negative, s, mem), std::invalid_argument);

    auto wrong_size = ControlStrategy::custom([](const ParticleSystemState&) {
        return std::vector<double>{0.5, 0.5};
    });
    REQUIRE_THROWS_AS(evaluate_strategy(wrong_size, s, mem), std::invalid_argument);

    auto above_one = ControlStrategy::custom([](const ParticleSystemState&) {
        return std::vector<double>{1.2, 0.0, 0.0};
    });
    REQUIRE_THROWS_AS(evaluate_strategy(above_one, s, mem), std::invalid_argument);
}

TEST_CASE("flagged set only grows under random evolution") {
    auto strat = ControlStrategy::threshold(3, 1.5, 0.3);
    StrategyState mem;
    mem.reset(10);
    Rng rng(99, 0, 0);
    auto s = make_state(std::vector<double>(10, 1.0));
    int last_count = 0;
    for (int round = 0; round < 200; ++round) {
        for (int i = 0; i < 10; ++i)
            if (s.alive[i]) {
                s.levels[i] += 0.3 * rng.normal();
                if (s.levels[i] <= 0.0) {
                    s.alive[i] = 0;
                    s.default_times[i] = round * 0.01;
                    ++s.n_defaulted;
                }
            }
        auto before = mem.flagged;
        auto a = evaluate_strategy(strat, s, mem);
        REQUIRE(mem.flagged_count >= last_count);
        REQUIRE(mem.flagged_count <= 3);
        for (int i = 0; i < 10; ++i) {
            if (before[i]) REQUIRE(mem.flagged[i] == 1);
            if (!s.alive[i]) REQUIRE(a[i] == 0.0);
        }
        last_count = mem.flagged_count;
    }
}
