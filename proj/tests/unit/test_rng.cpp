#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mfc/rng.hpp"

using namespace mfc;

TEST_CASE("identical keys replay identical streams") {
    Rng a(42, 3, 17), b(42, 3, 17);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct replications and particles get distinct streams") {
    Rng base(42, 0, 0), rep(42, 1, 0), part(42, 0, 1), seed(43, 0, 0);
    int same_rep = 0, same_part = 0, same_seed = 0;
    for (int i = 0; i < 64; ++i) {
        auto v = base.next_u64();
        same_rep += (v == rep.next_u64());
        same_part += (v == part.next_u64());
        same_seed += (v == seed.next_u64());
    }
    CHECK(same_rep == 0);
    CHECK(same_part == 0);
    CHECK(same_seed == 0);
}

TEST_CASE("uniform draws live strictly inside (0, 1) with the right mean") {
    Rng r(7, 0, 0);
    const int n = 1000000;
    double sum = 0.0, mn = 1.0, mx = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        mn = std::min(mn, u);
        mx = std::max(mx, u);
    }
    double se = 1.0 / std::sqrt(12.0 * n);
    CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(0.5, 3.0 * se));
    CHECK(mn < 1e-4);
    CHECK(mx > 1.0 - 1e-4);
}

TEST_CASE("normal draws have standard moments and tail mass") {
    Rng r(11, 2, 5);
    const int n = 500000;
    double sum = 0.0, sumsq = 0.0;
    int beyond196 = 0;
    for (int i = 0; i < n; ++i) {
        double z = r.normal();
        sum += z;
        sumsq += z * z;
        if (std::abs(z) > 1.959963984540054) ++beyond196;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 3.0 / std::sqrt(double(n))));
    CHECK_THAT(var, Catch::Matchers::WithinAbs(1.0, 3.0 * std::sqrt(2.0 / n)));
    double p = double(beyond196) / n;
    CHECK_THAT(p, Catch::Matchers::WithinAbs(0.05, 3.0 * std::sqrt(0.05 * 0.95 / n)));
}
