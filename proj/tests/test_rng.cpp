#include "doctest.h"

#include <cmath>
#include <vector>

#include "aerlab/rng.hpp"

using namespace aerlab;

TEST_CASE("same seed gives identical streams") {
    RngStream a(42);
    RngStream b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
}

TEST_CASE("derive is deterministic and path-sensitive") {
    RngStream a = RngStream::derive(7, {1, 2, 3});
    RngStream b = RngStream::derive(7, {1, 2, 3});
    RngStream c = RngStream::derive(7, {1, 2, 4});
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("uniform01 stays in [0,1) with sane mean") {
    RngStream rng(1);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // 3 sigma of the mean of n U(0,1) draws
    CHECK(std::abs(sum / n - 0.5) < 3.0 / std::sqrt(12.0 * n));
}

TEST_CASE("uniform_below covers the range without bias") {
    RngStream rng(2);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        ++counts[rng.uniform_below(7)];
    }
    for (int c : counts) {
        CHECK(std::abs(c - n / 7) < 5 * std::sqrt(n / 7.0));
    }
    CHECK_THROWS_AS(rng.uniform_below(0), contract_error);
}

TEST_CASE("normal has the requested moments") {
    RngStream rng(3);
    const int n = 200000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(1.0, 2.0);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean - 1.0) < 3.0 * 2.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 4.0) < 0.1);
}

TEST_CASE("categorical respects the distribution") {
    RngStream rng(4);
    const std::vector<double> probs = {0.5, 0.25, 0.25};
    std::vector<int> counts(3, 0);
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        ++counts[rng.categorical(probs)];
    }
    for (int k = 0; k < 3; ++k) {
        const double p = probs[k];
        CHECK(std::abs(counts[k] / double(n) - p) < 3 * std::sqrt(p * (1 - p) / n));
    }
}
