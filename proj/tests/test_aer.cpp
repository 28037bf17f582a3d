#include "doctest.h"

#include <cmath>

#include "aerlab/aer.hpp"

using namespace aerlab;

namespace {

Response make_response(std::vector<double> entropies) {
    Response r;
    r.entropies = std::move(entropies);
    r.tokens.assign(r.entropies.size(), 0);
    r.logprobs.assign(r.entropies.size(), 0.0);
    return r;
}

RolloutGroup make_group(std::vector<Response> responses) {
    RolloutGroup g;
    g.responses = std::move(responses);
    return g;
}

} // namespace

TEST_CASE("target entropy anchors to the first batch entropy") {
    AerState state(AerConfig{0.4, 0.2, 0.005, 1e-8});
    state.init_target(2.0);
    CHECK(state.target_entropy() == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(state.initial_entropy() == 2.0);
    CHECK(state.initialized());

    // tau -> 1 keeps the full initial entropy
    AerState full(AerConfig{1.0, 0.2, 0.005, 1e-8});
    full.init_target(1.7);
    CHECK(full.target_entropy() == doctest::Approx(1.7).epsilon(1e-12));

    AerState half(AerConfig{0.5, 0.2, 0.005, 1e-8});
    half.init_target(std::log(16.0));
    CHECK(half.target_entropy() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("double initialization and bad entropies are rejected") {
    AerState state(AerConfig{});
    state.init_target(2.0);
    CHECK_THROWS_AS(state.init_target(2.0), contract_error);

    AerState other(AerConfig{});
    CHECK_THROWS_AS(other.init_target(0.0), data_error);
    CHECK_THROWS_AS(other.init_target(-1.0), data_error);
}

TEST_CASE("lambda allocation hand values") {
    AerState state(AerConfig{0.4, 0.2, 0.005, 1e-8});
    state.init_target(2.0);
    state.restore(2.0, 0.8, 1.0, 0, true); // alpha = 1

    const double lam0 = state.allocate_lambda(0.0);
    CHECK(std::abs(lam0 - 0.2 / (0.2 + 1e-8)) < 1e-15);
    CHECK(std::abs(lam0 - 1.0) < 1e-6);

    CHECK(state.allocate_lambda(0.5) == 0.0); // easy question, no bonus
    CHECK(state.allocate_lambda(0.25) == 0.0);
}

TEST_CASE("the rho=0 indicator pays alpha only at exactly zero accuracy") {
    AerState state(AerConfig{0.4, 0.0, 0.005, 1e-8});
    state.init_target(2.0);
    state.restore(2.0, 0.8, 0.7, 0, true);
    CHECK(state.allocate_lambda(0.0) == 0.7);
    CHECK(state.allocate_lambda(0.25) == 0.0);
    CHECK(state.allocate_lambda(1.0) == 0.0);
}

TEST_CASE("lambda is non-increasing in group accuracy") {
    RngStream rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        AerConfig cfg;
        cfg.rho = rng.uniform01();
        AerState state(cfg);
        state.init_target(2.5);
        state.restore(2.5, 1.0, rng.uniform01(), 0, true);
        const int G = 8;
        double prev = state.allocate_lambda(0.0);
        for (int c = 1; c <= G; ++c) {
            const double lam = state.allocate_lambda(static_cast<double>(c) / G);
            CHECK(lam <= prev + 1e-15);
            CHECK(lam >= 0.0);
            prev = lam;
        }
    }
}

TEST_CASE("doubling alpha doubles every lambda") {
    AerConfig cfg;
    cfg.rho = 0.3;
    AerState a(cfg), b(cfg);
    a.init_target(2.0);
    b.init_target(2.0);
    a.restore(2.0, 0.8, 0.31, 0, true);
    b.restore(2.0, 0.8, 0.62, 0, true);
    for (double g : {0.0, 0.125, 0.25, 0.3}) {
        CHECK(std::abs(b.allocate_lambda(g) - 2.0 * a.allocate_lambda(g)) < 1e-15);
    }
}

TEST_CASE("alpha update hand values") {
    AerState state(AerConfig{0.4, 0.2, 0.005, 1e-8});
    state.init_target(2.0); // H* = 0.8
    state.restore(2.0, 0.8, 0.10, 0, true);

    CHECK(state.update_alpha(0.6) == doctest::Approx(0.105).epsilon(1e-12));

    state.restore(2.0, 0.8, 0.002, 0, true);
    CHECK(state.update_alpha(1.0) == 0.0); // clamped at zero

    state.restore(2.0, 0.8, 0.25, 0, true);
    CHECK(state.update_alpha(0.8) == 0.25); // sgn(0) = 0
}

TEST_CASE("alpha moves by exactly eta or zero and never goes negative") {
    AerState state(AerConfig{0.4, 0.2, 0.005, 1e-8});
    state.init_target(2.0);
    RngStream rng(13);
    double prev = state.alpha();
    for (int t = 0; t < 2000; ++t) {
        const double h = rng.uniform01() * 2.0;
        const double next = state.update_alpha(h);
        const double delta = std::abs(next - prev);
        const bool exact_step = std::abs(delta - 0.005) < 1e-15 || delta < 1e-15;
        const bool clamped = next == 0.0 && prev < 0.005;
        CHECK((exact_step || clamped));
        CHECK(next >= 0.0);
        prev = next;
    }
    CHECK(state.step() == 2000);
}

TEST_CASE("updates before initialization are contract violations") {
    AerState state(AerConfig{});
    CHECK_THROWS_AS(state.allocate_lambda(0.0), contract_error);
    CHECK_THROWS_AS(state.update_alpha(1.0), contract_error);
}

TEST_CASE("batch entropy is token-weighted") {
    {
        std::vector<RolloutGroup> groups;
        groups.push_back(make_group({make_response({std::log(16.0), std::log(16.0)}),
                                     make_response({std::log(16.0)})}));
        const auto est = batch_entropy(groups);
        CHECK(est.token_count == 3);
        CHECK(est.value == doctest::Approx(std::log(16.0)).epsilon(1e-12));
    }
    {
        const double a = 0.3;
        const double b = 1.1;
        std::vector<RolloutGroup> groups;
        groups.push_back(make_group({make_response({a}), make_response({b, b, b})}));
        const auto est = batch_entropy(groups);
        CHECK(est.token_count == 4);
        CHECK(est.value == doctest::Approx((a + 3 * b) / 4).epsilon(1e-12));

        // sequence-weighted aggregation would say (a+b)/2; they differ here...
        CHECK(std::abs(est.value - (a + b) / 2) > 1e-6);

        // ...and agree exactly when all responses share one length
        std::vector<RolloutGroup> equal_len;
        equal_len.push_back(make_group({make_response({a, a}), make_response({b, b})}));
        const auto est2 = batch_entropy(equal_len);
        CHECK(est2.value == doctest::Approx((a + b) / 2).epsilon(1e-12));
    }
}

TEST_CASE("empty batches are data errors") {
    std::vector<RolloutGroup> groups;
    CHECK_THROWS_AS(batch_entropy(groups), data_error);
    groups.push_back(make_group({}));
    CHECK_THROWS_AS(batch_entropy(groups), data_error);
}

TEST_CASE("closed-loop tracking on the linear entropy plant") {
    // Plant: H_{t+1} = H_t + kappa*(alpha_{t+1} - alpha*) + noise, with the
    // controller's post-update alpha driving the next iteration, matching the
    // trainer's loop order. With alpha* on the scale of one controller step,
    // |H - H*| settles into an O(eta*kappa) band and stays.
    const double eta = 0.005;
    const double h0 = 2.772;
    for (double kappa : {0.5, 1.0, 2.0}) {
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            AerConfig cfg;
            cfg.eta = eta;
            AerState state(cfg); // tau = 0.4
            state.init_target(h0);
            const double target = state.target_entropy();
            const double alpha_star = eta;
            const double noise_amp = 0.25 * eta * kappa;
            const double half_band = 4.0 * eta * kappa; // width 8*eta*kappa
            const int entry_bound = static_cast<int>(2.0 * (h0 - target) / (eta * kappa)) + 1;

            RngStream noise(seed);
            double h = h0;
            int entered = -1;
            bool stayed = true;
            const int total = 3 * entry_bound;
            for (int t = 0; t < total; ++t) {
                const double err = h - target;
                if (entered < 0 && std::abs(err) <= half_band) {
                    entered = t;
                }
                if (entered >= 0 && std::abs(err) > half_band) {
                    stayed = false;
                }
                const double alpha = state.update_alpha(h);
                h += kappa * (alpha - alpha_star) + (2.0 * noise.uniform01() - 1.0) * noise_amp;
            }
            REQUIRE(entered >= 0);
            CHECK(entered <= entry_bound);
            CHECK(stayed);
        }
    }
}
