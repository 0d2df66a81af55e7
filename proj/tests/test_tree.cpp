#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fbsmp/tree.hpp"

using namespace fbsmp;

TEST_CASE("build_tree basic shapes and node values") {
    SUBCASE("T=1 N=1") {
        BrownianTree tree = build_tree(1.0, 1);
        CHECK(tree.node(0, 0) == 0.0);
        CHECK(tree.node(1, 0) == doctest::Approx(-1.0));
        CHECK(tree.node(1, 1) == doctest::Approx(1.0));
    }
    SUBCASE("T=1 N=4 step 2") {
        BrownianTree tree = build_tree(1.0, 4);
        CHECK(tree.node(2, 0) == doctest::Approx(-1.0 * 2 * 0.5).epsilon(1e-15));
        CHECK(tree.node(2, 1) == doctest::Approx(0.0));
        CHECK(tree.node(2, 2) == doctest::Approx(1.0));
    }
    SUBCASE("T=2 N=8 final step") {
        BrownianTree tree = build_tree(2.0, 8);
        CHECK(tree.node_count(8) == 9);
        for (int j = 0; j <= 8; ++j)
            CHECK(tree.node(8, j) == doctest::Approx((2.0 * j - 8.0) * 0.5).epsilon(1e-15));
    }
    SUBCASE("invalid arguments") {
        CHECK_THROWS_AS(build_tree(0.0, 4), std::invalid_argument);
        CHECK_THROWS_AS(build_tree(-1.0, 4), std::invalid_argument);
        CHECK_THROWS_AS(build_tree(1.0, 0), std::invalid_argument);
    }
    SUBCASE("dt * N == T within one rounding") {
        BrownianTree tree = build_tree(0.7, 13);
        CHECK(tree.dt() * 13 == doctest::Approx(0.7).epsilon(1e-15));
    }
}

TEST_CASE("conditional expectation") {
    BrownianTree tree = build_tree(1.0, 2);
    TreeProcess proc(2);

    SUBCASE("children (2, 4) average to 3") {
        proc.at(1, 0) = 2.0;
        proc.at(1, 1) = 4.0;
        const auto ce = conditional_expectation(proc, 0);
        CHECK(ce[0] == doctest::Approx(3.0));
    }
    SUBCASE("constant process stays constant") {
        TreeProcess c(2, 7.25);
        const auto ce = conditional_expectation(c, 1);
        CHECK(ce[0] == 7.25);
        CHECK(ce[1] == 7.25);
    }
    SUBCASE("antisymmetric children vanish") {
        proc.at(1, 0) = -5.5;
        proc.at(1, 1) = 5.5;
        CHECK(conditional_expectation(proc, 0)[0] == 0.0);
    }
    SUBCASE("step out of range throws") {
        CHECK_THROWS_AS(conditional_expectation(proc, 2), std::invalid_argument);
    }
}

TEST_CASE("martingale coefficient") {
    BrownianTree tree = build_tree(1.0, 4);
    const double sdt = tree.sqrt_dt();

    SUBCASE("deterministic increment gives zero") {
        TreeProcess proc(4, 3.0);
        const auto mc = martingale_coefficient(proc, 1, sdt);
        CHECK(mc[0] == 0.0);
        CHECK(mc[1] == 0.0);
    }
    SUBCASE("the Brownian increment itself gives one") {
        TreeProcess proc(4);
        proc.at(1, 0) = -sdt;
        proc.at(1, 1) = sdt;
        const auto mc = martingale_coefficient(proc, 0, sdt);
        CHECK(mc[0] == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("squared Brownian value has coefficient 2B at interior nodes") {
        // Direct tree evaluation: (B+s)^2 - (B-s)^2 = 4 B s, divided by 2s.
        TreeProcess proc = TreeProcess::from_node_function(
            tree, [&](int k, int j) { return tree.node(k, j) * tree.node(k, j); });
        for (int k = 0; k < 4; ++k) {
            const auto mc = martingale_coefficient(proc, k, sdt);
            for (int j = 0; j <= k; ++j)
                CHECK(mc[j] == doctest::Approx(2.0 * tree.node(k, j)).epsilon(1e-13));
        }
    }
}

TEST_CASE("tree Brownian moments are exact") {
    BrownianTree tree = build_tree(1.7, 37);
    TreeProcess b = TreeProcess::from_node_function(
        tree, [&](int k, int j) { return tree.node(k, j); });
    TreeProcess b2 = TreeProcess::from_node_function(
        tree, [&](int k, int j) { return tree.node(k, j) * tree.node(k, j); });
    CHECK(expectation(tree, b, 37) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(expectation(tree, b2, 37) == doctest::Approx(1.7).epsilon(1e-13));

    // Partial sums too: E[B(t_k)^2] = t_k.
    for (int k : {1, 5, 17}) CHECK(expectation(tree, b2, k) == doctest::Approx(tree.time(k)));
}

TEST_CASE("forward projection preserves one-step means") {
    BrownianTree tree = build_tree(1.0, 6);
    // Nontrivial state-dependent coefficients.
    TreeProcess x(6);
    x.at(0, 0) = 0.4;
    for (int k = 0; k < 6; ++k) {
        std::vector<double> drift(k + 1), diff(k + 1);
        for (int j = 0; j <= k; ++j) {
            drift[j] = 0.3 * x.at(k, j) + 0.1;
            diff[j] = 0.5 * std::sin(x.at(k, j)) + 0.7;
        }
        const auto next = forward_step_project(tree, k, x.row(k), drift, diff);
        // Projection is a conditional expectation, so the step mean matches
        // the path-wise Euler mean exactly.
        double mean_path = 0.0;
        for (int j = 0; j <= k; ++j)
            mean_path += tree.probability(k, j) * (x.at(k, j) + drift[j] * tree.dt());
        double mean_proj = 0.0;
        for (int i = 0; i <= k + 1; ++i) mean_proj += tree.probability(k + 1, i) * next[i];
        CHECK(mean_proj == doctest::Approx(mean_path).epsilon(1e-13));
        x.row(k + 1) = next;
    }
}

TEST_CASE("sampled paths are valid and deterministic") {
    Rng64 rng(42);
    const auto p1 = sample_path(16, rng);
    Rng64 rng2(42);
    const auto p2 = sample_path(16, rng2);
    CHECK(p1 == p2);
    for (int k = 0; k < 16; ++k) {
        const int step = p1[k + 1] - p1[k];
        CHECK((step == 0 || step == 1));
    }
}
