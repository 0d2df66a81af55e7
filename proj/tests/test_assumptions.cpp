#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fbsmp/assumptions.hpp"
#include "fbsmp/errors.hpp"

using namespace fbsmp;

namespace {

// Independent quadrature oracle for int_{L1}^{inf} dy / G(y): plain Simpson
// on y (no substitution), fine near the lower endpoint where the integrand
// concentrates, plus the cubic-tail estimate beyond 1e6.
double t2_integral_oracle(double L1, double L2, double beta0) {
    auto simpson = [&](double lo, double hi, long n) {
        const double h = (hi - lo) / n;
        long double sum =
            1.0L / g_function(lo, L1, L2, beta0) + 1.0L / g_function(hi, L1, L2, beta0);
        for (long i = 1; i < n; ++i)
            sum += (i % 2 ? 4.0L : 2.0L) / g_function(lo + i * h, L1, L2, beta0);
        return static_cast<double>(sum * h / 3.0L);
    };
    const double body = simpson(L1, 100.0, 1'000'000) + simpson(100.0, 1e6, 1'000'000);
    // G(y) ~ (L2^2 / beta0) y^3 for large y, so the remaining tail integrates
    // to beta0 / (2 L2^2 cut^2).
    const double tail = beta0 / (2.0 * L2 * L2 * 1e12);
    return body + tail;
}

AssumptionInputs inputs(double L1, double L2, double L3, double beta0 = 0.5, double T = 1.0) {
    AssumptionInputs in;
    in.L1 = L1;
    in.L2 = L2;
    in.L3 = L3;
    in.beta0 = beta0;
    in.T = T;
    return in;
}

}  // namespace

TEST_CASE("lambda_beta formula") {
    CHECK(lambda_beta(1.0, 0.0, 1.0, 2.0) == 0.0);
    CHECK(lambda_beta(1.0, 0.1, 1.0, 2.0) == doctest::Approx(0.16).epsilon(1e-12));
    // 2 * 2^3 * (1 + 4) * 0.25 = 20: fails the smallness requirement.
    CHECK(lambda_beta(2.0, 0.5, 2.0, 2.0) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(lambda_beta(2.0, 0.5, 2.0, 2.0) >= 1.0);
    CHECK_THROWS_AS(lambda_beta(1.0, 0.1, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(lambda_beta(1.0, 0.1, 0.0, 2.0), std::invalid_argument);
}

TEST_CASE("growth function G") {
    SUBCASE("G(0) = L1") {
        CHECK(g_function(0.0, 0.7, 0.3, 0.5) == doctest::Approx(0.7));
    }
    SUBCASE("L2 = 0 collapses to L1 (1 + |y|)") {
        for (double y : {-2.0, -0.5, 0.0, 1.5, 4.0})
            CHECK(g_function(y, 0.8, 0.0, 0.4) ==
                  doctest::Approx(0.8 * (1.0 + std::abs(y))).epsilon(1e-14));
    }
    SUBCASE("hand evaluation at y=1, L1=L2=1, beta0=0.5") {
        CHECK(g_function(1.0, 1.0, 1.0, 0.5) == doctest::Approx(12.0).epsilon(1e-14));
    }
    SUBCASE("even in y") {
        CHECK(g_function(-1.3, 0.4, 0.2, 0.6) == g_function(1.3, 0.4, 0.2, 0.6));
    }
    SUBCASE("beta0 <= 0 rejected") {
        CHECK_THROWS_AS(g_function(1.0, 1.0, 1.0, 0.0), std::invalid_argument);
    }
}

TEST_CASE("comparison curves") {
    SUBCASE("L2 = 0 closed form (1 + L1) e^{L1 (T - t)} - 1") {
        const double L1 = 0.6, T = 1.0;
        const BoundCurves c = solve_s_l(inputs(L1, 0.0, 0.1, 0.5, T));
        for (std::size_t i = 0; i < c.times.size(); i += 100) {
            const double expected = (1.0 + L1) * std::exp(L1 * (T - c.times[i])) - 1.0;
            CHECK(c.s[i] == doctest::Approx(expected).epsilon(1e-6));
        }
        CHECK(c.s.back() == doctest::Approx(L1));
        CHECK(c.l.back() == doctest::Approx(-L1));
    }
    SUBCASE("L1 = 0 gives the zero curve") {
        const BoundCurves c = solve_s_l(inputs(0.0, 0.2, 0.1));
        CHECK(c.s0() == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(c.l0() == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("l mirrors s") {
        const BoundCurves c = solve_s_l(inputs(0.4, 0.1, 0.1));
        for (std::size_t i = 0; i < c.times.size(); i += 57)
            CHECK(c.l[i] == doctest::Approx(-c.s[i]).epsilon(1e-12));
    }
    SUBCASE("s decreasing in t, bounded below by L1") {
        const BoundCurves c = solve_s_l(inputs(0.5, 0.1, 0.1));
        for (std::size_t i = 1; i < c.times.size(); ++i) {
            CHECK(c.s[i] <= c.s[i - 1] + 1e-15);
            CHECK(c.s[i] >= 0.5 - 1e-12);
        }
    }
    SUBCASE("blow-up case rejected with NoSolution") {
        // Large L2 pushes the breakdown time into [0, T].
        try {
            solve_s_l(inputs(1.0, 3.0, 0.1));
            CHECK(false);
        } catch (const SolverError& e) {
            CHECK(e.kind() == SolverErrorKind::NoSolution);
        }
    }
}

TEST_CASE("breakdown time t*") {
    SUBCASE("L2 = 0 diverges to -inf") {
        const TStar ts = compute_t_star(inputs(1.0, 0.0, 0.2));
        CHECK(ts.t_star == -std::numeric_limits<double>::infinity());
    }
    SUBCASE("L1 = 0 diverges to -inf") {
        const TStar ts = compute_t_star(inputs(0.0, 0.5, 0.2));
        CHECK(ts.t_star == -std::numeric_limits<double>::infinity());
    }
    SUBCASE("frozen value at L1=1, L2=1, beta0=0.5, T=1 vs quadrature oracle") {
        const double oracle = 1.0 - t2_integral_oracle(1.0, 1.0, 0.5);
        const TStar ts = compute_t_star(inputs(1.0, 1.0, 0.2, 0.5, 1.0));
        CHECK(ts.t2 == doctest::Approx(oracle).epsilon(1e-6));
        CHECK(ts.t1 == ts.t2);
        CHECK(ts.t_star == std::max(ts.t1, ts.t2));
    }
    SUBCASE("t* nondecreasing in L2") {
        double prev = -std::numeric_limits<double>::infinity();
        for (int i = 1; i <= 10; ++i) {
            const double L2 = 0.08 * i;
            const TStar ts = compute_t_star(inputs(1.0, L2, 0.2));
            CHECK(ts.t_star >= prev - 1e-12);
            prev = ts.t_star;
        }
    }
}

TEST_CASE("check_assumptions report") {
    SUBCASE("degenerate smallness passes everything") {
        const AssumptionReport rep = check_assumptions(inputs(0.3, 0.0, 0.0));
        CHECK(rep.smallness_ok);
        CHECK(rep.comparison_ok);
        CHECK(rep.pass());
    }
    SUBCASE("huge L3 fails the product bound regardless of the curves") {
        const AssumptionReport rep = check_assumptions(inputs(0.3, 0.05, 50.0));
        CHECK_FALSE(rep.p_bound_feasible);
        CHECK_FALSE(rep.pass());
    }
    SUBCASE("shrinking L2, L3 eventually passes") {
        bool passed = false;
        double L2 = 1.0, L3 = 1.0;
        for (int i = 0; i < 12; ++i) {
            const AssumptionReport rep = check_assumptions(inputs(0.3, L2, L3));
            if (rep.pass()) {
                passed = true;
                break;
            }
            L2 *= 0.5;
            L3 *= 0.5;
        }
        CHECK(passed);
    }
    SUBCASE("lambda monotone in c1") {
        double prev = 0.0;
        for (int i = 1; i <= 8; ++i) {
            const double c1 = 0.05 * i;
            const double lam = lambda_beta(1.0, c1, 1.0, 2.0);
            CHECK(lam >= prev);
            prev = lam;
        }
    }
    SUBCASE("flags are pure functions of the numeric fields") {
        const AssumptionReport rep = check_assumptions(inputs(0.3, 0.1, 0.1));
        CHECK(rep.smallness_ok == (rep.lambda.at(2) < 1.0 && rep.lambda.at(4) < 1.0 &&
                                   rep.lambda.at(6) < 1.0 && rep.lambda.at(8) < 1.0));
        CHECK(rep.comparison_ok ==
              (rep.t_star < 0.0 && rep.bound * 0.1 <= 1.0 - rep.beta0));
    }
}
