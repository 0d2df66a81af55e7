#include "fbsmp/assumptions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fbsmp/errors.hpp"

namespace fbsmp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void AssumptionInputs::validate() const {
    if (L1 < 0 || L2 < 0 || L3 < 0)
        throw std::invalid_argument("AssumptionInputs: Lipschitz constants must be nonnegative");
    if (!(beta0 > 0.0 && beta0 < 1.0))
        throw std::invalid_argument("AssumptionInputs: beta0 must lie strictly inside (0, 1)");
    if (!(T > 0.0)) throw std::invalid_argument("AssumptionInputs: T must be positive");
}

AssumptionInputs AssumptionInputs::from_model(const CoefficientModel& model, double T,
                                              double beta0) {
    AssumptionInputs in;
    const LipschitzData lip = model.lipschitz();
    in.L1 = lip.L1;
    in.L2 = lip.L2;
    in.L3 = lip.L3;
    in.T = T;
    in.beta0 = beta0;
    in.validate();
    return in;
}

double lambda_beta(double C_beta, double c1, double T, double beta) {
    if (C_beta < 0 || c1 < 0) throw std::invalid_argument("lambda_beta: negative constant");
    if (!(T > 0)) throw std::invalid_argument("lambda_beta: T must be positive");
    if (!(beta > 1.0)) throw std::invalid_argument("lambda_beta: beta must exceed 1");
    return C_beta * std::pow(2.0, beta + 1.0) * (1.0 + std::pow(T, beta)) * std::pow(c1, beta);
}

double g_function(double y, double L1, double L2, double beta0) {
    if (!(beta0 > 0.0)) throw std::invalid_argument("g_function: beta0 must be positive");
    const double a = std::abs(y);
    return L1 + (L2 + L1 + L1 * L2 / beta0) * a + (L2 + (L1 * L2 + L2 * L2) / beta0) * a * a +
           (L2 * L2 / beta0) * a * a * a;
}

BoundCurves solve_s_l(const AssumptionInputs& in, int steps, double blowup_cap) {
    in.validate();
    if (steps < 1) throw std::invalid_argument("solve_s_l: steps must be >= 1");

    const TStar ts = compute_t_star(in);
    if (!(ts.t_star < 0.0))
        throw SolverError(SolverErrorKind::NoSolution,
                          "solve_s_l: comparison curves blow up inside [0, T] (t* >= 0)");

    const double h = in.T / steps;
    auto G = [&](double y) { return g_function(y, in.L1, in.L2, in.beta0); };

    BoundCurves out;
    out.times.resize(steps + 1);
    out.s.resize(steps + 1);
    out.l.resize(steps + 1);
    out.times[steps] = in.T;
    out.s[steps] = in.L1;
    out.l[steps] = -in.L1;

    // Integrate backward from T to 0. With tau = T - t both curves satisfy
    // ds/dtau = G(s), dl/dtau = -G(l).
    double s = in.L1, l = -in.L1;
    for (int i = steps - 1; i >= 0; --i) {
        {
            const double k1 = G(s);
            const double k2 = G(s + 0.5 * h * k1);
            const double k3 = G(s + 0.5 * h * k2);
            const double k4 = G(s + h * k3);
            s += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        {
            const double k1 = -G(l);
            const double k2 = -G(l + 0.5 * h * k1);
            const double k3 = -G(l + 0.5 * h * k2);
            const double k4 = -G(l + h * k3);
            l += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        if (!std::isfinite(s) || !std::isfinite(l) || std::abs(s) > blowup_cap ||
            std::abs(l) > blowup_cap)
            throw SolverError(SolverErrorKind::NoSolution,
                              "solve_s_l: blow-up before t = 0; comparison assumption fails");
        out.times[i] = in.T * static_cast<double>(i) / steps;
        out.s[i] = s;
        out.l[i] = l;
    }
    return out;
}

TStar compute_t_star(const AssumptionInputs& in, int quadrature_steps) {
    in.validate();
    if (quadrature_steps < 2) throw std::invalid_argument("compute_t_star: too few steps");
    if (quadrature_steps % 2 == 1) ++quadrature_steps;  // Simpson needs an even count

    // G grows linearly when L2 = 0, so 1/G is not integrable at infinity; when
    // L1 = 0 the integrand blows up at the finite endpoint (G(L1) = 0). Both
    // ways the integral diverges and the breakdown time is -infinity.
    if (in.L2 <= 0.0 || in.L1 <= 0.0) return TStar{-kInf, -kInf, -kInf};

    // y = L1 + tan(theta) maps [L1, inf) to [0, pi/2); the integrand
    // sec^2(theta) / G(L1 + tan(theta)) vanishes at the upper endpoint because
    // G grows cubically.
    auto integrand = [&](double theta) {
        const double c = std::cos(theta);
        if (c <= 0.0) return 0.0;
        const double tan_theta = std::sin(theta) / c;
        const double y = in.L1 + tan_theta;
        return 1.0 / (c * c * g_function(y, in.L1, in.L2, in.beta0));
    };

    const double a = 0.0, b = std::asin(1.0);  // pi/2
    const double h = (b - a) / quadrature_steps;
    double sum = integrand(a) + 0.0;  // upper endpoint limit is 0
    for (int i = 1; i < quadrature_steps; ++i)
        sum += integrand(a + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
    const double integral = sum * h / 3.0;

    // G is even, so the integral over (-inf, -L1] equals the one over [L1, inf).
    TStar out;
    out.t2 = in.T - integral;
    out.t1 = in.T - integral;
    out.t_star = std::max(out.t1, out.t2);
    return out;
}

AssumptionReport check_assumptions(const AssumptionInputs& in) {
    in.validate();
    AssumptionReport rep;
    rep.beta0 = in.beta0;
    const double c1 = std::max(in.L2, in.L3);
    rep.smallness_ok = true;
    for (int beta : {2, 4, 6, 8}) {
        const double C = in.C_beta.count(beta) ? in.C_beta.at(beta) : 1.0;
        rep.C_beta_used[beta] = C;
        rep.lambda[beta] = lambda_beta(C, c1, in.T, beta);
        if (!(rep.lambda[beta] < 1.0)) rep.smallness_ok = false;
    }

    const TStar ts = compute_t_star(in);
    rep.t1 = ts.t1;
    rep.t2 = ts.t2;
    rep.t_star = ts.t_star;

    if (ts.t_star < 0.0) {
        try {
            const BoundCurves curves = solve_s_l(in);
            rep.s0 = curves.s0();
            rep.l0 = curves.l0();
            rep.bound = std::max(rep.s0, -rep.l0);
            rep.p_bound_feasible = rep.bound * in.L3 <= 1.0 - in.beta0;
            rep.comparison_ok = rep.p_bound_feasible;
        } catch (const SolverError&) {
            rep.comparison_ok = false;
            rep.p_bound_feasible = false;
        }
    } else {
        rep.comparison_ok = false;
        rep.p_bound_feasible = false;
    }
    return rep;
}

}  // namespace fbsmp
