#include "fbsmp/adjoint.hpp"

#include <cmath>
#include <stdexcept>

#include "fbsmp/errors.hpp"

namespace fbsmp {

namespace {

struct NodeDerivs {
    Gradient b, s, g;
    Hessian bh, sh, gh;
};

NodeDerivs derivs_at(const CoefficientModel& m, const BrownianTree& tree,
                     const FbsdeSolution& opt, const TreeProcess& u_bar, int k, int j,
                     bool second_order) {
    const double t = tree.time(k);
    const double x = opt.X.at(k, j), y = opt.Y.at(k, j), z = opt.Z.at(k, j);
    const double u = u_bar.at(k, j);
    NodeDerivs d;
    d.b = m.b_grad(t, x, y, z, u);
    d.s = m.sigma_grad(t, x, y, z, u);
    d.g = m.g_grad(t, x, y, z, u);
    if (second_order) {
        d.bh = m.b_hess(t, x, y, z, u);
        d.sh = m.sigma_hess(t, x, y, z, u);
        d.gh = m.g_hess(t, x, y, z, u);
    }
    return d;
}

double k1_of(double p, double q, const Gradient& s, double beta0) {
    const double denom = 1.0 - p * s.z;
    if (std::abs(denom) < 0.5 * beta0)
        throw SolverError(SolverErrorKind::Singularity,
                          "adjoint: 1 - p sigma_z fell below beta0/2");
    return (s.x * p + s.y * p * p + q) / denom;
}

}  // namespace

AdjointBundle solve_first_order_adjoint(const CoefficientModel& coeffs,
                                        const FbsdeSolution& optimal, const TreeProcess& u_bar,
                                        const BrownianTree& tree, const AdjointOptions& opts) {
    const int N = tree.steps();
    AdjointBundle out;
    out.p = TreeProcess(N);
    out.q = TreeProcess(N);
    out.k1 = TreeProcess(N);
    out.bound_used = opts.p_bound;

    for (int j = 0; j <= N; ++j) {
        out.p.at(N, j) = coeffs.phi_x(optimal.X.at(N, j));
        const NodeDerivs d = derivs_at(coeffs, tree, optimal, u_bar, N, j, false);
        out.k1.at(N, j) = k1_of(out.p.at(N, j), 0.0, d.s, opts.beta0);
    }

    const double dt = tree.dt();
    for (int k = N - 1; k >= 0; --k) {
        const auto ce = conditional_expectation(out.p, k);
        const auto mc = martingale_coefficient(out.p, k, tree.sqrt_dt());
        for (int j = 0; j <= k; ++j) {
            const NodeDerivs d = derivs_at(coeffs, tree, optimal, u_bar, k, j, false);
            const double q = mc[j];
            // Damped fixed point on the quadratic generator; the node problem
            // is scalar because q is already fixed by the children.
            double p = ce[j];
            bool converged = false;
            double k1 = 0.0;
            for (int it = 0; it < opts.max_iter; ++it) {
                k1 = k1_of(p, q, d.s, opts.beta0);
                const double f = d.g.x + d.g.y * p + d.g.z * k1 + d.b.x * p + d.b.y * p * p +
                                 d.b.z * k1 * p + d.s.x * q + d.s.y * p * q + d.s.z * k1 * q;
                const double target = ce[j] + f * dt;
                const double next = p + opts.damping * (target - p);
                const double step = std::abs(next - p);
                p = next;
                if (step <= opts.tol * std::max(1.0, std::abs(p))) {
                    converged = true;
                    break;
                }
            }
            if (!converged)
                throw SolverError(SolverErrorKind::NumericDivergence,
                                  "adjoint: quadratic node fixed point did not converge");
            out.p.at(k, j) = p;
            out.q.at(k, j) = q;
            out.k1.at(k, j) = k1_of(p, q, d.s, opts.beta0);
            out.max_abs_q = std::max(out.max_abs_q, std::abs(q));
        }
    }
    return out;
}

SecondOrderBundle solve_second_order_adjoint(const CoefficientModel& coeffs,
                                             const FbsdeSolution& optimal,
                                             const TreeProcess& u_bar, const AdjointBundle& first,
                                             const BrownianTree& tree,
                                             const AdjointOptions& opts) {
    const int N = tree.steps();
    SecondOrderBundle out;
    out.P = TreeProcess(N);
    out.Q = TreeProcess(N);
    out.k2 = TreeProcess(N);

    auto k2_of = [&](int k, int j, double P, double Q, const NodeDerivs& d) {
        const double p = first.p.at(k, j);
        const double k1 = first.k1.at(k, j);
        const double denom = 1.0 - p * d.s.z;
        if (std::abs(denom) < 0.5 * opts.beta0)
            throw SolverError(SolverErrorKind::Singularity,
                              "second-order adjoint: 1 - p sigma_z fell below beta0/2");
        const double dsv = d.s.dot(1.0, p, k1);
        const double quad_sigma = d.sh.quad(1.0, p, k1);
        return ((p * d.s.y + 2.0 * dsv) * P + Q + p * quad_sigma) / denom;
    };

    for (int j = 0; j <= N; ++j) {
        out.P.at(N, j) = coeffs.phi_xx(optimal.X.at(N, j));
        const NodeDerivs d = derivs_at(coeffs, tree, optimal, u_bar, N, j, true);
        out.k2.at(N, j) = k2_of(N, j, out.P.at(N, j), 0.0, d);
    }

    const double dt = tree.dt();
    for (int k = N - 1; k >= 0; --k) {
        const auto ce = conditional_expectation(out.P, k);
        const auto mc = martingale_coefficient(out.P, k, tree.sqrt_dt());
        for (int j = 0; j <= k; ++j) {
            const NodeDerivs d = derivs_at(coeffs, tree, optimal, u_bar, k, j, true);
            const double p = first.p.at(k, j);
            const double q = first.q.at(k, j);
            const double k1 = first.k1.at(k, j);
            const double Q = mc[j];
            const double denom = 1.0 - p * d.s.z;
            if (std::abs(denom) < 0.5 * opts.beta0)
                throw SolverError(SolverErrorKind::Singularity,
                                  "second-order adjoint: 1 - p sigma_z fell below beta0/2");
            const double dsv = d.s.dot(1.0, p, k1);
            const double dbv = d.b.dot(1.0, p, k1);
            const double h_y = d.g.y + p * d.b.y + q * d.s.y;
            const double h_z = d.g.z + p * d.b.z + q * d.s.z;
            const double quad_h = d.gh.quad(1.0, p, k1) + p * d.bh.quad(1.0, p, k1) +
                                  q * d.sh.quad(1.0, p, k1);
            const double quad_sigma = d.sh.quad(1.0, p, k1);
            // Generator is linear in P: f = c1 P + c0.
            const double c1 = dsv * dsv + 2.0 * dbv + h_y + h_z / denom * (p * d.s.y + 2.0 * dsv);
            const double c0 = 2.0 * Q * dsv + quad_h + h_z / denom * (Q + p * quad_sigma);
            const double lin = 1.0 - c1 * dt;
            if (std::abs(lin) < 0.5)
                throw SolverError(SolverErrorKind::NumericDivergence,
                                  "second-order adjoint: node step 1 - c1 dt too small");
            const double P = (ce[j] + c0 * dt) / lin;
            out.P.at(k, j) = P;
            out.Q.at(k, j) = Q;
            out.k2.at(k, j) = k2_of(k, j, P, Q, d);
        }
    }
    return out;
}

namespace {

// Coefficients of the auxiliary linear backward equation and the matching
// forward exponential weight. `spike_source` is
// delta H(t, Delta) + (1/2) P delta sigma(t, Delta)^2 on the spike set.
struct AuxCoeffs {
    double a = 0.0;  // multiplies Yhat
    double b = 0.0;  // multiplies Zhat
    double source = 0.0;
};

AuxCoeffs aux_coeffs(const CoefficientModel& m, const BrownianTree& tree,
                     const FbsdeSolution& opt, const TreeProcess& u_bar,
                     const AdjointBundle& first, const SecondOrderBundle& second,
                     const SpikeSpec& spike, const TreeProcess& delta, double beta0, int k,
                     int j) {
    const double t = tree.time(k);
    const double x = opt.X.at(k, j), y = opt.Y.at(k, j), z = opt.Z.at(k, j);
    const double ub = u_bar.at(k, j);
    const Gradient bg = m.b_grad(t, x, y, z, ub);
    const Gradient sg = m.sigma_grad(t, x, y, z, ub);
    const Gradient gg = m.g_grad(t, x, y, z, ub);
    const double p = first.p.at(k, j);
    const double q = first.q.at(k, j);
    const double denom = 1.0 - p * sg.z;
    if (std::abs(denom) < 0.5 * beta0)
        throw SolverError(SolverErrorKind::Singularity,
                          "auxiliary equation: 1 - p sigma_z fell below beta0/2");
    AuxCoeffs out;
    const double h_y = gg.y + p * bg.y + q * sg.y;
    const double h_z = gg.z + p * bg.z + q * sg.z;
    out.a = h_y + sg.y * gg.z * p / denom;
    out.b = h_z + sg.z * gg.z * p / denom;
    if (spike.covers_step(k)) {
        const double u = spike.replacement;
        const double dlt = delta.at(k, j);
        const double db = m.b(t, x, y, z + dlt, u) - m.b(t, x, y, z, ub);
        const double ds = m.sigma(t, x, y, z + dlt, u) - m.sigma(t, x, y, z, ub);
        const double dg = m.g(t, x, y, z + dlt, u) - m.g(t, x, y, z, ub);
        const double P = second.P.at(k, j);
        out.source = p * db + q * ds + dg + 0.5 * P * ds * ds;
    }
    return out;
}

}  // namespace

AuxiliarySolution solve_auxiliary_yhat(const CoefficientModel& coeffs,
                                       const FbsdeSolution& optimal, const TreeProcess& u_bar,
                                       const AdjointBundle& first, const SecondOrderBundle& second,
                                       const SpikeSpec& spike, const TreeProcess& delta,
                                       const BrownianTree& tree, const AdjointOptions& opts) {
    const int N = tree.steps();
    AuxiliarySolution out;
    out.Yhat = TreeProcess(N);
    out.Zhat = TreeProcess(N);
    const double dt = tree.dt();
    for (int k = N - 1; k >= 0; --k) {
        const auto ce = conditional_expectation(out.Yhat, k);
        const auto mc = martingale_coefficient(out.Yhat, k, tree.sqrt_dt());
        for (int j = 0; j <= k; ++j) {
            const AuxCoeffs c = aux_coeffs(coeffs, tree, optimal, u_bar, first, second, spike,
                                           delta, opts.beta0, k, j);
            const double zhat = mc[j];
            const double lin = 1.0 - c.a * dt;
            if (std::abs(lin) < 0.5)
                throw SolverError(SolverErrorKind::NumericDivergence,
                                  "auxiliary equation: node step 1 - a dt too small");
            out.Zhat.at(k, j) = zhat;
            out.Yhat.at(k, j) = (ce[j] + (c.b * zhat + c.source) * dt) / lin;
        }
    }
    out.y0 = out.Yhat.at(0, 0);
    return out;
}

double gamma_representation(const CoefficientModel& coeffs, const FbsdeSolution& optimal,
                            const TreeProcess& u_bar, const AdjointBundle& first,
                            const SecondOrderBundle& second, const SpikeSpec& spike,
                            const TreeProcess& delta, const BrownianTree& tree,
                            const AdjointOptions& opts) {
    const int N = tree.steps();
    TreeProcess gamma(N);
    gamma.at(0, 0) = 1.0;
    double acc = 0.0;
    std::vector<double> drift, diff;
    for (int k = 0; k < N; ++k) {
        drift.assign(k + 1, 0.0);
        diff.assign(k + 1, 0.0);
        double step_sum = 0.0;
        const auto& pk = tree.probability_row(k);
        for (int j = 0; j <= k; ++j) {
            const AuxCoeffs c = aux_coeffs(coeffs, tree, optimal, u_bar, first, second, spike,
                                           delta, opts.beta0, k, j);
            const double gval = gamma.at(k, j);
            drift[j] = gval * c.a;
            diff[j] = gval * c.b;
            step_sum += pk[j] * gval * c.source;
        }
        acc += step_sum * tree.dt();
        gamma.row(k + 1) = forward_step_project(tree, k, gamma.row(k), drift, diff);
    }
    return acc;
}

}  // namespace fbsmp
