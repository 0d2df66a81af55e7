#include "fbsmp/fbsde.hpp"

#include <cmath>
#include <stdexcept>

#include "fbsmp/errors.hpp"

namespace fbsmp {

namespace {

// Implicit scalar solve y = target + g(y) dt by plain fixed point; the
// contraction factor is |g_y| dt which the smallness assumptions keep below 1.
template <typename G>
double solve_backward_node(const G& g_of_y, double target, double dt, double tol, int max_iter) {
    double y = target;
    for (int it = 0; it < max_iter; ++it) {
        const double next = target + g_of_y(y) * dt;
        const double step = std::abs(next - y);
        y = next;
        if (step <= tol * std::max(1.0, std::abs(y))) return y;
    }
    throw SolverError(SolverErrorKind::NumericDivergence,
                      "backward node solve: implicit fixed point did not converge");
}

}  // namespace

FbsdeSolution solve_decoupled(const TreeFbsde& problem, const BrownianTree& tree,
                              const TreeProcess& y_in, const TreeProcess& z_in,
                              const PicardOptions& opts) {
    const int N = tree.steps();
    if (y_in.steps() != N || z_in.steps() != N)
        throw std::invalid_argument("solve_decoupled: (y, z) input shape mismatch");

    FbsdeSolution sol;
    sol.X = TreeProcess(N);
    sol.Y = TreeProcess(N);
    sol.Z = TreeProcess(N);

    // Forward Euler with frozen (y, z).
    sol.X.at(0, 0) = problem.x0();
    std::vector<double> drift(1), diff(1);
    for (int k = 0; k < N; ++k) {
        drift.resize(k + 1);
        diff.resize(k + 1);
        for (int j = 0; j <= k; ++j) {
            const double x = sol.X.at(k, j);
            const double y = y_in.at(k, j);
            const double z = z_in.at(k, j);
            drift[j] = problem.drift(k, j, x, y, z);
            diff[j] = problem.diffusion(k, j, x, y, z);
        }
        sol.X.row(k + 1) = forward_step_project(tree, k, sol.X.row(k), drift, diff);
    }

    // Backward induction, generator implicit in Y.
    for (int j = 0; j <= N; ++j) sol.Y.at(N, j) = problem.terminal(j, sol.X.at(N, j));
    const double dt = tree.dt();
    for (int k = N - 1; k >= 0; --k) {
        const auto ce = conditional_expectation(sol.Y, k);
        const auto mc = martingale_coefficient(sol.Y, k, tree.sqrt_dt());
        for (int j = 0; j <= k; ++j) {
            const double x = sol.X.at(k, j);
            const double z = mc[j];
            sol.Z.at(k, j) = z;
            sol.Y.at(k, j) = solve_backward_node(
                [&](double y) { return problem.generator(k, j, x, y, z); }, ce[j], dt,
                opts.inner_tol, opts.inner_max_iter);
        }
    }
    return sol;
}

FbsdeSolution solve_coupled_picard(const TreeFbsde& problem, const BrownianTree& tree,
                                   const PicardOptions& opts, const TreeProcess* y_start,
                                   const TreeProcess* z_start) {
    const int N = tree.steps();
    TreeProcess y = y_start ? *y_start : TreeProcess(N);
    TreeProcess z = z_start ? *z_start : TreeProcess(N);
    FbsdeSolution sol;
    std::vector<double> history;

    for (int it = 1; it <= opts.max_iter; ++it) {
        sol = solve_decoupled(problem, tree, y, z, opts);
        double dy = sup_abs_diff(sol.Y, y);
        TreeProcess dz(N);
        for (int k = 0; k <= N; ++k)
            for (int j = 0; j <= k; ++j) dz.at(k, j) = sol.Z.at(k, j) - z.at(k, j);
        const double res = dy + std::sqrt(l2_time_norm_sq(tree, dz));
        history.push_back(res);
        y = sol.Y;
        z = sol.Z;
        if (res < opts.tol) {
            sol.picard_iterations = it;
            sol.final_residual = res;
            sol.residual_history = history;
            return sol;
        }
    }
    throw SolverError(SolverErrorKind::ContractionFailure,
                      "solve_coupled_picard: no contraction after max_iter sweeps", history);
}

FbsdeSolution solve_decoupled(const CoefficientModel& coeffs, const TreeProcess& y_in,
                              const TreeProcess& z_in, const TreeProcess& control,
                              const BrownianTree& tree, double x0, const PicardOptions& opts) {
    ControlledFbsde problem(coeffs, tree, control, x0);
    return solve_decoupled(problem, tree, y_in, z_in, opts);
}

FbsdeSolution solve_coupled_picard(const CoefficientModel& coeffs, const TreeProcess& control,
                                   const BrownianTree& tree, double x0,
                                   const PicardOptions& opts) {
    ControlledFbsde problem(coeffs, tree, control, x0);
    return solve_coupled_picard(problem, tree, opts);
}

LinearFbsdeSpec LinearFbsdeSpec::constants(double a1, double b1, double c1, double a2, double b2,
                                           double c2, double a3, double b3, double c3, double l1,
                                           double l2, double l3, double kappa, double x0) {
    auto c = [](double v) { return [v](double) { return v; }; };
    LinearFbsdeSpec s;
    s.a1 = c(a1); s.b1 = c(b1); s.c1 = c(c1);
    s.a2 = c(a2); s.b2 = c(b2); s.c2 = c(c2);
    s.a3 = c(a3); s.b3 = c(b3); s.c3 = c(c3);
    s.l1 = c(l1); s.l2 = c(l2); s.l3 = c(l3);
    s.kappa = kappa;
    s.x0 = x0;
    return s;
}

void LinearFbsdeSpec::validate(double T) const {
    const Fn* fns[] = {&a1, &b1, &c1, &a2, &b2, &c2, &a3, &b3, &c3, &l1, &l2, &l3};
    for (const Fn* f : fns) {
        if (!*f) throw std::invalid_argument("LinearFbsdeSpec: missing coefficient callable");
        for (int i = 0; i <= 16; ++i) {
            const double v = (*f)(T * i / 16.0);
            if (!std::isfinite(v) || std::abs(v) > 1e6)
                throw std::invalid_argument("LinearFbsdeSpec: coefficient unbounded on [0, T]");
        }
    }
}

namespace {

struct RiccatiState {
    double p, phi;
};

// Right-hand side of the backward pair in forward time:
// p' = -A(t, p), phi' = -C(t, p, phi) with q = nu = 0.
RiccatiState riccati_rhs(const LinearFbsdeSpec& s, double t, const RiccatiState& v) {
    const double denom = 1.0 - v.p * s.c2(t);
    if (std::abs(denom) < 1e-8)
        throw SolverError(SolverErrorKind::Singularity,
                          "linear oracle: 1 - p c2 vanished during Riccati integration");
    const double k1 = (s.a2(t) * v.p + s.b2(t) * v.p * v.p) / denom;
    const double A = s.a3(t) + s.b3(t) * v.p + s.c3(t) * k1 + s.a1(t) * v.p +
                     s.b1(t) * v.p * v.p + s.c1(t) * k1 * v.p;
    const double C = (s.b1(t) * v.p + s.b3(t)) * v.phi + v.p * s.l1(t) + s.l3(t) +
                     (s.c1(t) * v.p + s.c3(t)) / denom * (s.b2(t) * v.p * v.phi + v.p * s.l2(t));
    return RiccatiState{-A, -C};
}

// One RK4 step of size h (h < 0 integrates backward).
RiccatiState rk4_step(const LinearFbsdeSpec& s, double t, const RiccatiState& v, double h) {
    const RiccatiState k1 = riccati_rhs(s, t, v);
    const RiccatiState k2 = riccati_rhs(s, t + 0.5 * h, {v.p + 0.5 * h * k1.p, v.phi + 0.5 * h * k1.phi});
    const RiccatiState k3 = riccati_rhs(s, t + 0.5 * h, {v.p + 0.5 * h * k2.p, v.phi + 0.5 * h * k2.phi});
    const RiccatiState k4 = riccati_rhs(s, t + h, {v.p + h * k3.p, v.phi + h * k3.phi});
    return RiccatiState{v.p + h / 6.0 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p),
                        v.phi + h / 6.0 * (k1.phi + 2 * k2.phi + 2 * k3.phi + k4.phi)};
}

}  // namespace

FbsdeSolution solve_linear_oracle(const LinearFbsdeSpec& spec, const BrownianTree& tree,
                                  int rk4_substeps) {
    const int N = tree.steps();
    spec.validate(tree.grid().T);

    // Backward RK4 for (p, phi) sampled at the tree times.
    std::vector<double> p(N + 1), phi(N + 1);
    RiccatiState v{spec.kappa, 0.0};
    p[N] = v.p;
    phi[N] = v.phi;
    for (int k = N - 1; k >= 0; --k) {
        const double t_hi = tree.time(k + 1);
        const double h = -tree.dt() / rk4_substeps;
        for (int i = 0; i < rk4_substeps; ++i) v = rk4_step(spec, t_hi + i * h, v, h);
        p[k] = v.p;
        phi[k] = v.phi;
    }

    auto z_of = [&](int k, double x) {
        const double t = tree.time(k);
        const double denom = 1.0 - p[k] * spec.c2(t);
        if (std::abs(denom) < 1e-8)
            throw SolverError(SolverErrorKind::Singularity,
                              "linear oracle: 1 - p c2 vanished on the grid");
        return ((spec.a2(t) * p[k] + spec.b2(t) * p[k] * p[k]) * x + p[k] * spec.b2(t) * phi[k] +
                p[k] * spec.l2(t)) /
               denom;
    };

    FbsdeSolution sol;
    sol.X = TreeProcess(N);
    sol.Y = TreeProcess(N);
    sol.Z = TreeProcess(N);
    sol.X.at(0, 0) = spec.x0;
    std::vector<double> drift, diff;
    for (int k = 0; k < N; ++k) {
        const double t = tree.time(k);
        drift.assign(k + 1, 0.0);
        diff.assign(k + 1, 0.0);
        for (int j = 0; j <= k; ++j) {
            const double x = sol.X.at(k, j);
            const double y = p[k] * x + phi[k];
            const double z = z_of(k, x);
            sol.Y.at(k, j) = y;
            sol.Z.at(k, j) = z;
            drift[j] = spec.a1(t) * x + spec.b1(t) * y + spec.c1(t) * z + spec.l1(t);
            diff[j] = spec.a2(t) * x + spec.b2(t) * y + spec.c2(t) * z + spec.l2(t);
        }
        sol.X.row(k + 1) = forward_step_project(tree, k, sol.X.row(k), drift, diff);
    }
    for (int j = 0; j <= N; ++j) {
        const double x = sol.X.at(N, j);
        sol.Y.at(N, j) = p[N] * x + phi[N];
        sol.Z.at(N, j) = z_of(N, x);
    }
    return sol;
}

double linear_oracle_y0(const LinearFbsdeSpec& spec, double T, int rk4_steps) {
    spec.validate(T);
    RiccatiState v{spec.kappa, 0.0};
    const double h = -T / rk4_steps;
    for (int i = 0; i < rk4_steps; ++i) v = rk4_step(spec, T + i * h, v, h);
    return v.p * spec.x0 + v.phi;
}

}  // namespace fbsmp
