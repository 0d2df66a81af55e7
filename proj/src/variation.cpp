#include "fbsmp/variation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fbsmp/errors.hpp"
#include "fbsmp/threads.hpp"

namespace fbsmp {

double solve_delta_node(const CoefficientModel& coeffs, double t, double x, double y, double z,
                        double u_bar, double u, double p, const DeltaOptions& opts,
                        double* residual_out) {
    const double sigma_bar = coeffs.sigma(t, x, y, z, u_bar);
    auto map = [&](double d) { return p * (coeffs.sigma(t, x, y, z + d, u) - sigma_bar); };

    const double contraction = std::abs(p) * coeffs.lipschitz().L3;
    double d = opts.initial;
    bool converged = false;
    if (contraction < 1.0) {
        for (int it = 0; it < opts.max_iter; ++it) {
            const double next = map(d);
            const double step = std::abs(next - d);
            d = next;
            if (step <= opts.tol) {
                converged = true;
                break;
            }
        }
    }
    if (!converged) {
        // Contraction guarantee unavailable (|p| L3 >= 1 - beta0) or iteration
        // stalled: bisection on F(d) = d - map(d) over a widening bracket.
        double lo = -1.0, hi = 1.0;
        auto F = [&](double v) { return v - map(v); };
        int widen = 0;
        while (F(lo) * F(hi) > 0.0 && widen < 60) {
            lo *= 2.0;
            hi *= 2.0;
            ++widen;
        }
        if (F(lo) * F(hi) > 0.0)
            throw SolverError(SolverErrorKind::NoSolution,
                              "solve_delta_node: no sign change for the algebra equation");
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (F(lo) * F(mid) <= 0.0)
                hi = mid;
            else
                lo = mid;
            if (hi - lo < opts.tol) break;
        }
        d = 0.5 * (lo + hi);
    }
    if (residual_out) *residual_out = std::abs(d - map(d));
    return d;
}

DeltaProcess solve_delta(const CoefficientModel& coeffs, const FbsdeSolution& optimal,
                         const TreeProcess& u_bar, const AdjointBundle& first,
                         const SpikeSpec& spike, const BrownianTree& tree,
                         const DeltaOptions& opts) {
    DeltaProcess out;
    out.delta = TreeProcess(tree.steps());
    for (int k = spike.k_begin; k < spike.k_end; ++k) {
        const double t = tree.time(k);
        for (int j = 0; j <= k; ++j) {
            double resid = 0.0;
            out.delta.at(k, j) = solve_delta_node(
                coeffs, t, optimal.X.at(k, j), optimal.Y.at(k, j), optimal.Z.at(k, j),
                u_bar.at(k, j), spike.replacement, first.p.at(k, j), opts, &resid);
            out.residual = std::max(out.residual, resid);
        }
    }
    return out;
}

namespace {

// Node data shared by the variational systems: first derivatives at the
// candidate trajectory, closed-loop gains and spike increments. Everything
// is frozen along the trajectory, so it is evaluated once per node up front;
// the Picard solvers then run on plain arrays.
struct VariationContext {
    const CoefficientModel& coeffs;
    const FbsdeSolution& optimal;
    const TreeProcess& u_bar;
    const AdjointBundle& first;
    const DeltaProcess& delta;
    const SpikeSpec& spike;
    const BrownianTree& tree;

    std::vector<std::vector<Gradient>> bgs, sgs, ggs;
    std::vector<std::vector<double>> eb, es, eg;  // spike increments, zero off spike
    std::vector<std::vector<Gradient>> dsgs;      // spike sigma-gradient increments

    VariationContext(const CoefficientModel& coeffs_, const FbsdeSolution& optimal_,
                     const TreeProcess& u_bar_, const AdjointBundle& first_,
                     const DeltaProcess& delta_, const SpikeSpec& spike_,
                     const BrownianTree& tree_)
        : coeffs(coeffs_),
          optimal(optimal_),
          u_bar(u_bar_),
          first(first_),
          delta(delta_),
          spike(spike_),
          tree(tree_) {
        const int N = tree.steps();
        bgs.resize(N + 1);
        sgs.resize(N + 1);
        ggs.resize(N + 1);
        eb.resize(N + 1);
        es.resize(N + 1);
        eg.resize(N + 1);
        dsgs.resize(N + 1);
        for (int k = 0; k <= N; ++k) {
            bgs[k].resize(k + 1);
            sgs[k].resize(k + 1);
            ggs[k].resize(k + 1);
            eb[k].assign(k + 1, 0.0);
            es[k].assign(k + 1, 0.0);
            eg[k].assign(k + 1, 0.0);
            dsgs[k].assign(k + 1, Gradient{});
            const double t = tree.time(k);
            for (int j = 0; j <= k; ++j) {
                const double x = optimal.X.at(k, j), y = optimal.Y.at(k, j),
                             z = optimal.Z.at(k, j);
                const double ub = u_bar.at(k, j);
                bgs[k][j] = coeffs.b_grad(t, x, y, z, ub);
                sgs[k][j] = coeffs.sigma_grad(t, x, y, z, ub);
                ggs[k][j] = coeffs.g_grad(t, x, y, z, ub);
                if (spike.covers_step(k)) {
                    const double u = spike.replacement;
                    const double dl = delta.delta.at(k, j);
                    eb[k][j] = coeffs.b(t, x, y, z + dl, u) - coeffs.b(t, x, y, z, ub);
                    es[k][j] = coeffs.sigma(t, x, y, z + dl, u) - coeffs.sigma(t, x, y, z, ub);
                    eg[k][j] = coeffs.g(t, x, y, z + dl, u) - coeffs.g(t, x, y, z, ub);
                    const Gradient at_spike = coeffs.sigma_grad(t, x, y, z + dl, u);
                    dsgs[k][j] = {at_spike.x - sgs[k][j].x, at_spike.y - sgs[k][j].y,
                                  at_spike.z - sgs[k][j].z};
                }
            }
        }
    }

    bool on_spike(int k) const { return spike.covers_step(k); }
    double t(int k) const { return tree.time(k); }
    const Gradient& bg(int k, int j) const { return bgs[k][j]; }
    const Gradient& sg(int k, int j) const { return sgs[k][j]; }
    const Gradient& gg(int k, int j) const { return ggs[k][j]; }
    double delta_coeff(int k, int j, char which) const {
        switch (which) {
            case 'b': return eb[k][j];
            case 's': return es[k][j];
            default: return eg[k][j];
        }
    }
    const Gradient& delta_sigma_grad(int k, int j) const { return dsgs[k][j]; }
    double delta_at(int k, int j) const { return on_spike(k) ? delta.delta.at(k, j) : 0.0; }
};

// Direct formulation of the first-order variational FBSDE on the projected
// tree (route diagnostic).
class FirstVariationFbsde : public TreeFbsde {
  public:
    explicit FirstVariationFbsde(const VariationContext& ctx) : ctx_(ctx) {}

    double drift(int k, int j, double x, double y, double z) const override {
        const Gradient b = ctx_.bg(k, j);
        return b.x * x + b.y * y + b.z * (z - ctx_.delta_at(k, j));
    }
    double diffusion(int k, int j, double x, double y, double z) const override {
        const Gradient s = ctx_.sg(k, j);
        return s.x * x + s.y * y + s.z * (z - ctx_.delta_at(k, j)) + ctx_.delta_coeff(k, j, 's');
    }
    double generator(int k, int j, double x, double y, double z) const override {
        const Gradient g = ctx_.gg(k, j);
        const double q = ctx_.first.q.at(k, j);
        return g.x * x + g.y * y + g.z * (z - ctx_.delta_at(k, j)) -
               q * ctx_.delta_coeff(k, j, 's');
    }
    double terminal(int j, double x) const override {
        return ctx_.coeffs.phi_x(ctx_.optimal.X.at(ctx_.tree.steps(), j)) * x;
    }
    double x0() const override { return 0.0; }

  private:
    const VariationContext& ctx_;
};

}  // namespace

FirstVariation solve_first_variation(const CoefficientModel& coeffs, const FbsdeSolution& optimal,
                                     const TreeProcess& u_bar, const AdjointBundle& first,
                                     const DeltaProcess& delta, const SpikeSpec& spike,
                                     const BrownianTree& tree, const PicardOptions& opts,
                                     bool direct_check) {
    const int N = tree.steps();
    const double dt = tree.dt();
    const double sdt = tree.sqrt_dt();
    VariationContext ctx{coeffs, optimal, u_bar, first, delta, spike, tree};

    FirstVariation out;
    out.X1 = TreeProcess(N);
    out.Y1 = TreeProcess(N);
    out.Z1 = TreeProcess(N);

    // Closed-loop forward pass, then the algebraic backward pair.
    std::vector<double> drift, diff;
    for (int k = 0; k < N; ++k) {
        drift.assign(k + 1, 0.0);
        diff.assign(k + 1, 0.0);
        for (int j = 0; j <= k; ++j) {
            const Gradient b = ctx.bg(k, j);
            const Gradient s = ctx.sg(k, j);
            const double p = first.p.at(k, j);
            const double k1 = first.k1.at(k, j);
            const double x1 = out.X1.at(k, j);
            drift[j] = (b.x + b.y * p + b.z * k1) * x1;
            diff[j] = (s.x + s.y * p + s.z * k1) * x1 + ctx.delta_coeff(k, j, 's');
        }
        out.X1.row(k + 1) = forward_step_project(tree, k, out.X1.row(k), drift, diff);
    }
    for (int k = 0; k <= N; ++k)
        for (int j = 0; j <= k; ++j) {
            const double x1 = out.X1.at(k, j);
            out.Y1.at(k, j) = first.p.at(k, j) * x1;
            out.Z1.at(k, j) = first.k1.at(k, j) * x1 + ctx.delta_at(k, j);
        }

    // Relation residuals: one-step defects of the triple in the backward
    // equation, measured on unprojected edge candidates. A defect-free pair
    // (r_y1, r_z1) means (p X1, k1 X1 + Delta I) solves the discrete
    // variational BSDE along every one-step transition.
    for (int k = 0; k < N; ++k) {
        for (int j = 0; j <= k; ++j) {
            const Gradient b = ctx.bg(k, j);
            const Gradient s = ctx.sg(k, j);
            const Gradient g = ctx.gg(k, j);
            const double p = first.p.at(k, j);
            const double q = first.q.at(k, j);
            const double k1 = first.k1.at(k, j);
            const double x1 = out.X1.at(k, j);
            const double e = ctx.delta_coeff(k, j, 's');
            const double a_drift = (b.x + b.y * p + b.z * k1) * x1;
            const double c_diff = (s.x + s.y * p + s.z * k1) * x1 + e;
            const double x1_up = x1 + a_drift * dt + c_diff * sdt;
            const double x1_dn = x1 + a_drift * dt - c_diff * sdt;
            const double y_up = first.p.at(k + 1, j + 1) * x1_up;
            const double y_dn = first.p.at(k + 1, j) * x1_dn;
            const double ce = 0.5 * (y_up + y_dn);
            const double z_edge = (y_up - y_dn) / (2.0 * sdt);
            const double dlt = ctx.delta_at(k, j);
            const double driver = g.x * x1 + g.y * (p * x1) + g.z * (z_edge - dlt) - q * e;
            const double defect = p * x1 - (ce + driver * dt);
            out.r_y1 = std::max(out.r_y1, std::abs(defect));
            if (!spike.covers_step(k))
                out.r_z1 = std::max(out.r_z1, std::abs(z_edge - k1 * x1));
            (void)q;
        }
    }

    if (direct_check) {
        FirstVariationFbsde direct(ctx);
        FbsdeSolution sol = solve_coupled_picard(direct, tree, opts);
        out.X1_direct = sol.X;
        out.Y1_direct = sol.Y;
        out.Z1_direct = sol.Z;
        out.picard_iterations = sol.picard_iterations;
        out.r_route = sup_abs_diff(sol.Y, out.Y1);
    }
    return out;
}

namespace {

// Quadratic forcing terms of the second-order system, built from the
// decoupled first-order processes.
struct SecondForcing {
    double drift = 0.0;   // delta b(t, Delta) I + v' D2b v / 2
    double diff = 0.0;    // v' D2sigma v / 2 + spike gradient terms
    double gen = 0.0;     // [q delta sigma + delta g] I + v' D2g v / 2
};

SecondForcing second_forcing(const VariationContext& ctx, const FirstVariation& fv, int k,
                             int j) {
    const double t = ctx.t(k);
    const double x = ctx.optimal.X.at(k, j), y = ctx.optimal.Y.at(k, j),
                 z = ctx.optimal.Z.at(k, j);
    const double ub = ctx.u_bar.at(k, j);
    const double x1 = fv.X1.at(k, j);
    const double y1 = fv.Y1.at(k, j);
    const double kz = ctx.first.k1.at(k, j) * x1;
    const Hessian bh = ctx.coeffs.b_hess(t, x, y, z, ub);
    const Hessian sh = ctx.coeffs.sigma_hess(t, x, y, z, ub);
    const Hessian gh = ctx.coeffs.g_hess(t, x, y, z, ub);
    const Gradient ds = ctx.delta_sigma_grad(k, j);
    const double q = ctx.first.q.at(k, j);
    SecondForcing f;
    f.drift = ctx.delta_coeff(k, j, 'b') + 0.5 * bh.quad(x1, y1, kz);
    f.diff = 0.5 * sh.quad(x1, y1, kz) + ds.x * x1 + ds.y * y1 + ds.z * kz;
    f.gen = q * ctx.delta_coeff(k, j, 's') + ctx.delta_coeff(k, j, 'g') +
            0.5 * gh.quad(x1, y1, kz);
    return f;
}

using ForcingTable = std::vector<std::vector<SecondForcing>>;

ForcingTable build_forcing_table(const VariationContext& ctx, const FirstVariation& fv) {
    const int N = ctx.tree.steps();
    ForcingTable table(N + 1);
    for (int k = 0; k <= N; ++k) {
        table[k].resize(k + 1);
        for (int j = 0; j <= k; ++j) table[k][j] = second_forcing(ctx, fv, k, j);
    }
    return table;
}

// Z2 representation of the decoupled route at a node, given X2 there.
double z2_composite(const VariationContext& ctx, const FirstVariation& fv,
                    const SecondOrderBundle& second, const AuxiliarySolution& aux, int k, int j,
                    double x2) {
    const double p = ctx.first.p.at(k, j);
    const double k1 = ctx.first.k1.at(k, j);
    const double x1 = fv.X1.at(k, j);
    const Gradient s = ctx.sg(k, j);
    const double denom = 1.0 - p * s.z;
    const double pi = 1.0 / denom;
    double z2 = k1 * x2 + 0.5 * second.k2.at(k, j) * x1 * x1 +
                pi * p * (s.y * aux.Yhat.at(k, j) + s.z * aux.Zhat.at(k, j));
    if (ctx.on_spike(k)) {
        const Gradient ds = ctx.delta_sigma_grad(k, j);
        z2 += second.P.at(k, j) * ctx.delta_coeff(k, j, 's') * x1 +
              pi * p * (ds.x * x1 + ds.y * p * x1 + ds.z * k1 * x1);
    }
    return z2 + aux.Zhat.at(k, j);
}

// Direct formulation of the second-order variational FBSDE on the projected
// tree (route diagnostic and independent initial value).
class SecondVariationFbsde : public TreeFbsde {
  public:
    SecondVariationFbsde(const VariationContext& ctx, const FirstVariation& fv,
                         const ForcingTable& forcing)
        : ctx_(ctx), fv_(fv), forcing_(forcing) {}

    double drift(int k, int j, double x, double y, double z) const override {
        const Gradient& b = ctx_.bg(k, j);
        return b.x * x + b.y * y + b.z * z + forcing_[k][j].drift;
    }
    double diffusion(int k, int j, double x, double y, double z) const override {
        const Gradient& s = ctx_.sg(k, j);
        return s.x * x + s.y * y + s.z * z + forcing_[k][j].diff;
    }
    double generator(int k, int j, double x, double y, double z) const override {
        const Gradient& g = ctx_.gg(k, j);
        return g.x * x + g.y * y + g.z * z + forcing_[k][j].gen;
    }
    double terminal(int j, double x) const override {
        const int N = ctx_.tree.steps();
        const double xbar = ctx_.optimal.X.at(N, j);
        const double x1 = fv_.X1.at(N, j);
        return ctx_.coeffs.phi_x(xbar) * x + 0.5 * ctx_.coeffs.phi_xx(xbar) * x1 * x1;
    }
    double x0() const override { return 0.0; }

  private:
    const VariationContext& ctx_;
    const FirstVariation& fv_;
    const ForcingTable& forcing_;
};

}  // namespace

SecondVariation solve_second_variation(const CoefficientModel& coeffs,
                                       const FbsdeSolution& optimal, const TreeProcess& u_bar,
                                       const AdjointBundle& first, const SecondOrderBundle& second,
                                       const AuxiliarySolution& aux, const DeltaProcess& delta,
                                       const SpikeSpec& spike, const FirstVariation& fv,
                                       const BrownianTree& tree, const PicardOptions& opts,
                                       bool direct_check) {
    const int N = tree.steps();
    const double dt = tree.dt();
    const double sdt = tree.sqrt_dt();
    VariationContext ctx{coeffs, optimal, u_bar, first, delta, spike, tree};

    SecondVariation out;
    out.X2 = TreeProcess(N);
    out.Y2 = TreeProcess(N);
    out.Z2 = TreeProcess(N);

    auto y2_of = [&](int k, int j, double x2) {
        const double x1 = fv.X1.at(k, j);
        return first.p.at(k, j) * x2 + 0.5 * second.P.at(k, j) * x1 * x1 + aux.Yhat.at(k, j);
    };

    const ForcingTable forcing = build_forcing_table(ctx, fv);

    // Closed-loop forward pass with the composite (Y2, Z2) substituted.
    std::vector<double> drift, diff;
    for (int k = 0; k < N; ++k) {
        drift.assign(k + 1, 0.0);
        diff.assign(k + 1, 0.0);
        for (int j = 0; j <= k; ++j) {
            const Gradient& b = ctx.bg(k, j);
            const Gradient& s = ctx.sg(k, j);
            const double x2 = out.X2.at(k, j);
            const double y2 = y2_of(k, j, x2);
            const double z2 = z2_composite(ctx, fv, second, aux, k, j, x2);
            const SecondForcing& f = forcing[k][j];
            drift[j] = b.x * x2 + b.y * y2 + b.z * z2 + f.drift;
            diff[j] = s.x * x2 + s.y * y2 + s.z * z2 + f.diff;
        }
        out.X2.row(k + 1) = forward_step_project(tree, k, out.X2.row(k), drift, diff);
    }
    for (int k = 0; k <= N; ++k)
        for (int j = 0; j <= k; ++j) {
            out.Y2.at(k, j) = y2_of(k, j, out.X2.at(k, j));
            out.Z2.at(k, j) = z2_composite(ctx, fv, second, aux, k, j, out.X2.at(k, j));
        }
    out.y2_0 = out.Y2.at(0, 0);

    // One-step defect of the composite in the backward Y2 equation, on
    // unprojected edge candidates (X1 and X2 stepped together).
    for (int k = 0; k < N; ++k) {
        for (int j = 0; j <= k; ++j) {
            const Gradient& b = ctx.bg(k, j);
            const Gradient& s = ctx.sg(k, j);
            const Gradient& g = ctx.gg(k, j);
            const double p = first.p.at(k, j);
            const double k1 = first.k1.at(k, j);
            const double q = first.q.at(k, j);
            const double x1 = fv.X1.at(k, j);
            const double e1 = ctx.delta_coeff(k, j, 's');
            const double a1_drift = (b.x + b.y * p + b.z * k1) * x1;
            const double c1_diff = (s.x + s.y * p + s.z * k1) * x1 + e1;
            const double x2 = out.X2.at(k, j);
            const double y2 = out.Y2.at(k, j);
            const double z2 = out.Z2.at(k, j);
            const SecondForcing& f = forcing[k][j];
            const double a2_drift = b.x * x2 + b.y * y2 + b.z * z2 + f.drift;
            const double c2_diff = s.x * x2 + s.y * y2 + s.z * z2 + f.diff;

            double ce = 0.0, up_val = 0.0, dn_val = 0.0;
            for (int dir = 0; dir < 2; ++dir) {
                const double sign = dir == 0 ? 1.0 : -1.0;
                const int child = dir == 0 ? j + 1 : j;
                const double x1n = x1 + a1_drift * dt + sign * c1_diff * sdt;
                const double x2n = x2 + a2_drift * dt + sign * c2_diff * sdt;
                const double val = first.p.at(k + 1, child) * x2n +
                                   0.5 * second.P.at(k + 1, child) * x1n * x1n +
                                   aux.Yhat.at(k + 1, child);
                ce += 0.5 * val;
                (dir == 0 ? up_val : dn_val) = val;
            }
            const double z2_edge = (up_val - dn_val) / (2.0 * sdt);
            const double driver = g.x * x2 + g.y * y2 + g.z * z2_edge + f.gen;
            const double defect = y2 - (ce + driver * dt);
            out.r_y2 = std::max(out.r_y2, std::abs(defect));
            (void)q;
        }
    }

    if (direct_check) {
        SecondVariationFbsde problem(ctx, fv, forcing);
        // Warm start from the composite pair: the direct fixed point is a
        // small perturbation of it.
        FbsdeSolution sol = solve_coupled_picard(problem, tree, opts, &out.Y2, &out.Z2);
        out.X2_direct = sol.X;
        out.Y2_direct = sol.Y;
        out.Z2_direct = sol.Z;
        out.picard_iterations = sol.picard_iterations;
        out.y2_0_direct = sol.y0();
        out.r_route = sup_abs_diff(sol.Y, out.Y2);
    }
    return out;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("fit_loglog: need at least 3 points");
    const int n = static_cast<int>(x.size());
    std::vector<double> lx(n), ly(n);
    for (int i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("fit_loglog: data must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

namespace {

struct PathStats {
    double sup_dx = 0.0;
    double sup_dx_minus_x1 = 0.0;
    double sup_dy = 0.0;
    double z_int = 0.0;
};

// Pathwise Euler co-simulation of the base and spiked states along one tree
// walk. The backward feedback (y, z) uses the tree fields linearized around
// the node trajectory: y = Y(node) + p (x - X(node)),
// z = Z(node) + k1 (x - X(node)). The closed-loop gains of the first-order
// process are node functions and are tabulated up front.
class PathSimulator {
  public:
    PathSimulator(const CoefficientModel& coeffs, const BrownianTree& tree,
                  const FbsdeSolution& base, const FbsdeSolution& spiked,
                  const TreeProcess& u_bar, const TreeProcess& u_eps, const AdjointBundle& first,
                  const DeltaProcess& delta, const SpikeSpec& spike)
        : coeffs_(coeffs),
          tree_(tree),
          base_(base),
          spiked_(spiked),
          u_bar_(u_bar),
          u_eps_(u_eps),
          first_(first),
          delta_(delta),
          spike_(spike),
          gain_a_(tree.steps()),
          gain_c_(tree.steps()),
          kick_(tree.steps()) {
        for (int k = 0; k < tree.steps(); ++k) {
            const double t = tree.time(k);
            for (int j = 0; j <= k; ++j) {
                const double x = base.X.at(k, j), y = base.Y.at(k, j), z = base.Z.at(k, j);
                const double ub = u_bar.at(k, j);
                const Gradient bgr = coeffs.b_grad(t, x, y, z, ub);
                const Gradient sgr = coeffs.sigma_grad(t, x, y, z, ub);
                const double p = first.p.at(k, j);
                const double k1 = first.k1.at(k, j);
                gain_a_.at(k, j) = bgr.x + bgr.y * p + bgr.z * k1;
                gain_c_.at(k, j) = sgr.x + sgr.y * p + sgr.z * k1;
                if (spike.covers_step(k))
                    kick_.at(k, j) = coeffs.sigma(t, x, y, z + delta.delta.at(k, j),
                                                  spike.replacement) -
                                     coeffs.sigma(t, x, y, z, ub);
            }
        }
    }

    PathStats run(const std::vector<int>& path) const {
        PathStats stats;
        const int N = tree_.steps();
        const double dt = tree_.dt();
        const double sdt = tree_.sqrt_dt();
        double xb = base_.X.at(0, 0);
        double xe = spiked_.X.at(0, 0);
        double x1 = 0.0;
        for (int k = 0; k <= N; ++k) {
            const int j = path[k];
            const double dx = xe - xb;
            const double p = first_.p.at(k, j);
            const double k1 = first_.k1.at(k, j);
            stats.sup_dx = std::max(stats.sup_dx, std::abs(dx));
            stats.sup_dx_minus_x1 = std::max(stats.sup_dx_minus_x1, std::abs(dx - x1));
            const double dy = (spiked_.Y.at(k, j) - base_.Y.at(k, j)) +
                              p * ((xe - spiked_.X.at(k, j)) - (xb - base_.X.at(k, j)));
            stats.sup_dy = std::max(stats.sup_dy, std::abs(dy));
            if (k == N) break;

            const double dz = k1 * dx + (spike_.covers_step(k) ? delta_.delta.at(k, j) : 0.0);
            stats.z_int += dz * dz * dt;

            const double db = (path[k + 1] > j) ? sdt : -sdt;
            const double t = tree_.time(k);
            {
                const double y = base_.Y.at(k, j) + p * (xb - base_.X.at(k, j));
                const double z = base_.Z.at(k, j) + k1 * (xb - base_.X.at(k, j));
                const double u = u_bar_.at(k, j);
                xb += coeffs_.b(t, xb, y, z, u) * dt + coeffs_.sigma(t, xb, y, z, u) * db;
            }
            {
                const double y = spiked_.Y.at(k, j) + p * (xe - spiked_.X.at(k, j));
                const double z = spiked_.Z.at(k, j) + k1 * (xe - spiked_.X.at(k, j));
                const double u = u_eps_.at(k, j);
                xe += coeffs_.b(t, xe, y, z, u) * dt + coeffs_.sigma(t, xe, y, z, u) * db;
            }
            x1 += gain_a_.at(k, j) * x1 * dt + (gain_c_.at(k, j) * x1 + kick_.at(k, j)) * db;
        }
        return stats;
    }

  private:
    const CoefficientModel& coeffs_;
    const BrownianTree& tree_;
    const FbsdeSolution& base_;
    const FbsdeSolution& spiked_;
    const TreeProcess& u_bar_;
    const TreeProcess& u_eps_;
    const AdjointBundle& first_;
    const DeltaProcess& delta_;
    const SpikeSpec& spike_;
    TreeProcess gain_a_, gain_c_, kick_;
};

}  // namespace

SpikeOrderReport estimate_spike_orders(const CoefficientModel& coeffs, const BrownianTree& tree,
                                       const TreeProcess& u_bar, double x0, double spike_t0,
                                       double spike_replacement, const SpikeOrderConfig& config,
                                       const PicardOptions& picard_opts,
                                       const AdjointOptions& adjoint_opts) {
    SpikeOrderConfig cfg = config;
    const double T = tree.grid().T;
    if (cfg.eps_list.empty()) cfg.eps_list = {T / 8, T / 16, T / 32, T / 64};
    if (static_cast<int>(cfg.eps_list.size()) < 3)
        throw std::invalid_argument("estimate_spike_orders: need at least 3 spike widths");
    for (double e : cfg.eps_list)
        if (e < tree.dt() - 1e-12)
            throw std::invalid_argument("estimate_spike_orders: spike width below one grid step");

    const FbsdeSolution base = solve_coupled_picard(coeffs, u_bar, tree, x0, picard_opts);
    const AdjointBundle first = solve_first_order_adjoint(coeffs, base, u_bar, tree, adjoint_opts);
    const SecondOrderBundle second =
        solve_second_order_adjoint(coeffs, base, u_bar, first, tree, adjoint_opts);

    SpikeOrderReport report;
    report.used_exact_enumeration = tree.steps() <= cfg.exact_enumeration_max_steps;

    for (double eps : cfg.eps_list) {
        const SpikeSpec spike = SpikeSpec::make(tree, spike_t0, eps, spike_replacement);
        const TreeProcess u_eps = make_spike_control(tree, u_bar, spike);
        // Warm start from the base pair: the spiked solution is O(sqrt(eps))
        // away from it.
        ControlledFbsde spiked_problem(coeffs, tree, u_eps, x0);
        const FbsdeSolution spiked =
            solve_coupled_picard(spiked_problem, tree, picard_opts, &base.Y, &base.Z);
        const DeltaProcess delta =
            solve_delta(coeffs, base, u_bar, first, spike, tree, DeltaOptions{adjoint_opts.beta0});
        const FirstVariation fv = solve_first_variation(coeffs, base, u_bar, first, delta, spike,
                                                        tree, picard_opts, false);
        const AuxiliarySolution aux = solve_auxiliary_yhat(coeffs, base, u_bar, first, second,
                                                           spike, delta.delta, tree, adjoint_opts);
        const SecondVariation sv =
            solve_second_variation(coeffs, base, u_bar, first, second, aux, delta, spike, fv,
                                   tree, picard_opts, true);

        SpikeOrderRow row;
        row.eps = spike.snapped_measure(tree.dt());
        // Y1(0) = 0; Y2(0) from the direct re-solve, which shares the
        // discretization family of the two full solves and cancels their
        // O(dt) bias in the difference.
        row.y0_expansion = std::abs(spiked.y0() - base.y0() - sv.y2_0_direct);

        const PathSimulator sim(coeffs, tree, base, spiked, u_bar, u_eps, first, delta, spike);
        const int N = tree.steps();
        std::vector<PathStats> stats;
        std::vector<double> weights;
        if (report.used_exact_enumeration) {
            const std::uint64_t count = 1ULL << N;
            stats.resize(count);
            weights.assign(count, std::pow(0.5, N));
            for (std::uint64_t mask = 0; mask < count; ++mask) {
                std::vector<int> path(N + 1);
                path[0] = 0;
                for (int k = 0; k < N; ++k) path[k + 1] = path[k] + ((mask >> k) & 1U);
                stats[mask] = sim.run(path);
            }
        } else {
            const int M = cfg.paths;
            stats.resize(M);
            weights.assign(M, 1.0 / M);
            parallel_for(0, M, [&](int i) {
                Rng64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(i) + 1)));
                stats[i] = sim.run(sample_path(N, rng));
            });
        }

        for (int beta : cfg.betas) {
            double sx = 0.0, sy = 0.0, sz = 0.0;
            for (std::size_t i = 0; i < stats.size(); ++i) {
                sx += weights[i] * std::pow(stats[i].sup_dx, beta);
                sy += weights[i] * std::pow(stats[i].sup_dy, beta);
                sz += weights[i] * std::pow(stats[i].z_int, 0.5 * beta);
            }
            row.sup_x[beta] = sx;
            row.sup_y[beta] = sy;
            row.z_integral[beta] = sz;
        }
        double sxx1 = 0.0;
        for (std::size_t i = 0; i < stats.size(); ++i)
            sxx1 += weights[i] * stats[i].sup_dx_minus_x1 * stats[i].sup_dx_minus_x1;
        row.sup_x_minus_x1 = sxx1;

        report.rows.push_back(row);
    }

    std::vector<double> eps;
    for (const auto& r : report.rows) eps.push_back(r.eps);
    auto collect = [&](auto getter) {
        std::vector<double> v;
        for (const auto& r : report.rows) v.push_back(getter(r));
        return v;
    };
    for (int beta : cfg.betas) {
        report.slope_sup_x[beta] =
            fit_loglog(eps, collect([&](const SpikeOrderRow& r) { return r.sup_x.at(beta); }));
        report.slope_sup_y[beta] =
            fit_loglog(eps, collect([&](const SpikeOrderRow& r) { return r.sup_y.at(beta); }));
        report.slope_z_integral[beta] = fit_loglog(
            eps, collect([&](const SpikeOrderRow& r) { return r.z_integral.at(beta); }));
    }
    report.slope_x_minus_x1 =
        fit_loglog(eps, collect([&](const SpikeOrderRow& r) { return r.sup_x_minus_x1; }));
    report.slope_y0_expansion =
        fit_loglog(eps, collect([&](const SpikeOrderRow& r) { return r.y0_expansion; }));
    return report;
}

}  // namespace fbsmp
