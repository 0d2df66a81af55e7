#include "fbsmp/lq.hpp"

#include <cmath>
#include <stdexcept>

#include "fbsmp/errors.hpp"

namespace fbsmp {

namespace {
constexpr double kBlowupCap = 1e12;

LQCoefficients::Fn constant(double v) {
    return [v](double) { return v; };
}
}  // namespace

LQCoefficients LQCoefficients::constants(const std::vector<double>& c, double F, double G,
                                         double J, double x0) {
    if (c.size() != 16)
        throw std::invalid_argument("LQCoefficients: expected 16 constants A1..D4");
    LQCoefficients lq;
    lq.A1 = constant(c[0]); lq.B1 = constant(c[1]); lq.C1 = constant(c[2]); lq.D1 = constant(c[3]);
    lq.A2 = constant(c[4]); lq.B2 = constant(c[5]); lq.C2 = constant(c[6]); lq.D2 = constant(c[7]);
    lq.A3 = constant(c[8]); lq.B3 = constant(c[9]); lq.C3 = constant(c[10]); lq.D3 = constant(c[11]);
    lq.A4 = constant(c[12]); lq.B4 = constant(c[13]); lq.C4 = constant(c[14]); lq.D4 = constant(c[15]);
    lq.F = F;
    lq.G = G;
    lq.J = J;
    lq.x0 = x0;
    return lq;
}

LQCoefficients LQCoefficients::from_example(const ExampleParams& p, double x0) {
    //   dX = [a Z + b u] dB, dY = -c u dt + Z dB, Y(T) = d X(T),
    //   cost = E int u^2 dt + Y(0)^2.
    return LQCoefficients::constants({0, 0, 0, 0, 0, 0, p.a, p.b, 0, 0, 0, p.c, 0, 0, 0, 1.0},
                                     p.d, 0.0, 0.0, x0);
}

LipschitzData LqModel::lipschitz() const {
    // Sampled sup over [0, 1]-normalized times; coefficients are expected to
    // be mildly varying.
    double a1 = 0, b1 = 0, c1v = 0, a2 = 0, b2 = 0, c2 = 0, a3 = 0, b3 = 0, c3 = 0;
    for (int i = 0; i <= 8; ++i) {
        const double t = static_cast<double>(i) / 8.0;
        a1 = std::max(a1, std::abs(lq_.A1(t)));
        b1 = std::max(b1, std::abs(lq_.B1(t)));
        c1v = std::max(c1v, std::abs(lq_.C1(t)));
        a2 = std::max(a2, std::abs(lq_.A2(t)));
        b2 = std::max(b2, std::abs(lq_.B2(t)));
        c2 = std::max(c2, std::abs(lq_.C2(t)));
        a3 = std::max(a3, std::abs(lq_.A3(t)));
        b3 = std::max(b3, std::abs(lq_.B3(t)));
        c3 = std::max(c3, std::abs(lq_.C3(t)));
    }
    LipschitzData lip;
    lip.L1 = std::max({a1, a2, a3, b3, c3, std::abs(lq_.F)});
    lip.L2 = std::max({b1, c1v, b2});
    lip.L3 = c2;
    lip.L = std::max({lip.L1, lip.L2, lip.L3, 1.0});
    return lip;
}

namespace {

struct PPState {
    double p, P;
};

PPState lq_rhs(const LQCoefficients& lq, double t, const PPState& v) {
    const double denom = 1.0 - v.p * lq.C2(t);
    if (std::abs(denom) < 1e-8)
        throw SolverError(SolverErrorKind::Singularity, "lq ode: 1 - p C2 vanished");
    const double k1 = (lq.A2(t) * v.p + lq.B2(t) * v.p * v.p) / denom;
    const double dp = -(lq.A3(t) + lq.B3(t) * v.p + lq.C3(t) * k1 + lq.A1(t) * v.p +
                        lq.B1(t) * v.p * v.p + lq.C1(t) * k1 * v.p);
    const double r1 = 2.0 * (lq.A1(t) + lq.B1(t) * v.p + lq.C1(t) * k1) +
                      std::pow(lq.A2(t) + lq.B2(t) * v.p + lq.C2(t) * k1, 2);
    const double dP = -(r1 * v.P + lq.A4(t) + lq.B4(t) * v.p * v.p + lq.C4(t) * k1 * k1);
    return PPState{dp, dP};
}

PPState lq_rk4_step(const LQCoefficients& lq, double t, const PPState& v, double h) {
    const PPState k1 = lq_rhs(lq, t, v);
    const PPState k2 = lq_rhs(lq, t + 0.5 * h, {v.p + 0.5 * h * k1.p, v.P + 0.5 * h * k1.P});
    const PPState k3 = lq_rhs(lq, t + 0.5 * h, {v.p + 0.5 * h * k2.p, v.P + 0.5 * h * k2.P});
    const PPState k4 = lq_rhs(lq, t + h, {v.p + h * k3.p, v.P + h * k3.P});
    return PPState{v.p + h / 6.0 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p),
                   v.P + h / 6.0 * (k1.P + 2 * k2.P + 2 * k3.P + k4.P)};
}

}  // namespace

LQOdeCurves lq_solve_ode(const LQCoefficients& lq, double T, int steps, int substeps_per_step) {
    if (steps < 1) throw std::invalid_argument("lq_solve_ode: steps must be >= 1");
    LQOdeCurves out;
    out.times.resize(steps + 1);
    out.p.resize(steps + 1);
    out.P.resize(steps + 1);
    PPState v{lq.F, lq.G};
    out.times[steps] = T;
    out.p[steps] = v.p;
    out.P[steps] = v.P;
    const double dt = T / steps;
    for (int k = steps - 1; k >= 0; --k) {
        const double t_hi = T * (k + 1) / steps;
        const double h = -dt / substeps_per_step;
        for (int i = 0; i < substeps_per_step; ++i) v = lq_rk4_step(lq, t_hi + i * h, v, h);
        if (!std::isfinite(v.p) || !std::isfinite(v.P) || std::abs(v.p) > kBlowupCap ||
            std::abs(v.P) > kBlowupCap)
            throw SolverError(SolverErrorKind::BlowUp, "lq ode: backward pair blew up");
        out.times[k] = T * k / steps;
        out.p[k] = v.p;
        out.P[k] = v.P;
    }
    return out;
}

std::vector<double> lq_solve_p(const LQCoefficients& lq, double T, int steps,
                               int substeps_per_step) {
    return lq_solve_ode(lq, T, steps, substeps_per_step).p;
}

namespace {

// State FBSDE with the (possibly leaf-dependent) terminal shift.
class LqStateFbsde : public TreeFbsde {
  public:
    LqStateFbsde(const LQCoefficients& lq, const BrownianTree& tree, const TreeProcess& u)
        : lq_(lq), tree_(tree), u_(u) {}
    double drift(int k, int j, double x, double y, double z) const override {
        const double t = tree_.time(k);
        return lq_.A1(t) * x + lq_.B1(t) * y + lq_.C1(t) * z + lq_.D1(t) * u_.at(k, j);
    }
    double diffusion(int k, int j, double x, double y, double z) const override {
        const double t = tree_.time(k);
        return lq_.A2(t) * x + lq_.B2(t) * y + lq_.C2(t) * z + lq_.D2(t) * u_.at(k, j);
    }
    double generator(int k, int j, double x, double y, double z) const override {
        const double t = tree_.time(k);
        return lq_.A3(t) * x + lq_.B3(t) * y + lq_.C3(t) * z + lq_.D3(t) * u_.at(k, j);
    }
    double terminal(int j, double x) const override {
        return lq_.F * x + lq_.terminal_shift(tree_.node(tree_.steps(), j));
    }
    double x0() const override { return lq_.x0; }

  private:
    const LQCoefficients& lq_;
    const BrownianTree& tree_;
    const TreeProcess& u_;
};

// Adjoint pair system: forward h, backward (m, n), coupled through the
// diffusion of h.
class HmnFbsde : public TreeFbsde {
  public:
    HmnFbsde(const LQCoefficients& lq, const BrownianTree& tree, const FbsdeSolution& state,
             double h0)
        : lq_(lq), tree_(tree), state_(state), h0_(h0) {}
    double drift(int k, int j, double h, double m, double n) const override {
        const double t = tree_.time(k);
        return lq_.B3(t) * h + lq_.B1(t) * m + lq_.B2(t) * n + 2.0 * lq_.B4(t) * state_.Y.at(k, j);
    }
    double diffusion(int k, int j, double h, double m, double n) const override {
        const double t = tree_.time(k);
        return lq_.C3(t) * h + lq_.C1(t) * m + lq_.C2(t) * n + 2.0 * lq_.C4(t) * state_.Z.at(k, j);
    }
    double generator(int k, int j, double h, double m, double n) const override {
        const double t = tree_.time(k);
        return lq_.A3(t) * h + lq_.A1(t) * m + lq_.A2(t) * n + 2.0 * lq_.A4(t) * state_.X.at(k, j);
    }
    double terminal(int j, double h) const override {
        return 2.0 * lq_.G * state_.X.at(tree_.steps(), j) + lq_.F * h;
    }
    double x0() const override { return h0_; }

  private:
    const LQCoefficients& lq_;
    const BrownianTree& tree_;
    const FbsdeSolution& state_;
    double h0_;
};

}  // namespace

FbsdeSolution lq_solve_state(const LQCoefficients& lq, const BrownianTree& tree,
                             const TreeProcess& control, const PicardOptions& opts) {
    LqStateFbsde problem(lq, tree, control);
    return solve_coupled_picard(problem, tree, opts);
}

LQSolution lq_solve(const LQCoefficients& lq, const BrownianTree& tree, const TreeProcess& u_bar,
                    const PicardOptions& opts) {
    LQSolution sol;
    sol.state = lq_solve_state(lq, tree, u_bar, opts);
    sol.ode = lq_solve_ode(lq, tree.grid().T, tree.steps());
    HmnFbsde hmn(lq, tree, sol.state, 2.0 * sol.state.y0());
    FbsdeSolution adj = solve_coupled_picard(hmn, tree, opts);
    sol.h = adj.X;
    sol.m = adj.Y;
    sol.n = adj.Z;
    sol.hmn_picard_iterations = adj.picard_iterations;
    return sol;
}

LQGapReport lq_check_mp(const LQCoefficients& lq, const BrownianTree& tree,
                        const LQSolution& sol, const TreeProcess& u_bar,
                        const ControlDomain& domain, double tolerance, bool local_form) {
    LQGapReport rep;
    rep.tolerance = tolerance;
    const std::vector<double> candidates = domain.grid_values();
    bool first = true;
    for (int k = 0; k < tree.steps(); ++k) {
        const double t = tree.time(k);
        const double p = sol.ode.p_at(k);
        const double P = sol.ode.P_at(k);
        const double denom = 1.0 - p * lq.C2(t);
        if (std::abs(denom) < 1e-8)
            throw SolverError(SolverErrorKind::Singularity, "lq_check_mp: 1 - p C2 vanished");
        const double quad_coeff =
            lq.C4(t) * p * p * lq.D2(t) * lq.D2(t) / (denom * denom) + lq.D4(t) +
            P * lq.D2(t) * lq.D2(t);
        for (int j = 0; j <= k; ++j) {
            const double ub = u_bar.at(k, j);
            const double lin_coeff = lq.D1(t) * sol.m.at(k, j) + lq.D2(t) * sol.n.at(k, j) +
                                     lq.D3(t) * sol.h.at(k, j) + 2.0 * lq.D4(t) * ub;
            for (double u : candidates) {
                const double du = u - ub;
                const double gap = lin_coeff * du + (local_form ? 0.0 : quad_coeff * du * du);
                if (k == 0 && j == 0) rep.root_gaps.push_back({u, gap});
                if (first || gap < rep.worst_gap ||
                    (gap == rep.worst_gap &&
                     (tree.time(rep.worst_k) > t ||
                      (tree.time(rep.worst_k) == t && u < rep.worst_u)))) {
                    rep.worst_gap = gap;
                    rep.worst_k = k;
                    rep.worst_j = j;
                    rep.worst_u = u;
                    first = false;
                }
            }
        }
    }
    rep.pass = rep.worst_gap >= -tolerance;
    return rep;
}

double lq_cost(const LQCoefficients& lq, const BrownianTree& tree, const TreeProcess& control,
               const FbsdeSolution& state) {
    double running = 0.0;
    for (int k = 0; k < tree.steps(); ++k) {
        const double t = tree.time(k);
        const auto& pk = tree.probability_row(k);
        double s = 0.0;
        for (int j = 0; j <= k; ++j) {
            const double x = state.X.at(k, j), y = state.Y.at(k, j), z = state.Z.at(k, j);
            const double u = control.at(k, j);
            s += pk[j] * (lq.A4(t) * x * x + lq.B4(t) * y * y + lq.C4(t) * z * z +
                          lq.D4(t) * u * u);
        }
        running += s * tree.dt();
    }
    const int N = tree.steps();
    const auto& pN = tree.probability_row(N);
    double terminal = 0.0;
    for (int j = 0; j <= N; ++j)
        terminal += pN[j] * lq.G * state.X.at(N, j) * state.X.at(N, j);
    const double y0 = state.y0();
    return running + terminal + y0 * y0;
}

BruteForceResult lq_brute_force_cost(const LQCoefficients& lq, const BrownianTree& tree,
                                     const std::vector<double>& values, int pieces,
                                     const PicardOptions& opts) {
    if (values.empty() || pieces < 1)
        throw std::invalid_argument("lq_brute_force_cost: empty search space");
    double combos = std::pow(static_cast<double>(values.size()), pieces);
    if (combos > 1e6)
        throw std::invalid_argument("lq_brute_force_cost: search space exceeds 10^6 controls");

    const int N = tree.steps();
    BruteForceResult result;
    std::vector<int> idx(pieces, 0);
    const int total = static_cast<int>(combos + 0.5);
    for (int c = 0; c < total; ++c) {
        int rem = c;
        for (int i = 0; i < pieces; ++i) {
            idx[i] = rem % static_cast<int>(values.size());
            rem /= static_cast<int>(values.size());
        }
        TreeProcess u(N);
        std::vector<double> piece_values(pieces);
        for (int i = 0; i < pieces; ++i) piece_values[i] = values[idx[i]];
        for (int k = 0; k <= N; ++k) {
            const int piece = std::min(pieces - 1, static_cast<int>(
                                                       static_cast<long>(k) * pieces / N));
            for (int j = 0; j <= k; ++j) u.at(k, j) = piece_values[piece];
        }
        const FbsdeSolution state = lq_solve_state(lq, tree, u, opts);
        result.table.push_back({piece_values, lq_cost(lq, tree, u, state)});
    }
    result.argmin = 0;
    for (int i = 1; i < total; ++i)
        if (result.table[i].cost < result.table[result.argmin].cost) result.argmin = i;
    result.argmin_cost = result.table[result.argmin].cost;
    return result;
}

LQCoefficients random_lq(Rng64& rng) {
    auto uniform = [&](double lo, double hi) {
        const double r = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * r;
    };
    // Keep max(|B1|, |C1|, |B2|, |C2|) below the contraction threshold for
    // T = 1 (16 c1^2 < 1) and |F C2| <= 0.5.
    std::vector<double> c(16, 0.0);
    c[0] = uniform(-0.3, 0.3);    // A1
    c[1] = uniform(-0.2, 0.2);    // B1
    c[2] = uniform(-0.2, 0.2);    // C1
    c[3] = uniform(-0.5, 0.5);    // D1
    c[4] = uniform(-0.3, 0.3);    // A2
    c[5] = uniform(-0.2, 0.2);    // B2
    c[6] = uniform(-0.2, 0.2);    // C2
    c[7] = uniform(-0.5, 0.5);    // D2
    c[8] = uniform(-0.3, 0.3);    // A3
    c[9] = uniform(-0.3, 0.3);    // B3
    c[10] = uniform(-0.2, 0.2);   // C3
    c[11] = uniform(-0.5, 0.5);   // D3
    c[12] = uniform(0.0, 0.3);    // A4
    c[13] = uniform(0.0, 0.3);    // B4
    c[14] = uniform(0.0, 0.2);    // C4
    c[15] = uniform(0.2, 1.0);    // D4 > 0
    double F = uniform(-0.5, 0.5);
    if (std::abs(F * c[6]) > 0.5) F = 0.5 / c[6] * (F > 0 ? 1.0 : -1.0) * 0.9;
    return LQCoefficients::constants(c, F, uniform(0.0, 0.3), 0.0, uniform(0.5, 1.5));
}

}  // namespace fbsmp
