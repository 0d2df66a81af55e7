#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fbsmp/adjoint.hpp"
#include "fbsmp/coefficients.hpp"
#include "fbsmp/control.hpp"
#include "fbsmp/fbsde.hpp"
#include "fbsmp/presets.hpp"
#include "fbsmp/tree.hpp"

namespace fbsmp {

// Linear-quadratic control data:
//   dX = [A1 X + B1 Y + C1 Z + D1 u] dt + [A2 X + B2 Y + C2 Z + D2 u] dB
//   dY = -[A3 X + B3 Y + C3 Z + D3 u] dt + Z dB,  Y(T) = F X(T) + J,
//   cost = E[ int (A4 X^2 + B4 Y^2 + C4 Z^2 + D4 u^2) dt + G X(T)^2 + Y(0)^2 ].
struct LQCoefficients {
    using Fn = std::function<double(double)>;
    Fn A1, B1, C1, D1;
    Fn A2, B2, C2, D2;
    Fn A3, B3, C3, D3;
    Fn A4, B4, C4, D4;
    double F = 0.0, G = 0.0;
    double J = 0.0;  // terminal shift, constant by default
    std::function<double(double)> J_leaf;  // optional shift as a function of B(T)
    double x0 = 1.0;

    static LQCoefficients constants(const std::vector<double>& abcd16, double F, double G,
                                    double J, double x0);
    static LQCoefficients from_example(const ExampleParams& p, double x0 = 1.0);

    double terminal_shift(double leaf_b) const { return J_leaf ? J_leaf(leaf_b) : J; }
};

// Deterministic backward pair for the LQ adjoints (q = Q = 0):
//   p' = -[A3 + B3 p + C3 k1 + A1 p + B1 p^2 + C1 k1 p],  p(T) = F,
//   P' = -[R1 P + A4 + B4 p^2 + C4 k1^2],                 P(T) = G,
// with k1 = (A2 p + B2 p^2) / (1 - p C2) and
// R1 = 2(A1 + B1 p + C1 k1) + (A2 + B2 p + C2 k1)^2.
struct LQOdeCurves {
    std::vector<double> times, p, P;
    double p_at(int k) const { return p[k]; }
    double P_at(int k) const { return P[k]; }
};

std::vector<double> lq_solve_p(const LQCoefficients& lq, double T, int steps,
                               int substeps_per_step = 16);
LQOdeCurves lq_solve_ode(const LQCoefficients& lq, double T, int steps,
                         int substeps_per_step = 16);

// The LQ dynamics as a coefficient model (constant terminal shift only), so
// the general tree solvers apply to LQ problems.
class LqModel : public CoefficientModel {
  public:
    explicit LqModel(LQCoefficients lq) : lq_(std::move(lq)) {}
    std::string name() const override { return "lq"; }
    double b(double t, double x, double y, double z, double u) const override {
        return lq_.A1(t) * x + lq_.B1(t) * y + lq_.C1(t) * z + lq_.D1(t) * u;
    }
    double sigma(double t, double x, double y, double z, double u) const override {
        return lq_.A2(t) * x + lq_.B2(t) * y + lq_.C2(t) * z + lq_.D2(t) * u;
    }
    double g(double t, double x, double y, double z, double u) const override {
        return lq_.A3(t) * x + lq_.B3(t) * y + lq_.C3(t) * z + lq_.D3(t) * u;
    }
    double phi(double x) const override { return lq_.F * x + lq_.J; }
    Gradient b_grad(double t, double, double, double, double) const override {
        return {lq_.A1(t), lq_.B1(t), lq_.C1(t)};
    }
    Gradient sigma_grad(double t, double, double, double, double) const override {
        return {lq_.A2(t), lq_.B2(t), lq_.C2(t)};
    }
    Gradient g_grad(double t, double, double, double, double) const override {
        return {lq_.A3(t), lq_.B3(t), lq_.C3(t)};
    }
    double phi_x(double) const override { return lq_.F; }
    Hessian b_hess(double, double, double, double, double) const override { return {}; }
    Hessian sigma_hess(double, double, double, double, double) const override { return {}; }
    Hessian g_hess(double, double, double, double, double) const override { return {}; }
    double phi_xx(double) const override { return 0.0; }
    double b_u(double t, double, double, double, double) const override { return lq_.D1(t); }
    double sigma_u(double t, double, double, double, double) const override { return lq_.D2(t); }
    double g_u(double t, double, double, double, double) const override { return lq_.D3(t); }
    LipschitzData lipschitz() const override;
    bool sigma_linear_in_z() const override { return true; }
    double linear_z_factor(double t) const override { return lq_.C2(t); }

    const LQCoefficients& lq() const { return lq_; }

  private:
    LQCoefficients lq_;
};

// State trajectory, adjoint ODE curves and the (h, m, n) adjoint system for a
// candidate control.
struct LQSolution {
    FbsdeSolution state;
    LQOdeCurves ode;
    TreeProcess h, m, n;
    int hmn_picard_iterations = 0;
};

LQSolution lq_solve(const LQCoefficients& lq, const BrownianTree& tree, const TreeProcess& u_bar,
                    const PicardOptions& opts = {});

// Pointwise check of the LQ maximum-principle inequality over the control
// grid. The quadratic coefficient is dropped in the local (convex) form.
struct LQGapEntry {
    double u = 0.0;
    double gap = 0.0;
};

struct LQGapReport {
    double tolerance = 0.0;
    double worst_gap = 0.0;
    int worst_k = -1, worst_j = -1;
    double worst_u = 0.0;
    bool pass = false;
    // Gap profile at the root node, one entry per control candidate.
    std::vector<LQGapEntry> root_gaps;
};

LQGapReport lq_check_mp(const LQCoefficients& lq, const BrownianTree& tree,
                        const LQSolution& sol, const TreeProcess& u_bar,
                        const ControlDomain& domain, double tolerance = 1e-8,
                        bool local_form = false);

// Exhaustive search over piecewise-constant deterministic controls (equal
// time blocks, values from the domain grid). Cost by exact tree expectation.
struct BruteForceEntry {
    std::vector<double> piece_values;
    double cost = 0.0;
};

struct BruteForceResult {
    std::vector<BruteForceEntry> table;
    int argmin = -1;
    double argmin_cost = 0.0;
};

BruteForceResult lq_brute_force_cost(const LQCoefficients& lq, const BrownianTree& tree,
                                     const std::vector<double>& values, int pieces,
                                     const PicardOptions& opts = {});

double lq_cost(const LQCoefficients& lq, const BrownianTree& tree, const TreeProcess& control,
               const FbsdeSolution& state);

FbsdeSolution lq_solve_state(const LQCoefficients& lq, const BrownianTree& tree,
                             const TreeProcess& control, const PicardOptions& opts = {});

// Random small LQ instance inside the guaranteed-contraction regime.
LQCoefficients random_lq(Rng64& rng);

}  // namespace fbsmp
