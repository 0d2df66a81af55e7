#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "fbsmp/adjoint.hpp"
#include "fbsmp/coefficients.hpp"
#include "fbsmp/control.hpp"
#include "fbsmp/fbsde.hpp"
#include "fbsmp/tree.hpp"

namespace fbsmp {

// Adapted solution of the per-node algebra equation
//   Delta = p (sigma(t, X, Y, Z + Delta, u) - sigma(t, X, Y, Z, u_bar)),
// supported on the spike set and zero elsewhere.
struct DeltaProcess {
    TreeProcess delta;
    double residual = 0.0;  // sup over supported nodes of the equation defect
    int max_iterations = 0;
};

struct DeltaOptions {
    double beta0 = 0.5;
    double tol = 1e-13;
    int max_iter = 200;
    double initial = 0.0;
};

// Per-node solve. Falls back to bisection when |p| L3 >= 1 - beta0 removes
// the contraction guarantee. residual_out receives the equation defect.
double solve_delta_node(const CoefficientModel& coeffs, double t, double x, double y, double z,
                        double u_bar, double u, double p, const DeltaOptions& opts,
                        double* residual_out = nullptr);

DeltaProcess solve_delta(const CoefficientModel& coeffs, const FbsdeSolution& optimal,
                         const TreeProcess& u_bar, const AdjointBundle& first,
                         const SpikeSpec& spike, const BrownianTree& tree,
                         const DeltaOptions& opts = {});

// First-order variational processes by the decoupled route: X1 integrated
// forward with the closed-loop gains, then Y1 = p X1 and
// Z1 = k1 X1 + Delta I_E.
//
// The relation residuals are per-node defects of this triple in the discrete
// variational BSDE, evaluated on unprojected one-step (edge) candidates so
// the spike's Brownian kick is kept pathwise:
//   r_y1: defect of the backward Y1 equation,
//   r_z1: off-spike gap between the edge martingale coefficient of p X1 and
//         k1 X1.
// An optional direct Picard re-solve of the same FBSDE on the projected tree
// is kept as a route diagnostic (r_route); its gap is dominated by the
// Markovian projection of the spike kick, not by the decoupling relation.
struct FirstVariation {
    TreeProcess X1, Y1, Z1;  // decoupled (primary) solution
    double r_y1 = 0.0;
    double r_z1 = 0.0;
    // Direct-route diagnostics (filled when direct_check is set).
    TreeProcess X1_direct, Y1_direct, Z1_direct;
    double r_route = 0.0;  // sup |Y1_direct - Y1|
    int picard_iterations = 0;
};

FirstVariation solve_first_variation(const CoefficientModel& coeffs, const FbsdeSolution& optimal,
                                     const TreeProcess& u_bar, const AdjointBundle& first,
                                     const DeltaProcess& delta, const SpikeSpec& spike,
                                     const BrownianTree& tree, const PicardOptions& opts = {},
                                     bool direct_check = true);

// Second-order variational processes. The decoupled route integrates X2
// forward with Y2 = p X2 + P X1^2 / 2 + Yhat and the matching Z2
// representation substituted; r_y2 is the per-node one-step defect of that
// composite in the backward Y2 equation. A direct Picard re-solve provides
// the independent initial value y2_0_direct used by the expansion identities.
struct SecondVariation {
    TreeProcess X2, Y2, Z2;  // decoupled (primary) solution
    double r_y2 = 0.0;
    double y2_0 = 0.0;  // equals Yhat(0) for the decoupled route
    TreeProcess X2_direct, Y2_direct, Z2_direct;
    double y2_0_direct = 0.0;
    double r_route = 0.0;
    int picard_iterations = 0;
};

SecondVariation solve_second_variation(const CoefficientModel& coeffs,
                                       const FbsdeSolution& optimal, const TreeProcess& u_bar,
                                       const AdjointBundle& first, const SecondOrderBundle& second,
                                       const AuxiliarySolution& aux, const DeltaProcess& delta,
                                       const SpikeSpec& spike, const FirstVariation& fv,
                                       const BrownianTree& tree, const PicardOptions& opts = {},
                                       bool direct_check = true);

// Empirical perturbation-order measurement across a family of spike widths.
// Path-sup statistics are measured on pathwise Euler co-simulations along
// sampled tree walks; the backward feedback uses the tree-computed
// decoupling fields linearized around the node trajectory.
struct SpikeOrderConfig {
    std::vector<double> eps_list;  // defaults to {T/8, T/16, T/32, T/64}
    int paths = 100000;            // Monte Carlo paths for path-sup statistics
    std::uint64_t seed = 0;
    std::vector<int> betas = {2, 4};
    int exact_enumeration_max_steps = 14;  // full path enumeration below this
};

struct SpikeOrderRow {
    double eps = 0.0;
    std::map<int, double> sup_x;        // beta -> E[sup |X^eps - X|^beta]
    std::map<int, double> sup_y;        // beta -> E[sup |Y^eps - Y|^beta]
    std::map<int, double> z_integral;   // beta -> E[(int |Z^eps - Z|^2 dt)^(beta/2)]
    double sup_x_minus_x1 = 0.0;        // E[sup |X^eps - X - X1|^2]
    double y0_expansion = 0.0;          // |Y^eps(0) - Y(0) - Y1(0) - Y2(0)|
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct SpikeOrderReport {
    std::vector<SpikeOrderRow> rows;
    std::map<int, SlopeFit> slope_sup_x;
    std::map<int, SlopeFit> slope_sup_y;
    std::map<int, SlopeFit> slope_z_integral;
    SlopeFit slope_x_minus_x1;
    SlopeFit slope_y0_expansion;
    bool used_exact_enumeration = false;
};

SpikeOrderReport estimate_spike_orders(const CoefficientModel& coeffs, const BrownianTree& tree,
                                       const TreeProcess& u_bar, double x0, double spike_t0,
                                       double spike_replacement, const SpikeOrderConfig& config,
                                       const PicardOptions& picard_opts = {},
                                       const AdjointOptions& adjoint_opts = {});

}  // namespace fbsmp
