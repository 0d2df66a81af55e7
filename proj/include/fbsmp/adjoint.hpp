#pragma once

#include "fbsmp/coefficients.hpp"
#include "fbsmp/control.hpp"
#include "fbsmp/fbsde.hpp"
#include "fbsmp/tree.hpp"

namespace fbsmp {

// First-order adjoint pair (p, q) of the quadratic BSDE along a candidate
// trajectory, with the feedback coefficient
//   k1 = (1 - p sigma_z)^{-1} [sigma_x p + sigma_y p^2 + q].
struct AdjointBundle {
    TreeProcess p, q, k1;
    double bound_used = 0.0;  // comparison bound s(0) v (-l(0)) when supplied
    double max_abs_q = 0.0;
    bool q_bounded_assumed = true;  // asserted empirically via max_abs_q
};

struct AdjointOptions {
    double beta0 = 0.5;
    double damping = 0.5;
    double tol = 1e-12;
    int max_iter = 200;
    // Comparison bound for |p|; 0 disables the bound report.
    double p_bound = 0.0;
};

AdjointBundle solve_first_order_adjoint(const CoefficientModel& coeffs,
                                        const FbsdeSolution& optimal, const TreeProcess& u_bar,
                                        const BrownianTree& tree, const AdjointOptions& opts = {});

// Second-order adjoint (P, Q) of the linear BSDE with terminal phi_xx, plus
// the second feedback coefficient k2.
struct SecondOrderBundle {
    TreeProcess P, Q, k2;
};

SecondOrderBundle solve_second_order_adjoint(const CoefficientModel& coeffs,
                                             const FbsdeSolution& optimal,
                                             const TreeProcess& u_bar, const AdjointBundle& first,
                                             const BrownianTree& tree,
                                             const AdjointOptions& opts = {});

// Auxiliary linear backward equation whose initial value carries the spike
// contribution of the second-order cost expansion.
struct AuxiliarySolution {
    TreeProcess Yhat, Zhat;
    double y0 = 0.0;
};

AuxiliarySolution solve_auxiliary_yhat(const CoefficientModel& coeffs,
                                       const FbsdeSolution& optimal, const TreeProcess& u_bar,
                                       const AdjointBundle& first, const SecondOrderBundle& second,
                                       const SpikeSpec& spike, const TreeProcess& delta,
                                       const BrownianTree& tree, const AdjointOptions& opts = {});

// Duality route to the same initial value: forward integration of the
// exponential weight gamma and the exact tree expectation of the weighted
// spike source. Agrees with solve_auxiliary_yhat up to O(dt).
double gamma_representation(const CoefficientModel& coeffs, const FbsdeSolution& optimal,
                            const TreeProcess& u_bar, const AdjointBundle& first,
                            const SecondOrderBundle& second, const SpikeSpec& spike,
                            const TreeProcess& delta, const BrownianTree& tree,
                            const AdjointOptions& opts = {});

}  // namespace fbsmp
