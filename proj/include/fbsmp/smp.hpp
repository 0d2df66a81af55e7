#pragma once

#include <string>
#include <vector>

#include "fbsmp/adjoint.hpp"
#include "fbsmp/coefficients.hpp"
#include "fbsmp/control.hpp"
#include "fbsmp/fbsde.hpp"
#include "fbsmp/variation.hpp"

namespace fbsmp {

enum class MpMode { Global, GlobalLinearZ, LocalConvex };

std::string mp_mode_name(MpMode mode);

// Verification Hamiltonian evaluated at the candidate trajectory point with
// the z-argument shifted by the algebra-equation solution for this u:
//   p b(.., z + D, u) + q sigma(.., z + D, u)
//   + (P/2)(sigma(.., z + D, u) - sigma(.., z, u_bar))^2 + g(.., z + D, u).
double hamiltonian(const CoefficientModel& coeffs, double t, double x, double y, double z,
                   double u, double u_bar, double p, double q, double P, double delta_u);

// Variant for diffusions linear in z: no algebra equation; only the
// generator's z-argument is shifted, by p times the diffusion increment.
double hamiltonian_linear_z(const CoefficientModel& coeffs, double t, double x, double y,
                            double z, double u, double u_bar, double p, double q, double P);

struct MpReport {
    std::string mode;
    double tolerance = 0.0;
    double worst_gap = 0.0;  // most negative Hamiltonian gap found
    int worst_k = -1, worst_j = -1;
    double worst_u = 0.0;
    long nodes_checked = 0;
    long candidates_checked = 0;
    long unchecked_nodes = 0;  // algebra-equation failures, flagged not fatal
    bool pass = false;
};

// Per-node worst gap, for tabular dumps.
struct MpNodeRow {
    int k = 0, j = 0;
    double t = 0.0;
    double worst_u = 0.0;
    double worst_gap = 0.0;
};

struct MpCheckInputs {
    const CoefficientModel* coeffs = nullptr;
    const BrownianTree* tree = nullptr;
    const FbsdeSolution* optimal = nullptr;
    const TreeProcess* u_bar = nullptr;
    const AdjointBundle* first = nullptr;
    const SecondOrderBundle* second = nullptr;
};

MpReport check_global_mp(const MpCheckInputs& in, const ControlDomain& domain, MpMode mode,
                         double tolerance = 1e-8, double beta0 = 0.5,
                         std::vector<MpNodeRow>* rows = nullptr);

// First-order condition H_u (u - u_bar) >= 0 for convex (interval) domains,
// with the implicit-function derivative of the algebra equation folded in:
//   H_u = p b_u + q sigma_u + g_u
//         + (p b_z + q sigma_z + g_z) p sigma_u / (1 - p sigma_z).
MpReport check_local_mp(const MpCheckInputs& in, const ControlDomain& domain,
                        double tolerance = 1e-8, double beta0 = 0.5,
                        std::vector<MpNodeRow>* rows = nullptr);

double hamiltonian_u(const CoefficientModel& coeffs, double t, double x, double y, double z,
                     double u_bar, double p, double q);

}  // namespace fbsmp
