#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "fbsmp/coefficients.hpp"
#include "fbsmp/control.hpp"
#include "fbsmp/tree.hpp"

namespace fbsmp {

// A discrete FBSDE on the tree. Coefficients may depend on the node (k, j)
// so the same solver serves the controlled state equation, the variational
// equations and auxiliary adjoint systems.
class TreeFbsde {
  public:
    virtual ~TreeFbsde() = default;
    virtual double drift(int k, int j, double x, double y, double z) const = 0;
    virtual double diffusion(int k, int j, double x, double y, double z) const = 0;
    virtual double generator(int k, int j, double x, double y, double z) const = 0;
    virtual double terminal(int j, double x) const = 0;
    virtual double x0() const = 0;
};

struct FbsdeSolution {
    TreeProcess X, Y, Z;
    int picard_iterations = 0;
    double final_residual = 0.0;
    std::vector<double> residual_history;
    double y0() const { return Y.at(0, 0); }
};

struct PicardOptions {
    double tol = 1e-10;
    int max_iter = 200;
    double inner_tol = 1e-14;
    int inner_max_iter = 100;
};

// One application of the decoupling map: forward Euler with (y_in, z_in)
// frozen in the forward coefficients, then exact backward induction with the
// generator implicit in Y and Z read off the martingale coefficient.
FbsdeSolution solve_decoupled(const TreeFbsde& problem, const BrownianTree& tree,
                              const TreeProcess& y_in, const TreeProcess& z_in,
                              const PicardOptions& opts = {});

// Picard iteration of solve_decoupled from (0, 0) until the combined residual
// sup|dY| + sqrt(E int |dZ|^2 dt) falls below tol. Throws
// SolverError(ContractionFailure) with the residual history when max_iter is
// exhausted. A warm start replaces the zero initial pair.
FbsdeSolution solve_coupled_picard(const TreeFbsde& problem, const BrownianTree& tree,
                                   const PicardOptions& opts = {},
                                   const TreeProcess* y_start = nullptr,
                                   const TreeProcess* z_start = nullptr);

// Adapter binding a coefficient model and a control process to the tree.
class ControlledFbsde : public TreeFbsde {
  public:
    ControlledFbsde(const CoefficientModel& model, const BrownianTree& tree, TreeProcess control,
                    double x0)
        : model_(model), tree_(tree), u_(std::move(control)), x0_(x0) {}

    double drift(int k, int j, double x, double y, double z) const override {
        return model_.b(tree_.time(k), x, y, z, u_.at(k, j));
    }
    double diffusion(int k, int j, double x, double y, double z) const override {
        return model_.sigma(tree_.time(k), x, y, z, u_.at(k, j));
    }
    double generator(int k, int j, double x, double y, double z) const override {
        return model_.g(tree_.time(k), x, y, z, u_.at(k, j));
    }
    double terminal(int, double x) const override { return model_.phi(x); }
    double x0() const override { return x0_; }

    const TreeProcess& control() const { return u_; }

  private:
    const CoefficientModel& model_;
    const BrownianTree& tree_;
    TreeProcess u_;
    double x0_;
};

FbsdeSolution solve_decoupled(const CoefficientModel& coeffs, const TreeProcess& y_in,
                              const TreeProcess& z_in, const TreeProcess& control,
                              const BrownianTree& tree, double x0,
                              const PicardOptions& opts = {});

FbsdeSolution solve_coupled_picard(const CoefficientModel& coeffs, const TreeProcess& control,
                                   const BrownianTree& tree, double x0,
                                   const PicardOptions& opts = {});

// Linear FBSDE with deterministic coefficients,
//   dX = [a1 X + b1 Y + c1 Z + l1] dt + [a2 X + b2 Y + c2 Z + l2] dB
//   dY = -[a3 X + b3 Y + c3 Z + l3] dt + Z dB,  Y(T) = kappa X(T).
struct LinearFbsdeSpec {
    using Fn = std::function<double(double)>;
    Fn a1, b1, c1, a2, b2, c2, a3, b3, c3;
    Fn l1, l2, l3;
    double kappa = 0.0;
    double x0 = 0.0;

    static LinearFbsdeSpec constants(double a1, double b1, double c1, double a2, double b2,
                                     double c2, double a3, double b3, double c3, double l1,
                                     double l2, double l3, double kappa, double x0);

    // Sampled boundedness check on [0, T].
    void validate(double T) const;
};

// Semi-explicit solution of the linear FBSDE through the affine ansatz
// Y = p X + phi: backward RK4 for the Riccati pair (p, phi), then a forward
// closed-loop Euler pass for X on the tree. Used as the independent oracle
// for the Picard solver. Throws SolverError(Singularity) when 1 - p c2
// approaches zero.
FbsdeSolution solve_linear_oracle(const LinearFbsdeSpec& spec, const BrownianTree& tree,
                                  int rk4_substeps = 16);

// Exact initial value p(0) x0 + phi(0) from the Riccati pair alone (grid
// independent up to RK4 error).
double linear_oracle_y0(const LinearFbsdeSpec& spec, double T, int rk4_steps = 4096);

}  // namespace fbsmp
