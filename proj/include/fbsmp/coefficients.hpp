#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fbsmp {

// Hessian of a coefficient with respect to (x, y, z).
struct Hessian {
    double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;

    // v' H v for v = (vx, vy, vz).
    double quad(double vx, double vy, double vz) const {
        return xx * vx * vx + yy * vy * vy + zz * vz * vz +
               2.0 * (xy * vx * vy + xz * vx * vz + yz * vy * vz);
    }
};

// First derivatives of a coefficient with respect to (x, y, z).
struct Gradient {
    double x = 0, y = 0, z = 0;
    double dot(double vx, double vy, double vz) const { return x * vx + y * vy + z * vz; }
};

struct LipschitzData {
    double L = 0;   // linear growth constant
    double L1 = 0;  // x-derivatives of b, sigma and all derivatives of g, phi
    double L2 = 0;  // max of |b_y|, |b_z|, |sigma_y|
    double L3 = 0;  // |sigma_z|
};

// Drift b, diffusion sigma, generator g and terminal phi with first and
// second derivatives, Lipschitz metadata and the structural tags the solvers
// branch on. All evaluations are at (t, x, y, z, u); phi at x only.
class CoefficientModel {
  public:
    virtual ~CoefficientModel() = default;

    virtual std::string name() const = 0;

    virtual double b(double t, double x, double y, double z, double u) const = 0;
    virtual double sigma(double t, double x, double y, double z, double u) const = 0;
    virtual double g(double t, double x, double y, double z, double u) const = 0;
    virtual double phi(double x) const = 0;

    virtual Gradient b_grad(double t, double x, double y, double z, double u) const = 0;
    virtual Gradient sigma_grad(double t, double x, double y, double z, double u) const = 0;
    virtual Gradient g_grad(double t, double x, double y, double z, double u) const = 0;
    virtual double phi_x(double x) const = 0;

    virtual Hessian b_hess(double t, double x, double y, double z, double u) const = 0;
    virtual Hessian sigma_hess(double t, double x, double y, double z, double u) const = 0;
    virtual Hessian g_hess(double t, double x, double y, double z, double u) const = 0;
    virtual double phi_xx(double x) const = 0;

    virtual double b_u(double t, double x, double y, double z, double u) const = 0;
    virtual double sigma_u(double t, double x, double y, double z, double u) const = 0;
    virtual double g_u(double t, double x, double y, double z, double u) const = 0;

    virtual LipschitzData lipschitz() const = 0;

    // Structural tags. When sigma is linear in z the diffusion has the form
    // A(t) z + sigma_1(t, x, y, u).
    virtual bool sigma_independent_of_z() const { return false; }
    virtual bool sigma_linear_in_z() const { return false; }
    virtual double linear_z_factor(double /*t*/) const { return 0.0; }
};

struct SelfCheckFailure {
    std::string what;       // which derivative or bound
    double t, x, y, z, u;   // sample point
    double expected, got;
};

// Compares the supplied first/second derivatives against central finite
// differences (step 1e-6, relative tolerance `tol`) and spot-checks the
// Lipschitz bounds |psi_kappa| <= L_i on the sampled points.
std::vector<SelfCheckFailure> self_check(const CoefficientModel& model,
                                         const std::vector<std::array<double, 5>>& points,
                                         double tol = 1e-5);

// Default sample grid for self_check over moderate (t, x, y, z, u) values.
std::vector<std::array<double, 5>> default_check_points(double T);

}  // namespace fbsmp
