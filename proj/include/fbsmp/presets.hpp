#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fbsmp/coefficients.hpp"
#include "fbsmp/control.hpp"
#include "fbsmp/fbsde.hpp"

namespace fbsmp {

// Zero dynamics with a constant terminal value.
class ZeroModel : public CoefficientModel {
  public:
    explicit ZeroModel(double terminal = 1.0) : terminal_(terminal) {}
    std::string name() const override { return "zero"; }
    double b(double, double, double, double, double) const override { return 0.0; }
    double sigma(double, double, double, double, double) const override { return 0.0; }
    double g(double, double, double, double, double) const override { return 0.0; }
    double phi(double) const override { return terminal_; }
    Gradient b_grad(double, double, double, double, double) const override { return {}; }
    Gradient sigma_grad(double, double, double, double, double) const override { return {}; }
    Gradient g_grad(double, double, double, double, double) const override { return {}; }
    double phi_x(double) const override { return 0.0; }
    Hessian b_hess(double, double, double, double, double) const override { return {}; }
    Hessian sigma_hess(double, double, double, double, double) const override { return {}; }
    Hessian g_hess(double, double, double, double, double) const override { return {}; }
    double phi_xx(double) const override { return 0.0; }
    double b_u(double, double, double, double, double) const override { return 0.0; }
    double sigma_u(double, double, double, double, double) const override { return 0.0; }
    double g_u(double, double, double, double, double) const override { return 0.0; }
    LipschitzData lipschitz() const override { return {0, 0, 0, 0}; }
    bool sigma_independent_of_z() const override { return true; }

  private:
    double terminal_;
};

// Affine coefficients with constant loadings and affine-in-time drivers:
//   b = a1 x + b1 y + c1 z + du_b u + l1(t)
//   sigma = a2 x + b2 y + c2 z + du_s u + l2(t)
//   g = a3 x + b3 y + c3 z + du_g u + l3(t),  phi = kappa x.
struct LinearParams {
    double a1 = 0, b1 = 0, c1 = 0;
    double a2 = 0, b2 = 0, c2 = 0;
    double a3 = 0, b3 = 0, c3 = 0;
    double du_b = 0, du_s = 0, du_g = 0;
    double l1_0 = 0, l1_t = 0;  // l1(t) = l1_0 + l1_t * t
    double l2_0 = 0, l2_t = 0;
    double l3_0 = 0, l3_t = 0;
    double kappa = 0;
};

class LinearModel : public CoefficientModel {
  public:
    LinearModel(std::string name, LinearParams p) : name_(std::move(name)), p_(p) {}
    std::string name() const override { return name_; }
    double b(double t, double x, double y, double z, double u) const override {
        return p_.a1 * x + p_.b1 * y + p_.c1 * z + p_.du_b * u + p_.l1_0 + p_.l1_t * t;
    }
    double sigma(double t, double x, double y, double z, double u) const override {
        return p_.a2 * x + p_.b2 * y + p_.c2 * z + p_.du_s * u + p_.l2_0 + p_.l2_t * t;
    }
    double g(double t, double x, double y, double z, double u) const override {
        return p_.a3 * x + p_.b3 * y + p_.c3 * z + p_.du_g * u + p_.l3_0 + p_.l3_t * t;
    }
    double phi(double x) const override { return p_.kappa * x; }
    Gradient b_grad(double, double, double, double, double) const override {
        return {p_.a1, p_.b1, p_.c1};
    }
    Gradient sigma_grad(double, double, double, double, double) const override {
        return {p_.a2, p_.b2, p_.c2};
    }
    Gradient g_grad(double, double, double, double, double) const override {
        return {p_.a3, p_.b3, p_.c3};
    }
    double phi_x(double) const override { return p_.kappa; }
    Hessian b_hess(double, double, double, double, double) const override { return {}; }
    Hessian sigma_hess(double, double, double, double, double) const override { return {}; }
    Hessian g_hess(double, double, double, double, double) const override { return {}; }
    double phi_xx(double) const override { return 0.0; }
    double b_u(double, double, double, double, double) const override { return p_.du_b; }
    double sigma_u(double, double, double, double, double) const override { return p_.du_s; }
    double g_u(double, double, double, double, double) const override { return p_.du_g; }
    LipschitzData lipschitz() const override;
    bool sigma_independent_of_z() const override { return p_.c2 == 0.0; }
    bool sigma_linear_in_z() const override { return true; }
    double linear_z_factor(double) const override { return p_.c2; }

    const LinearParams& params() const { return p_; }

    // The FBSDE along a constant control value (control loadings folded into
    // the drivers), for the semi-explicit oracle.
    LinearFbsdeSpec to_linear_spec(double u_value, double x0) const;

  private:
    std::string name_;
    LinearParams p_;
};

// The worked linear-quadratic test case:
//   dX = [a Z + b u] dB, dY = -c u dt + Z dB, X(0) = x0, Y(T) = d X(T),
// with quadratic control cost handled by the lq module.
struct ExampleParams {
    double a = 0.5, b = 1.0, c = 0.25, d = 1.0;
};

class ExampleModel : public CoefficientModel {
  public:
    explicit ExampleModel(ExampleParams p) : p_(p) {}
    std::string name() const override { return "example"; }
    double b(double, double, double, double, double) const override { return 0.0; }
    double sigma(double, double, double z, double, double u) const override {
        return p_.a * z + p_.b * u;
    }
    double g(double, double, double, double, double u) const override { return p_.c * u; }
    double phi(double x) const override { return p_.d * x; }
    Gradient b_grad(double, double, double, double, double) const override { return {}; }
    Gradient sigma_grad(double, double, double, double, double) const override {
        return {0, 0, p_.a};
    }
    Gradient g_grad(double, double, double, double, double) const override { return {}; }
    double phi_x(double) const override { return p_.d; }
    Hessian b_hess(double, double, double, double, double) const override { return {}; }
    Hessian sigma_hess(double, double, double, double, double) const override { return {}; }
    Hessian g_hess(double, double, double, double, double) const override { return {}; }
    double phi_xx(double) const override { return 0.0; }
    double b_u(double, double, double, double, double) const override { return 0.0; }
    double sigma_u(double, double, double, double, double) const override { return p_.b; }
    double g_u(double, double, double, double, double) const override { return p_.c; }
    LipschitzData lipschitz() const override {
        return {std::max({std::abs(p_.a), std::abs(p_.b), std::abs(p_.c), std::abs(p_.d), 1.0}),
                std::abs(p_.d), 0.0, std::abs(p_.a)};
    }
    bool sigma_linear_in_z() const override { return true; }
    double linear_z_factor(double) const override { return p_.a; }

    const ExampleParams& params() const { return p_; }

  private:
    ExampleParams p_;
};

// Smooth bounded nonlinear coefficients built from tanh saturations:
//   b = bx th(x) + by th(y) + bz th(z) + bu u
//   sigma = sx th(x) + sy th(y) + [sz th(z) | sz z] + su u + s0
//   g = gx th(x) + gy th(y) + gz th(z) + gu u + gu2 u^2
//   phi = px x + p2 log cosh(x).
struct SmoothParams {
    double bx = 0, by = 0, bz = 0, bu = 0;
    double sx = 0, sy = 0, sz = 0, su = 0, s0 = 0;
    double gx = 0, gy = 0, gz = 0, gu = 0, gu2 = 0;
    double px = 0, p2 = 0;
    bool linear_z = false;  // sigma uses sz * z instead of sz * tanh(z)
};

class SmoothModel : public CoefficientModel {
  public:
    SmoothModel(std::string name, SmoothParams p) : name_(std::move(name)), p_(p) {}
    std::string name() const override { return name_; }
    double b(double t, double x, double y, double z, double u) const override;
    double sigma(double t, double x, double y, double z, double u) const override;
    double g(double t, double x, double y, double z, double u) const override;
    double phi(double x) const override;
    Gradient b_grad(double, double x, double y, double z, double) const override;
    Gradient sigma_grad(double, double x, double y, double z, double) const override;
    Gradient g_grad(double, double x, double y, double z, double) const override;
    double phi_x(double x) const override;
    Hessian b_hess(double, double x, double y, double z, double) const override;
    Hessian sigma_hess(double, double x, double y, double z, double) const override;
    Hessian g_hess(double, double x, double y, double z, double) const override;
    double phi_xx(double x) const override;
    double b_u(double, double, double, double, double) const override { return p_.bu; }
    double sigma_u(double, double, double, double, double) const override { return p_.su; }
    double g_u(double, double, double, double, double u) const override {
        return p_.gu + 2.0 * p_.gu2 * u;
    }
    LipschitzData lipschitz() const override;
    bool sigma_independent_of_z() const override { return p_.sz == 0.0; }
    bool sigma_linear_in_z() const override { return p_.linear_z; }
    double linear_z_factor(double) const override { return p_.linear_z ? p_.sz : 0.0; }

    const SmoothParams& params() const { return p_; }

  private:
    std::string name_;
    SmoothParams p_;
};

struct SpikeParams {
    double t0 = 0.25;
    double eps = 0.125;
    double replacement = 1.0;
};

// A fully specified problem instance: grid, coefficients, control data and
// the default spike used by the perturbation checks.
struct Problem {
    std::string preset;
    double T = 1.0;
    int N = 64;
    double x0 = 1.0;
    std::shared_ptr<const CoefficientModel> coefficients;
    ControlDomain domain;
    double u_bar = 0.0;
    SpikeParams spike;
    std::uint64_t seed = 0;
};

std::vector<std::string> problem_preset_names();
Problem make_problem_preset(const std::string& name);

// Presets exercised by the verification suite (all bundled problems).
std::vector<std::string> bundled_preset_names();

}  // namespace fbsmp
