#include "fbsmp/presets.hpp"

#include <cmath>
#include <stdexcept>

namespace fbsmp {

LipschitzData LinearModel::lipschitz() const {
    LipschitzData lip;
    lip.L1 = std::max({std::abs(p_.a1), std::abs(p_.a2), std::abs(p_.a3), std::abs(p_.b3),
                       std::abs(p_.c3), std::abs(p_.kappa)});
    lip.L2 = std::max({std::abs(p_.b1), std::abs(p_.c1), std::abs(p_.b2)});
    lip.L3 = std::abs(p_.c2);
    lip.L = std::max({lip.L1, lip.L2, lip.L3, std::abs(p_.l1_0) + std::abs(p_.l1_t),
                      std::abs(p_.l2_0) + std::abs(p_.l2_t), std::abs(p_.l3_0) + std::abs(p_.l3_t),
                      std::abs(p_.du_b), std::abs(p_.du_s), std::abs(p_.du_g), 1.0});
    return lip;
}

LinearFbsdeSpec LinearModel::to_linear_spec(double u_value, double x0) const {
    const LinearParams p = p_;
    LinearFbsdeSpec s;
    s.a1 = [p](double) { return p.a1; };
    s.b1 = [p](double) { return p.b1; };
    s.c1 = [p](double) { return p.c1; };
    s.a2 = [p](double) { return p.a2; };
    s.b2 = [p](double) { return p.b2; };
    s.c2 = [p](double) { return p.c2; };
    s.a3 = [p](double) { return p.a3; };
    s.b3 = [p](double) { return p.b3; };
    s.c3 = [p](double) { return p.c3; };
    s.l1 = [p, u_value](double t) { return p.l1_0 + p.l1_t * t + p.du_b * u_value; };
    s.l2 = [p, u_value](double t) { return p.l2_0 + p.l2_t * t + p.du_s * u_value; };
    s.l3 = [p, u_value](double t) { return p.l3_0 + p.l3_t * t + p.du_g * u_value; };
    s.kappa = p.kappa;
    s.x0 = x0;
    return s;
}

namespace {

inline double th(double v) { return std::tanh(v); }
inline double th1(double v) {
    const double t = std::tanh(v);
    return 1.0 - t * t;
}
inline double th2(double v) {
    const double t = std::tanh(v);
    return -2.0 * t * (1.0 - t * t);
}
inline double logcosh(double v) {
    // log(cosh v) = |v| + log((1 + e^{-2|v|}) / 2), stable for large |v|.
    const double a = std::abs(v);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace

double SmoothModel::b(double, double x, double y, double z, double u) const {
    return p_.bx * th(x) + p_.by * th(y) + p_.bz * th(z) + p_.bu * u;
}
double SmoothModel::sigma(double, double x, double y, double z, double u) const {
    const double zpart = p_.linear_z ? p_.sz * z : p_.sz * th(z);
    return p_.sx * th(x) + p_.sy * th(y) + zpart + p_.su * u + p_.s0;
}
double SmoothModel::g(double, double x, double y, double z, double u) const {
    return p_.gx * th(x) + p_.gy * th(y) + p_.gz * th(z) + p_.gu * u + p_.gu2 * u * u;
}
double SmoothModel::phi(double x) const { return p_.px * x + p_.p2 * logcosh(x); }

Gradient SmoothModel::b_grad(double, double x, double y, double z, double) const {
    return {p_.bx * th1(x), p_.by * th1(y), p_.bz * th1(z)};
}
Gradient SmoothModel::sigma_grad(double, double x, double y, double z, double) const {
    return {p_.sx * th1(x), p_.sy * th1(y), p_.linear_z ? p_.sz : p_.sz * th1(z)};
}
Gradient SmoothModel::g_grad(double, double x, double y, double z, double) const {
    return {p_.gx * th1(x), p_.gy * th1(y), p_.gz * th1(z)};
}
double SmoothModel::phi_x(double x) const { return p_.px + p_.p2 * th(x); }

Hessian SmoothModel::b_hess(double, double x, double y, double z, double) const {
    Hessian h;
    h.xx = p_.bx * th2(x);
    h.yy = p_.by * th2(y);
    h.zz = p_.bz * th2(z);
    return h;
}
Hessian SmoothModel::sigma_hess(double, double x, double y, double z, double) const {
    Hessian h;
    h.xx = p_.sx * th2(x);
    h.yy = p_.sy * th2(y);
    h.zz = p_.linear_z ? 0.0 : p_.sz * th2(z);
    return h;
}
Hessian SmoothModel::g_hess(double, double x, double y, double z, double) const {
    Hessian h;
    h.xx = p_.gx * th2(x);
    h.yy = p_.gy * th2(y);
    h.zz = p_.gz * th2(z);
    return h;
}
double SmoothModel::phi_xx(double x) const { return p_.p2 * th1(x); }

LipschitzData SmoothModel::lipschitz() const {
    LipschitzData lip;
    lip.L1 = std::max({std::abs(p_.bx), std::abs(p_.sx), std::abs(p_.gx), std::abs(p_.gy),
                       std::abs(p_.gz), std::abs(p_.px) + std::abs(p_.p2)});
    lip.L2 = std::max({std::abs(p_.by), std::abs(p_.bz), std::abs(p_.sy)});
    lip.L3 = std::abs(p_.sz);
    lip.L = std::max({lip.L1, lip.L2, lip.L3, std::abs(p_.s0), std::abs(p_.bu), std::abs(p_.su),
                      std::abs(p_.gu) + 2.0 * std::abs(p_.gu2), 1.0});
    return lip;
}

namespace {

Problem base_problem(const std::string& name) {
    Problem pr;
    pr.preset = name;
    pr.T = 1.0;
    pr.N = 64;
    pr.x0 = 1.0;
    pr.domain = ControlDomain::finite({-1.0, 0.0, 1.0});
    pr.u_bar = 0.0;
    pr.spike = SpikeParams{0.25, 0.125, 1.0};
    return pr;
}

LinearParams linear_a_params() {
    LinearParams p;
    p.a1 = 0.06; p.b1 = 0.03; p.c1 = 0.03;
    p.a2 = 0.06; p.b2 = 0.03; p.c2 = 0.08;
    p.a3 = 0.06; p.b3 = 0.05; p.c3 = 0.03;
    p.du_b = 0.05; p.du_s = 0.05; p.du_g = 0.03;
    p.l1_0 = 0.04; p.l2_0 = 0.12; p.l2_t = 0.04; p.l3_0 = 0.04;
    p.kappa = 0.15;
    return p;
}

LinearParams linear_b_params() {
    LinearParams p;
    p.a1 = 0.04; p.b1 = 0.03; p.c1 = 0.04;
    p.a2 = 0.08; p.b2 = 0.03; p.c2 = 0.12;
    p.a3 = 0.05; p.b3 = 0.07; p.c3 = 0.03;
    p.du_b = 0.06; p.du_s = 0.04; p.du_g = 0.04;
    p.l1_0 = 0.06; p.l1_t = -0.03; p.l2_0 = 0.10; p.l3_0 = 0.04;
    p.kappa = 0.22;
    return p;
}

LinearParams linear_c_params() {
    LinearParams p;
    p.a1 = 0.05; p.b1 = 0.04; p.c1 = 0.02;
    p.a2 = 0.07; p.b2 = 0.05; p.c2 = 0.04;
    p.a3 = 0.08; p.b3 = 0.04; p.c3 = 0.04;
    p.du_b = 0.04; p.du_s = 0.07; p.du_g = 0.03;
    p.l1_0 = 0.04; p.l2_0 = 0.08; p.l2_t = 0.05; p.l3_0 = 0.03; p.l3_t = 0.02;
    p.kappa = -0.15;
    return p;
}

SmoothParams nonlinear_params() {
    SmoothParams p;
    p.bx = 0.05; p.by = 0.03; p.bz = 0.03; p.bu = 0.06;
    p.sx = 0.06; p.sy = 0.03; p.sz = 0.06; p.su = 0.08; p.s0 = 0.18;
    p.gx = 0.06; p.gy = 0.05; p.gz = 0.05; p.gu = 0.06; p.gu2 = 0.03;
    p.px = 0.12; p.p2 = 0.06;
    p.linear_z = false;
    return p;
}

SmoothParams linear_z_params() {
    SmoothParams p;
    p.bx = 0.05; p.by = 0.03; p.bz = 0.03; p.bu = 0.05;
    p.sx = 0.06; p.sy = 0.03; p.sz = 0.15; p.su = 0.08; p.s0 = 0.12;
    p.gx = 0.05; p.gy = 0.04; p.gz = 0.04; p.gu = 0.05; p.gu2 = 0.0;
    p.px = 0.12; p.p2 = 0.04;
    p.linear_z = true;
    return p;
}

}  // namespace

std::vector<std::string> problem_preset_names() {
    return {"zero", "example", "linear-a", "linear-b", "linear-c", "nonlinear", "linear-z"};
}

std::vector<std::string> bundled_preset_names() { return problem_preset_names(); }

Problem make_problem_preset(const std::string& name) {
    Problem pr = base_problem(name);
    if (name == "zero") {
        pr.coefficients = std::make_shared<ZeroModel>(1.0);
        pr.domain = ControlDomain::finite({0.0});
        pr.spike = SpikeParams{0.25, 0.125, 0.0};
    } else if (name == "example") {
        pr.coefficients = std::make_shared<ExampleModel>(ExampleParams{});
        pr.N = 128;
    } else if (name == "linear-a") {
        pr.coefficients = std::make_shared<LinearModel>(name, linear_a_params());
    } else if (name == "linear-b") {
        pr.coefficients = std::make_shared<LinearModel>(name, linear_b_params());
        pr.x0 = 0.5;
    } else if (name == "linear-c") {
        pr.coefficients = std::make_shared<LinearModel>(name, linear_c_params());
        pr.x0 = 1.5;
    } else if (name == "nonlinear") {
        pr.coefficients = std::make_shared<SmoothModel>(name, nonlinear_params());
        pr.domain = ControlDomain::finite({-1.0, 0.0, 1.0});
    } else if (name == "linear-z") {
        pr.coefficients = std::make_shared<SmoothModel>(name, linear_z_params());
    } else {
        throw std::invalid_argument("unknown problem preset: " + name);
    }
    return pr;
}

}  // namespace fbsmp
