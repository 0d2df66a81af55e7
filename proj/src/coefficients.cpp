#include "fbsmp/coefficients.hpp"

#include <cmath>
#include <functional>

namespace fbsmp {

namespace {

constexpr double kFdStep = 1e-6;

double central(const std::function<double(double)>& f, double v) {
    return (f(v + kFdStep) - f(v - kFdStep)) / (2.0 * kFdStep);
}

bool close_rel(double a, double b, double tol) {
    double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= tol * scale;
}

}  // namespace

std::vector<SelfCheckFailure> self_check(const CoefficientModel& m,
                                         const std::vector<std::array<double, 5>>& points,
                                         double tol) {
    std::vector<SelfCheckFailure> failures;
    auto record = [&](const std::string& what, const std::array<double, 5>& p, double expected,
                      double got) {
        if (!close_rel(expected, got, tol))
            failures.push_back({what, p[0], p[1], p[2], p[3], p[4], expected, got});
    };

    const LipschitzData lip = m.lipschitz();

    for (const auto& p : points) {
        const double t = p[0], x = p[1], y = p[2], z = p[3], u = p[4];

        struct Coef {
            const char* name;
            std::function<double(double, double, double, double, double)> f;
            Gradient grad;
            Hessian hess;
        };
        const Coef coefs[3] = {
            {"b", [&](double t_, double x_, double y_, double z_, double u_) { return m.b(t_, x_, y_, z_, u_); },
             m.b_grad(t, x, y, z, u), m.b_hess(t, x, y, z, u)},
            {"sigma", [&](double t_, double x_, double y_, double z_, double u_) { return m.sigma(t_, x_, y_, z_, u_); },
             m.sigma_grad(t, x, y, z, u), m.sigma_hess(t, x, y, z, u)},
            {"g", [&](double t_, double x_, double y_, double z_, double u_) { return m.g(t_, x_, y_, z_, u_); },
             m.g_grad(t, x, y, z, u), m.g_hess(t, x, y, z, u)},
        };

        for (const auto& c : coefs) {
            const std::string n = c.name;
            double fd_x = central([&](double v) { return c.f(t, v, y, z, u); }, x);
            double fd_y = central([&](double v) { return c.f(t, x, v, z, u); }, y);
            double fd_z = central([&](double v) { return c.f(t, x, y, v, u); }, z);
            record(n + "_x", p, fd_x, c.grad.x);
            record(n + "_y", p, fd_y, c.grad.y);
            record(n + "_z", p, fd_z, c.grad.z);

            // Second derivatives: central differences of the supplied gradient.
            auto gx = [&](double xx, double yy, double zz) { return c.name == std::string("b")
                    ? m.b_grad(t, xx, yy, zz, u) : (c.name == std::string("sigma")
                    ? m.sigma_grad(t, xx, yy, zz, u) : m.g_grad(t, xx, yy, zz, u)); };
            record(n + "_xx", p, central([&](double v) { return gx(v, y, z).x; }, x), c.hess.xx);
            record(n + "_xy", p, central([&](double v) { return gx(x, v, z).x; }, y), c.hess.xy);
            record(n + "_xz", p, central([&](double v) { return gx(x, y, v).x; }, z), c.hess.xz);
            record(n + "_yy", p, central([&](double v) { return gx(x, v, z).y; }, y), c.hess.yy);
            record(n + "_yz", p, central([&](double v) { return gx(x, y, v).y; }, z), c.hess.yz);
            record(n + "_zz", p, central([&](double v) { return gx(x, y, v).z; }, z), c.hess.zz);

            double fd_u = central([&](double v) { return c.f(t, x, y, z, v); }, u);
            double got_u = c.name == std::string("b") ? m.b_u(t, x, y, z, u)
                          : (c.name == std::string("sigma") ? m.sigma_u(t, x, y, z, u)
                                                            : m.g_u(t, x, y, z, u));
            record(n + "_u", p, fd_u, got_u);
        }

        record("phi_x", p, central([&](double v) { return m.phi(v); }, x), m.phi_x(x));
        record("phi_xx", p, central([&](double v) { return m.phi_x(v); }, x), m.phi_xx(x));

        // Assumption bound spot checks (metadata must dominate the sampled derivatives).
        auto bound = [&](const std::string& what, double val, double cap) {
            if (std::abs(val) > cap + 1e-12)
                failures.push_back({what + " bound", t, x, y, z, u, cap, std::abs(val)});
        };
        const Gradient bg = m.b_grad(t, x, y, z, u);
        const Gradient sg = m.sigma_grad(t, x, y, z, u);
        const Gradient gg = m.g_grad(t, x, y, z, u);
        bound("b_x<=L1", bg.x, lip.L1);
        bound("sigma_x<=L1", sg.x, lip.L1);
        bound("g_x<=L1", gg.x, lip.L1);
        bound("g_y<=L1", gg.y, lip.L1);
        bound("g_z<=L1", gg.z, lip.L1);
        bound("phi_x<=L1", m.phi_x(x), lip.L1);
        bound("b_y<=L2", bg.y, lip.L2);
        bound("b_z<=L2", bg.z, lip.L2);
        bound("sigma_y<=L2", sg.y, lip.L2);
        bound("sigma_z<=L3", sg.z, lip.L3);
    }
    return failures;
}

std::vector<std::array<double, 5>> default_check_points(double T) {
    std::vector<std::array<double, 5>> pts;
    const double ts[] = {0.0, 0.31 * T, 0.77 * T};
    const double vals[] = {-1.3, -0.4, 0.0, 0.6, 1.7};
    for (double t : ts)
        for (double x : vals)
            for (double y : {-0.8, 0.5})
                for (double z : {-0.6, 0.9})
                    for (double u : {-0.5, 0.7}) pts.push_back({t, x, y, z, u});
    return pts;
}

}  // namespace fbsmp
