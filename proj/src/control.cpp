#include "fbsmp/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fbsmp {

ControlDomain ControlDomain::finite(std::vector<double> vals) {
    if (vals.empty()) throw std::invalid_argument("ControlDomain: empty finite set");
    ControlDomain d;
    d.kind = Kind::FiniteSet;
    d.values = std::move(vals);
    std::sort(d.values.begin(), d.values.end());
    return d;
}

ControlDomain ControlDomain::interval(double lo, double hi, int grid) {
    if (!(lo < hi)) throw std::invalid_argument("ControlDomain: interval requires lo < hi");
    if (grid < 2) throw std::invalid_argument("ControlDomain: interval grid must be >= 2");
    ControlDomain d;
    d.kind = Kind::Interval;
    d.lo = lo;
    d.hi = hi;
    d.grid = grid;
    return d;
}

bool ControlDomain::contains(double u, double tol) const {
    if (kind == Kind::Interval) return u >= lo - tol && u <= hi + tol;
    for (double v : values)
        if (std::abs(v - u) <= tol) return true;
    return false;
}

std::vector<double> ControlDomain::grid_values() const {
    if (kind == Kind::FiniteSet) return values;
    std::vector<double> out(grid);
    for (int i = 0; i < grid; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    return out;
}

ControlSpec ControlSpec::constant(const BrownianTree& tree, ControlDomain domain, double value) {
    ControlSpec spec;
    spec.domain = std::move(domain);
    spec.u_bar = TreeProcess(tree.steps(), value);
    spec.validate(tree);
    return spec;
}

void ControlSpec::validate(const BrownianTree& tree) const {
    if (!u_bar.shape_matches(tree))
        throw std::invalid_argument("ControlSpec: candidate control shape mismatch");
    for (int k = 0; k <= tree.steps(); ++k)
        for (int j = 0; j <= k; ++j)
            if (!domain.contains(u_bar.at(k, j)))
                throw std::invalid_argument("ControlSpec: control value outside declared domain");
}

SpikeSpec SpikeSpec::make(const BrownianTree& tree, double t0, double eps, double replacement) {
    if (!(eps > 0.0)) throw std::invalid_argument("SpikeSpec: eps must be positive");
    if (t0 < 0.0 || t0 + eps > tree.grid().T + 1e-12)
        throw std::invalid_argument("SpikeSpec: [t0, t0+eps) not inside [0, T]");
    const double dt = tree.dt();
    SpikeSpec s;
    s.t0 = t0;
    s.eps = eps;
    s.replacement = replacement;
    s.k_begin = static_cast<int>(std::lround(t0 / dt));
    s.k_end = static_cast<int>(std::lround((t0 + eps) / dt));
    s.k_begin = std::clamp(s.k_begin, 0, tree.steps() - 1);
    if (s.k_end <= s.k_begin) s.k_end = s.k_begin + 1;  // never snap below one step
    s.k_end = std::min(s.k_end, tree.steps());
    return s;
}

TreeProcess make_spike_control(const BrownianTree& tree, const TreeProcess& u_bar,
                               const SpikeSpec& spike) {
    if (!u_bar.shape_matches(tree))
        throw std::invalid_argument("make_spike_control: control shape mismatch");
    if (spike.k_end <= spike.k_begin)
        throw std::invalid_argument("make_spike_control: empty snapped spike set");
    TreeProcess u = u_bar;
    for (int k = spike.k_begin; k < spike.k_end; ++k)
        for (int j = 0; j <= k; ++j) u.at(k, j) = spike.replacement;
    return u;
}

}  // namespace fbsmp
