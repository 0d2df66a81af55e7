#pragma once

#include <optional>
#include <vector>

#include "fbsmp/tree.hpp"

namespace fbsmp {

// Control domain: a finite set of values or a bounded interval sampled on a
// uniform grid. Admissibility (sup_t E|u|^8 < infinity) is automatic for
// bounded domains, which is all this library supports.
struct ControlDomain {
    enum class Kind { FiniteSet, Interval } kind = Kind::FiniteSet;
    std::vector<double> values;  // finite set
    double lo = 0.0, hi = 0.0;   // interval
    int grid = 101;              // interval sampling resolution

    static ControlDomain finite(std::vector<double> vals);
    static ControlDomain interval(double lo, double hi, int grid = 101);

    bool contains(double u, double tol = 1e-12) const;
    bool convex() const { return kind == Kind::Interval; }
    std::vector<double> grid_values() const;
};

// A declared control domain together with a candidate control. The candidate
// is either deterministic (a value per time step) or a full tree process.
struct ControlSpec {
    ControlDomain domain;
    TreeProcess u_bar;  // candidate control as a node-valued process

    static ControlSpec constant(const BrownianTree& tree, ControlDomain domain, double value);

    void validate(const BrownianTree& tree) const;
};

// A spike perturbation: replace the control by `replacement` on
// E_eps = [t0, t0 + eps), snapped to whole grid steps (never fewer than one).
struct SpikeSpec {
    double t0 = 0.0;
    double eps = 0.0;
    double replacement = 0.0;

    // First and one-past-last perturbed step after snapping.
    int k_begin = 0;
    int k_end = 0;

    static SpikeSpec make(const BrownianTree& tree, double t0, double eps, double replacement);

    bool covers_step(int k) const { return k >= k_begin && k < k_end; }
    double snapped_measure(double dt) const { return (k_end - k_begin) * dt; }
};

// u^eps: the candidate control with `spike.replacement` on the snapped E_eps.
TreeProcess make_spike_control(const BrownianTree& tree, const TreeProcess& u_bar,
                               const SpikeSpec& spike);

}  // namespace fbsmp
