#include "fbsmp/tree.hpp"

#include <algorithm>
#include <stdexcept>

namespace fbsmp {

TimeGrid TimeGrid::make(double T, int N) {
    if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: horizon T must be positive");
    if (N < 1) throw std::invalid_argument("TimeGrid: step count N must be >= 1");
    return TimeGrid{T, N, T / static_cast<double>(N)};
}

BrownianTree::BrownianTree(TimeGrid grid) : grid_(grid), sqrt_dt_(std::sqrt(grid.dt)) {
    prob_.resize(grid_.N + 1);
    prob_[0] = {1.0};
    for (int k = 1; k <= grid_.N; ++k) {
        prob_[k].assign(k + 1, 0.0);
        for (int j = 0; j < k; ++j) {
            double half = 0.5 * prob_[k - 1][j];
            prob_[k][j] += half;      // down move
            prob_[k][j + 1] += half;  // up move
        }
    }
}

BrownianTree build_tree(double T, int N) { return BrownianTree(TimeGrid::make(T, N)); }

TreeProcess TreeProcess::from_node_function(const BrownianTree& tree,
                                            const std::function<double(int, int)>& f) {
    TreeProcess p(tree.steps());
    for (int k = 0; k <= tree.steps(); ++k)
        for (int j = 0; j <= k; ++j) p.at(k, j) = f(k, j);
    return p;
}

bool TreeProcess::shape_matches(const BrownianTree& tree) const {
    if (steps() != tree.steps()) return false;
    for (int k = 0; k <= steps(); ++k)
        if (static_cast<int>(v_[k].size()) != k + 1) return false;
    return true;
}

std::vector<double> conditional_expectation(const TreeProcess& proc, int k) {
    if (k < 0 || k + 1 > proc.steps())
        throw std::invalid_argument("conditional_expectation: step out of range");
    const auto& next = proc.row(k + 1);
    if (static_cast<int>(next.size()) != k + 2)
        throw std::invalid_argument("conditional_expectation: shape mismatch at step k+1");
    std::vector<double> out(k + 1);
    for (int j = 0; j <= k; ++j) out[j] = 0.5 * (next[j] + next[j + 1]);
    return out;
}

std::vector<double> martingale_coefficient(const TreeProcess& proc, int k, double sqrt_dt) {
    if (k < 0 || k + 1 > proc.steps())
        throw std::invalid_argument("martingale_coefficient: step out of range");
    const auto& next = proc.row(k + 1);
    if (static_cast<int>(next.size()) != k + 2)
        throw std::invalid_argument("martingale_coefficient: shape mismatch at step k+1");
    std::vector<double> out(k + 1);
    const double inv = 1.0 / (2.0 * sqrt_dt);
    for (int j = 0; j <= k; ++j) out[j] = (next[j + 1] - next[j]) * inv;
    return out;
}

std::vector<double> forward_step_project(const BrownianTree& tree, int k,
                                         const std::vector<double>& x,
                                         const std::vector<double>& drift,
                                         const std::vector<double>& diff) {
    if (static_cast<int>(x.size()) != k + 1 || drift.size() != x.size() || diff.size() != x.size())
        throw std::invalid_argument("forward_step_project: shape mismatch at step k");
    const double dt = tree.dt();
    const double sdt = tree.sqrt_dt();
    const auto& pk = tree.probability_row(k);
    std::vector<double> out(k + 2, 0.0);
    std::vector<double> mass(k + 2, 0.0);
    for (int j = 0; j <= k; ++j) {
        const double base = x[j] + drift[j] * dt;
        const double up = base + diff[j] * sdt;
        const double down = base - diff[j] * sdt;
        out[j + 1] += pk[j] * up;
        mass[j + 1] += pk[j];
        out[j] += pk[j] * down;
        mass[j] += pk[j];
    }
    for (int i = 0; i <= k + 1; ++i) {
        // Deep-tail nodes can carry zero probability mass in double precision;
        // fall back to the available single-parent propagation.
        if (mass[i] > 0.0) {
            out[i] /= mass[i];
        } else {
            const double base_lo = (i > 0) ? x[i - 1] + drift[i - 1] * dt + diff[i - 1] * sdt : 0.0;
            const double base_hi = (i <= k) ? x[i] + drift[i] * dt - diff[i] * sdt : 0.0;
            if (i > 0 && i <= k)
                out[i] = 0.5 * (base_lo + base_hi);
            else
                out[i] = (i > 0) ? base_lo : base_hi;
        }
    }
    return out;
}

double expectation(const BrownianTree& tree, const TreeProcess& proc, int k) {
    const auto& pk = tree.probability_row(k);
    const auto& row = proc.row(k);
    double s = 0.0;
    for (int j = 0; j <= k; ++j) s += pk[j] * row[j];
    return s;
}

double l2_time_norm_sq(const BrownianTree& tree, const TreeProcess& proc) {
    double s = 0.0;
    for (int k = 0; k < tree.steps(); ++k) {
        const auto& pk = tree.probability_row(k);
        const auto& row = proc.row(k);
        double sk = 0.0;
        for (int j = 0; j <= k; ++j) sk += pk[j] * row[j] * row[j];
        s += sk * tree.dt();
    }
    return s;
}

double sup_abs(const TreeProcess& proc) {
    double m = 0.0;
    for (int k = 0; k <= proc.steps(); ++k)
        for (double v : proc.row(k)) m = std::max(m, std::abs(v));
    return m;
}

double sup_abs_diff(const TreeProcess& a, const TreeProcess& b) {
    double m = 0.0;
    for (int k = 0; k <= a.steps(); ++k)
        for (int j = 0; j <= k; ++j) m = std::max(m, std::abs(a.at(k, j) - b.at(k, j)));
    return m;
}

std::vector<int> sample_path(int steps, Rng64& rng) {
    std::vector<int> j(steps + 1);
    j[0] = 0;
    for (int k = 0; k < steps; ++k) j[k + 1] = j[k] + (rng.next_bit() ? 1 : 0);
    return j;
}

}  // namespace fbsmp
