#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace fbsmp {

// Uniform partition of [0, T] into N steps.
struct TimeGrid {
    double T = 1.0;
    int N = 1;
    double dt = 1.0;

    static TimeGrid make(double T, int N);
    double time(int k) const { return T * static_cast<double>(k) / static_cast<double>(N); }
};

// Recombining random-walk tree for the driving Brownian motion. Step k has
// k+1 nodes; node (k, j) carries B = (2j - k) * sqrt(dt) and the increment to
// the children (k+1, j) [down] and (k+1, j+1) [up] is -/+ sqrt(dt) with
// probability 1/2 each.
class BrownianTree {
  public:
    explicit BrownianTree(TimeGrid grid);

    const TimeGrid& grid() const { return grid_; }
    int steps() const { return grid_.N; }
    double dt() const { return grid_.dt; }
    double sqrt_dt() const { return sqrt_dt_; }
    double time(int k) const { return grid_.time(k); }

    int node_count(int k) const { return k + 1; }
    double node(int k, int j) const { return (2.0 * j - k) * sqrt_dt_; }

    // P(B(t_k) = node(k, j)) = C(k, j) / 2^k, built by the pascal recursion.
    double probability(int k, int j) const { return prob_[k][j]; }
    const std::vector<double>& probability_row(int k) const { return prob_[k]; }

  private:
    TimeGrid grid_;
    double sqrt_dt_;
    std::vector<std::vector<double>> prob_;
};

BrownianTree build_tree(double T, int N);

// An adapted scalar process valued on tree nodes: one value per node, row k
// holds k+1 values. Node-valued processes are adapted by construction.
class TreeProcess {
  public:
    TreeProcess() = default;
    explicit TreeProcess(int steps) : v_(steps + 1) {
        for (int k = 0; k <= steps; ++k) v_[k].assign(k + 1, 0.0);
    }
    TreeProcess(int steps, double constant) : v_(steps + 1) {
        for (int k = 0; k <= steps; ++k) v_[k].assign(k + 1, constant);
    }

    static TreeProcess from_node_function(const BrownianTree& tree,
                                          const std::function<double(int, int)>& f);

    int steps() const { return static_cast<int>(v_.size()) - 1; }
    double& at(int k, int j) { return v_[k][j]; }
    double at(int k, int j) const { return v_[k][j]; }
    std::vector<double>& row(int k) { return v_[k]; }
    const std::vector<double>& row(int k) const { return v_[k]; }

    bool shape_matches(const BrownianTree& tree) const;

  private:
    std::vector<std::vector<double>> v_;
};

// E[proc(k+1) | F_k]: value at (k, j) is the average of the two children.
// proc must be defined at step k+1.
std::vector<double> conditional_expectation(const TreeProcess& proc, int k);

// Martingale coefficient (child_up - child_down) / (2 sqrt(dt)); the discrete
// Z from E[Y dB | F_k] / dt.
std::vector<double> martingale_coefficient(const TreeProcess& proc, int k, double sqrt_dt);

// One forward Euler step X(k+1) = X(k) + drift dt + diff dB projected onto the
// recombining tree: an interior node has two parents, and the node value is
// the probability-weighted average of both parent propagations (the
// conditional expectation of the path-wise Euler step given the new node).
std::vector<double> forward_step_project(const BrownianTree& tree, int k,
                                         const std::vector<double>& x,
                                         const std::vector<double>& drift,
                                         const std::vector<double>& diff);

// Exact tree expectation of proc at step k.
double expectation(const BrownianTree& tree, const TreeProcess& proc, int k);

// Probability-weighted E[ sum_k |proc(k)|^2 dt ] over steps [0, N).
double l2_time_norm_sq(const BrownianTree& tree, const TreeProcess& proc);

double sup_abs(const TreeProcess& proc);
double sup_abs_diff(const TreeProcess& a, const TreeProcess& b);

// Cross-platform deterministic 64-bit generator (splitmix64).
class Rng64 {
  public:
    explicit Rng64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // true = up move, probability 1/2.
    bool next_bit() { return (next() >> 63) != 0; }

  private:
    std::uint64_t state_;
};

// Node indices j_0..j_N of one sampled path through the tree.
std::vector<int> sample_path(int steps, Rng64& rng);

}  // namespace fbsmp
