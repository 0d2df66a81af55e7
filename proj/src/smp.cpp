#include "fbsmp/smp.hpp"

#include <cmath>
#include <stdexcept>

#include "fbsmp/errors.hpp"

namespace fbsmp {

std::string mp_mode_name(MpMode mode) {
    switch (mode) {
        case MpMode::Global: return "global";
        case MpMode::GlobalLinearZ: return "global-linear-z";
        case MpMode::LocalConvex: return "local";
    }
    return "unknown";
}

double hamiltonian(const CoefficientModel& coeffs, double t, double x, double y, double z,
                   double u, double u_bar, double p, double q, double P, double delta_u) {
    const double zs = z + delta_u;
    const double ds = coeffs.sigma(t, x, y, zs, u) - coeffs.sigma(t, x, y, z, u_bar);
    return p * coeffs.b(t, x, y, zs, u) + q * coeffs.sigma(t, x, y, zs, u) + 0.5 * P * ds * ds +
           coeffs.g(t, x, y, zs, u);
}

double hamiltonian_linear_z(const CoefficientModel& coeffs, double t, double x, double y,
                            double z, double u, double u_bar, double p, double q, double P) {
    const double ds = coeffs.sigma(t, x, y, z, u) - coeffs.sigma(t, x, y, z, u_bar);
    return p * coeffs.b(t, x, y, z, u) + q * coeffs.sigma(t, x, y, z, u) + 0.5 * P * ds * ds +
           coeffs.g(t, x, y, z + p * ds, u);
}

namespace {

struct WorstTracker {
    double gap = 0.0;
    int k = -1, j = -1;
    double u = 0.0;
    bool has = false;

    // Most negative gap wins; ties break to the smallest time then the
    // smallest control value.
    void offer(double candidate, int kk, int jj, double uu, double t_candidate, double t_best) {
        if (!has || candidate < gap ||
            (candidate == gap && (t_candidate < t_best || (t_candidate == t_best && uu < u)))) {
            gap = candidate;
            k = kk;
            j = jj;
            u = uu;
            has = true;
        }
    }
};

}  // namespace

MpReport check_global_mp(const MpCheckInputs& in, const ControlDomain& domain, MpMode mode,
                         double tolerance, double beta0, std::vector<MpNodeRow>* rows) {
    if (!in.coeffs || !in.tree || !in.optimal || !in.u_bar || !in.first || !in.second)
        throw std::invalid_argument("check_global_mp: missing inputs");
    if (mode == MpMode::LocalConvex)
        throw std::invalid_argument("check_global_mp: use check_local_mp for the local form");
    if (mode == MpMode::GlobalLinearZ && !in.coeffs->sigma_linear_in_z())
        throw std::invalid_argument(
            "check_global_mp: linear-z mode requires the sigma-linear-in-z tag");

    const BrownianTree& tree = *in.tree;
    const std::vector<double> candidates = domain.grid_values();
    MpReport rep;
    rep.mode = mp_mode_name(mode);
    rep.tolerance = tolerance;
    WorstTracker worst;
    DeltaOptions dopts;
    dopts.beta0 = beta0;

    for (int k = 0; k < tree.steps(); ++k) {
        const double t = tree.time(k);
        for (int j = 0; j <= k; ++j) {
            const double x = in.optimal->X.at(k, j);
            const double y = in.optimal->Y.at(k, j);
            const double z = in.optimal->Z.at(k, j);
            const double ub = in.u_bar->at(k, j);
            const double p = in.first->p.at(k, j);
            const double q = in.first->q.at(k, j);
            const double P = in.second->P.at(k, j);
            ++rep.nodes_checked;

            const double h_bar =
                mode == MpMode::GlobalLinearZ
                    ? hamiltonian_linear_z(*in.coeffs, t, x, y, z, ub, ub, p, q, P)
                    : hamiltonian(*in.coeffs, t, x, y, z, ub, ub, p, q, P, 0.0);

            WorstTracker node_worst;
            bool node_ok = true;
            for (double u : candidates) {
                double h_u = 0.0;
                if (mode == MpMode::GlobalLinearZ) {
                    h_u = hamiltonian_linear_z(*in.coeffs, t, x, y, z, u, ub, p, q, P);
                } else {
                    try {
                        const double dlt =
                            solve_delta_node(*in.coeffs, t, x, y, z, ub, u, p, dopts);
                        h_u = hamiltonian(*in.coeffs, t, x, y, z, u, ub, p, q, P, dlt);
                    } catch (const SolverError&) {
                        node_ok = false;
                        continue;
                    }
                }
                ++rep.candidates_checked;
                const double gap = h_u - h_bar;
                const double t_best = worst.has ? tree.time(worst.k) : 0.0;
                worst.offer(gap, k, j, u, t, t_best);
                const double tn_best = node_worst.has ? tree.time(node_worst.k) : 0.0;
                node_worst.offer(gap, k, j, u, t, tn_best);
            }
            if (!node_ok) ++rep.unchecked_nodes;
            if (rows && node_worst.has)
                rows->push_back({k, j, t, node_worst.u, node_worst.gap});
        }
    }
    if (worst.has) {
        rep.worst_gap = worst.gap;
        rep.worst_k = worst.k;
        rep.worst_j = worst.j;
        rep.worst_u = worst.u;
    }
    rep.pass = rep.worst_gap >= -tolerance;
    return rep;
}

double hamiltonian_u(const CoefficientModel& coeffs, double t, double x, double y, double z,
                     double u_bar, double p, double q) {
    const Gradient sg = coeffs.sigma_grad(t, x, y, z, u_bar);
    const Gradient bg = coeffs.b_grad(t, x, y, z, u_bar);
    const Gradient gg = coeffs.g_grad(t, x, y, z, u_bar);
    const double denom = 1.0 - p * sg.z;
    if (std::abs(denom) < 1e-12)
        throw SolverError(SolverErrorKind::Singularity, "hamiltonian_u: 1 - p sigma_z vanished");
    const double du = coeffs.sigma_u(t, x, y, z, u_bar);
    const double delta_u_deriv = p * du / denom;
    return p * coeffs.b_u(t, x, y, z, u_bar) + q * du + coeffs.g_u(t, x, y, z, u_bar) +
           (p * bg.z + q * sg.z + gg.z) * delta_u_deriv;
}

MpReport check_local_mp(const MpCheckInputs& in, const ControlDomain& domain, double tolerance,
                        double beta0, std::vector<MpNodeRow>* rows) {
    if (!in.coeffs || !in.tree || !in.optimal || !in.u_bar || !in.first)
        throw std::invalid_argument("check_local_mp: missing inputs");
    if (!domain.convex())
        throw std::invalid_argument("check_local_mp: control domain must be an interval");
    (void)beta0;

    const BrownianTree& tree = *in.tree;
    MpReport rep;
    rep.mode = mp_mode_name(MpMode::LocalConvex);
    rep.tolerance = tolerance;
    WorstTracker worst;

    for (int k = 0; k < tree.steps(); ++k) {
        const double t = tree.time(k);
        for (int j = 0; j <= k; ++j) {
            const double x = in.optimal->X.at(k, j);
            const double y = in.optimal->Y.at(k, j);
            const double z = in.optimal->Z.at(k, j);
            const double ub = in.u_bar->at(k, j);
            const double p = in.first->p.at(k, j);
            const double q = in.first->q.at(k, j);
            ++rep.nodes_checked;
            const double hu = hamiltonian_u(*in.coeffs, t, x, y, z, ub, p, q);
            WorstTracker node_worst;
            // The condition is linear in u, so the interval endpoints are the
            // extreme candidates.
            for (double u : {domain.lo, domain.hi}) {
                ++rep.candidates_checked;
                const double val = hu * (u - ub);
                const double t_best = worst.has ? tree.time(worst.k) : 0.0;
                worst.offer(val, k, j, u, t, t_best);
                const double tn_best = node_worst.has ? tree.time(node_worst.k) : 0.0;
                node_worst.offer(val, k, j, u, t, tn_best);
            }
            if (rows && node_worst.has)
                rows->push_back({k, j, t, node_worst.u, node_worst.gap});
        }
    }
    if (worst.has) {
        rep.worst_gap = worst.gap;
        rep.worst_k = worst.k;
        rep.worst_j = worst.j;
        rep.worst_u = worst.u;
    }
    rep.pass = rep.worst_gap >= -tolerance;
    return rep;
}

}  // namespace fbsmp
