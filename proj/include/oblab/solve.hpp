#ifndef OBLAB_SOLVE_HPP
#define OBLAB_SOLVE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "oblab/problem.hpp"

namespace oblab {

// Stencil neighbor order: C, E, W, N, S, NE, NW, SE, SW.
inline constexpr int kStencilDi[9] = {0, 1, -1, 0, 0, 1, -1, 1, -1};
inline constexpr int kStencilDj[9] = {0, 0, 0, 1, -1, 1, 1, -1, -1};

/// Finite-difference complementarity system for u = w - psi >= 0.
/// `stencil` holds rows of the operator K ~ -div(A grad .); with the
/// positive-definite sign convention the A = Id interior row is
/// (4,-1,-1,-1,-1)/h^2. Boundary rows are identity rows carrying g - psi.
/// The load vector is b = -f, so the complementarity conditions read
/// u >= 0, K u - b >= 0, u (K u - b) = 0.
struct DiscreteSystem {
    Grid grid;
    std::vector<std::array<double, 9>> stencil;
    std::vector<double> load;             // b = -f on interior nodes
    std::vector<double> obstacle;         // zeros after the reduction
    std::vector<double> boundary_values;  // g - psi on boundary nodes, 0 inside
    std::vector<uint8_t> is_boundary;
    double load_inf = 0.0;
    double active_threshold = 0.0;  // node is active iff u < this

    int n() const { return grid.node_count(); }

    /// Row action (K u)_i using the fixed boundary values stored in u.
    double apply_row(const std::vector<double>& u, int i, int j) const {
        const auto& row = stencil[grid.index(i, j)];
        double acc = 0.0;
        for (int k = 0; k < 9; ++k) acc += row[k] * u[grid.index(i + kStencilDi[k], j + kStencilDj[k])];
        return acc;
    }
};

struct DiscreteSolution {
    ScalarField u;
    std::vector<uint8_t> active;
    double complementarity_residual = 0.0;
    double energy_value = 0.0;
    long iterations = 0;
    std::string solver;
    double tol = 0.0;
    double active_threshold = 0.0;
};

/// Second-order consistent SPD discretization of v -> -div(A grad v) with
/// edge-midpoint averaging of the diagonal coefficients and the symmetric
/// cross stencil for a12. Dirichlet rows carry g - psi.
inline DiscreteSystem assemble(const ObstacleProblem& pr) {
    const Grid& g = pr.grid;
    const double h2 = g.h() * g.h();
    DiscreteSystem sys;
    sys.grid = g;
    sys.stencil.assign(g.node_count(), {});
    sys.load.assign(g.node_count(), 0.0);
    sys.obstacle.assign(g.node_count(), 0.0);
    sys.boundary_values.assign(g.node_count(), 0.0);
    sys.is_boundary.assign(g.node_count(), 0);
    sys.active_threshold = 1e-12 * g.diameter_sq();

    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            const int idx = g.index(i, j);
            if (g.boundary_node(i, j)) {
                sys.is_boundary[idx] = 1;
                sys.stencil[idx][0] = 1.0;
                double bv = pr.g.at(i, j) - pr.psi.at(i, j);
                if (bv < 0.0 && bv > -1e-12) bv = 0.0;
                sys.boundary_values[idx] = bv;
                continue;
            }
            auto& row = sys.stencil[idx];
            const double a11e = 0.5 * (pr.A.at(i, j).a11 + pr.A.at(i + 1, j).a11);
            const double a11w = 0.5 * (pr.A.at(i, j).a11 + pr.A.at(i - 1, j).a11);
            const double a22n = 0.5 * (pr.A.at(i, j).a22 + pr.A.at(i, j + 1).a22);
            const double a22s = 0.5 * (pr.A.at(i, j).a22 + pr.A.at(i, j - 1).a22);
            row[0] = (a11e + a11w + a22n + a22s) / h2;
            row[1] = -a11e / h2;
            row[2] = -a11w / h2;
            row[3] = -a22n / h2;
            row[4] = -a22s / h2;
            const double qE = pr.A.at(i + 1, j).a12, qW = pr.A.at(i - 1, j).a12;
            const double qN = pr.A.at(i, j + 1).a12, qS = pr.A.at(i, j - 1).a12;
            row[5] = -(qE + qN) / (4 * h2);  // NE
            row[6] = (qW + qN) / (4 * h2);   // NW
            row[7] = (qE + qS) / (4 * h2);   // SE
            row[8] = -(qW + qS) / (4 * h2);  // SW
            if (!(row[0] > 0.0))
                throw AssemblyError("assemble: nonpositive diagonal at node (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
            sys.load[idx] = -pr.f.at(i, j);
            sys.load_inf = std::max(sys.load_inf, std::fabs(pr.f.at(i, j)));
        }
    }
    return sys;
}

namespace detail {

inline std::vector<double> initial_iterate(const DiscreteSystem& sys) {
    std::vector<double> u(sys.n(), 0.0);
    for (int k = 0; k < sys.n(); ++k)
        if (sys.is_boundary[k]) u[k] = sys.boundary_values[k];
    return u;
}

/// Action of the operator on the boundary data alone (interior set to zero);
/// used to express the reduced quadratic exactly.
inline std::vector<double> boundary_coupling(const DiscreteSystem& sys) {
    const Grid& g = sys.grid;
    std::vector<double> ub(sys.n(), 0.0), kb(sys.n(), 0.0);
    for (int k = 0; k < sys.n(); ++k)
        if (sys.is_boundary[k]) ub[k] = sys.boundary_values[k];
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) kb[g.index(i, j)] = sys.apply_row(ub, i, j);
    return kb;
}

}  // namespace detail

/// Discrete objective 2 h^2 J(u), J the reduced quadratic the sweeps
/// minimize; differs from the discrete energy of e:enrg2 only by a constant
/// built from the boundary data.
inline double discrete_energy(const DiscreteSystem& sys, const std::vector<double>& u) {
    const Grid& g = sys.grid;
    const std::vector<double> kb = detail::boundary_coupling(sys);
    double acc = 0.0;
    for (int j = 1; j < g.ny() - 1; ++j) {
        for (int i = 1; i < g.nx() - 1; ++i) {
            const int idx = g.index(i, j);
            acc += u[idx] * (sys.apply_row(u, i, j) + kb[idx] - 2.0 * sys.load[idx]);
        }
    }
    return acc * g.h() * g.h();
}

/// Projected-diagonal fixed point residual max_i |u_i - P(u_i - r_i/K_ii)|;
/// zero exactly at a solution of the complementarity system and scaled like u.
inline double lcp_residual(const DiscreteSystem& sys, const std::vector<double>& u) {
    const Grid& g = sys.grid;
    double worst = 0.0;
    for (int j = 1; j < g.ny() - 1; ++j) {
        for (int i = 1; i < g.nx() - 1; ++i) {
            const int idx = g.index(i, j);
            const double r = sys.apply_row(u, i, j) - sys.load[idx];
            const double proj = std::max(0.0, u[idx] - r / sys.stencil[idx][0]);
            worst = std::max(worst, std::fabs(u[idx] - proj));
        }
    }
    return worst;
}

namespace detail {

inline DiscreteSolution finalize(const DiscreteSystem& sys, std::vector<double> u,
                                 long iterations, const std::string& solver, double tol) {
    DiscreteSolution sol;
    sol.active.assign(sys.n(), 0);
    for (int k = 0; k < sys.n(); ++k)
        if (u[k] < sys.active_threshold) sol.active[k] = 1;
    sol.complementarity_residual = lcp_residual(sys, u);
    sol.energy_value = discrete_energy(sys, u);
    sol.u = ScalarField(sys.grid, std::move(u));
    sol.iterations = iterations;
    sol.solver = solver;
    sol.tol = tol;
    sol.active_threshold = sys.active_threshold;
    return sol;
}

}  // namespace detail

using SweepObserver = std::function<void(long sweep, double max_update, double energy)>;

/// Projected SOR, lexicographic sweep order (bit-reproducible). Iterates
/// until the largest nodal update in a sweep drops below tol.
inline DiscreteSolution solve_psor(const DiscreteSystem& sys, double tol = -1.0,
                                   double omega_relax = 1.6, long max_sweeps = 1000000,
                                   const SweepObserver& observer = {}) {
    if (tol <= 0.0) tol = 1e-10 * std::max(1.0, sys.load_inf);
    if (!(omega_relax > 0.0 && omega_relax < 2.0))
        throw std::invalid_argument("solve_psor: need 0 < omega < 2");
    const Grid& g = sys.grid;
    std::vector<double> u = detail::initial_iterate(sys);

    // Stop when the update, extrapolated by the observed linear rate, bounds
    // the remaining distance to the fixed point below tol.
    double max_update = 0.0, prev_update = -1.0;
    for (long sweep = 1; sweep <= max_sweeps; ++sweep) {
        prev_update = max_update;
        max_update = 0.0;
        for (int j = 1; j < g.ny() - 1; ++j) {
            for (int i = 1; i < g.nx() - 1; ++i) {
                const int idx = g.index(i, j);
                const auto& row = sys.stencil[idx];
                double off = 0.0;
                for (int k = 1; k < 9; ++k)
                    off += row[k] * u[g.index(i + kStencilDi[k], j + kStencilDj[k])];
                const double gs = (sys.load[idx] - off) / row[0];
                const double cand = std::max(0.0, (1.0 - omega_relax) * u[idx] + omega_relax * gs);
                max_update = std::max(max_update, std::fabs(cand - u[idx]));
                u[idx] = cand;
            }
        }
        if (observer) observer(sweep, max_update, discrete_energy(sys, u));
        if (max_update < tol) {
            double rate = prev_update > 0.0 ? max_update / prev_update : 0.0;
            rate = std::clamp(rate, 0.0, 0.99999);
            if (max_update <= tol * (1.0 - rate))
                return detail::finalize(sys, std::move(u), sweep, "psor", tol);
        }
    }
    throw SolverError("solve_psor: sweep cap reached", max_update);
}

namespace detail {

/// SSOR-preconditioned CG on the free (inactive interior) nodes. Solves
/// K d = r restricted to the free set, d = 0 elsewhere. Returns iterations.
inline long pcg_free(const DiscreteSystem& sys, const std::vector<uint8_t>& free_mask,
                     const std::vector<double>& rhs, std::vector<double>& d, double rtol,
                     long max_iter) {
    const Grid& g = sys.grid;
    const int n = sys.n();
    auto matvec = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (int j = 1; j < g.ny() - 1; ++j)
            for (int i = 1; i < g.nx() - 1; ++i) {
                const int idx = g.index(i, j);
                out[idx] = free_mask[idx] ? sys.apply_row(v, i, j) : 0.0;
            }
    };
    // SSOR apply: forward then backward sweep on the free set
    const double w = 1.5;
    auto precond = [&](const std::vector<double>& r, std::vector<double>& zv) {
        std::fill(zv.begin(), zv.end(), 0.0);
        for (int j = 1; j < g.ny() - 1; ++j)
            for (int i = 1; i < g.nx() - 1; ++i) {
                const int idx = g.index(i, j);
                if (!free_mask[idx]) continue;
                double off = 0.0;
                const auto& row = sys.stencil[idx];
                for (int k = 1; k < 9; ++k) {
                    const int nb = g.index(i + kStencilDi[k], j + kStencilDj[k]);
                    off += row[k] * zv[nb];
                }
                zv[idx] = w * (r[idx] - off) / row[0];
            }
        for (int j = g.ny() - 2; j >= 1; --j)
            for (int i = g.nx() - 2; i >= 1; --i) {
                const int idx = g.index(i, j);
                if (!free_mask[idx]) continue;
                double off = 0.0;
                const auto& row = sys.stencil[idx];
                for (int k = 1; k < 9; ++k) {
                    const int nb = g.index(i + kStencilDi[k], j + kStencilDj[k]);
                    off += row[k] * zv[nb];
                }
                zv[idx] = (1.0 - w) * zv[idx] + w * (r[idx] - off) / row[0];
            }
        for (int k = 0; k < n; ++k)
            if (!free_mask[k]) zv[k] = 0.0;
    };

    std::vector<double> r = rhs, z(n, 0.0), p(n, 0.0), q(n, 0.0);
    for (int k = 0; k < n; ++k)
        if (!free_mask[k]) r[k] = 0.0;
    double r0 = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
    if (r0 == 0.0) return 0;
    precond(r, z);
    p = z;
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    for (long it = 1; it <= max_iter; ++it) {
        matvec(p, q);
        const double pq = std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
        if (pq <= 0.0) throw SolverError("pcg: operator not positive definite on free set", r0);
        const double alpha = rz / pq;
        double rn = 0.0;
        for (int k = 0; k < n; ++k) {
            d[k] += alpha * p[k];
            r[k] -= alpha * q[k];
            rn += r[k] * r[k];
        }
        if (std::sqrt(rn) <= rtol * r0 + 1e-300) return it;
        precond(r, z);
        const double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
        for (int k = 0; k < n; ++k) p[k] = z[k] + (rz_new / rz) * p[k];
        rz = rz_new;
    }
    return max_iter;
}

}  // namespace detail

/// Primal-dual active set (semismooth Newton). Finite termination on exact
/// stabilization of the active set; inner solves by SSOR-preconditioned CG.
inline DiscreteSolution solve_active_set(const DiscreteSystem& sys, double tol = -1.0) {
    if (tol <= 0.0) tol = 1e-10 * std::max(1.0, sys.load_inf);
    const Grid& g = sys.grid;
    const int n = sys.n();
    std::vector<double> u = detail::initial_iterate(sys);
    std::vector<uint8_t> active(n, 0), prev_active(n, 0);
    long total_inner = 0;

    const long cap = std::max<long>(64, n);
    for (long outer = 1; outer <= cap; ++outer) {
        // solve the equality-constrained system on the current inactive set
        std::vector<uint8_t> free_mask(n, 0);
        for (int j = 1; j < g.ny() - 1; ++j)
            for (int i = 1; i < g.nx() - 1; ++i) {
                const int idx = g.index(i, j);
                free_mask[idx] = !active[idx];
                if (active[idx]) u[idx] = 0.0;
            }
        std::vector<double> rhs(n, 0.0);
        for (int j = 1; j < g.ny() - 1; ++j)
            for (int i = 1; i < g.nx() - 1; ++i) {
                const int idx = g.index(i, j);
                if (free_mask[idx]) rhs[idx] = sys.load[idx] - sys.apply_row(u, i, j);
            }
        std::vector<double> delta(n, 0.0);
        total_inner += detail::pcg_free(sys, free_mask, rhs, delta, 1e-13, 20L * n);
        for (int k = 0; k < n; ++k) u[k] += delta[k];

        // multiplier on the active set, then update the partition
        prev_active = active;
        bool changed = false;
        for (int j = 1; j < g.ny() - 1; ++j)
            for (int i = 1; i < g.nx() - 1; ++i) {
                const int idx = g.index(i, j);
                const double lambda = active[idx] ? sys.apply_row(u, i, j) - sys.load[idx] : 0.0;
                const uint8_t next = (u[idx] - lambda < 0.0) ? 1 : 0;
                if (next != active[idx]) changed = true;
                active[idx] = next;
            }
        if (!changed) {
            for (int k = 0; k < n; ++k)
                if (active[k] && !sys.is_boundary[k]) u[k] = 0.0;
            return detail::finalize(sys, std::move(u), outer, "activeset", tol);
        }
    }
    throw SolverError("solve_active_set: active set cycling beyond node count", 0.0);
}

// ---------------------------------------------------------------------------
// PDE / complementarity verification
// ---------------------------------------------------------------------------

struct ComplementarityReport {
    double max_inactive_residual = 0.0;        // |div(A grad u) - f| on inactive interior
    double min_active_multiplier = 0.0;        // multiplier on active nodes (want >= 0)
    double max_inactive_residual_scaled = 0.0;  // residual / diagonal, scaled like u
    double min_active_multiplier_scaled = 0.0;
    bool pass = false;
};

inline ComplementarityReport residual_check(const DiscreteSystem& sys,
                                            const DiscreteSolution& sol) {
    const Grid& g = sys.grid;
    ComplementarityReport rep;
    rep.min_active_multiplier = std::numeric_limits<double>::infinity();
    rep.min_active_multiplier_scaled = std::numeric_limits<double>::infinity();
    bool any_active = false;
    for (int j = 1; j < g.ny() - 1; ++j) {
        for (int i = 1; i < g.nx() - 1; ++i) {
            const int idx = g.index(i, j);
            const double r = sys.apply_row(sol.u.values(), i, j) - sys.load[idx];
            const double diag = sys.stencil[idx][0];
            if (sol.active[idx]) {
                any_active = true;
                rep.min_active_multiplier = std::min(rep.min_active_multiplier, r);
                rep.min_active_multiplier_scaled =
                    std::min(rep.min_active_multiplier_scaled, r / diag);
            } else {
                rep.max_inactive_residual = std::max(rep.max_inactive_residual, std::fabs(r));
                rep.max_inactive_residual_scaled =
                    std::max(rep.max_inactive_residual_scaled, std::fabs(r) / diag);
            }
        }
    }
    if (!any_active) {
        rep.min_active_multiplier = 0.0;
        rep.min_active_multiplier_scaled = 0.0;
    }
    const double thr = 50.0 * sol.tol * std::max(1.0, sys.load_inf);
    rep.pass = rep.max_inactive_residual_scaled <= thr &&
               rep.min_active_multiplier_scaled >= -thr;
    return rep;
}

/// Solution dump: the field format plus one `active` line of 0/1 flags.
inline void dump_solution(std::ostream& os, const DiscreteSolution& sol) {
    dump_field(os, sol.u);
    os << "active";
    for (uint8_t a : sol.active) os << " " << int(a);
    os << "\n";
}

inline DiscreteSolution load_solution(std::istream& is) {
    DiscreteSolution sol;
    sol.u = load_field(is);
    std::string tag;
    if (!(is >> tag) || tag != "active") throw std::runtime_error("load_solution: missing mask");
    sol.active.assign(sol.u.grid().node_count(), 0);
    for (auto& a : sol.active) {
        int v;
        if (!(is >> v)) throw std::runtime_error("load_solution: truncated mask");
        a = static_cast<uint8_t>(v);
    }
    sol.solver = "loaded";
    return sol;
}

}  // namespace oblab

#endif
