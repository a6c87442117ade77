#ifndef OBLAB_GEOMETRY_HPP
#define OBLAB_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <vector>

#include "oblab/solve.hpp"

namespace oblab {

/// Coincidence set Lambda_u and its interface Gamma_u. Boundary points are
/// the marching-squares crossings of u through the activity threshold,
/// placed on cell edges by linear interpolation of u; they are within one
/// cell of the exact interface of the mask.
struct CoincidenceGeometry {
    Grid grid;
    std::vector<uint8_t> active;
    std::vector<Vec2> boundary_points;
    std::vector<std::pair<int, int>> boundary_cells;   // lower-left node of mixed cells
    std::vector<std::vector<int>> polylines;           // indices into boundary_points
    double threshold = 0.0;

    bool polyline_closed(size_t k) const {
        return polylines[k].size() > 2 && polylines[k].front() == polylines[k].back();
    }

    /// Winding of a closed polyline around a point (0 when open).
    double winding_number(size_t k, Vec2 p) const {
        if (!polyline_closed(k)) return 0.0;
        double total = 0.0;
        for (size_t m = 0; m + 1 < polylines[k].size(); ++m) {
            const Vec2 a = boundary_points[polylines[k][m]] - p;
            const Vec2 b = boundary_points[polylines[k][m + 1]] - p;
            total += std::atan2(a.x * b.y - a.y * b.x, a.dot(b));
        }
        return total / (2.0 * M_PI);
    }

    /// Nearest boundary point; distance returned through snap_dist.
    Vec2 snap(Vec2 x0, double* snap_dist = nullptr) const {
        if (boundary_points.empty()) throw GeometryError("snap: no free boundary");
        double best = std::numeric_limits<double>::infinity();
        Vec2 bp = boundary_points.front();
        for (const Vec2& q : boundary_points) {
            const double d = (q - x0).norm();
            if (d < best) {
                best = d;
                bp = q;
            }
        }
        if (snap_dist) *snap_dist = best;
        return bp;
    }

    double distance_to_boundary(Vec2 x0) const {
        double d = 0.0;
        snap(x0, &d);
        return d;
    }
};

inline CoincidenceGeometry extract_free_boundary(const DiscreteSolution& sol) {
    const Grid& g = sol.u.grid();
    CoincidenceGeometry geo;
    geo.grid = g;
    geo.active = sol.active;
    geo.threshold = sol.active_threshold > 0 ? sol.active_threshold : 1e-12 * g.diameter_sq();

    size_t n_active = 0;
    for (uint8_t a : sol.active) n_active += a;
    if (n_active == 0) throw GeometryError("extract_free_boundary: empty coincidence set");
    if (n_active == sol.active.size())
        throw GeometryError("extract_free_boundary: coincidence set covers the grid");

    const double tau = geo.threshold;
    // unique crossing point per mixed edge, keyed by the smaller node index
    std::map<std::pair<int, int>, int> edge_point;
    auto crossing = [&](int ia, int ja, int ib, int jb) {
        const int a = g.index(ia, ja), b = g.index(ib, jb);
        const auto key = std::minmax(a, b);
        auto it = edge_point.find(key);
        if (it != edge_point.end()) return it->second;
        const double ua = sol.u.values()[a], ub = sol.u.values()[b];
        double t = (ub == ua) ? 0.5 : (tau - ua) / (ub - ua);
        t = std::clamp(t, 0.0, 1.0);
        const Vec2 pa = g.node(ia, ja), pb = g.node(ib, jb);
        geo.boundary_points.push_back(pa + (pb - pa) * t);
        edge_point.emplace(key, int(geo.boundary_points.size()) - 1);
        return int(geo.boundary_points.size()) - 1;
    };

    std::vector<std::pair<int, int>> segments;
    for (int j = 0; j + 1 < g.ny(); ++j) {
        for (int i = 0; i + 1 < g.nx(); ++i) {
            const bool a00 = sol.active[g.index(i, j)], a10 = sol.active[g.index(i + 1, j)];
            const bool a11 = sol.active[g.index(i + 1, j + 1)], a01 = sol.active[g.index(i, j + 1)];
            const int mask = a00 + 2 * a10 + 4 * a11 + 8 * a01;
            if (mask == 0 || mask == 15) continue;
            geo.boundary_cells.push_back({i, j});

            const int eb = (a00 != a10) ? crossing(i, j, i + 1, j) : -1;
            const int er = (a10 != a11) ? crossing(i + 1, j, i + 1, j + 1) : -1;
            const int et = (a01 != a11) ? crossing(i, j + 1, i + 1, j + 1) : -1;
            const int el = (a00 != a01) ? crossing(i, j, i, j + 1) : -1;

            switch (mask) {
                case 1: case 14: segments.push_back({eb, el}); break;
                case 2: case 13: segments.push_back({eb, er}); break;
                case 4: case 11: segments.push_back({er, et}); break;
                case 8: case 7:  segments.push_back({et, el}); break;
                case 3: case 12: segments.push_back({el, er}); break;
                case 6: case 9:  segments.push_back({eb, et}); break;
                case 5: case 10: {
                    // ambiguous saddle; connect through the cell center state:
                    // an active center joins the active corners diagonally,
                    // so the segments wrap the two inactive corners
                    const double uc = 0.25 * (sol.u.at(i, j) + sol.u.at(i + 1, j) +
                                              sol.u.at(i + 1, j + 1) + sol.u.at(i, j + 1));
                    const bool center_active = uc < tau;
                    const bool pairs_bl = (mask == 5) != center_active;
                    if (pairs_bl) {
                        segments.push_back({eb, el});
                        segments.push_back({er, et});
                    } else {
                        segments.push_back({eb, er});
                        segments.push_back({et, el});
                    }
                    break;
                }
                default: break;
            }
        }
    }

    // stitch segments into polylines along shared crossing points
    std::vector<std::vector<std::pair<int, int>>> adj(geo.boundary_points.size());
    for (size_t s = 0; s < segments.size(); ++s) {
        adj[segments[s].first].push_back({segments[s].second, int(s)});
        adj[segments[s].second].push_back({segments[s].first, int(s)});
    }
    std::vector<char> used(segments.size(), 0);
    auto walk = [&](int start) {
        std::vector<int> line{start};
        int cur = start;
        while (true) {
            int next = -1;
            for (auto [nb, s] : adj[cur])
                if (!used[s]) {
                    used[s] = 1;
                    next = nb;
                    break;
                }
            if (next < 0) break;
            line.push_back(next);
            cur = next;
        }
        return line;
    };
    // open lines first (endpoints of odd degree), then closed loops
    for (size_t p = 0; p < adj.size(); ++p) {
        size_t free_deg = 0;
        for (auto [nb, s] : adj[p])
            if (!used[s]) ++free_deg;
        if (free_deg == 1) geo.polylines.push_back(walk(int(p)));
    }
    for (size_t s = 0; s < segments.size(); ++s) {
        if (used[s]) continue;
        used[s] = 1;
        auto line = walk(segments[s].second);
        line.insert(line.begin(), segments[s].first);
        geo.polylines.push_back(std::move(line));
    }
    return geo;
}

// ---------------------------------------------------------------------------
// Growth and detachment constants
// ---------------------------------------------------------------------------

struct GrowthReport {
    Vec2 x0;
    std::vector<double> radii;
    std::vector<double> sup_u_over_r2;
    std::vector<double> sup_grad_over_r;
    std::vector<double> sphere_sup_over_r2;
    double C_upper = 0.0;
    double theta_lower = 0.0;
};

/// Per-radius suprema of u/r^2 over B_r, |grad u|/r over B_r and u/r^2 over
/// the sphere, sampled on grid nodes plus 256-node circles with cubic
/// interpolation (lower bounds on the true suprema).
inline GrowthReport growth_constants(const DiscreteSolution& sol, const CoincidenceGeometry& geo,
                                     Vec2 x0, const std::vector<double>& radii,
                                     int angular_nodes = 256) {
    if (radii.empty()) throw std::invalid_argument("growth_constants: no radii");
    for (size_t k = 0; k + 1 < radii.size(); ++k)
        if (!(radii[k] > 0) || radii[k] >= radii[k + 1])
            throw std::invalid_argument("growth_constants: radii must be positive ascending");
    const Grid& g = sol.u.grid();
    const double rmax = radii.back();
    if (g.boundary_distance(x0) < rmax + g.h())
        throw GeometryError("growth_constants: ball exits the domain");
    if (geo.distance_to_boundary(x0) > rmax + g.h())
        throw GeometryError("growth_constants: x0 too far from the free boundary");

    GrowthReport rep;
    rep.x0 = x0;
    rep.radii = radii;

    double all_zero_check = 0.0;
    for (double r : radii) {
        double sup_u = 0.0, sup_grad = 0.0, sphere = 0.0;
        // grid nodes inside the ball
        const int i0 = std::max(0, int((x0.x - r - g.origin().x) / g.h()));
        const int i1 = std::min(g.nx() - 1, int((x0.x + r - g.origin().x) / g.h()) + 1);
        const int j0 = std::max(0, int((x0.y - r - g.origin().y) / g.h()));
        const int j1 = std::min(g.ny() - 1, int((x0.y + r - g.origin().y) / g.h()) + 1);
        for (int j = j0; j <= j1; ++j) {
            for (int i = i0; i <= i1; ++i) {
                const Vec2 p = g.node(i, j);
                if ((p - x0).norm() > r) continue;
                sup_u = std::max(sup_u, sol.u.at(i, j));
                if (g.boundary_distance(p) >= g.h()) {
                    const Vec2 gr = gradient(sol.u, p);
                    sup_grad = std::max(sup_grad, gr.norm());
                }
            }
        }
        // circle samples (cubic interpolation)
        for (int k = 0; k < angular_nodes; ++k) {
            const double th = 2.0 * M_PI * k / angular_nodes;
            const Vec2 p{x0.x + r * std::cos(th), x0.y + r * std::sin(th)};
            const double v = interpolate(sol.u, p);
            sphere = std::max(sphere, v);
            sup_u = std::max(sup_u, v);
            if (g.boundary_distance(p) >= g.h())
                sup_grad = std::max(sup_grad, gradient(sol.u, p).norm());
        }
        rep.sup_u_over_r2.push_back(sup_u / (r * r));
        rep.sup_grad_over_r.push_back(sup_grad / r);
        rep.sphere_sup_over_r2.push_back(sphere / (r * r));
        all_zero_check = std::max(all_zero_check, sup_u);
    }
    if (all_zero_check <= geo.threshold)
        throw GeometryError("growth_constants: u vanishes on the largest ball");

    rep.theta_lower = *std::min_element(rep.sphere_sup_over_r2.begin(),
                                        rep.sphere_sup_over_r2.end());
    for (size_t k = 0; k < radii.size(); ++k)
        rep.C_upper = std::max({rep.C_upper, rep.sup_u_over_r2[k], rep.sup_grad_over_r[k]});
    return rep;
}

inline void write_growth_csv(std::ostream& os, const GrowthReport& rep) {
    os << "x0x,x0y,r,sup_u_r2,sup_grad_r,sphere_sup_r2\n";
    os.precision(9);
    for (size_t k = 0; k < rep.radii.size(); ++k)
        os << rep.x0.x << "," << rep.x0.y << "," << rep.radii[k] << "," << rep.sup_u_over_r2[k]
           << "," << rep.sup_grad_over_r[k] << "," << rep.sphere_sup_over_r2[k] << "\n";
}

}  // namespace oblab

#endif
