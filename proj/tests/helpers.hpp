#ifndef OBLAB_TEST_HELPERS_HPP
#define OBLAB_TEST_HELPERS_HPP

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "oblab/field.hpp"

// Independent oracles used to derive expected values. These deliberately use
// different algorithms than the library (midpoint sums, dense enumeration).
namespace oracle {

/// Midpoint-rule integral of f over the disc B_r(c), on an m x m lattice.
inline double disc_integral(const std::function<double(oblab::Vec2)>& f, oblab::Vec2 c,
                            double r, int m = 2000) {
    const double cell = 2.0 * r / m;
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const oblab::Vec2 p{c.x - r + (i + 0.5) * cell, c.y - r + (j + 0.5) * cell};
            if ((p - c).norm_sq() <= r * r) acc += f(p);
        }
    }
    return acc * cell * cell;
}

/// Midpoint-rule circle integral (independent of the trapezoid rule in the
/// library only through node placement; adequate as a cross-check).
inline double circle_integral(const std::function<double(oblab::Vec2)>& f, oblab::Vec2 c,
                              double r, int m = 20001) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        const double th = (i + 0.5) * 2.0 * M_PI / m;
        acc += f({c.x + r * std::cos(th), c.y + r * std::sin(th)});
    }
    return acc * 2.0 * M_PI * r / m;
}

/// Gaussian elimination with partial pivoting (row-major m x m).
inline std::vector<double> dense_solve(std::vector<double> a, std::vector<double> rhs, int m) {
    for (int c = 0; c < m; ++c) {
        int piv = c;
        for (int r2 = c + 1; r2 < m; ++r2)
            if (std::fabs(a[r2 * m + c]) > std::fabs(a[piv * m + c])) piv = r2;
        for (int k = 0; k < m; ++k) std::swap(a[c * m + k], a[piv * m + k]);
        std::swap(rhs[c], rhs[piv]);
        for (int r2 = c + 1; r2 < m; ++r2) {
            const double fac = a[r2 * m + c] / a[c * m + c];
            for (int k = c; k < m; ++k) a[r2 * m + k] -= fac * a[c * m + k];
            rhs[r2] -= fac * rhs[c];
        }
    }
    std::vector<double> x(m);
    for (int r2 = m - 1; r2 >= 0; --r2) {
        double acc = rhs[r2];
        for (int k = r2 + 1; k < m; ++k) acc -= a[r2 * m + k] * x[k];
        x[r2] = acc / a[r2 * m + r2];
    }
    return x;
}

/// Dense LCP brute force: enumerate all active sets of a small SPD system
/// K u = b, u >= 0, and return the complementarity solution.
/// K row-major n x n.
inline std::vector<double> lcp_enumerate(const std::vector<double>& K,
                                         const std::vector<double>& b, int n) {
    for (int mask = 0; mask < (1 << n); ++mask) {
        std::vector<int> inact;
        for (int i = 0; i < n; ++i)
            if (!((mask >> i) & 1)) inact.push_back(i);
        std::vector<double> u(n, 0.0);
        if (!inact.empty()) {
            const int m = int(inact.size());
            std::vector<double> sub(m * m), rhs(m);
            for (int r2 = 0; r2 < m; ++r2) {
                rhs[r2] = b[inact[r2]];
                for (int c = 0; c < m; ++c) sub[r2 * m + c] = K[inact[r2] * n + inact[c]];
            }
            const auto x = dense_solve(sub, rhs, m);
            for (int r2 = 0; r2 < m; ++r2) u[inact[r2]] = x[r2];
        }
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
            double lam = -b[i];
            for (int k = 0; k < n; ++k) lam += K[i * n + k] * u[k];
            if (u[i] < -1e-11) ok = false;
            if ((mask >> i) & 1) {
                if (lam < -1e-11) ok = false;
            } else {
                if (std::fabs(lam) > 1e-9) ok = false;
            }
        }
        if (ok) return u;
    }
    throw std::runtime_error("lcp_enumerate: no complementarity solution found");
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = int(x.size());
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle

namespace testutil {

inline std::mt19937& rng() {
    static std::mt19937 gen(20240817u);
    return gen;
}

inline double urand(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng());
}

inline double half_space(oblab::Vec2 p) {
    const double t = std::max(p.x, 0.0);
    return 0.5 * t * t;
}

inline double radial_quadratic(oblab::Vec2 p) { return 0.25 * p.norm_sq(); }

}  // namespace testutil

#endif
