#ifndef OBLAB_VEC_HPP
#define OBLAB_VEC_HPP

#include <array>
#include <cmath>
#include <ostream>

namespace oblab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }

    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
    double norm_sq() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

inline std::ostream& operator<<(std::ostream& os, Vec2 v) {
    return os << "(" << v.x << ", " << v.y << ")";
}

/// Symmetric 2x2 matrix stored as (a11, a12, a22); symmetry holds by
/// representation, so fields of these are exactly symmetric at every node.
struct SymMat2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a22 = 0.0;

    SymMat2() = default;
    SymMat2(double m11, double m12, double m22) : a11(m11), a12(m12), a22(m22) {}

    static SymMat2 identity() { return {1.0, 0.0, 1.0}; }
    static SymMat2 diag(double d1, double d2) { return {d1, 0.0, d2}; }

    Vec2 apply(Vec2 v) const { return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y}; }
    double quad(Vec2 v) const { return v.dot(apply(v)); }

    double trace() const { return a11 + a22; }
    double det() const { return a11 * a22 - a12 * a12; }

    /// Eigenvalues, ascending.
    std::array<double, 2> eigenvalues() const {
        const double mean = 0.5 * (a11 + a22);
        const double disc = std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + a12 * a12);
        return {mean - disc, mean + disc};
    }

    bool spd(double tol = 0.0) const { return eigenvalues()[0] > tol; }

    SymMat2 operator+(SymMat2 o) const { return {a11 + o.a11, a12 + o.a12, a22 + o.a22}; }
    SymMat2 operator-(SymMat2 o) const { return {a11 - o.a11, a12 - o.a12, a22 - o.a22}; }
    SymMat2 operator*(double s) const { return {a11 * s, a12 * s, a22 * s}; }

    /// M * N * M for symmetric M, N (congruence by a symmetric matrix);
    /// the result is symmetric.
    SymMat2 congruence(SymMat2 n) const {
        // rows of M*N
        const double b11 = a11 * n.a11 + a12 * n.a12;
        const double b12 = a11 * n.a12 + a12 * n.a22;
        const double b21 = a12 * n.a11 + a22 * n.a12;
        const double b22 = a12 * n.a12 + a22 * n.a22;
        return {b11 * a11 + b12 * a12, b11 * a12 + b12 * a22, b21 * a12 + b22 * a22};
    }

    SymMat2 inverse() const {
        const double d = det();
        return {a22 / d, -a12 / d, a11 / d};
    }

    double max_abs() const {
        return std::max({std::fabs(a11), std::fabs(a12), std::fabs(a22)});
    }

    /// Spectral norm (largest |eigenvalue|).
    double norm2() const {
        auto ev = eigenvalues();
        return std::max(std::fabs(ev[0]), std::fabs(ev[1]));
    }
};

inline SymMat2 operator*(double s, SymMat2 m) { return m * s; }

}  // namespace oblab

#endif
