#ifndef OBLAB_FIELD_HPP
#define OBLAB_FIELD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oblab/errors.hpp"
#include "oblab/vec.hpp"

namespace oblab {

/// Uniform node-centered grid on an axis-aligned box. Spacing is required
/// to be equal on both axes; all fields below are immutable after
/// construction and safe to share across threads.
class Grid {
public:
    Grid() = default;
    Grid(Vec2 origin, Vec2 extent, int nx, int ny)
        : origin_(origin), extent_(extent), nx_(nx), ny_(ny) {
        if (nx < 3 || ny < 3)
            throw std::invalid_argument("Grid: need at least 3 nodes per axis");
        if (extent.x <= 0.0 || extent.y <= 0.0)
            throw std::invalid_argument("Grid: extent must be positive");
        const double hx = extent.x / (nx - 1);
        const double hy = extent.y / (ny - 1);
        if (std::fabs(hx - hy) > 1e-12 * std::max(hx, hy))
            throw std::invalid_argument("Grid: spacing must be equal on both axes");
        h_ = hx;
    }

    /// Square grid with n nodes per axis.
    static Grid square(Vec2 origin, double side, int n) {
        return Grid(origin, {side, side}, n, n);
    }

    Vec2 origin() const { return origin_; }
    Vec2 extent() const { return extent_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double h() const { return h_; }
    int node_count() const { return nx_ * ny_; }
    double diameter_sq() const { return extent_.norm_sq(); }

    int index(int i, int j) const { return j * nx_ + i; }
    Vec2 node(int i, int j) const { return {origin_.x + i * h_, origin_.y + j * h_}; }
    bool boundary_node(int i, int j) const {
        return i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1;
    }

    bool contains(Vec2 p, double margin = 0.0) const {
        return p.x >= origin_.x + margin && p.x <= origin_.x + extent_.x - margin &&
               p.y >= origin_.y + margin && p.y <= origin_.y + extent_.y - margin;
    }

    /// Distance from p to the boundary of the box (negative outside).
    double boundary_distance(Vec2 p) const {
        const double dx = std::min(p.x - origin_.x, origin_.x + extent_.x - p.x);
        const double dy = std::min(p.y - origin_.y, origin_.y + extent_.y - p.y);
        return std::min(dx, dy);
    }

    bool operator==(const Grid& o) const {
        return nx_ == o.nx_ && ny_ == o.ny_ && origin_.x == o.origin_.x &&
               origin_.y == o.origin_.y && extent_.x == o.extent_.x && extent_.y == o.extent_.y;
    }

private:
    Vec2 origin_{0, 0};
    Vec2 extent_{1, 1};
    int nx_ = 0, ny_ = 0;
    double h_ = 0.0;
};

enum class InterpOrder { Linear, Cubic };

namespace detail {

/// Lagrange weights for 4 consecutive nodes, local coordinate t in node units
/// measured from the first stencil node. Exact on cubic polynomials.
inline std::array<double, 4> lagrange4(double t) {
    return {-(t - 1) * (t - 2) * (t - 3) / 6.0, t * (t - 2) * (t - 3) / 2.0,
            -t * (t - 1) * (t - 3) / 2.0, t * (t - 1) * (t - 2) / 6.0};
}

struct Stencil1D {
    int base;
    double t;  // offset from node `base` in units of h
};

inline Stencil1D cubic_stencil(double s, int n) {
    int base = static_cast<int>(std::floor(s)) - 1;
    base = std::clamp(base, 0, n - 4);
    return {base, s - base};
}

}  // namespace detail

/// One real value per grid node.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(Grid grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (static_cast<int>(values_.size()) != grid_.node_count())
            throw std::invalid_argument("ScalarField: value count mismatch");
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("ScalarField: non-finite value");
    }
    ScalarField(Grid grid, double fill)
        : grid_(grid), values_(grid.node_count(), fill) {}

    /// Sample a function at every node.
    static ScalarField sample(const Grid& grid, const std::function<double(Vec2)>& f) {
        std::vector<double> v(grid.node_count());
        for (int j = 0; j < grid.ny(); ++j)
            for (int i = 0; i < grid.nx(); ++i) v[grid.index(i, j)] = f(grid.node(i, j));
        return ScalarField(grid, std::move(v));
    }

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double at(int i, int j) const { return values_[grid_.index(i, j)]; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::fabs(v));
        return m;
    }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }

private:
    Grid grid_;
    std::vector<double> values_;
};

/// One symmetric 2x2 matrix per grid node.
class MatrixField {
public:
    MatrixField() = default;
    MatrixField(Grid grid, std::vector<SymMat2> values)
        : grid_(grid), values_(std::move(values)) {
        if (static_cast<int>(values_.size()) != grid_.node_count())
            throw std::invalid_argument("MatrixField: value count mismatch");
        for (const auto& m : values_)
            if (!std::isfinite(m.a11) || !std::isfinite(m.a12) || !std::isfinite(m.a22))
                throw std::invalid_argument("MatrixField: non-finite entry");
    }

    static MatrixField sample(const Grid& grid, const std::function<SymMat2(Vec2)>& f) {
        std::vector<SymMat2> v(grid.node_count());
        for (int j = 0; j < grid.ny(); ++j)
            for (int i = 0; i < grid.nx(); ++i) v[grid.index(i, j)] = f(grid.node(i, j));
        return MatrixField(grid, std::move(v));
    }

    const Grid& grid() const { return grid_; }
    const std::vector<SymMat2>& values() const { return values_; }
    const SymMat2& at(int i, int j) const { return values_[grid_.index(i, j)]; }

private:
    Grid grid_;
    std::vector<SymMat2> values_;
};

/// Interpolate a scalar field at an arbitrary point. Linear reproduces
/// bilinear polynomials exactly; cubic (tensor 4-point Lagrange, stencil
/// shifted one-sided near the boundary) reproduces bicubics exactly and is
/// continuous across cells.
inline double interpolate(const ScalarField& field, Vec2 p, InterpOrder order = InterpOrder::Cubic) {
    const Grid& g = field.grid();
    const double slack = 1e-12 * std::max(g.extent().x, g.extent().y);
    if (!g.contains(p, -slack))
        throw OutOfBoundsError("interpolate: point outside grid bounding box");
    const double sx = std::clamp((p.x - g.origin().x) / g.h(), 0.0, double(g.nx() - 1));
    const double sy = std::clamp((p.y - g.origin().y) / g.h(), 0.0, double(g.ny() - 1));

    if (order == InterpOrder::Linear) {
        const int i = std::min(static_cast<int>(sx), g.nx() - 2);
        const int j = std::min(static_cast<int>(sy), g.ny() - 2);
        const double tx = sx - i, ty = sy - j;
        return (1 - tx) * (1 - ty) * field.at(i, j) + tx * (1 - ty) * field.at(i + 1, j) +
               (1 - tx) * ty * field.at(i, j + 1) + tx * ty * field.at(i + 1, j + 1);
    }

    const auto stx = detail::cubic_stencil(sx, g.nx());
    const auto sty = detail::cubic_stencil(sy, g.ny());
    const auto wx = detail::lagrange4(stx.t);
    const auto wy = detail::lagrange4(sty.t);
    double acc = 0.0;
    for (int b = 0; b < 4; ++b) {
        double row = 0.0;
        for (int a = 0; a < 4; ++a) row += wx[a] * field.at(stx.base + a, sty.base + b);
        acc += wy[b] * row;
    }
    return acc;
}

/// Gradient of the cubic interpolant by centered differences with step h/2.
/// Second-order accurate on smooth fields; exact on quadratic polynomials.
inline Vec2 gradient(const ScalarField& field, Vec2 p) {
    const Grid& g = field.grid();
    if (g.boundary_distance(p) < g.h() * (1.0 - 1e-12))
        throw OutOfBoundsError("gradient: point closer than h to the domain boundary");
    const double d = 0.5 * g.h();
    const double dx = interpolate(field, {p.x + d, p.y}) - interpolate(field, {p.x - d, p.y});
    const double dy = interpolate(field, {p.x, p.y + d}) - interpolate(field, {p.x, p.y - d});
    return {dx / (2 * d), dy / (2 * d)};
}

namespace detail {

/// Nodal partial derivative of a per-node quantity: centered in the
/// interior, second-order one-sided at boundary nodes.
template <typename Getter>
double node_derivative(const Grid& g, Getter&& value, int i, int j, int axis) {
    const double h = g.h();
    const int n = axis == 0 ? g.nx() : g.ny();
    const int k = axis == 0 ? i : j;
    auto at = [&](int m) {
        return axis == 0 ? value(m, j) : value(i, m);
    };
    if (k > 0 && k < n - 1) return (at(k + 1) - at(k - 1)) / (2 * h);
    if (k == 0) return (-3 * at(0) + 4 * at(1) - at(2)) / (2 * h);
    return (3 * at(n - 1) - 4 * at(n - 2) + at(n - 3)) / (2 * h);
}

}  // namespace detail

/// Column-wise divergence of a matrix field: result[j] holds
/// sum_i d_i a_ij at every node.
inline std::array<ScalarField, 2> divergence_of_matrix_columns(const MatrixField& field) {
    const Grid& g = field.grid();
    std::vector<double> d1(g.node_count()), d2(g.node_count());
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            auto a11 = [&](int a, int b) { return field.at(a, b).a11; };
            auto a12 = [&](int a, int b) { return field.at(a, b).a12; };
            auto a22 = [&](int a, int b) { return field.at(a, b).a22; };
            d1[g.index(i, j)] = detail::node_derivative(g, a11, i, j, 0) +
                                detail::node_derivative(g, a12, i, j, 1);
            d2[g.index(i, j)] = detail::node_derivative(g, a12, i, j, 0) +
                                detail::node_derivative(g, a22, i, j, 1);
        }
    }
    return {ScalarField(g, std::move(d1)), ScalarField(g, std::move(d2))};
}

/// Plain-text field dump: header `n h nx ny ox oy ex ey`, then one grid row
/// of node values per line, row-major.
inline void dump_field(std::ostream& os, const ScalarField& field) {
    const Grid& g = field.grid();
    os.precision(17);
    os << 2 << " " << g.h() << " " << g.nx() << " " << g.ny() << " " << g.origin().x << " "
       << g.origin().y << " " << g.extent().x << " " << g.extent().y << "\n";
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) os << (i ? " " : "") << field.at(i, j);
        os << "\n";
    }
}

inline ScalarField load_field(std::istream& is) {
    int n, nx, ny;
    double h, ox, oy, ex, ey;
    if (!(is >> n >> h >> nx >> ny >> ox >> oy >> ex >> ey) || n != 2)
        throw std::runtime_error("load_field: bad header");
    Grid g({ox, oy}, {ex, ey}, nx, ny);
    std::vector<double> v(g.node_count());
    for (double& x : v)
        if (!(is >> x)) throw std::runtime_error("load_field: truncated values");
    return ScalarField(g, std::move(v));
}

}  // namespace oblab

#endif
