#ifndef OBLAB_NORMALIZE_HPP
#define OBLAB_NORMALIZE_HPP

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "oblab/solve.hpp"

namespace oblab {

/// Square root of an SPD 2x2 matrix, closed form via Cayley-Hamilton:
/// S = (M + sqrt(det M) Id) / sqrt(tr M + 2 sqrt(det M)).
inline SymMat2 spd_sqrt(const SymMat2& m) {
    if (!(m.det() > 0.0) || !(m.trace() > 0.0) || !m.spd())
        throw std::domain_error("spd_sqrt: matrix is not symmetric positive definite");
    const double s = std::sqrt(m.det());
    const double scale = 1.0 / std::sqrt(m.trace() + 2.0 * s);
    return SymMat2(m.a11 + s, m.a12, m.a22 + s) * scale;
}

/// Frame at a free-boundary point x0: the affine substitution
/// x -> x0 + L x with L = f(x0)^{-1/2} A(x0)^{1/2}, together with evaluators
/// for u_L, its gradient, the transformed coefficients C_{x0}, the ratio
/// f_L / f(x0) and the column divergences of C. C(0) = Id and
/// f_ratio(0) = 1 hold by construction. All evaluators are pure.
struct NormalizedFrame {
    Vec2 x0;
    SymMat2 L, L_inv;
    double L_norm = 1.0;  // spectral norm of L
    SymMat2 A_x0;
    double f_x0 = 1.0;
    double r_max = 0.0;
    double p = 4.0;
    int n = 2;
    double grid_h = 0.0;  // 0 for closed-form frames (no resolvable-scale floor)
    double active_threshold = 0.0;
    bool analytic_coefficients = false;
    Modulus omega_f;

    std::function<double(Vec2)> uL;
    std::function<Vec2(Vec2)> grad_uL;
    std::function<SymMat2(Vec2)> C;
    std::function<double(Vec2)> f_ratio;
    std::function<Vec2(Vec2)> divC;

    double beta() const { return 1.0 - double(n) / p; }
    Vec2 map(Vec2 x) const { return x0 + L.apply(x); }
    bool positive(Vec2 x) const { return uL(x) > active_threshold; }

    /// omega(r) = omega_f(r) + r^{1 - n/p}, the modulus of Theorem-grade
    /// quasi-monotonicity corrections.
    double omega(double r) const { return omega_f(r) + std::pow(r, beta()); }
};

/// Build the frame from a solved problem. A(x0) comes from the coefficient
/// family (exact); f(x0) and u are cubic-interpolated grid fields.
inline NormalizedFrame build_frame(const ObstacleProblem& pr, const DiscreteSolution& sol,
                                   Vec2 x0) {
    const Grid& g = pr.grid;
    NormalizedFrame fr;
    fr.x0 = x0;
    fr.p = pr.p;
    fr.omega_f = pr.omega_f;
    fr.active_threshold =
        sol.active_threshold > 0 ? sol.active_threshold : 1e-12 * g.diameter_sq();

    fr.A_x0 = pr.coeff.at(x0);
    fr.analytic_coefficients = true;
    fr.f_x0 = interpolate(pr.f, x0);
    if (!(fr.f_x0 > 0.0))
        throw HypothesisError("build_frame: f(x0) <= 0 at the requested point");
    if (!fr.A_x0.spd()) throw HypothesisError("build_frame: A(x0) is not SPD");

    const SymMat2 root_a = spd_sqrt(fr.A_x0);
    fr.L = root_a * (1.0 / std::sqrt(fr.f_x0));
    fr.L_inv = fr.L.inverse();
    fr.L_norm = fr.L.norm2();
    fr.grid_h = g.h();
    fr.r_max = (g.boundary_distance(x0) - g.h()) / fr.L_norm;
    if (fr.r_max < 4.0 * g.h())
        throw GeometryError("build_frame: x0 too close to the domain boundary (r_max < 4h)");

    const SymMat2 root_a_inv = root_a.inverse();
    // copies shared by the closures; fields themselves are immutable
    const ScalarField* u_field = &sol.u;
    const ScalarField* f_field = &pr.f;
    const CoefficientFamily coeff = pr.coeff;
    const SymMat2 L = fr.L;
    const Vec2 base = fr.x0;
    const double f0 = fr.f_x0;

    fr.uL = [u_field, base, L](Vec2 x) { return interpolate(*u_field, base + L.apply(x)); };
    fr.grad_uL = [u_field, base, L](Vec2 x) {
        return L.apply(gradient(*u_field, base + L.apply(x)));
    };
    fr.C = [coeff, base, L, root_a_inv](Vec2 x) {
        return root_a_inv.congruence(coeff.at(base + L.apply(x)));
    };
    fr.f_ratio = [f_field, base, L, f0](Vec2 x) {
        return interpolate(*f_field, base + L.apply(x)) / f0;
    };
    fr.divC = [coeff, base, L, root_a_inv](Vec2 x) {
        const Vec2 y = base + L.apply(x);
        // d_k C(x) = A(x0)^{-1/2} (dA at y in direction L e_k) A(x0)^{-1/2}
        const SymMat2 dax = coeff.deriv(y, 0), day = coeff.deriv(y, 1);
        const Vec2 l1{L.a11, L.a12}, l2{L.a12, L.a22};  // L e_1, L e_2
        const SymMat2 d1 = root_a_inv.congruence(dax * l1.x + day * l1.y);
        const SymMat2 d2 = root_a_inv.congruence(dax * l2.x + day * l2.y);
        return Vec2{d1.a11 + d2.a12, d1.a12 + d2.a22};
    };
    return fr;
}

/// Frame over closed-form fields; the reference profiles enter the test and
/// acceptance harnesses through this constructor.
inline NormalizedFrame analytic_frame(Vec2 x0, std::function<double(Vec2)> u,
                                      std::function<Vec2(Vec2)> grad_u, double r_max,
                                      double p = 4.0,
                                      std::function<SymMat2(Vec2)> C = nullptr,
                                      std::function<double(Vec2)> f_ratio = nullptr,
                                      std::function<Vec2(Vec2)> divC = nullptr) {
    NormalizedFrame fr;
    fr.x0 = x0;
    fr.L = SymMat2::identity();
    fr.L_inv = SymMat2::identity();
    fr.L_norm = 1.0;
    fr.A_x0 = SymMat2::identity();
    fr.f_x0 = 1.0;
    fr.r_max = r_max;
    fr.p = p;
    fr.active_threshold = 0.0;
    fr.analytic_coefficients = true;
    fr.uL = std::move(u);
    fr.grad_uL = std::move(grad_u);
    fr.C = C ? std::move(C) : [](Vec2) { return SymMat2::identity(); };
    fr.f_ratio = f_ratio ? std::move(f_ratio) : [](Vec2) { return 1.0; };
    fr.divC = divC ? std::move(divC) : [](Vec2) { return Vec2{0, 0}; };
    return fr;
}

// ---------------------------------------------------------------------------
// Residual of the normalized PDE  Delta u_L = 1 + f_{x0}
// ---------------------------------------------------------------------------

struct ResidualSample {
    std::vector<Vec2> points;
    std::vector<double> values;                     // f_{x0}
    std::vector<std::array<double, 3>> breakdown;   // ratio, stencil, divergence terms
    std::vector<double> consistency;                // |Delta u_L - 1 - f_{x0}|
    std::vector<uint8_t> skipped;                   // in the coincidence set

    double max_abs_value() const {
        double m = 0.0;
        for (size_t k = 0; k < values.size(); ++k)
            if (!skipped[k]) m = std::max(m, std::fabs(values[k]));
        return m;
    }
};

/// Assemble f_{x0} = (f_L/f(x0)) chi_{u_L>0} - 1 - (c_ij - d_ij) D^2_ij u_L
/// - divC^i d_i u_L from interpolated second differences (step = one grid
/// cell in frame coordinates). Points inside the coincidence set are skipped
/// with a flag.
inline ResidualSample residual_field(const NormalizedFrame& fr, const std::vector<Vec2>& points,
                                     double step) {
    ResidualSample out;
    for (const Vec2 x : points) {
        if (x.norm() + step * 2.0 > fr.r_max)
            throw GeometryError("residual_field: point outside the resolvable ball");
        out.points.push_back(x);
        if (!fr.positive(x)) {
            out.values.push_back(0.0);
            out.breakdown.push_back({0.0, 0.0, 0.0});
            out.consistency.push_back(0.0);
            out.skipped.push_back(1);
            continue;
        }
        const double d = step;
        const double c0 = fr.uL(x);
        const double cxp = fr.uL({x.x + d, x.y}), cxm = fr.uL({x.x - d, x.y});
        const double cyp = fr.uL({x.x, x.y + d}), cym = fr.uL({x.x, x.y - d});
        const double dxx = (cxp - 2 * c0 + cxm) / (d * d);
        const double dyy = (cyp - 2 * c0 + cym) / (d * d);
        const double dxy = (fr.uL({x.x + d, x.y + d}) - fr.uL({x.x + d, x.y - d}) -
                            fr.uL({x.x - d, x.y + d}) + fr.uL({x.x - d, x.y - d})) /
                           (4 * d * d);
        const SymMat2 c = fr.C(x);
        const double ratio_term = fr.f_ratio(x) - 1.0;
        const double stencil_term =
            -((c.a11 - 1.0) * dxx + 2.0 * c.a12 * dxy + (c.a22 - 1.0) * dyy);
        const double div_term = -fr.divC(x).dot(fr.grad_uL(x));
        const double value = ratio_term + stencil_term + div_term;
        out.values.push_back(value);
        out.breakdown.push_back({ratio_term, stencil_term, div_term});
        out.consistency.push_back(std::fabs(dxx + dyy - 1.0 - value));
        out.skipped.push_back(0);
    }
    return out;
}

}  // namespace oblab

#endif
