#ifndef OBLAB_MONOTONE_HPP
#define OBLAB_MONOTONE_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "oblab/normalize.hpp"

namespace oblab {

struct Quad {
    double value = 0.0;
    double error = 0.0;  // node-doubling estimate
};

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
inline void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
    x.resize(m);
    w.resize(m);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (m + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = m * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / pp;
            t -= dt;
            if (std::fabs(dt) < 1e-15) break;
        }
        x[i] = -t;
        x[m - 1 - i] = t;
        w[i] = w[m - 1 - i] = 2.0 / ((1.0 - t * t) * pp * pp);
    }
}

template <typename F>
double circle_trapezoid(F&& f, Vec2 x0, double r, int nodes) {
    double acc = 0.0;
    for (int k = 0; k < nodes; ++k) {
        const double th = 2.0 * M_PI * k / nodes;
        acc += f(Vec2{x0.x + r * std::cos(th), x0.y + r * std::sin(th)});
    }
    return acc * 2.0 * M_PI * r / nodes;
}

template <typename F>
double ball_gauss(F&& f, Vec2 x0, double r, int angular, int radial) {
    std::vector<double> gx, gw;
    gauss_legendre(radial, gx, gw);
    double acc = 0.0;
    for (int q = 0; q < radial; ++q) {
        const double rho = 0.5 * r * (gx[q] + 1.0);
        acc += 0.5 * r * gw[q] * circle_trapezoid(f, x0, rho, angular);
    }
    return acc;
}

}  // namespace detail

/// Integral over the circle of radius r: trapezoid rule, spectrally accurate
/// for smooth periodic integrands. The error estimate is the node-doubling
/// difference; the returned value uses the doubled count.
template <typename F>
Quad sphere_integral(F&& f, Vec2 x0, double r, int nodes = 256) {
    if (nodes < 16) throw std::invalid_argument("sphere_integral: need nodes >= 16");
    const double coarse = detail::circle_trapezoid(f, x0, r, nodes);
    const double fine = detail::circle_trapezoid(f, x0, r, 2 * nodes);
    return {fine, std::fabs(fine - coarse)};
}

/// Integral over the ball of radius r: Gauss-Legendre in the radius layered
/// over circle trapezoids. Error from doubling both directions.
template <typename F>
Quad ball_integral(F&& f, Vec2 x0, double r, int nodes = 256) {
    if (nodes < 16) throw std::invalid_argument("ball_integral: need nodes >= 16");
    const int radial = std::max(16, nodes / 4);
    const double coarse = detail::ball_gauss(f, x0, r, nodes, radial);
    const double fine = detail::ball_gauss(f, x0, r, 2 * nodes, 2 * radial);
    return {fine, std::fabs(fine - coarse)};
}

// ---------------------------------------------------------------------------
// Weiss energy and its right-hand side
// ---------------------------------------------------------------------------

namespace detail {

inline void check_radius(const NormalizedFrame& fr, double r) {
    if (!(r > 0.0) || r > fr.r_max)
        throw GeometryError("radius outside (0, r_max]");
    if (fr.grid_h > 0.0 && r < 4.0 * fr.grid_h / fr.L_norm)
        throw UnderresolvedError("radius below the resolvable scale 4h/|L|");
}

}  // namespace detail

/// Phi_u(x0, r) = r^{-(n+2)} int_{B_r} (|grad u_L|^2 + 2 u_L)
///             - 2 r^{-(n+3)} int_{dB_r} u_L^2.
inline Quad weiss_energy(const NormalizedFrame& fr, double r, int nodes = 256) {
    detail::check_radius(fr, r);
    const int n = fr.n;
    auto bulk_f = [&](Vec2 x) { return fr.grad_uL(x).norm_sq() + 2.0 * fr.uL(x); };
    auto sph_f = [&](Vec2 x) {
        const double v = fr.uL(x);
        return v * v;
    };
    const Quad bulk = ball_integral(bulk_f, {0, 0}, r, nodes);
    const Quad sph = sphere_integral(sph_f, {0, 0}, r, nodes);
    const double rn2 = std::pow(r, n + 2), rn3 = std::pow(r, n + 3);
    return {bulk.value / rn2 - 2.0 * sph.value / rn3,
            bulk.error / rn2 + 2.0 * sph.error / rn3};
}

/// The Weiss derivative lower bound
/// 2 r^{-(n+4)} int_{dB_r} (<grad u_L, x> - 2 u_L)^2; vanishes on exactly
/// 2-homogeneous fields by the Euler relation.
inline Quad weiss_rhs(const NormalizedFrame& fr, double r, int nodes = 256) {
    detail::check_radius(fr, r);
    auto f = [&](Vec2 x) {
        const double e = fr.grad_uL(x).dot(x) - 2.0 * fr.uL(x);
        return e * e;
    };
    const Quad sph = sphere_integral(f, {0, 0}, r, nodes);
    const double rn4 = std::pow(r, fr.n + 4);
    return {2.0 * sph.value / rn4, 2.0 * sph.error / rn4};
}

/// Monneau quantity r^{-(n+3)} int_{dB_r} (u_L - v)^2 with
/// v = 1/2 <Q x, x>, tr Q = 1, Q PSD (so Delta v = 1).
inline Quad monneau_value(const NormalizedFrame& fr, const SymMat2& Q, double r,
                          int nodes = 256) {
    if (std::fabs(Q.trace() - 1.0) > 1e-10)
        throw ProfileError("monneau_value: profile trace must be 1");
    if (Q.eigenvalues()[0] < -1e-10)
        throw ProfileError("monneau_value: profile must be positive semidefinite");
    detail::check_radius(fr, r);
    auto f = [&](Vec2 x) {
        const double d = fr.uL(x) - 0.5 * Q.quad(x);
        return d * d;
    };
    const Quad sph = sphere_integral(f, {0, 0}, r, nodes);
    const double rn3 = std::pow(r, fr.n + 3);
    return {sph.value / rn3, sph.error / rn3};
}

// ---------------------------------------------------------------------------
// Energy curves
// ---------------------------------------------------------------------------

struct EnergyCurve {
    enum class Kind { Weiss, Monneau };
    Kind kind = Kind::Weiss;
    Vec2 x0;
    std::vector<double> radii;       // strictly increasing
    std::vector<double> values;
    std::vector<double> quad_error;
    std::vector<double> rhs;         // Weiss: the derivative lower bound at r
    std::optional<SymMat2> profile_Q;
};

inline void validate_radii(const std::vector<double>& radii) {
    if (radii.empty()) throw std::invalid_argument("radii must be nonempty");
    for (size_t k = 0; k + 1 < radii.size(); ++k)
        if (!(radii[k] > 0) || radii[k] >= radii[k + 1])
            throw std::invalid_argument("radii must be positive strictly increasing");
}

/// Geometric radius ladder with at least `per_octave` samples per factor of
/// two (the integrated quasi-monotonicity checks compare consecutive pairs).
inline std::vector<double> geometric_radii(double rmin, double rmax, int count) {
    if (!(rmin > 0) || !(rmax > rmin) || count < 2)
        throw std::invalid_argument("geometric_radii: bad range");
    std::vector<double> out(count);
    for (int k = 0; k < count; ++k)
        out[k] = rmin * std::pow(rmax / rmin, double(k) / (count - 1));
    return out;
}

inline EnergyCurve weiss_curve(const NormalizedFrame& fr, const std::vector<double>& radii,
                               int nodes = 256) {
    validate_radii(radii);
    EnergyCurve c;
    c.kind = EnergyCurve::Kind::Weiss;
    c.x0 = fr.x0;
    c.radii = radii;
    for (double r : radii) {
        const Quad v = weiss_energy(fr, r, nodes);
        const Quad rhs = weiss_rhs(fr, r, nodes);
        c.values.push_back(v.value);
        c.quad_error.push_back(v.error);
        c.rhs.push_back(rhs.value);
    }
    return c;
}

inline EnergyCurve monneau_curve(const NormalizedFrame& fr, const SymMat2& Q,
                                 const std::vector<double>& radii, int nodes = 256) {
    validate_radii(radii);
    EnergyCurve c;
    c.kind = EnergyCurve::Kind::Monneau;
    c.x0 = fr.x0;
    c.radii = radii;
    c.profile_Q = Q;
    for (double r : radii) {
        const Quad v = monneau_value(fr, Q, r, nodes);
        c.values.push_back(v.value);
        c.quad_error.push_back(v.error);
        c.rhs.push_back(0.0);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Quasi-monotonicity corrections and verdicts
// ---------------------------------------------------------------------------

/// The modulus omega(r) = omega_f(r) + r^{1-n/p} of the quasi-monotonicity
/// theorems, split so the power tail integrates in closed form.
struct OmegaSpec {
    Modulus omega_f;
    double beta = 0.5;  // 1 - n/p

    double operator()(double r) const { return omega_f(r) + std::pow(r, beta); }

    static OmegaSpec for_problem(const Modulus& omega_f, int n, double p) {
        return {omega_f, 1.0 - double(n) / p};
    }
};

inline double omega(double r, const Modulus& omega_f, int n, double p) {
    if (!(r > 0)) return 0.0;
    return omega_f(r) + std::pow(r, 1.0 - double(n) / p);
}

/// c(r) = int_0^r omega(t)/t dt  (Weiss correction).
inline double weiss_correction(const OmegaSpec& spec, double r) {
    double acc = std::pow(r, spec.beta) / spec.beta;
    if (spec.omega_f.kind == Modulus::Kind::Power) {
        acc += spec.omega_f.c * std::pow(r, spec.omega_f.alpha) / spec.omega_f.alpha;
    } else if (spec.omega_f.kind != Modulus::Kind::Zero) {
        const auto dini = dini_integral(spec.omega_f, r, 0.0);
        if (dini.divergent)
            throw HypothesisError("weiss_correction: omega_f fails the Dini condition");
        acc += dini.value;
    }
    return acc;
}

/// c(r) = int_0^r dt/t int_0^t omega(s)/s ds  (Monneau correction).
inline double monneau_correction(const OmegaSpec& spec, double r) {
    double acc = std::pow(r, spec.beta) / (spec.beta * spec.beta);
    if (spec.omega_f.kind == Modulus::Kind::Power) {
        acc += spec.omega_f.c * std::pow(r, spec.omega_f.alpha) /
               (spec.omega_f.alpha * spec.omega_f.alpha);
    } else if (spec.omega_f.kind != Modulus::Kind::Zero) {
        auto inner = [&](double t) {
            const auto dini = dini_integral(spec.omega_f, t, 0.0);
            if (dini.divergent)
                throw HypothesisError("monneau_correction: omega_f fails the Dini condition");
            return dini.value;
        };
        const auto outer = dini_integral(inner, r, 0.0);
        if (outer.divergent)
            throw HypothesisError("monneau_correction: double Dini integral diverges");
        acc += outer.value;
    }
    return acc;
}

struct MonotonicityReport {
    EnergyCurve curve;
    OmegaSpec omega_spec;
    std::string correction_kind;          // "dini" (Weiss) or "double-dini" (Monneau)
    std::vector<double> correction;       // c(r_i)
    double C_min = 0.0;                   // smallest C making value + C c nondecreasing
    std::vector<std::tuple<double, double, double>> violations;  // (r_i, r_{i+1}, deficit)
    std::vector<double> rhs_lower_bound;  // per interval, integrated Weiss RHS
    double reference_C = 0.0;
    bool pass = false;
    double phi0_estimate = 0.0;           // extrapolation to r -> 0+
    double phi0_uncertainty = 0.0;
};

/// Integrated quasi-monotonicity on consecutive radius pairs. C_min is the
/// measured constant of the theorem; the verdict applies reference_C
/// (defaults to C_min, making the corrected curve nondecreasing by
/// construction — cross-resolution stability is what compare() checks).
inline MonotonicityReport verdict(const EnergyCurve& curve, const OmegaSpec& spec,
                                  std::optional<double> reference_C = std::nullopt) {
    if (curve.radii.size() < 8)
        throw std::invalid_argument("verdict: need at least 8 radii");
    MonotonicityReport rep;
    rep.curve = curve;
    rep.omega_spec = spec;
    const bool weiss = curve.kind == EnergyCurve::Kind::Weiss;
    rep.correction_kind = weiss ? "dini" : "double-dini";
    for (double r : curve.radii)
        rep.correction.push_back(weiss ? weiss_correction(spec, r) : monneau_correction(spec, r));

    for (size_t k = 0; k + 1 < curve.radii.size(); ++k) {
        const double deficit = curve.values[k] - curve.values[k + 1];
        const double dc = rep.correction[k + 1] - rep.correction[k];
        if (deficit > 0.0) {
            rep.violations.push_back({curve.radii[k], curve.radii[k + 1], deficit});
            rep.C_min = std::max(rep.C_min, deficit / dc);
        }
        if (weiss) {
            const double dr = curve.radii[k + 1] - curve.radii[k];
            rep.rhs_lower_bound.push_back(0.5 * (curve.rhs[k] + curve.rhs[k + 1]) * dr);
        } else {
            rep.rhs_lower_bound.push_back(0.0);
        }
    }

    rep.reference_C = reference_C.value_or(rep.C_min);
    rep.pass = true;
    for (size_t k = 0; k + 1 < curve.radii.size(); ++k) {
        const double deficit = curve.values[k] - curve.values[k + 1];
        const double dc = rep.correction[k + 1] - rep.correction[k];
        const double slack = curve.quad_error[k] + curve.quad_error[k + 1] + 1e-13;
        if (deficit > rep.reference_C * dc + slack) rep.pass = false;
    }

    rep.phi0_estimate = curve.values.front() - rep.C_min * rep.correction.front();
    rep.phi0_uncertainty = rep.C_min * rep.correction.front() + curve.quad_error.front();
    return rep;
}

// ---------------------------------------------------------------------------
// Freezing of the energy
// ---------------------------------------------------------------------------

struct TestField {
    std::function<double(Vec2)> value;
    std::function<Vec2(Vec2)> grad;
};

struct FreezingReport {
    double lhs = 0.0;     // |E_{A,f}(v; r) - E_Id(v)| over B_1
    double rhs = 0.0;     // (r^{1-n/p} + omega_f(r)) E_Id(v)
    double energy = 0.0;  // E_Id(v) = int_{B_1} (|grad v|^2 + 2v)
    double quad_error = 0.0;
    bool within_bound = false;
};

/// Freezing estimate on the normalized frame: compares the coefficient
/// energy of v on B_1 at scale r with the constant-coefficient energy.
/// Requires v >= 0 on B_1.
inline FreezingReport freezing_defect(const NormalizedFrame& fr, double r, const TestField& v,
                                      int nodes = 256) {
    if (!(r > 0.0) || r > fr.r_max)
        throw GeometryError("freezing_defect: scale r outside (0, r_max]");
    double vmin = 0.0;
    auto frozen = [&](Vec2 x) {
        const double val = v.value(x);
        vmin = std::min(vmin, val);
        return v.grad(x).norm_sq() + 2.0 * val;
    };
    const Quad e0 = ball_integral(frozen, {0, 0}, 1.0, nodes);
    if (vmin < -1e-12)
        throw std::invalid_argument("freezing_defect: test field must be nonnegative on B_1");
    auto perturbed = [&](Vec2 x) {
        const Vec2 rx = x * r;
        return fr.C(rx).quad(v.grad(x)) + 2.0 * fr.f_ratio(rx) * v.value(x);
    };
    const Quad e1 = ball_integral(perturbed, {0, 0}, 1.0, nodes);

    FreezingReport rep;
    rep.energy = e0.value;
    rep.lhs = std::fabs(e1.value - e0.value);
    rep.rhs = (std::pow(r, fr.beta()) + fr.omega_f(r)) * e0.value;
    rep.quad_error = e0.error + e1.error;
    rep.within_bound = rep.lhs <= rep.rhs + rep.quad_error;
    return rep;
}

// ---------------------------------------------------------------------------
// Curve CSV
// ---------------------------------------------------------------------------

/// Columns: r, value, quad_err, correction, corrected_value, rhs_lower_bound.
/// The corrected value uses the report's reference constant; the RHS column
/// carries the integrated lower bound over the interval ending at r.
inline void write_curve_csv(std::ostream& os, const MonotonicityReport& rep) {
    os << "r,value,quad_err,correction,corrected_value,rhs_lower_bound\n";
    os.precision(9);
    for (size_t k = 0; k < rep.curve.radii.size(); ++k) {
        const double corrected =
            rep.curve.values[k] + rep.reference_C * rep.correction[k];
        const double rhs = k == 0 ? 0.0 : rep.rhs_lower_bound[k - 1];
        os << rep.curve.radii[k] << "," << rep.curve.values[k] << "," << rep.curve.quad_error[k]
           << "," << rep.correction[k] << "," << corrected << "," << rhs << "\n";
    }
}

}  // namespace oblab

#endif
