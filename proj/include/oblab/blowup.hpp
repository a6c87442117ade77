#ifndef OBLAB_BLOWUP_HPP
#define OBLAB_BLOWUP_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "oblab/geometry.hpp"
#include "oblab/monotone.hpp"

namespace oblab {

/// One member of the rescaled family u_{x0,r}(x) = u(x0 + r x)/r^2,
/// available on B_2. The discrete W^{2,p} seminorm over the unit-ball probe
/// lattice is monitored (not asserted against a bound).
struct BlowupIterate {
    double r = 0.0;
    std::function<double(Vec2)> eval;
    std::function<Vec2(Vec2)> grad;
    double c1_distance_to_previous = std::numeric_limits<double>::quiet_NaN();
    double w2p_seminorm = 0.0;
};

namespace detail {

inline constexpr int kProbe = 64;

template <typename F>
void probe_lattice(F&& body) {
    for (int j = 0; j < kProbe; ++j) {
        for (int i = 0; i < kProbe; ++i) {
            const Vec2 x{-1.0 + (2.0 * i + 1.0) / kProbe, -1.0 + (2.0 * j + 1.0) / kProbe};
            if (x.norm_sq() <= 1.0) body(x);
        }
    }
}

}  // namespace detail

/// Quadratic rescaling of a grid field about x0. Preconditions: B_{2r}(x0)
/// inside the domain and r at least 4 grid cells.
inline BlowupIterate rescale(const ScalarField& u, Vec2 x0, double r, double p = 4.0) {
    const Grid& g = u.grid();
    if (!(r > 0) || g.boundary_distance(x0) < 2.0 * r + g.h())
        throw GeometryError("rescale: B_{2r}(x0) leaves the domain");
    if (r < 4.0 * g.h()) throw UnderresolvedError("rescale: r below 4h");

    BlowupIterate it;
    it.r = r;
    const ScalarField* field = &u;
    it.eval = [field, x0, r](Vec2 x) { return interpolate(*field, x0 + x * r) / (r * r); };
    it.grad = [field, x0, r](Vec2 x) { return gradient(*field, x0 + x * r) / r; };

    // discrete sum of |D^2 u_{x0,r}|^p over the probe lattice in B_1
    const double d = 1.0 / detail::kProbe;
    const double cell = 4.0 / (detail::kProbe * detail::kProbe);
    double acc = 0.0;
    detail::probe_lattice([&](Vec2 x) {
        const double c0 = it.eval(x);
        const double dxx = (it.eval({x.x + d, x.y}) - 2 * c0 + it.eval({x.x - d, x.y})) / (d * d);
        const double dyy = (it.eval({x.x, x.y + d}) - 2 * c0 + it.eval({x.x, x.y - d})) / (d * d);
        const double dxy = (it.eval({x.x + d, x.y + d}) - it.eval({x.x + d, x.y - d}) -
                            it.eval({x.x - d, x.y + d}) + it.eval({x.x - d, x.y - d})) /
                           (4 * d * d);
        acc += std::pow(std::sqrt(dxx * dxx + 2 * dxy * dxy + dyy * dyy), p) * cell;
    });
    it.w2p_seminorm = std::pow(acc, 1.0 / p);
    return it;
}

inline BlowupIterate rescale(const DiscreteSolution& sol, Vec2 x0, double r, double p = 4.0) {
    return rescale(sol.u, x0, r, p);
}

/// Rescaling in frame coordinates (u_L instead of u); this is what the
/// classification fits, so profiles are normalized profiles.
inline BlowupIterate rescale_frame(const NormalizedFrame& fr, double r) {
    if (!(r > 0) || 2.0 * r > fr.r_max)
        throw GeometryError("rescale_frame: B_{2r} exceeds r_max");
    if (fr.grid_h > 0 && r < 4.0 * fr.grid_h / fr.L_norm)
        throw UnderresolvedError("rescale_frame: r below the resolvable scale");
    BlowupIterate it;
    it.r = r;
    auto uL = fr.uL;
    auto gL = fr.grad_uL;
    it.eval = [uL, r](Vec2 x) { return uL(x * r) / (r * r); };
    it.grad = [gL, r](Vec2 x) { return gL(x * r) / r; };
    return it;
}

/// sup over the B_1 probe lattice of the value gap and the gradient gap;
/// the C^1 convergence diagnostic of the rescaled family.
inline double c1_distance(const BlowupIterate& a, const BlowupIterate& b) {
    double value_gap = 0.0, grad_gap = 0.0;
    detail::probe_lattice([&](Vec2 x) {
        value_gap = std::max(value_gap, std::fabs(a.eval(x) - b.eval(x)));
        grad_gap = std::max(grad_gap, (a.grad(x) - b.grad(x)).norm());
    });
    return std::max(value_gap, grad_gap);
}

/// Iterates along descending radii with chained C^1 distances.
inline std::vector<BlowupIterate> blowup_sequence(const DiscreteSolution& sol, Vec2 x0,
                                                  std::vector<double> radii, double p = 4.0) {
    std::sort(radii.begin(), radii.end(), std::greater<>());
    std::vector<BlowupIterate> out;
    for (double r : radii) {
        BlowupIterate it = rescale(sol, x0, r, p);
        if (!out.empty()) it.c1_distance_to_previous = c1_distance(it, out.back());
        out.push_back(std::move(it));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reference energies and profile fits
// ---------------------------------------------------------------------------

/// Weiss energies of the two blow-up classes: the half-space profile
/// 1/2 (<x,e>+)^2 carries omega_n / (4(n+2)), polynomial profiles
/// 1/2 <Qx,x> with tr Q = 1 carry omega_n / (2(n+2)).
inline std::pair<double, double> reference_energies(int n) {
    double omega_n = 0.0;
    if (n == 2)
        omega_n = M_PI;
    else if (n == 3)
        omega_n = 4.0 * M_PI / 3.0;
    else
        throw std::invalid_argument("reference_energies: n must be 2 or 3");
    return {omega_n / (4.0 * (n + 2)), omega_n / (2.0 * (n + 2))};
}

struct ProfileFit {
    enum class Kind { Polynomial, Halfspace };
    Kind kind = Kind::Polynomial;
    SymMat2 Q = SymMat2::diag(0.5, 0.5);  // tr = 1 by construction
    Vec2 direction{1, 0};                 // unit vector, half-space case
    double residual = 0.0;                // RMS misfit on the probe lattice
    bool psd_violation = false;
};

namespace detail {

inline double halfspace_residual_sq(const BlowupIterate& it, const std::vector<Vec2>& pts,
                                    const std::vector<double>& vals, double theta) {
    const Vec2 e{std::cos(theta), std::sin(theta)};
    double acc = 0.0;
    for (size_t k = 0; k < pts.size(); ++k) {
        const double t = std::max(pts[k].dot(e), 0.0);
        const double d = 0.5 * t * t - vals[k];
        acc += d * d;
    }
    (void)it;
    return acc;
}

}  // namespace detail

/// Least-squares blow-up profile: a trace-one quadratic 1/2 <Qx,x> against a
/// half-space 1/2 (<x,e>+)^2 over unit directions (golden-angle sweep with a
/// local refinement); returns the model with the smaller RMS residual.
inline ProfileFit fit_profile(const BlowupIterate& it) {
    std::vector<Vec2> pts;
    std::vector<double> vals;
    detail::probe_lattice([&](Vec2 x) {
        pts.push_back(x);
        vals.push_back(it.eval(x));
    });
    const int n = int(pts.size());

    // polynomial model 1/4 |x|^2 + s * 1/2 (x^2 - y^2) + t * xy
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0, norm2 = 0;
    for (int k = 0; k < n; ++k) {
        const Vec2 x = pts[k];
        const double p1 = 0.5 * (x.x * x.x - x.y * x.y), p2 = x.x * x.y;
        const double res = vals[k] - 0.25 * x.norm_sq();
        a11 += p1 * p1;
        a12 += p1 * p2;
        a22 += p2 * p2;
        b1 += p1 * res;
        b2 += p2 * res;
        norm2 += vals[k] * vals[k];
    }
    const double det = a11 * a22 - a12 * a12;
    const double s = (b1 * a22 - b2 * a12) / det;
    const double t = (a11 * b2 - a12 * b1) / det;
    ProfileFit poly;
    poly.kind = ProfileFit::Kind::Polynomial;
    poly.Q = SymMat2(0.5 + s, t, 0.5 - s);
    poly.psd_violation = poly.Q.eigenvalues()[0] < -1e-6;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const double d = 0.5 * poly.Q.quad(pts[k]) - vals[k];
        acc += d * d;
    }
    poly.residual = std::sqrt(acc / n);

    // half-space model: golden-angle sweep then ternary refinement
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    double best_theta = 0.0, best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 360; ++k) {
        const double theta = std::fmod(k * golden, 2.0 * M_PI);
        const double r2 = detail::halfspace_residual_sq(it, pts, vals, theta);
        if (r2 < best) {
            best = r2;
            best_theta = theta;
        }
    }
    double lo = best_theta - 0.05, hi = best_theta + 0.05;
    for (int k = 0; k < 80; ++k) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (detail::halfspace_residual_sq(it, pts, vals, m1) <
            detail::halfspace_residual_sq(it, pts, vals, m2))
            hi = m2;
        else
            lo = m1;
    }
    ProfileFit half;
    half.kind = ProfileFit::Kind::Halfspace;
    const double theta = 0.5 * (lo + hi);
    half.direction = {std::cos(theta), std::sin(theta)};
    half.residual = std::sqrt(detail::halfspace_residual_sq(it, pts, vals, theta) / n);

    const double scale = std::sqrt(norm2 / n);
    if (poly.residual > 0.5 * scale && half.residual > 0.5 * scale)
        throw ProfileError("fit_profile: neither blow-up model fits the iterate");
    return half.residual < poly.residual ? half : poly;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

enum class PointVerdict { Regular, Singular, Unresolved };

inline const char* to_string(PointVerdict v) {
    switch (v) {
        case PointVerdict::Regular:
            return "Regular";
        case PointVerdict::Singular:
            return "Singular";
        default:
            return "Unresolved";
    }
}

/// Verdict from the Weiss density phi0 with uncertainty: Regular or Singular
/// when within margin + uncertainty of the respective reference energy
/// (never both; the targets differ by a factor of two).
inline PointVerdict classify(double phi0, double unc, int n, double margin = 0.05) {
    if (!(phi0 > 0.0)) throw std::invalid_argument("classify: phi0 must be positive");
    const auto [a_reg, a_sing] = reference_energies(n);
    const bool reg = std::fabs(phi0 - a_reg) <= unc + margin * a_reg;
    const bool sing = std::fabs(phi0 - a_sing) <= unc + margin * a_sing;
    if (reg && !sing) return PointVerdict::Regular;
    if (sing && !reg) return PointVerdict::Singular;
    return PointVerdict::Unresolved;
}

struct ClassificationResult {
    Vec2 x0;                       // snapped free-boundary point
    double snap_distance = 0.0;
    double phi0 = 0.0;
    double uncertainty = 0.0;
    PointVerdict verdict = PointVerdict::Unresolved;
    std::optional<ProfileFit> fit;
    double weiss_C_min = 0.0;
    double fit_radius = 0.0;
};

/// End-to-end verdict at one candidate point: snap to the free boundary,
/// build the frame, measure the Weiss curve, extrapolate phi0 per the
/// integrated quasi-monotonicity bound, classify, and fit the blow-up
/// profile at the smallest resolvable radius.
inline ClassificationResult classify_point(const ObstacleProblem& pr,
                                           const DiscreteSolution& sol,
                                           const CoincidenceGeometry& geo, Vec2 candidate,
                                           const std::vector<double>& radii,
                                           const OmegaSpec& spec, int nodes = 256,
                                           double margin = 0.05) {
    ClassificationResult res;
    res.x0 = geo.snap(candidate, &res.snap_distance);
    auto fr = build_frame(pr, sol, res.x0);
    auto curve = weiss_curve(fr, radii, nodes);
    auto rep = verdict(curve, spec);
    res.phi0 = rep.phi0_estimate;
    res.uncertainty = rep.phi0_uncertainty;
    res.weiss_C_min = rep.C_min;
    res.verdict = classify(res.phi0, res.uncertainty, fr.n, margin);

    double rfit = radii.front();
    while (2.0 * rfit > fr.r_max && rfit > 0) rfit *= 0.5;
    if (fr.grid_h > 0) rfit = std::max(rfit, 4.0 * fr.grid_h / fr.L_norm);
    if (2.0 * rfit <= fr.r_max) {
        res.fit_radius = rfit;
        res.fit = fit_profile(rescale_frame(fr, rfit));
    }
    return res;
}

/// CSV columns: x0x, x0y, phi0, unc, verdict, fit_kind, fit_residual,
/// Q11, Q12, Q22, ex, ey (profile columns empty when not applicable).
inline void write_classification_csv(std::ostream& os,
                                     const std::vector<ClassificationResult>& rows) {
    os << "x0x,x0y,phi0,unc,verdict,fit_kind,fit_residual,Q11,Q12,Q22,ex,ey\n";
    os.precision(9);
    for (const auto& r : rows) {
        os << r.x0.x << "," << r.x0.y << "," << r.phi0 << "," << r.uncertainty << ","
           << to_string(r.verdict) << ",";
        if (!r.fit) {
            os << "none,,,,,,\n";
            continue;
        }
        if (r.fit->kind == ProfileFit::Kind::Polynomial)
            os << "polynomial," << r.fit->residual << "," << r.fit->Q.a11 << "," << r.fit->Q.a12
               << "," << r.fit->Q.a22 << ",,\n";
        else
            os << "halfspace," << r.fit->residual << ",,,," << r.fit->direction.x << ","
               << r.fit->direction.y << "\n";
    }
}

}  // namespace oblab

#endif
