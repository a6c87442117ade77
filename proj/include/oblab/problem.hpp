#ifndef OBLAB_PROBLEM_HPP
#define OBLAB_PROBLEM_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oblab/field.hpp"

namespace oblab {

// ---------------------------------------------------------------------------
// Coefficient matrix families
// ---------------------------------------------------------------------------

/// Built-in coefficient matrix families with closed-form derivatives.
/// `Holder` is (1 + eps*|x-z|^alpha) * Id with alpha in (0,1): W^{1,p} for
/// p(1-alpha) < n but not Lipschitz, which is the regime of interest.
struct CoefficientFamily {
    enum class Kind { Identity, Scaled, Diagonal, Holder, Rotation };

    Kind kind = Kind::Identity;
    double scale = 1.0;             // Scaled; also multiplies every family
    double d1 = 1.0, d2 = 1.0;      // Diagonal
    double eps = 0.0, alpha = 1.0;  // Holder
    Vec2 z{0, 0};                   // Holder center
    double lam1 = 1.0, lam2 = 1.0, rate = 0.0, theta0 = 0.0;  // Rotation

    static CoefficientFamily identity() { return {}; }
    static CoefficientFamily scaled(double c) {
        CoefficientFamily f;
        f.kind = Kind::Scaled;
        f.scale = c;
        return f;
    }
    static CoefficientFamily diagonal(double a, double b) {
        CoefficientFamily f;
        f.kind = Kind::Diagonal;
        f.d1 = a;
        f.d2 = b;
        return f;
    }
    static CoefficientFamily holder(double eps, double alpha, Vec2 z) {
        CoefficientFamily f;
        f.kind = Kind::Holder;
        f.eps = eps;
        f.alpha = alpha;
        f.z = z;
        return f;
    }
    static CoefficientFamily rotation(double lam1, double lam2, double rate, double theta0 = 0.0) {
        CoefficientFamily f;
        f.kind = Kind::Rotation;
        f.lam1 = lam1;
        f.lam2 = lam2;
        f.rate = rate;
        f.theta0 = theta0;
        return f;
    }

    SymMat2 at(Vec2 x) const {
        switch (kind) {
            case Kind::Identity:
                return SymMat2::identity() * scale;
            case Kind::Scaled:
                return SymMat2::identity() * scale;
            case Kind::Diagonal:
                return SymMat2::diag(d1, d2) * scale;
            case Kind::Holder:
                return SymMat2::identity() * (scale * (1.0 + eps * std::pow((x - z).norm(), alpha)));
            case Kind::Rotation: {
                const double th = theta0 + rate * (x.x + x.y);
                const double c = std::cos(th), s = std::sin(th);
                return SymMat2(lam1 * c * c + lam2 * s * s, (lam1 - lam2) * c * s,
                               lam1 * s * s + lam2 * c * c) *
                       scale;
            }
        }
        return SymMat2::identity();
    }

    /// Partial derivative of A along `axis` (closed form). The Holder family
    /// has a singular gradient at z; by convention it returns 0 there.
    SymMat2 deriv(Vec2 x, int axis) const {
        switch (kind) {
            case Kind::Identity:
            case Kind::Scaled:
            case Kind::Diagonal:
                return {0, 0, 0};
            case Kind::Holder: {
                const Vec2 d = x - z;
                const double r = d.norm();
                if (r < 1e-300) return {0, 0, 0};
                const double da = scale * eps * alpha * std::pow(r, alpha - 2.0) *
                                  (axis == 0 ? d.x : d.y);
                return SymMat2::identity() * da;
            }
            case Kind::Rotation: {
                const double th = theta0 + rate * (x.x + x.y);
                const double dl = lam1 - lam2;
                return SymMat2(-dl * std::sin(2 * th), dl * std::cos(2 * th),
                               dl * std::sin(2 * th)) *
                       (scale * rate);
            }
        }
        return {0, 0, 0};
    }

    /// (div A^1, div A^2), the column divergences.
    Vec2 column_divergence(Vec2 x) const {
        const SymMat2 d0 = deriv(x, 0), d1m = deriv(x, 1);
        return {d0.a11 + d1m.a12, d0.a12 + d1m.a22};
    }

    /// Closed-form W^{1,p} membership on a bounded domain.
    bool w1p_member(double p, int n) const {
        if (kind == Kind::Holder) return p * (1.0 - alpha) < double(n);
        return true;  // remaining families are smooth
    }

    bool lipschitz() const { return kind != Kind::Holder || eps == 0.0; }

    MatrixField sample(const Grid& grid) const {
        return MatrixField::sample(grid, [this](Vec2 x) { return at(x); });
    }
};

// ---------------------------------------------------------------------------
// Scalar data descriptors (obstacle and right-hand side)
// ---------------------------------------------------------------------------

/// Closed-form scalar data with gradient and Hessian where the pipeline
/// needs them (the obstacle enters through div(A grad psi)).
struct ScalarDescriptor {
    enum class Kind { Zero, Constant, Affine, Paraboloid, RadialPower, Custom };

    Kind kind = Kind::Zero;
    double c0 = 0.0;          // Constant value / affine offset / paraboloid ψ = -c0 |x|^2
    Vec2 slope{0, 0};         // Affine
    double amp = 0.0, alpha = 1.0;  // RadialPower: c0 + amp * |x - z|^alpha
    Vec2 z{0, 0};
    std::function<double(Vec2)> fn;  // Custom (value only, sampled)

    static ScalarDescriptor zero() { return {}; }
    static ScalarDescriptor constant(double c) {
        ScalarDescriptor d;
        d.kind = Kind::Constant;
        d.c0 = c;
        return d;
    }
    static ScalarDescriptor affine(Vec2 slope, double offset) {
        ScalarDescriptor d;
        d.kind = Kind::Affine;
        d.slope = slope;
        d.c0 = offset;
        return d;
    }
    static ScalarDescriptor paraboloid(double c) {
        ScalarDescriptor d;
        d.kind = Kind::Paraboloid;
        d.c0 = c;
        return d;
    }
    static ScalarDescriptor radial_power(double base, double amp, double alpha, Vec2 z) {
        ScalarDescriptor d;
        d.kind = Kind::RadialPower;
        d.c0 = base;
        d.amp = amp;
        d.alpha = alpha;
        d.z = z;
        return d;
    }
    static ScalarDescriptor custom(std::function<double(Vec2)> f) {
        ScalarDescriptor d;
        d.kind = Kind::Custom;
        d.fn = std::move(f);
        return d;
    }

    double value(Vec2 x) const {
        switch (kind) {
            case Kind::Zero:
                return 0.0;
            case Kind::Constant:
                return c0;
            case Kind::Affine:
                return slope.dot(x) + c0;
            case Kind::Paraboloid:
                return -c0 * x.norm_sq();
            case Kind::RadialPower:
                return c0 + amp * std::pow((x - z).norm(), alpha);
            case Kind::Custom:
                return fn(x);
        }
        return 0.0;
    }

    Vec2 grad(Vec2 x) const {
        switch (kind) {
            case Kind::Zero:
            case Kind::Constant:
            case Kind::Custom:
                return {0, 0};
            case Kind::Affine:
                return slope;
            case Kind::Paraboloid:
                return x * (-2.0 * c0);
            case Kind::RadialPower: {
                const Vec2 d = x - z;
                const double r = d.norm();
                if (r < 1e-300) return {0, 0};
                return d * (amp * alpha * std::pow(r, alpha - 2.0));
            }
        }
        return {0, 0};
    }

    SymMat2 hessian(Vec2 x) const {
        switch (kind) {
            case Kind::Paraboloid:
                return SymMat2::identity() * (-2.0 * c0);
            case Kind::RadialPower: {
                const Vec2 d = x - z;
                const double r = d.norm();
                if (r < 1e-300) return {0, 0, 0};
                const double p2 = amp * alpha * std::pow(r, alpha - 2.0);
                const double p4 = amp * alpha * (alpha - 2.0) * std::pow(r, alpha - 4.0);
                return {p2 + p4 * d.x * d.x, p4 * d.x * d.y, p2 + p4 * d.y * d.y};
            }
            default:
                return {0, 0, 0};
        }
    }

    bool is_zero() const { return kind == Kind::Zero; }
    bool smooth() const {
        return kind != Kind::Custom && (kind != Kind::RadialPower || amp == 0.0);
    }
};

// ---------------------------------------------------------------------------
// Moduli of continuity and Dini integrals
// ---------------------------------------------------------------------------

/// A modulus of continuity: identically zero, a power law c*t^alpha, or
/// grid samples extended below the sampled range by their power-law fit.
struct Modulus {
    enum class Kind { Zero, Power, Samples };

    Kind kind = Kind::Zero;
    double c = 0.0, alpha = 1.0;
    std::vector<std::pair<double, double>> samples;  // (t, omega(t)), t ascending
    double fit_c = 0.0, fit_alpha = 1.0;             // tail fit below samples.front()

    static Modulus zero() { return {}; }
    static Modulus power(double c, double alpha) {
        Modulus m;
        m.kind = Kind::Power;
        m.c = c;
        m.alpha = alpha;
        return m;
    }
    static Modulus from_samples(std::vector<std::pair<double, double>> s);

    double operator()(double t) const {
        if (t <= 0.0) return 0.0;
        switch (kind) {
            case Kind::Zero:
                return 0.0;
            case Kind::Power:
                return c * std::pow(t, alpha);
            case Kind::Samples: {
                if (samples.empty()) return 0.0;
                if (t <= samples.front().first)
                    return std::min(samples.front().second, fit_c * std::pow(t, fit_alpha));
                if (t >= samples.back().first) return samples.back().second;
                auto it = std::lower_bound(
                    samples.begin(), samples.end(), t,
                    [](const std::pair<double, double>& s, double v) { return s.first < v; });
                const auto [t1, w1] = *it;
                const auto [t0, w0] = *(it - 1);
                return w0 + (w1 - w0) * (t - t0) / (t1 - t0);
            }
        }
        return 0.0;
    }
};

inline Modulus Modulus::from_samples(std::vector<std::pair<double, double>> s) {
    Modulus m;
    m.kind = Kind::Samples;
    m.samples = std::move(s);
    // power-law fit on the lower half of the sampled range (log-log least
    // squares over positive samples)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < (m.samples.size() + 1) / 2; ++i) {
        const auto [t, w] = m.samples[i];
        if (t <= 0 || w <= 0) continue;
        const double lx = std::log(t), ly = std::log(w);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n >= 2 && std::fabs(n * sxx - sx * sx) > 1e-14) {
        m.fit_alpha = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        m.fit_c = std::exp((sy - m.fit_alpha * sx) / n);
        if (!(m.fit_alpha > 0.0)) {  // non-vanishing modulus; keep constant tail
            m.fit_alpha = 0.0;
            m.fit_c = m.samples.front().second;
        }
    } else {
        m.fit_alpha = 1.0;
        m.fit_c = m.samples.empty() || m.samples.front().first <= 0
                      ? 0.0
                      : m.samples.front().second / m.samples.front().first;
    }
    return m;
}

struct DiniResult {
    double value = 0.0;
    bool divergent = false;
};

/// Integral of omega(t) |log t|^a / t over (0, r], by 16-point Gauss-Legendre
/// on dyadic octaves graded toward zero. Divergence is reported when the
/// octave contributions stop decaying.
template <typename F>
DiniResult dini_integral(F&& omega, double r, double log_power = 0.0) {
    if (!(r > 0.0) || r > 1.0)
        throw std::invalid_argument("dini_integral: r must lie in (0, 1]");
    if (log_power < 0.0) throw std::invalid_argument("dini_integral: log power must be >= 0");

    static const double gx[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                                 0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                                 0.9445750230732326, 0.9894009349916499};
    static const double gw[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                                 0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                                 0.0622535239386479, 0.0271524594117541};

    auto octave = [&](double lo, double hi) {
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        double acc = 0.0;
        for (int i = 0; i < 8; ++i) {
            for (double sgn : {-1.0, 1.0}) {
                const double t = mid + sgn * half * gx[i];
                const double lg = std::fabs(std::log(t));
                acc += gw[i] * omega(t) * std::pow(lg, log_power) / t;
            }
        }
        return acc * half;
    };

    double total = 0.0, prev = -1.0, last = -1.0;
    for (int k = 0; k < 400; ++k) {
        const double hi = r * std::pow(2.0, -k);
        const double Ik = octave(hi / 2, hi);
        total += Ik;
        if (Ik < 1e-16 * (1.0 + total)) return {total, false};
        if (last >= 0.0 && Ik > 0.0) {
            const double ratio = Ik / last;
            if (ratio >= 1.0 - 1e-6 && k >= 40)
                return {std::numeric_limits<double>::infinity(), true};
        }
        prev = last;
        last = Ik;
    }
    // geometric tail extrapolation at the octave cap
    if (last > 0.0 && prev > 0.0) {
        const double ratio = last / prev;
        if (ratio < 1.0) total += last * ratio / (1.0 - ratio);
    }
    return {total, false};
}

inline DiniResult dini_integral(const Modulus& m, double r, double log_power = 0.0) {
    if (m.kind == Modulus::Kind::Zero) return {0.0, false};
    return dini_integral([&m](double t) { return m(t); }, r, log_power);
}

// ---------------------------------------------------------------------------
// Modulus of continuity of a sampled field
// ---------------------------------------------------------------------------

/// Exact supremum of |f(x)-f(y)| over sampled node pairs within distance t,
/// for each t in t_samples (ascending). Grids above 64 nodes per axis are
/// subsampled by a uniform stride; the slack is at most omega(h*sqrt(n)) per
/// skipped shell and is reported by the caller alongside the samples.
inline std::vector<std::pair<double, double>> modulus_of_continuity(
    const ScalarField& field, const std::vector<double>& t_samples) {
    if (t_samples.empty())
        throw std::invalid_argument("modulus_of_continuity: empty t_samples");
    for (size_t i = 0; i + 1 < t_samples.size(); ++i)
        if (!(t_samples[i] > 0) || t_samples[i] >= t_samples[i + 1])
            throw std::invalid_argument("modulus_of_continuity: t_samples must be positive ascending");

    const Grid& g = field.grid();
    const int stride = std::max(1, (std::max(g.nx(), g.ny()) + 63) / 64);
    std::vector<Vec2> pts;
    std::vector<double> vals;
    for (int j = 0; j < g.ny(); j += stride)
        for (int i = 0; i < g.nx(); i += stride) {
            pts.push_back(g.node(i, j));
            vals.push_back(field.at(i, j));
        }

    const double tmax = t_samples.back();
    std::vector<double> best(t_samples.size(), 0.0);
    for (size_t a = 0; a < pts.size(); ++a) {
        for (size_t b = a + 1; b < pts.size(); ++b) {
            // scale down by one ulp-ish factor so exact lattice distances
            // land in their own bucket despite roundoff
            const double d = (pts[a] - pts[b]).norm() * (1.0 - 1e-12);
            if (d > tmax) continue;
            const double gap = std::fabs(vals[a] - vals[b]);
            auto it = std::lower_bound(t_samples.begin(), t_samples.end(), d);
            const size_t k = it - t_samples.begin();
            if (k < best.size()) best[k] = std::max(best[k], gap);
        }
    }
    for (size_t k = 1; k < best.size(); ++k) best[k] = std::max(best[k], best[k - 1]);

    std::vector<std::pair<double, double>> out(t_samples.size());
    for (size_t k = 0; k < best.size(); ++k) out[k] = {t_samples[k], best[k]};
    return out;
}

// ---------------------------------------------------------------------------
// The continuous problem
// ---------------------------------------------------------------------------

struct CoercivityReport {
    double lambda = 1.0;  // max over nodes of max(lam_max, 1/lam_min)
    bool pass = true;
    int bad_i = -1, bad_j = -1;  // first offending node when !pass
};

inline CoercivityReport check_coercivity(const MatrixField& A) {
    CoercivityReport rep;
    const Grid& g = A.grid();
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            const auto ev = A.at(i, j).eigenvalues();
            if (!(ev[0] > 0.0)) {
                rep.pass = false;
                if (rep.bad_i < 0) {
                    rep.bad_i = i;
                    rep.bad_j = j;
                }
                rep.lambda = std::numeric_limits<double>::infinity();
                continue;
            }
            rep.lambda = std::max({rep.lambda, ev[1], 1.0 / ev[0]});
        }
    }
    return rep;
}

/// Continuous problem data. f = h - div(A grad psi) is derived on
/// construction (closed form when the descriptors allow, centered
/// differences otherwise).
struct ObstacleProblem {
    Grid grid;
    CoefficientFamily coeff;
    MatrixField A;
    ScalarDescriptor psi_desc, h_desc;
    ScalarField psi, h, g;
    double p = 4.0;
    double dini_a = 1.0;
    ScalarField f;
    Modulus omega_f;       // closed form when known, else filled from samples
    bool analytic_f = false;
    bool analytic_modulus = false;
    std::vector<std::string> warnings;

    int dim() const { return 2; }
    double beta() const { return 1.0 - dim() / p; }  // the r^{1-n/p} exponent
};

/// f = h - div(A grad psi). Bit-identical copy of h when psi == 0.
inline ScalarField derive_f(const Grid& grid, const CoefficientFamily& coeff,
                            const MatrixField& A, const ScalarDescriptor& psi_desc,
                            const ScalarField& psi, const ScalarField& h, bool* analytic = nullptr) {
    if (analytic) *analytic = false;
    if (psi_desc.is_zero()) {
        if (analytic) *analytic = true;
        return h;
    }
    if (psi_desc.smooth()) {
        // closed form: div(A grad psi) = divA^i d_i psi + A : D2 psi
        if (analytic) *analytic = true;
        std::vector<double> v(grid.node_count());
        for (int j = 0; j < grid.ny(); ++j) {
            for (int i = 0; i < grid.nx(); ++i) {
                const Vec2 x = grid.node(i, j);
                const Vec2 dv = coeff.column_divergence(x);
                const Vec2 gp = psi_desc.grad(x);
                const SymMat2 hp = psi_desc.hessian(x);
                const SymMat2 a = coeff.at(x);
                const double div_flux = dv.dot(gp) + a.a11 * hp.a11 + 2 * a.a12 * hp.a12 +
                                        a.a22 * hp.a22;
                v[grid.index(i, j)] = h.at(i, j) - div_flux;
            }
        }
        return ScalarField(grid, std::move(v));
    }
    // numeric path: flux = A grad psi at nodes, then nodal divergence
    std::vector<double> f1(grid.node_count()), f2(grid.node_count());
    for (int j = 0; j < grid.ny(); ++j) {
        for (int i = 0; i < grid.nx(); ++i) {
            auto pv = [&](int a, int b) { return psi.at(a, b); };
            const Vec2 gp{detail::node_derivative(grid, pv, i, j, 0),
                          detail::node_derivative(grid, pv, i, j, 1)};
            const Vec2 flux = A.at(i, j).apply(gp);
            f1[grid.index(i, j)] = flux.x;
            f2[grid.index(i, j)] = flux.y;
        }
    }
    std::vector<double> v(grid.node_count());
    for (int j = 0; j < grid.ny(); ++j) {
        for (int i = 0; i < grid.nx(); ++i) {
            auto g1 = [&](int a, int b) { return f1[grid.index(a, b)]; };
            auto g2 = [&](int a, int b) { return f2[grid.index(a, b)]; };
            v[grid.index(i, j)] = h.at(i, j) - detail::node_derivative(grid, g1, i, j, 0) -
                                  detail::node_derivative(grid, g2, i, j, 1);
        }
    }
    return ScalarField(grid, std::move(v));
}

/// Closed-form modulus of f when the data descriptors support one.
inline std::optional<Modulus> analytic_modulus_of_f(const CoefficientFamily& coeff,
                                                    const ScalarDescriptor& psi_desc,
                                                    const ScalarDescriptor& h_desc) {
    const bool psi_ok =
        psi_desc.is_zero() ||
        (psi_desc.kind == ScalarDescriptor::Kind::Paraboloid &&
         (coeff.kind == CoefficientFamily::Kind::Identity ||
          coeff.kind == CoefficientFamily::Kind::Scaled ||
          coeff.kind == CoefficientFamily::Kind::Diagonal));
    if (!psi_ok) return std::nullopt;
    // with psi as above, f = h + constant, so omega_f = omega_h
    switch (h_desc.kind) {
        case ScalarDescriptor::Kind::Zero:
        case ScalarDescriptor::Kind::Constant:
            return Modulus::zero();
        case ScalarDescriptor::Kind::Affine:
            return Modulus::power(h_desc.slope.norm(), 1.0);
        case ScalarDescriptor::Kind::RadialPower:
            return Modulus::power(std::fabs(h_desc.amp), h_desc.alpha);
        default:
            return std::nullopt;
    }
}

inline ObstacleProblem make_problem(const Grid& grid, const CoefficientFamily& coeff,
                                    const ScalarDescriptor& psi_desc,
                                    const ScalarDescriptor& h_desc,
                                    const std::function<double(Vec2)>& g_fn, double p,
                                    double dini_a = 1.0) {
    if (!(p > 2.0)) throw std::invalid_argument("ObstacleProblem: requires p > n = 2");
    ObstacleProblem pr;
    pr.grid = grid;
    pr.coeff = coeff;
    pr.A = coeff.sample(grid);
    pr.psi_desc = psi_desc;
    pr.h_desc = h_desc;
    pr.psi = ScalarField::sample(grid, [&](Vec2 x) { return psi_desc.value(x); });
    pr.h = ScalarField::sample(grid, [&](Vec2 x) { return h_desc.value(x); });
    pr.g = ScalarField::sample(grid, g_fn);
    pr.p = p;
    pr.dini_a = dini_a;

    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i)
            if (grid.boundary_node(i, j) && pr.psi.at(i, j) > pr.g.at(i, j) + 1e-12)
                throw std::invalid_argument("ObstacleProblem: psi > g at a boundary node");

    pr.f = derive_f(grid, coeff, pr.A, psi_desc, pr.psi, pr.h, &pr.analytic_f);
    if (auto m = analytic_modulus_of_f(coeff, psi_desc, h_desc)) {
        pr.omega_f = *m;
        pr.analytic_modulus = true;
    }
    if (pr.f.min() <= 0.0)
        pr.warnings.push_back("derived f is nonpositive somewhere (H3 fails)");
    return pr;
}

// ---------------------------------------------------------------------------
// Hypothesis checks (H1)-(H4)
// ---------------------------------------------------------------------------

struct HypothesisReport {
    double lambda = 1.0;
    double c0 = 0.0;
    std::vector<std::pair<double, double>> omega_f_samples;
    double omega_slack = 0.0;  // omega_f(h*sqrt(n)) underestimation slack
    double dini_value = 0.0;
    double double_dini_value = 0.0;
    double a = 1.0;
    double w1p_proxy = 0.0;  // discrete (sum |grad A|^p h^n)^{1/p}
    bool h1_indicative = false;
    bool pass_h1 = false, pass_h2 = false, pass_h3 = false, pass_h4 = false;
    std::vector<std::string> notes;

    bool all_pass() const { return pass_h1 && pass_h2 && pass_h3 && pass_h4; }
};

inline HypothesisReport check_hypotheses(const ObstacleProblem& pr) {
    HypothesisReport rep;
    rep.a = pr.dini_a;
    const Grid& g = pr.grid;

    // H2: symmetry is structural; coercivity by nodewise eigenvalues
    const auto coer = check_coercivity(pr.A);
    rep.lambda = coer.lambda;
    rep.pass_h2 = coer.pass;
    if (!coer.pass)
        rep.notes.push_back("A not positive definite at node (" + std::to_string(coer.bad_i) +
                            "," + std::to_string(coer.bad_j) + ")");

    // H1: discrete W^{1,p} proxy, plus the closed-form criterion when known
    double acc = 0.0;
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            double fro2 = 0.0;
            for (int axis = 0; axis < 2; ++axis) {
                auto e11 = [&](int a, int b) { return pr.A.at(a, b).a11; };
                auto e12 = [&](int a, int b) { return pr.A.at(a, b).a12; };
                auto e22 = [&](int a, int b) { return pr.A.at(a, b).a22; };
                const double d11 = detail::node_derivative(g, e11, i, j, axis);
                const double d12 = detail::node_derivative(g, e12, i, j, axis);
                const double d22 = detail::node_derivative(g, e22, i, j, axis);
                fro2 += d11 * d11 + 2 * d12 * d12 + d22 * d22;
            }
            acc += std::pow(fro2, pr.p / 2.0) * g.h() * g.h();
        }
    }
    rep.w1p_proxy = std::pow(acc, 1.0 / pr.p);
    rep.pass_h1 = pr.coeff.w1p_member(pr.p, 2);
    rep.h1_indicative = false;

    // H3: positivity of f and Dini continuity of its modulus
    rep.c0 = pr.f.min();
    const double tmin = g.h(), tmax = 0.5 * std::sqrt(g.diameter_sq());
    std::vector<double> ts;
    for (int k = 0; k < 16; ++k)
        ts.push_back(tmin * std::pow(tmax / tmin, k / 15.0));
    rep.omega_f_samples = modulus_of_continuity(pr.f, ts);
    rep.omega_slack = g.h() * std::sqrt(2.0);

    Modulus mod =
        pr.analytic_modulus ? pr.omega_f : Modulus::from_samples(rep.omega_f_samples);
    const auto dini = dini_integral(mod, 1.0, 0.0);
    rep.dini_value = dini.value;
    rep.pass_h3 = rep.c0 > 0.0 && !dini.divergent;
    if (dini.divergent) rep.notes.push_back("omega_f fails the Dini condition");
    if (!(rep.c0 > 0.0)) rep.notes.push_back("f <= 0 somewhere (min over nodes reported as c0)");

    // H4: double Dini with the configured log power a >= 1
    const auto ddini = dini_integral(mod, 1.0, pr.dini_a);
    rep.double_dini_value = ddini.value;
    rep.pass_h4 = rep.c0 > 0.0 && !ddini.divergent;
    if (!pr.analytic_modulus) rep.notes.push_back("modulus of f sampled on the grid (indicative)");
    return rep;
}

}  // namespace oblab

#endif
