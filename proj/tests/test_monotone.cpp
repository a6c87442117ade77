#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "oblab/geometry.hpp"
#include "oblab/monotone.hpp"

using namespace oblab;

namespace {

constexpr double kPi = 3.14159265358979323846;

NormalizedFrame half_space_frame() {
    return analytic_frame({0, 0}, testutil::half_space,
                          [](Vec2 p) { return Vec2{std::max(p.x, 0.0), 0.0}; }, 1.0);
}

NormalizedFrame radial_frame() {
    return analytic_frame({0, 0}, testutil::radial_quadratic,
                          [](Vec2 p) { return p * 0.5; }, 1.0);
}

}  // namespace

TEST_CASE("sphere integrals") {
    auto one = [](Vec2) { return 1.0; };
    auto q = sphere_integral(one, {0, 0}, 0.5);
    CHECK(q.value == Catch::Approx(kPi).epsilon(1e-12));

    auto x2 = [](Vec2 p) { return p.x * p.x; };
    auto q2 = sphere_integral(x2, {0, 0}, 1.0);
    CHECK(q2.value == Catch::Approx(kPi).epsilon(1e-12));  // int cos^2 = pi

    auto x1 = [](Vec2 p) { return p.x; };
    for (double r : {0.2, 0.7}) {
        auto q3 = sphere_integral(x1, {0, 0}, r);
        CHECK(std::fabs(q3.value) < 1e-14);
    }

    CHECK_THROWS_AS(sphere_integral(one, {0, 0}, 0.5, 8), std::invalid_argument);

    // cross-check against the midpoint oracle on a generic smooth integrand
    auto gen = [](Vec2 p) { return std::exp(0.3 * p.x) * std::cos(p.y); };
    auto qi = sphere_integral(gen, {0.1, -0.2}, 0.6);
    CHECK(qi.value == Catch::Approx(oracle::circle_integral(gen, {0.1, -0.2}, 0.6)).epsilon(1e-9));
}

TEST_CASE("ball integrals") {
    auto one = [](Vec2) { return 1.0; };
    CHECK(ball_integral(one, {0, 0}, 1.0).value == Catch::Approx(kPi).epsilon(1e-12));

    auto r2 = [](Vec2 p) { return p.norm_sq(); };
    CHECK(ball_integral(r2, {0, 0}, 1.0).value == Catch::Approx(kPi / 2).epsilon(1e-12));

    CHECK(ball_integral([](Vec2 p) { return testutil::half_space(p); }, {0, 0}, 1.0).value ==
          Catch::Approx(kPi / 16).epsilon(1e-10));

    // disc oracle cross-check
    auto gen = [](Vec2 p) { return 1.0 + p.x * p.y + std::sin(p.x); };
    CHECK(ball_integral(gen, {0.2, 0.1}, 0.5).value ==
          Catch::Approx(oracle::disc_integral(gen, {0.2, 0.1}, 0.5)).epsilon(2e-3));
}

TEST_CASE("Weiss energy of the reference profiles") {
    auto hs = half_space_frame();
    auto rad = radial_frame();
    for (double r : {0.1, 0.25, 0.5}) {
        CHECK(weiss_energy(hs, r).value == Catch::Approx(kPi / 16).epsilon(1e-6));
        CHECK(weiss_energy(rad, r).value == Catch::Approx(kPi / 8).epsilon(1e-10));
    }
    // u == 0 on the ball
    auto zero = analytic_frame({0, 0}, [](Vec2) { return 0.0; },
                               [](Vec2) { return Vec2{0, 0}; }, 1.0);
    CHECK(weiss_energy(zero, 0.3).value == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("Euler relation: weiss_rhs vanishes on 2-homogeneous fields") {
    auto hs = half_space_frame();
    auto rad = radial_frame();
    for (double r : {0.1, 0.5}) {
        CHECK(weiss_rhs(hs, r).value <= 1e-6);
        CHECK(weiss_rhs(rad, r).value <= 1e-6);
    }
}

TEST_CASE("weiss_rhs on a non-homogeneous perturbation") {
    // u = 1/2 (x1)+^2 + 0.1 x1^3: <grad u, x> - 2u = 0.1 x1^3, so the RHS is
    // 2 r^{-6} * 0.01 * r^7 * int cos^6 = pi r / 80  (= pi/160 at r = 1/2)
    auto fr = analytic_frame(
        {0, 0}, [](Vec2 p) { return testutil::half_space(p) + 0.1 * p.x * p.x * p.x; },
        [](Vec2 p) {
            return Vec2{std::max(p.x, 0.0) + 0.3 * p.x * p.x, 0.0};
        },
        1.0);
    const double r = 0.5;
    CHECK(weiss_rhs(fr, r).value == Catch::Approx(kPi / 160.0).epsilon(0.01));
}

TEST_CASE("Monneau values on the radial profile") {
    auto rad = radial_frame();
    const SymMat2 qhalf = SymMat2::diag(0.5, 0.5);
    for (double r : {0.1, 0.3, 0.6}) {
        CHECK(monneau_value(rad, qhalf, r).value == Catch::Approx(0.0).margin(1e-14));
        // mismatched profile: constant pi/16 at every radius
        CHECK(monneau_value(rad, SymMat2::diag(1.0, 0.0), r).value ==
              Catch::Approx(kPi / 16).epsilon(1e-10));
    }
    // u_L == 0: the quantity reduces to the profile's own boundary integral
    auto zero = analytic_frame({0, 0}, [](Vec2) { return 0.0; },
                               [](Vec2) { return Vec2{0, 0}; }, 1.0);
    for (double r : {0.2, 0.7})
        CHECK(monneau_value(zero, qhalf, r).value == Catch::Approx(kPi / 8).epsilon(1e-10));

    CHECK_THROWS_AS(monneau_value(rad, SymMat2::diag(0.7, 0.7), 0.3), ProfileError);
    CHECK_THROWS_AS(monneau_value(rad, SymMat2::diag(1.5, -0.5), 0.3), ProfileError);
}

TEST_CASE("omega formula") {
    CHECK(omega(0.5, Modulus::zero(), 2, 4.0) == Catch::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(omega(0.125, Modulus::power(1.0, 1.0), 2, 3.0) ==
          Catch::Approx(0.125 + std::pow(0.125, 1.0 / 3.0)).epsilon(1e-12));
    CHECK(omega(0.125, Modulus::power(1.0, 1.0), 2, 3.0) == Catch::Approx(0.625).epsilon(1e-12));
    // r -> 0+ limit
    CHECK(omega(1e-12, Modulus::power(1.0, 0.5), 2, 4.0) < 1e-5);
    CHECK(omega(0.0, Modulus::zero(), 2, 4.0) == 0.0);
}

TEST_CASE("corrections reduce to closed forms") {
    OmegaSpec spec{Modulus::power(1.0, 1.0 / 3.0), 0.5};
    // int_0^r (t^{1/3} + t^{1/2})/t dt = 3 r^{1/3} + 2 r^{1/2}
    CHECK(weiss_correction(spec, 0.2) ==
          Catch::Approx(3 * std::pow(0.2, 1.0 / 3) + 2 * std::sqrt(0.2)).epsilon(1e-10));
    // double integral: 9 r^{1/3} + 4 r^{1/2}
    CHECK(monneau_correction(spec, 0.2) ==
          Catch::Approx(9 * std::pow(0.2, 1.0 / 3) + 4 * std::sqrt(0.2)).epsilon(1e-10));

    // sampled modulus path agrees with the closed form
    std::vector<std::pair<double, double>> samples;
    for (int k = 0; k < 14; ++k) {
        const double t = 0.002 * std::pow(250.0, k / 13.0);
        samples.push_back({t, std::pow(t, 1.0 / 3.0)});
    }
    OmegaSpec sampled{Modulus::from_samples(samples), 0.5};
    CHECK(weiss_correction(sampled, 0.2) ==
          Catch::Approx(weiss_correction(spec, 0.2)).epsilon(0.02));
    CHECK(monneau_correction(sampled, 0.2) ==
          Catch::Approx(monneau_correction(spec, 0.2)).epsilon(0.05));
}

namespace {
EnergyCurve curve_from(const std::vector<double>& radii, const std::vector<double>& values) {
    EnergyCurve c;
    c.kind = EnergyCurve::Kind::Weiss;
    c.radii = radii;
    c.values = values;
    c.quad_error.assign(radii.size(), 0.0);
    c.rhs.assign(radii.size(), 0.0);
    return c;
}
}  // namespace

TEST_CASE("verdict: measured constant") {
    const auto radii = geometric_radii(0.01, 0.5, 12);

    SECTION("constant curve passes with C_min = 0") {
        auto c = curve_from(radii, std::vector<double>(radii.size(), 0.7));
        auto rep = verdict(c, OmegaSpec{Modulus::zero(), 0.5});
        CHECK(rep.C_min == 0.0);
        CHECK(rep.pass);
        CHECK(rep.violations.empty());
    }

    SECTION("value = 1 - r^{1/3} with omega = t^{1/3} recovers C = 1/3") {
        // correction c(r) = 3 r^{1/3} exactly cancels at C = 1/3
        std::vector<double> vals;
        for (double r : radii) vals.push_back(1.0 - std::cbrt(r));
        auto c = curve_from(radii, vals);
        // beta large so the power tail cannot dominate the measured constant
        OmegaSpec spec{Modulus::power(1.0, 1.0 / 3.0), 1.0 - 1e-9};
        auto rep = verdict(c, spec);
        CHECK(rep.C_min == Catch::Approx(1.0 / 3.0).epsilon(0.05));
        CHECK(rep.pass);
        CHECK_FALSE(rep.violations.empty());
    }

    SECTION("strictly increasing curve has C_min = 0") {
        std::vector<double> vals;
        for (double r : radii) vals.push_back(r);
        auto rep = verdict(curve_from(radii, vals), OmegaSpec{Modulus::zero(), 0.5});
        CHECK(rep.C_min == 0.0);
        CHECK(rep.pass);
    }

    SECTION("adding a nondecreasing perturbation cannot raise C_min") {
        std::vector<double> vals, vals2;
        for (double r : radii) {
            vals.push_back(1.0 - std::cbrt(r) + 0.05 * std::sin(20 * r));
            vals2.push_back(vals.back() + 2 * r);  // + nondecreasing
        }
        OmegaSpec spec{Modulus::power(1.0, 1.0 / 3.0), 0.9};
        CHECK(verdict(curve_from(radii, vals2), spec).C_min <=
              verdict(curve_from(radii, vals), spec).C_min + 1e-12);
    }

    SECTION("needs at least 8 radii") {
        auto few = geometric_radii(0.1, 0.5, 5);
        CHECK_THROWS_AS(verdict(curve_from(few, std::vector<double>(5, 1.0)),
                                OmegaSpec{Modulus::zero(), 0.5}),
                        std::invalid_argument);
    }

    SECTION("failing reference constant") {
        std::vector<double> vals;
        for (double r : radii) vals.push_back(1.0 - std::cbrt(r));
        OmegaSpec spec{Modulus::power(1.0, 1.0 / 3.0), 1.0 - 1e-9};
        auto rep = verdict(curve_from(radii, vals), spec, 0.1);  // < 1/3 needed
        CHECK_FALSE(rep.pass);
    }
}

TEST_CASE("verdict phi0 extrapolation brackets the limit of exact curves") {
    auto rad = radial_frame();
    auto c = weiss_curve(rad, geometric_radii(0.05, 0.5, 10));
    auto rep = verdict(c, OmegaSpec{Modulus::zero(), 0.5});
    CHECK(rep.phi0_estimate == Catch::Approx(kPi / 8).margin(rep.phi0_uncertainty + 1e-6));
}

TEST_CASE("Weiss constancy invariant on exact homogeneous solutions") {
    const NormalizedFrame frames[] = {half_space_frame(), radial_frame()};
    for (const auto& fr : frames) {
        auto c = weiss_curve(fr, geometric_radii(0.05, 0.8, 9));
        for (size_t a = 0; a + 1 < c.values.size(); ++a)
            CHECK(std::fabs(c.values[a] - c.values[a + 1]) <=
                  c.quad_error[a] + c.quad_error[a + 1] + 1e-7);
    }
}

TEST_CASE("Phi_v identity: Weiss energy of polynomial profiles equals the ball integral") {
    // for v = 1/2 <Qx, x> with tr Q = 1: Phi_v(0, r) = int_{B_1} v = pi/8
    for (int k = 0; k < 6; ++k) {
        const double lam = testutil::urand(0.0, 1.0);
        const double th = testutil::urand(0.0, 2 * kPi);
        const double c = std::cos(th), s = std::sin(th);
        const SymMat2 Q{lam * c * c + (1 - lam) * s * s, (2 * lam - 1) * c * s,
                        lam * s * s + (1 - lam) * c * c};
        auto fr = analytic_frame({0, 0}, [Q](Vec2 p) { return 0.5 * Q.quad(p); },
                                 [Q](Vec2 p) { return Q.apply(p); }, 1.0);
        const double phi = weiss_energy(fr, 0.6).value;
        const double ball = ball_integral([Q](Vec2 p) { return 0.5 * Q.quad(p); }, {0, 0}, 1.0).value;
        CHECK(phi == Catch::Approx(ball).epsilon(0.005));
        CHECK(ball == Catch::Approx(kPi / 8 * Q.trace()).epsilon(1e-10));
    }
}

TEST_CASE("Monneau scale invariance on exact profiles") {
    auto rad = radial_frame();
    const SymMat2 q = SymMat2::diag(0.8, 0.2);
    std::vector<double> vals;
    for (double r : {0.1, 0.2, 0.4, 0.8}) vals.push_back(monneau_value(rad, q, r).value);
    for (size_t k = 1; k < vals.size(); ++k)
        CHECK(vals[k] == Catch::Approx(vals[0]).epsilon(1e-9));
}

TEST_CASE("freezing defect") {
    SECTION("identity data: zero defect") {
        auto fr = half_space_frame();  // C = Id, f_ratio = 1
        TestField v{testutil::half_space, [](Vec2 p) { return Vec2{std::max(p.x, 0.0), 0.0}; }};
        auto rep = freezing_defect(fr, 0.25, v);
        CHECK(rep.lhs <= 1e-12);
        CHECK(rep.within_bound);
        // int |grad v|^2 = pi/8 and int 2v = pi/8 over B_1
        CHECK(rep.energy == Catch::Approx(kPi / 4).epsilon(1e-8));
    }

    SECTION("negative test field rejected") {
        auto fr = half_space_frame();
        TestField v{[](Vec2 p) { return p.x; }, [](Vec2) { return Vec2{1, 0}; }};
        CHECK_THROWS_AS(freezing_defect(fr, 0.25, v), std::invalid_argument);
    }

    SECTION("Holder coefficients: defect below the bound, slope >= alpha") {
        // C(x) = (1 + eps |x|^alpha) Id about x0 = z: lhs ~ eps r^alpha E_grad
        const double eps = 0.1, alpha = 0.5;
        auto fr = analytic_frame(
            {0, 0}, testutil::half_space,
            [](Vec2 p) { return Vec2{std::max(p.x, 0.0), 0.0}; }, 1.0, 3.0,
            [eps, alpha](Vec2 p) {
                return SymMat2::identity() * (1.0 + eps * std::pow(p.norm(), alpha));
            });
        TestField v{testutil::half_space, [](Vec2 p) { return Vec2{std::max(p.x, 0.0), 0.0}; }};
        std::vector<double> rs{0.05, 0.1, 0.2, 0.4}, lhs;
        for (double r : rs) {
            auto rep = freezing_defect(fr, r, v);
            CHECK(rep.within_bound);
            CHECK(rep.lhs > 0.0);
            lhs.push_back(rep.lhs / rep.energy);
        }
        const double slope = oracle::loglog_slope(rs, lhs);
        CHECK(slope >= std::min(alpha, 1.0 - 2.0 / 3.0) - 0.15);
        CHECK(slope == Catch::Approx(alpha).margin(0.05));
    }
}

TEST_CASE("curve CSV format") {
    auto rad = radial_frame();
    auto c = weiss_curve(rad, geometric_radii(0.05, 0.5, 8));
    auto rep = verdict(c, OmegaSpec{Modulus::zero(), 0.5});
    std::stringstream ss;
    write_curve_csv(ss, rep);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "r,value,quad_err,correction,corrected_value,rhs_lower_bound");
    int rows = 0;
    for (std::string line; std::getline(ss, line);) ++rows;
    CHECK(rows == 8);
}
