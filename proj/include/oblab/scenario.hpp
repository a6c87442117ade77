#ifndef OBLAB_SCENARIO_HPP
#define OBLAB_SCENARIO_HPP

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oblab/blowup.hpp"

namespace oblab {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration file: `key = value` lines, # comments, dotted keys
// ---------------------------------------------------------------------------

struct Config {
    std::map<std::string, std::string> kv;
    std::map<std::string, int> lines;

    bool has(const std::string& k) const { return kv.count(k) > 0; }

    std::string get(const std::string& k, const std::string& fallback = "") const {
        auto it = kv.find(k);
        return it == kv.end() ? fallback : it->second;
    }

    std::string require(const std::string& k) const {
        auto it = kv.find(k);
        if (it == kv.end()) throw ConfigError("missing required key '" + k + "'", 0);
        return it->second;
    }

    double number(const std::string& k, std::optional<double> fallback = std::nullopt) const {
        auto it = kv.find(k);
        if (it == kv.end()) {
            if (fallback) return *fallback;
            throw ConfigError("missing required numeric key '" + k + "'", 0);
        }
        try {
            size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw ConfigError("key '" + k + "' is not a number: " + it->second,
                              lines.count(k) ? lines.at(k) : 0);
        }
    }

    std::vector<std::string> tokens(const std::string& k) const {
        std::istringstream in(get(k));
        std::vector<std::string> out;
        for (std::string t; in >> t;) out.push_back(t);
        return out;
    }
};

inline Config parse_config(std::istream& is) {
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::istringstream probe(line);
            std::string t;
            if (probe >> t)
                throw ConfigError("expected 'key = value', got: " + line, line_no);
            continue;
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        cfg.kv[key] = value;
        cfg.lines[key] = line_no;
    }
    return cfg;
}

inline Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path, 0);
    return parse_config(in);
}

// ---------------------------------------------------------------------------
// Scenario assembly from config keys
// ---------------------------------------------------------------------------

struct AnalysisPlan {
    std::string points_selector;  // "nearest x y" | "all" | "every k"
    double rmin = 0.0, rmax = 0.0;
    int radius_count = 12;
    std::vector<std::string> analyses;  // weiss monneau classify growth freezing
    std::optional<SymMat2> monneau_q;
};

struct Scenario {
    std::string name;
    Config raw;
    Grid grid;
    CoefficientFamily coeff;
    ScalarDescriptor psi_desc, h_desc;
    std::function<double(Vec2)> g_fn;
    double p = 4.0, dini_a = 1.0;
    double scale_all = 1.0;
    std::string solver = "psor";
    double solver_tol = -1.0, solver_omega = 1.6;
    int quad_nodes = 256;
    std::vector<AnalysisPlan> plans;
};

namespace detail {

inline CoefficientFamily parse_family(const Config& cfg) {
    const std::string fam = cfg.get("coefficients.family", "identity");
    const auto par = cfg.tokens("coefficients.params");
    auto num = [&](size_t i, double fb) {
        return i < par.size() ? std::stod(par[i]) : fb;
    };
    if (fam == "identity") return CoefficientFamily::identity();
    if (fam == "scaled") return CoefficientFamily::scaled(num(0, 1.0));
    if (fam == "diagonal") return CoefficientFamily::diagonal(num(0, 1.0), num(1, 1.0));
    if (fam == "holder")
        return CoefficientFamily::holder(num(0, 0.1), num(1, 0.5), {num(2, 0.0), num(3, 0.0)});
    if (fam == "rotation")
        return CoefficientFamily::rotation(num(0, 1.5), num(1, 0.75), num(2, 0.5), num(3, 0.0));
    throw ConfigError("unknown coefficients.family: " + fam, 0);
}

inline ScalarDescriptor parse_obstacle(const Config& cfg) {
    const auto t = cfg.tokens("obstacle");
    if (t.empty() || t[0] == "zero") return ScalarDescriptor::zero();
    if (t[0] == "paraboloid" && t.size() >= 2)
        return ScalarDescriptor::paraboloid(std::stod(t[1]));
    if (t[0] == "affine" && t.size() >= 4)
        return ScalarDescriptor::affine({std::stod(t[1]), std::stod(t[2])}, std::stod(t[3]));
    throw ConfigError("unknown obstacle spec: " + cfg.get("obstacle"), 0);
}

inline ScalarDescriptor parse_rhs(const Config& cfg, double grid_h) {
    const auto t = cfg.tokens("rhs_h");
    if (t.empty()) return ScalarDescriptor::constant(1.0);
    if (t[0] == "constant" && t.size() >= 2) return ScalarDescriptor::constant(std::stod(t[1]));
    if (t[0] == "radial_power" && t.size() >= 6)
        return ScalarDescriptor::radial_power(std::stod(t[1]), std::stod(t[2]), std::stod(t[3]),
                                              {std::stod(t[4]), std::stod(t[5])});
    if (t[0] == "radial_manufactured" && t.size() >= 3) {
        // f = div(A grad |x-z|^2/4) for the Holder family, plus an excess
        // of kappa h^2 pinning the discrete contact at z
        const double eps = std::stod(t[1]), alpha = std::stod(t[2]);
        const double kappa = t.size() >= 4 ? std::stod(t[3]) : 0.0;
        const double zx = t.size() >= 6 ? std::stod(t[4]) : 0.0;
        const double zy = t.size() >= 6 ? std::stod(t[5]) : 0.0;
        return ScalarDescriptor::radial_power(1.0 + kappa * grid_h * grid_h,
                                              eps * (1.0 + alpha / 2.0), alpha, {zx, zy});
    }
    throw ConfigError("unknown rhs_h spec: " + cfg.get("rhs_h"), 0);
}

inline std::function<double(Vec2)> parse_boundary(const Config& cfg) {
    const auto t = cfg.tokens("boundary_g");
    if (t.empty()) throw ConfigError("missing boundary_g", 0);
    if (t[0] == "halfspace") {
        const double shift = t.size() >= 2 ? std::stod(t[1]) : 0.0;
        return [shift](Vec2 p) {
            const double v = std::max(p.x - shift, 0.0);
            return 0.5 * v * v;
        };
    }
    if (t[0] == "radial") {
        const double scale = t.size() >= 2 ? std::stod(t[1]) : 0.25;
        return [scale](Vec2 p) { return scale * p.norm_sq(); };
    }
    if (t[0] == "constant" && t.size() >= 2) {
        const double c = std::stod(t[1]);
        return [c](Vec2) { return c; };
    }
    throw ConfigError("unknown boundary_g spec: " + cfg.get("boundary_g"), 0);
}

inline ScalarDescriptor scale_descriptor(const ScalarDescriptor& d, double s) {
    if (s == 1.0) return d;
    ScalarDescriptor out = d;
    switch (d.kind) {
        case ScalarDescriptor::Kind::Zero:
            break;
        case ScalarDescriptor::Kind::Constant:
        case ScalarDescriptor::Kind::Affine:
            out.c0 *= s;
            out.slope = out.slope * s;
            break;
        case ScalarDescriptor::Kind::Paraboloid:
            out.c0 *= s;
            break;
        case ScalarDescriptor::Kind::RadialPower:
            out.c0 *= s;
            out.amp *= s;
            break;
        case ScalarDescriptor::Kind::Custom: {
            auto f = d.fn;
            out.fn = [f, s](Vec2 p) { return s * f(p); };
            break;
        }
    }
    return out;
}

}  // namespace detail

inline Scenario load_scenario(const Config& cfg) {
    Scenario sc;
    sc.raw = cfg;
    sc.name = cfg.get("name", "unnamed");

    const auto dom = cfg.tokens("domain");
    if (dom.size() != 4) throw ConfigError("domain must be: ox oy ex ey", 0);
    const int res = int(cfg.number("resolution"));
    sc.grid = Grid({std::stod(dom[0]), std::stod(dom[1])}, {std::stod(dom[2]), std::stod(dom[3])},
                   res, int(std::stod(dom[3]) / std::stod(dom[2]) * (res - 1)) + 1);

    sc.scale_all = cfg.number("scale_all", 1.0);
    sc.coeff = detail::parse_family(cfg);
    sc.coeff.scale *= sc.scale_all;
    sc.psi_desc = detail::parse_obstacle(cfg);
    sc.h_desc = detail::scale_descriptor(detail::parse_rhs(cfg, sc.grid.h()), sc.scale_all);
    sc.g_fn = detail::parse_boundary(cfg);
    sc.p = cfg.number("p", 4.0);
    sc.dini_a = cfg.number("dini_a", 1.0);
    sc.solver = cfg.get("solver.type", "psor");
    sc.solver_tol = cfg.number("solver.tol", -1.0);
    sc.solver_omega = cfg.number("solver.omega", 1.6);
    sc.quad_nodes = int(cfg.number("quad_nodes", 256));

    for (int k = 1;; ++k) {
        const std::string prefix = "analysis." + std::to_string(k) + ".";
        if (!cfg.has(prefix + "run")) break;
        AnalysisPlan plan;
        plan.points_selector = cfg.get(prefix + "points", "all");
        const auto rr = cfg.tokens(prefix + "radii");
        if (rr.size() >= 3) {
            plan.rmin = std::stod(rr[0]);
            plan.rmax = std::stod(rr[1]);
            plan.radius_count = std::max(8, int(std::stod(rr[2])));
        } else {
            plan.rmin = 0.0;  // resolved per point from the frame
            plan.rmax = 0.0;
            plan.radius_count = 12;
        }
        {
            std::istringstream in(cfg.get(prefix + "run"));
            for (std::string t; in >> t;) plan.analyses.push_back(t);
        }
        if (cfg.has(prefix + "monneau_q")) {
            const auto q = cfg.tokens(prefix + "monneau_q");
            if (q.size() != 3)
                throw ConfigError("monneau_q must be: q11 q12 q22", 0);
            plan.monneau_q = SymMat2(std::stod(q[0]), std::stod(q[1]), std::stod(q[2]));
        }
        sc.plans.push_back(std::move(plan));
    }
    return sc;
}

// ---------------------------------------------------------------------------
// Running a scenario
// ---------------------------------------------------------------------------

struct RunOptions {
    std::string solver_override;  // empty keeps the scenario's choice
    bool strict = false;
    int threads = 1;
};

struct RunResult {
    int exit_code = 0;
    json summary;
};

namespace detail {

inline double round9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::atof(buf);
}

inline std::vector<Vec2> select_points(const CoincidenceGeometry& geo,
                                       const std::string& selector) {
    std::istringstream in(selector);
    std::string kind;
    in >> kind;
    std::vector<Vec2> out;
    if (kind == "nearest") {
        double x = 0, y = 0;
        in >> x >> y;
        out.push_back(geo.snap({x, y}));
    } else if (kind == "all") {
        out = geo.boundary_points;
    } else if (kind == "every") {
        int k = 1;
        in >> k;
        k = std::max(1, k);
        for (size_t i = 0; i < geo.boundary_points.size(); i += k)
            out.push_back(geo.boundary_points[i]);
    } else {
        throw ConfigError("unknown point selector: " + selector, 0);
    }
    return out;
}

inline json quad_json(const SymMat2& q) {
    return json::array({round9(q.a11), round9(q.a12), round9(q.a22)});
}

}  // namespace detail

inline double testfield_halfspace(Vec2 q) {
    const double t = std::max(q.x, 0.0);
    return 0.5 * t * t;
}

/// Execute one scenario: solve, verify hypotheses, extract the free
/// boundary, run every analysis in plan order, and write the artifact files
/// into out_dir. Deterministic: fixed sweep order, fixed quadrature nodes,
/// results gathered per plan and written in order.
inline RunResult run_scenario(const Scenario& sc, const std::string& out_dir,
                              const RunOptions& opts = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    RunResult result;
    json& summary = result.summary;
    summary["scenario"] = sc.name;
    summary["resolution"] = sc.grid.nx();
    summary["h"] = detail::round9(sc.grid.h());

    auto pr = make_problem(sc.grid, sc.coeff, sc.psi_desc, sc.h_desc, sc.g_fn, sc.p, sc.dini_a);
    const auto hyp = check_hypotheses(pr);
    summary["hypotheses"] = {{"lambda", detail::round9(hyp.lambda)},
                             {"c0", detail::round9(hyp.c0)},
                             {"dini_value", detail::round9(hyp.dini_value)},
                             {"double_dini_value", detail::round9(hyp.double_dini_value)},
                             {"w1p_proxy", detail::round9(hyp.w1p_proxy)},
                             {"pass_h1", hyp.pass_h1},
                             {"pass_h2", hyp.pass_h2},
                             {"pass_h3", hyp.pass_h3},
                             {"pass_h4", hyp.pass_h4},
                             {"notes", hyp.notes}};
    const bool hyp_failed = !hyp.all_pass();
    if (hyp_failed && opts.strict) {
        summary["status"] = "hypothesis check failed (strict)";
        std::ofstream(fs::path(out_dir) / "summary.json") << summary.dump(2) << "\n";
        result.exit_code = 2;
        return result;
    }

    const std::string solver = opts.solver_override.empty() ? sc.solver : opts.solver_override;
    summary["solver"] = solver;
    DiscreteSolution sol;
    try {
        auto sys = assemble(pr);
        if (solver == "psor") {
            sol = solve_psor(sys, sc.solver_tol, sc.solver_omega);
        } else if (solver == "activeset") {
            sol = solve_active_set(sys, sc.solver_tol);
        } else if (solver == "both") {
            auto a = solve_psor(sys, sc.solver_tol, sc.solver_omega);
            auto b = solve_active_set(sys, sc.solver_tol);
            double gap = 0.0;
            for (int k = 0; k < sys.n(); ++k)
                gap = std::max(gap, std::fabs(a.u.values()[k] - b.u.values()[k]));
            summary["solver_agreement_gap"] = detail::round9(gap);
            if (gap > 10.0 * a.tol)
                throw SolverError("psor and active-set solutions disagree", gap);
            sol = std::move(b);
        } else {
            throw ConfigError("unknown solver: " + solver, 0);
        }
        const auto resid = residual_check(sys, sol);
        summary["solve"] = {{"iterations", sol.iterations},
                            {"energy", detail::round9(sol.energy_value)},
                            {"complementarity_residual",
                             detail::round9(sol.complementarity_residual)},
                            {"pde_residual_pass", resid.pass},
                            {"max_inactive_residual", detail::round9(resid.max_inactive_residual)},
                            {"min_active_multiplier",
                             detail::round9(resid.min_active_multiplier)}};
    } catch (const SolverError& e) {
        summary["status"] = std::string("solver failure: ") + e.what();
        std::ofstream(fs::path(out_dir) / "summary.json") << summary.dump(2) << "\n";
        result.exit_code = 1;
        return result;
    }
    {
        std::ofstream f(fs::path(out_dir) / "solution.dat");
        dump_solution(f, sol);
    }

    const OmegaSpec spec = OmegaSpec::for_problem(
        pr.analytic_modulus ? pr.omega_f : Modulus::from_samples(hyp.omega_f_samples), 2, pr.p);
    summary["omega_beta"] = detail::round9(spec.beta);

    std::optional<CoincidenceGeometry> geo;
    try {
        geo = extract_free_boundary(sol);
        summary["free_boundary_points"] = geo->boundary_points.size();
    } catch (const GeometryError& e) {
        summary["free_boundary_points"] = 0;
        summary["free_boundary_note"] = e.what();
    }

    summary["analyses"] = json::array();
    const TestField freezing_fields[2] = {
        {[](Vec2 q) { return testfield_halfspace(q); },
         [](Vec2 q) { return Vec2{std::max(q.x, 0.0), 0.0}; }},
        {[](Vec2 q) { return 0.25 * q.norm_sq(); }, [](Vec2 q) { return q * 0.5; }},
    };
    const char* freezing_names[2] = {"halfspace_profile", "polynomial_profile"};

    for (size_t plan_idx = 0; plan_idx < sc.plans.size(); ++plan_idx) {
        const AnalysisPlan& plan = sc.plans[plan_idx];
        json plan_json;
        plan_json["selector"] = plan.points_selector;
        plan_json["runs"] = plan.analyses;
        plan_json["points"] = json::array();
        if (!geo) {
            plan_json["note"] = "no free boundary; analysis skipped";
            summary["analyses"].push_back(plan_json);
            continue;
        }
        const auto candidates = detail::select_points(*geo, plan.points_selector);
        if (candidates.empty()) plan_json["note"] = "selector produced no points";

        // one job per point; results gathered and written in order
        auto analyze_point = [&](Vec2 cand) -> json {
            json pj;
            double snap_d = 0.0;
            const Vec2 x0 = geo->snap(cand, &snap_d);
            pj["x0"] = {detail::round9(x0.x), detail::round9(x0.y)};
            pj["snap_distance"] = detail::round9(snap_d);
            NormalizedFrame fr;
            try {
                fr = build_frame(pr, sol, x0);
            } catch (const std::exception& e) {
                pj["skipped"] = e.what();
                return pj;
            }
            const double lo = std::max({plan.rmin, 8.0 * sc.grid.h() * fr.L_norm,
                                        4.0 * sc.grid.h() / fr.L_norm});
            const double hi = std::min(plan.rmax > 0 ? plan.rmax : 0.9 * fr.r_max,
                                       0.98 * fr.r_max);
            if (!(hi > lo * 1.01)) {
                pj["skipped"] = "empty resolvable radius range";
                return pj;
            }
            const auto radii = geometric_radii(lo, hi, plan.radius_count);
            pj["radii"] = {detail::round9(lo), detail::round9(hi), plan.radius_count};

            for (const std::string& kind : plan.analyses) {
                if (kind == "weiss") {
                    auto curve = weiss_curve(fr, radii, sc.quad_nodes);
                    auto rep = verdict(curve, spec);
                    pj["weiss"] = {{"C_min", detail::round9(rep.C_min)},
                                   {"pass", rep.pass},
                                   {"phi0", detail::round9(rep.phi0_estimate)},
                                   {"uncertainty", detail::round9(rep.phi0_uncertainty)},
                                   {"violations", rep.violations.size()}};
                    std::ostringstream csv;
                    write_curve_csv(csv, rep);
                    pj["weiss"]["csv"] = csv.str();
                } else if (kind == "monneau") {
                    SymMat2 Q = SymMat2::diag(0.5, 0.5);
                    if (plan.monneau_q) {
                        Q = *plan.monneau_q;
                    } else {
                        auto fit = fit_profile(rescale_frame(
                            fr, std::max(radii.front(), 4 * sc.grid.h() / fr.L_norm)));
                        if (fit.kind != ProfileFit::Kind::Polynomial) {
                            pj["monneau"] = {{"skipped", "fitted profile is not polynomial"}};
                            continue;
                        }
                        Q = fit.Q;
                        // project onto the admissible set (trace one, PSD)
                        const double tr = Q.trace();
                        Q = SymMat2(Q.a11 / tr, Q.a12 / tr, Q.a22 / tr);
                    }
                    auto curve = monneau_curve(fr, Q, radii, sc.quad_nodes);
                    auto rep = verdict(curve, spec);
                    pj["monneau"] = {{"Q", detail::quad_json(Q)},
                                     {"C_min", detail::round9(rep.C_min)},
                                     {"pass", rep.pass},
                                     {"M_at_rmin", detail::round9(curve.values.front())},
                                     {"M_at_rmax", detail::round9(curve.values.back())}};
                    std::ostringstream csv;
                    write_curve_csv(csv, rep);
                    pj["monneau"]["csv"] = csv.str();
                } else if (kind == "classify") {
                    auto res = classify_point(pr, sol, *geo, x0, radii, spec, sc.quad_nodes);
                    pj["classify"] = {{"phi0", detail::round9(res.phi0)},
                                      {"uncertainty", detail::round9(res.uncertainty)},
                                      {"verdict", to_string(res.verdict)},
                                      {"C_min", detail::round9(res.weiss_C_min)}};
                    if (res.fit) {
                        pj["classify"]["fit_kind"] =
                            res.fit->kind == ProfileFit::Kind::Polynomial ? "polynomial"
                                                                          : "halfspace";
                        pj["classify"]["fit_residual"] = detail::round9(res.fit->residual);
                        if (res.fit->kind == ProfileFit::Kind::Polynomial)
                            pj["classify"]["Q"] = detail::quad_json(res.fit->Q);
                        else
                            pj["classify"]["e"] = {detail::round9(res.fit->direction.x),
                                                   detail::round9(res.fit->direction.y)};
                    }
                } else if (kind == "growth") {
                    try {
                        auto rep = growth_constants(sol, *geo, x0, radii);
                        pj["growth"] = {{"theta_lower", detail::round9(rep.theta_lower)},
                                        {"C_upper", detail::round9(rep.C_upper)}};
                        std::ostringstream csv;
                        write_growth_csv(csv, rep);
                        pj["growth"]["csv"] = csv.str();
                    } catch (const GeometryError& e) {
                        pj["growth"] = {{"skipped", e.what()}};
                    }
                } else if (kind == "freezing") {
                    json fz = json::array();
                    for (int field_idx = 0; field_idx < 2; ++field_idx) {
                        json fj;
                        fj["field"] = freezing_names[field_idx];
                        fj["rows"] = json::array();
                        std::vector<double> rs, ratio;
                        for (int k = 0; k < 5; ++k) {
                            const double r = hi * std::pow(0.5, k);
                            if (r < lo) break;
                            auto rep = freezing_defect(fr, r, freezing_fields[field_idx],
                                                       sc.quad_nodes);
                            fj["rows"].push_back({{"r", detail::round9(r)},
                                                  {"lhs", detail::round9(rep.lhs)},
                                                  {"rhs", detail::round9(rep.rhs)},
                                                  {"energy", detail::round9(rep.energy)},
                                                  {"within_bound", rep.within_bound}});
                            if (rep.lhs > 10.0 * rep.quad_error) {
                                rs.push_back(r);
                                ratio.push_back(rep.lhs / rep.energy);
                            }
                        }
                        if (rs.size() >= 3) {
                            double sx = 0, sy = 0, sxx = 0, sxy = 0;
                            for (size_t k = 0; k < rs.size(); ++k) {
                                const double lx = std::log(rs[k]), ly = std::log(ratio[k]);
                                sx += lx;
                                sy += ly;
                                sxx += lx * lx;
                                sxy += lx * ly;
                            }
                            const double n_pts = double(rs.size());
                            fj["slope"] = detail::round9((n_pts * sxy - sx * sy) /
                                                         (n_pts * sxx - sx * sx));
                        } else {
                            fj["slope"] = nullptr;  // at the quadrature noise floor
                        }
                        fz.push_back(fj);
                    }
                    pj["freezing"] = fz;
                } else {
                    throw ConfigError("unknown analysis kind: " + kind, 0);
                }
            }
            return pj;
        };

        std::vector<json> results(candidates.size());
        const int threads = std::max(1, opts.threads);
        for (size_t base = 0; base < candidates.size(); base += threads) {
            const size_t hi_idx = std::min(candidates.size(), base + threads);
            std::vector<std::future<json>> futs;
            for (size_t i = base + 1; i < hi_idx; ++i)
                futs.push_back(std::async(std::launch::async, analyze_point, candidates[i]));
            results[base] = analyze_point(candidates[base]);
            for (size_t i = base + 1; i < hi_idx; ++i) results[i] = futs[i - base - 1].get();
        }
        for (auto& r : results) plan_json["points"].push_back(std::move(r));
        summary["analyses"].push_back(std::move(plan_json));
    }

    // pull embedded CSVs out into files, in plan order
    for (size_t plan_idx = 0; plan_idx < summary["analyses"].size(); ++plan_idx) {
        auto& plan_json = summary["analyses"][plan_idx];
        if (!plan_json.contains("points")) continue;
        std::vector<ClassificationResult> class_rows;
        for (size_t pi = 0; pi < plan_json["points"].size(); ++pi) {
            auto& pj = plan_json["points"][pi];
            const std::string tag = std::to_string(plan_idx + 1) + "_" + std::to_string(pi);
            for (const char* kind : {"weiss", "monneau", "growth"}) {
                if (pj.contains(kind) && pj[kind].contains("csv")) {
                    const std::string fname = std::string(kind) + "_" + tag + ".csv";
                    std::ofstream(fs::path(out_dir) / fname)
                        << pj[kind]["csv"].get<std::string>();
                    pj[kind].erase("csv");
                    pj[kind]["file"] = fname;
                }
            }
            if (pj.contains("classify")) {
                ClassificationResult row;
                row.x0 = {pj["x0"][0].get<double>(), pj["x0"][1].get<double>()};
                row.phi0 = pj["classify"]["phi0"].get<double>();
                row.uncertainty = pj["classify"]["uncertainty"].get<double>();
                const std::string v = pj["classify"]["verdict"].get<std::string>();
                row.verdict = v == "Regular"    ? PointVerdict::Regular
                              : v == "Singular" ? PointVerdict::Singular
                                                : PointVerdict::Unresolved;
                if (pj["classify"].contains("Q")) {
                    ProfileFit f;
                    f.kind = ProfileFit::Kind::Polynomial;
                    f.Q = SymMat2(pj["classify"]["Q"][0].get<double>(),
                                  pj["classify"]["Q"][1].get<double>(),
                                  pj["classify"]["Q"][2].get<double>());
                    f.residual = pj["classify"]["fit_residual"].get<double>();
                    row.fit = f;
                } else if (pj["classify"].contains("e")) {
                    ProfileFit f;
                    f.kind = ProfileFit::Kind::Halfspace;
                    f.direction = {pj["classify"]["e"][0].get<double>(),
                                   pj["classify"]["e"][1].get<double>()};
                    f.residual = pj["classify"]["fit_residual"].get<double>();
                    row.fit = f;
                }
                class_rows.push_back(row);
            }
        }
        if (!class_rows.empty()) {
            const std::string fname = "classify_" + std::to_string(plan_idx + 1) + ".csv";
            std::ofstream f(fs::path(out_dir) / fname);
            write_classification_csv(f, class_rows);
            plan_json["classify_file"] = fname;
        }
    }

    summary["status"] = hyp_failed ? "completed with hypothesis warnings" : "ok";
    std::ofstream(fs::path(out_dir) / "summary.json") << summary.dump(2) << "\n";
    result.exit_code = hyp_failed ? 2 : 0;
    return result;
}

// ---------------------------------------------------------------------------
// Comparing runs (refinement studies)
// ---------------------------------------------------------------------------

struct CompareResult {
    int exit_code = 0;
    std::string report;
    bool refinement_violation = false;
};

/// Per-point deltas of C_min, phi0 and verdicts between two runs of the same
/// scenario at different resolutions. Flags C_min growth beyond factor 1.5
/// and phi0 gaps above the combined uncertainty.
inline CompareResult compare_runs(const json& a, const json& b) {
    CompareResult out;
    std::ostringstream os;
    os.precision(9);
    if (a["scenario"] != b["scenario"])
        throw std::invalid_argument("compare: scenario names differ");
    if (a["analyses"].size() != b["analyses"].size())
        throw std::invalid_argument("compare: analysis plans differ");
    os << "scenario " << a["scenario"].get<std::string>() << ": h=" << a["h"].get<double>()
       << " vs h=" << b["h"].get<double>() << "\n";
    for (size_t k = 0; k < a["analyses"].size(); ++k) {
        const auto& pa = a["analyses"][k];
        const auto& pb = b["analyses"][k];
        if (pa["runs"] != pb["runs"])
            throw std::invalid_argument("compare: analysis plans differ");
        const size_t npts = std::min(pa["points"].size(), pb["points"].size());
        for (size_t i = 0; i < npts; ++i) {
            const auto& qa = pa["points"][i];
            const auto& qb = pb["points"][i];
            os << "  plan " << k + 1 << " point " << i << ":";
            for (const char* kind : {"weiss", "monneau"}) {
                if (!qa.contains(kind) || !qb.contains(kind)) continue;
                if (!qa[kind].contains("C_min") || !qb[kind].contains("C_min")) continue;
                const double ca = qa[kind]["C_min"].get<double>();
                const double cb = qb[kind]["C_min"].get<double>();
                os << " dC_min(" << kind << ")=" << cb - ca;
                if (cb > 1.5 * std::max(ca, 1e-12) && cb > 1e-6) {
                    out.refinement_violation = true;
                    os << " [VIOLATION: C_min grew beyond 1.5x]";
                }
            }
            if (qa.contains("classify") && qb.contains("classify")) {
                const double fa = qa["classify"]["phi0"].get<double>();
                const double fb = qb["classify"]["phi0"].get<double>();
                const double ua = qa["classify"]["uncertainty"].get<double>();
                const double ub = qb["classify"]["uncertainty"].get<double>();
                os << " dphi0=" << fb - fa;
                if (std::fabs(fb - fa) > ua + ub + 1e-9) {
                    out.refinement_violation = true;
                    os << " [VIOLATION: phi0 moved beyond combined uncertainty]";
                }
                const auto va = qa["classify"]["verdict"].get<std::string>();
                const auto vb = qb["classify"]["verdict"].get<std::string>();
                if (va != vb) {
                    out.refinement_violation = true;
                    os << " [VIOLATION: verdict " << va << " -> " << vb << "]";
                } else {
                    os << " verdict=" << va;
                }
            }
            os << "\n";
        }
    }
    out.report = os.str();
    out.exit_code = out.refinement_violation ? 3 : 0;
    return out;
}

inline json load_summary(const std::string& run_dir) {
    std::ifstream in(std::filesystem::path(run_dir) / "summary.json");
    if (!in) throw std::invalid_argument("compare: missing summary.json in " + run_dir);
    json j;
    in >> j;
    return j;
}

/// Human-readable digest of a run directory.
inline std::string report_run(const json& s) {
    std::ostringstream os;
    os.precision(9);
    os << "scenario: " << s["scenario"].get<std::string>() << "\n"
       << "resolution: " << s["resolution"].get<int>() << " (h = " << s["h"].get<double>()
       << ")\n"
       << "status: " << s["status"].get<std::string>() << "\n";
    const auto& h = s["hypotheses"];
    os << "hypotheses: H1=" << (h["pass_h1"].get<bool>() ? "pass" : "FAIL")
       << " H2=" << (h["pass_h2"].get<bool>() ? "pass" : "FAIL")
       << " H3=" << (h["pass_h3"].get<bool>() ? "pass" : "FAIL")
       << " H4=" << (h["pass_h4"].get<bool>() ? "pass" : "FAIL")
       << "  (Lambda=" << h["lambda"].get<double>() << ", c0=" << h["c0"].get<double>() << ")\n";
    if (s.contains("solve"))
        os << "solver: " << s["solver"].get<std::string>() << ", "
           << s["solve"]["iterations"].get<long>() << " iterations, residual "
           << s["solve"]["complementarity_residual"].get<double>() << "\n";
    if (s.contains("free_boundary_points"))
        os << "free boundary points: " << s["free_boundary_points"].get<size_t>() << "\n";
    if (!s.contains("analyses")) return os.str();
    for (size_t k = 0; k < s["analyses"].size(); ++k) {
        const auto& plan = s["analyses"][k];
        os << "plan " << k + 1 << " [" << plan["selector"].get<std::string>() << "]\n";
        if (!plan.contains("points")) continue;
        for (const auto& pt : plan["points"]) {
            os << "  x0 = (" << pt["x0"][0].get<double>() << ", " << pt["x0"][1].get<double>()
               << ")";
            if (pt.contains("skipped")) {
                os << "  skipped: " << pt["skipped"].get<std::string>() << "\n";
                continue;
            }
            if (pt.contains("weiss"))
                os << "  weiss C_min=" << pt["weiss"]["C_min"].get<double>()
                   << " phi0=" << pt["weiss"]["phi0"].get<double>();
            if (pt.contains("monneau"))
                os << "  monneau C_min=" << pt["monneau"]["C_min"].get<double>();
            if (pt.contains("classify"))
                os << "  verdict=" << pt["classify"]["verdict"].get<std::string>();
            if (pt.contains("growth"))
                os << "  theta=" << pt["growth"]["theta_lower"].get<double>()
                   << " C=" << pt["growth"]["C_upper"].get<double>();
            os << "\n";
        }
    }
    return os.str();
}

}  // namespace oblab

#endif
