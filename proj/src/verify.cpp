#include "wkam/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/numeric/odeint.hpp>
#include <boost/version.hpp>
#include <json.hpp>

#include "wkam/error.hpp"
#include "wkam/riccati.hpp"
#include "wkam/rigidity.hpp"
#include "wkam/weakkam.hpp"

namespace wkam {

Check check_le(std::string name, double value, double tol) {
    return {std::move(name), value, tol, "<=", value <= tol};
}

Check check_ge(std::string name, double value, double bound) {
    return {std::move(name), value, bound, ">=", value >= bound};
}

bool CriterionResult::pass() const {
    if (!error.empty() || checks.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

bool VerificationReport::pass() const {
    return !criteria.empty() && std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass(); });
}

std::string environment_stamp() {
    std::string s = "wkam 0.1.0; ";
#if defined(__clang__)
    s += "clang " __clang_version__;
#elif defined(__GNUC__)
    s += "gcc " __VERSION__;
#else
    s += "unknown compiler";
#endif
    s += "; eigen " + std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
    s += "; boost " BOOST_LIB_VERSION;
#ifdef NDEBUG
    s += "; optimized";
#else
    s += "; debug";
#endif
    return s;
}

std::string VerificationReport::to_json() const {
    nlohmann::json checks = nlohmann::json::object(), crit = nlohmann::json::object();
    for (const auto& c : criteria) {
        nlohmann::json entry;
        entry["title"] = c.title;
        entry["pass"] = c.pass();
        if (!c.error.empty()) entry["error"] = c.error;
        crit[std::to_string(c.id)] = entry;
        for (const auto& k : c.checks) {
            nlohmann::json v;
            v["value"] = std::isfinite(k.value) ? nlohmann::json(k.value) : nlohmann::json(nullptr);
            v["tolerance"] = k.tolerance;
            v["relation"] = k.relation;
            v["pass"] = k.pass;
            checks[k.name] = v;
        }
    }
    nlohmann::json j;
    j["checks"] = checks;
    j["criteria"] = crit;
    j["config_hash"] = config_hash;
    j["environment"] = environment_stamp();
    j["pass"] = pass();
    return j.dump(2) + "\n";
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* const kTitles[kCriteria] = {
    "eigenfunction identity",
    "Ricci lower bound",
    "energy conservation",
    "weak KAM convergence",
    "Lax-Oleinik operator laws",
    "conjugate solution",
    "Riccati equality and inequality",
    "comparison solution",
    "rigidity formulas",
    "determinism",
};

double sup_on(const GridField& f, double lo, double hi, const std::function<double(std::size_t)>& value) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = f.grid.at(i);
        if (f.valid[i] && r >= lo - 1e-12 && r <= hi + 1e-12) m = std::max(m, value(i));
    }
    return m;
}

PhaseState zero_energy_start(const ModelManifold& m, double r0, double dir) {
    PhaseState s;
    s.position = {r0, 0.0};
    s.u = dir * std::sqrt(2.0 * m.potential_jet(r0).value);
    return s;
}

/// g and d log g / dt along the radial unit-speed line r0 + dir t.
GPath radial_unit_path(const ModelManifold& m, double r0, double dir, double length, double step) {
    GPath p;
    const auto steps = static_cast<std::size_t>(std::llround(length / step));
    for (std::size_t i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) * step;
        const Jet g = m.eigenfunction_jet(r0 + dir * t);
        p.t.push_back(t);
        p.g.push_back(g.value);
        p.d.push_back(dir * g.d1 / g.value);
    }
    return p;
}

/// Relative max |S_riccati - S_jacobi| over samples where B is well conditioned.
double jacobi_vs_riccati(const ModelManifold& m, const Trajectory& traj, const FrameTransport& fr, const Matrix& S0) {
    const int n = m.dim();
    const RiccatiHistory h = integrate_riccati(m, traj, fr, S0);
    const JacobiHistory jac = integrate_jacobi(m, traj, fr, Matrix::Identity(n, n), S0 - fr.A.front());
    double worst = 0.0;
    const std::size_t count = std::min(h.samples.size(), jac.S.size());
    for (std::size_t i = 0; i < count; ++i) {
        Eigen::JacobiSVD<Matrix> svd(jac.B[i]);
        const auto& sv = svd.singularValues();
        if (sv(0) > 1e4 * sv(n - 1)) continue;
        const Matrix& S = h.samples[i].S;
        worst = std::max(worst, (S - jac.S[i]).cwiseAbs().maxCoeff() / (1.0 + S.cwiseAbs().maxCoeff()));
    }
    return worst;
}

/// Relative gap between the closed-form bbar on a radial unit-speed line and a
/// high-order integration of bbar' = -bbar^2/(n-1) - 2k bbar d(t), stopped once |bbar|
/// exceeds ten times its scale (the approach to the pole).
double bbar_vs_ode(const ModelManifold& m, double r0, double dir, double k, const BbarSeries& bb) {
    namespace ode = boost::numeric::odeint;
    const int n = m.dim();
    auto rhs = [&](const std::array<double, 1>& x, std::array<double, 1>& dx, double t) {
        const Jet g = m.eigenfunction_jet(r0 + dir * t);
        dx[0] = -x[0] * x[0] / (n - 1) - 2.0 * k * x[0] * dir * g.d1 / g.value;
    };
    const double cap = 10.0 * (1.0 + std::abs(bb.bbar.front()));
    std::array<double, 1> x{bb.bbar.front()};
    auto stepper = ode::make_controlled<ode::runge_kutta_fehlberg78<std::array<double, 1>>>(1e-15, 1e-15);
    double worst = 0.0;
    for (std::size_t i = 1; i < bb.t.size(); ++i) {
        ode::integrate_adaptive(stepper, rhs, x, bb.t[i - 1], bb.t[i], 1e-4);
        if (std::abs(bb.bbar[i]) > cap) break;
        worst = std::max(worst, std::abs(x[0] - bb.bbar[i]) / (1.0 + std::abs(bb.bbar[i])));
    }
    return worst;
}

Matrix random_symmetric(int n, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, scale);
    Matrix M = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) M(i, j) = M(j, i) = N(rng);
    return M;
}

}  // namespace

struct Verifier::Cache {
    std::optional<ModelManifold> exp_model;
    std::optional<SolveResult> exp_F;
    LaxOleinikParams exp_params;
};

Verifier::Verifier(ExperimentConfig cfg) : cfg_(std::move(cfg)), cache_(std::make_unique<Cache>()) {}
Verifier::~Verifier() = default;

CriterionResult Verifier::run(int id) {
    if (id < 1 || id > kCriteria) throw PreconditionError("no acceptance criterion " + std::to_string(id));
    CriterionResult res;
    res.id = id;
    res.title = kTitles[id - 1];
    const auto t0 = std::chrono::steady_clock::now();
    auto tol = [&](const std::string& key) { return cfg_.real("tolerances." + key); };
    auto& out = res.checks;
    const auto seed = static_cast<std::uint64_t>(cfg_.integer("verify.seed"));

    auto exp_solution = [&]() -> const SolveResult& {
        if (!cache_->exp_F) {
            cache_->exp_model = ModelManifold::exp(4, 2.0);
            const RadialGrid grid = RadialGrid::over(-1.0, 4.0, 0.005);
            cache_->exp_params = LaxOleinikParams::for_grid(*cache_->exp_model, grid, 0.01);
            cache_->exp_F = weak_kam_solve(*cache_->exp_model, grid, cache_->exp_params);
        }
        return *cache_->exp_F;
    };

    try {
        switch (id) {
            case 1: {
                struct Case {
                    const char* name;
                    ModelManifold m;
                    double lo, hi;
                };
                const Case cases[] = {{"exp_n4", ModelManifold::exp(4, 2.0), 0.0, 4.0},
                                      {"cosh_n4", ModelManifold::cosh(4, 2.0), -3.0, 3.0},
                                      {"cosh_n3", ModelManifold::cosh(3, 1.0), -3.0, 3.0}};
                for (const auto& c : cases) {
                    const double coarse = eigen_residual(c.m, RadialGrid::over(c.lo, c.hi, 0.01));
                    const double fine = eigen_residual(c.m, RadialGrid::over(c.lo, c.hi, 0.005));
                    out.push_back(check_le(std::string("c1.") + c.name + ".residual", coarse, tol("eigen_residual")));
                    out.push_back(check_ge(std::string("c1.") + c.name + ".order", std::log2(coarse / fine),
                                           tol("eigen_order")));
                }
                break;
            }
            case 2: {
                const std::pair<const char*, ModelManifold> models[] = {{"exp_n4", ModelManifold::exp(4, 2.0)},
                                                                       {"cosh_n4", ModelManifold::cosh(4, 2.0)},
                                                                       {"cosh_n3", ModelManifold::cosh(3, 1.0)}};
                for (const auto& [name, m] : models) {
                    double negative = 0.0, absolute = 0.0;
                    for (int k = 0; k < 1000; ++k) {
                        const double margin = ricci_bound_margin(m, -5.0 + 10.0 * k / 999.0).margin();
                        negative = std::max(negative, -margin);
                        absolute = std::max(absolute, std::abs(margin));
                    }
                    out.push_back(check_le(std::string("c2.") + name + ".negative_margin", negative, tol("ricci_margin")));
                    if (m.warp_kind() == WarpKind::Exp)
                        out.push_back(check_le("c2.exp_n4.einstein_margin", absolute, tol("ricci_margin")));
                }
                break;
            }
            case 3: {
                // r(t) = log(3t + 1)/3 solves r' = sqrt(2V) = exp(-3r) with r(0) = 0.
                const ModelManifold m = ModelManifold::exp(4, 2.0);
                const Trajectory traj = integrate_minimizer(m, zero_energy_start(m, 0.0, 1.0), 10.0, 1e-3);
                double H = 0.0;
                for (const auto& s : traj.states) H = std::max(H, std::abs(hamiltonian(m, s)));
                const auto it = std::min_element(traj.times.begin(), traj.times.end(),
                                                 [](double a, double b) { return std::abs(a - 1.0) < std::abs(b - 1.0); });
                const auto i = static_cast<std::size_t>(it - traj.times.begin());
                const double exact = std::log(3.0 * traj.times[i] + 1.0) / 3.0;
                out.push_back(check_le("c3.max_abs_H", H, tol("energy")));
                out.push_back(check_le("c3.position_error_t1", std::abs(traj.states[i].position.r - exact), tol("position")));
                out.push_back(check_ge("c3.reached_T", traj.times.back(), 10.0 - 1e-9));
                break;
            }
            case 4: {
                const SolveResult& F = exp_solution();
                const ModelManifold& m = *cache_->exp_model;
                const GridField& f = F.field;
                const double err = sup_on(f, 0.0, 3.0, [&](std::size_t i) {
                    return std::abs(f.values[i] - std::exp(-3.0 * f.grid.at(i)) / 3.0);
                });
                const GridField hj = hj_residual(m, f);
                const double hjmax = sup_on(hj, 0.0, 3.0, [&](std::size_t i) { return std::abs(hj.values[i]); });
                const HarmonicityReport har = harmonicity_residual(m, f);
                double negative = 0.0;
                for (std::size_t i = 0; i < f.size(); ++i)
                    if (f.valid[i]) negative = std::max(negative, -f.values[i]);
                out.push_back(check_ge("c4.converged", F.converged ? 1.0 : 0.0, 1.0));
                out.push_back(check_le("c4.sup_error_core", err, tol("wkam_sup")));
                out.push_back(check_le("c4.hj_residual_core", hjmax, tol("hj")));
                out.push_back(check_le("c4.harmonicity_core", har.max_abs_on(0.0, 3.0), tol("harmonic")));
                out.push_back(check_le("c4.negative_part", negative, 0.0));
                break;
            }
            case 5: {
                std::mt19937_64 rng(seed + 5);
                std::uniform_real_distribution<double> U(0.0, 1.0);
                const ModelManifold m = ModelManifold::exp(4, 2.0);
                const RadialGrid grid = RadialGrid::over(1.0, 3.0, 0.05);
                const long fields = cfg_.integer("verify.fields");
                double mono = 0.0, shift = 0.0, fixed = 0.0, unconverged = 0.0;
                for (auto cand : {CandidateSet::Segments, CandidateSet::Nodes}) {
                    LaxOleinikParams p = LaxOleinikParams::for_grid(m, grid, 0.05);
                    p.candidates = cand;
                    p.tol = tol("fixed_point");
                    for (long k = 0; k < fields; ++k) {
                        GridField f(grid, 0.0), g(grid, 0.0);
                        for (std::size_t i = 0; i < grid.size; ++i) {
                            f.values[i] = 2.0 * U(rng) - 1.0;
                            g.values[i] = f.values[i] + U(rng) * U(rng);
                        }
                        const GridField Sf = lax_oleinik_step(m, f, p), Sg = lax_oleinik_step(m, g, p);
                        const double c = 10.0 * U(rng) - 5.0;
                        GridField fc = f;
                        for (double& v : fc.values) v += c;
                        const GridField Sfc = lax_oleinik_step(m, fc, p);
                        for (std::size_t i = 0; i < grid.size; ++i) {
                            mono = std::max(mono, Sf.values[i] - Sg.values[i]);
                            shift = std::max(shift, std::abs(Sfc.values[i] - Sf.values[i] - c));
                        }
                        if (cand != CandidateSet::Segments) continue;
                        const SolveResult lim = value_iteration(m, f, p);
                        if (!lim.converged) unconverged += 1.0;
                        const GridField next = lax_oleinik_step(m, lim.field, p);
                        for (std::size_t i = 0; i < grid.size; ++i)
                            if (next.valid[i]) fixed = std::max(fixed, std::abs(next.values[i] - lim.field.values[i]));
                    }
                }
                out.push_back(check_le("c5.monotonicity", mono, tol("operator")));
                out.push_back(check_le("c5.constant_shift", shift, tol("operator")));
                out.push_back(check_le("c5.fixed_point", fixed, tol("fixed_point")));
                out.push_back(check_le("c5.unconverged_fields", unconverged, 0.0));

                // Exhaustive enumeration of every node path y_0 -> ... -> y_k = x.
                double brute = 0.0;
                std::uniform_int_distribution<int> nodes(3, 7), steps(1, 3), hops(1, 3), coin(0, 1);
                for (long k = 0; k < fields; ++k) {
                    const int N = nodes(rng), K = steps(rng), reach = hops(rng);
                    const RadialGrid g{2.0 * U(rng), 0.05 + 0.1 * U(rng), static_cast<std::size_t>(N)};
                    LaxOleinikParams p;
                    p.time_step = 0.02 + 0.1 * U(rng);
                    p.search_radius = reach * g.h;
                    p.candidates = CandidateSet::Nodes;
                    p.rule = coin(rng) ? PotentialRule::Trapezoid : PotentialRule::Midpoint;
                    GridField f(g, 0.0);
                    for (double& v : f.values) v = U(rng);
                    GridField it = f;
                    for (int s = 0; s < K; ++s) it = lax_oleinik_step(m, it, p);

                    auto hop_cost = [&](int y, int x) {
                        const double d = g.at(x) - g.at(y), ht = p.time_step;
                        const double pot = p.rule == PotentialRule::Trapezoid
                                               ? 0.5 * ht * (m.potential_jet(g.at(y)).value + m.potential_jet(g.at(x)).value)
                                               : ht * m.potential_jet(0.5 * (g.at(x) + g.at(y))).value;
                        return d * d / (2.0 * ht) + pot;
                    };
                    std::vector<int> path(static_cast<std::size_t>(K) + 1);
                    for (int x = 0; x < N; ++x) {
                        double best = std::numeric_limits<double>::infinity();
                        long total = 1;
                        for (int s = 0; s < K; ++s) total *= N;
                        for (long code = 0; code < total; ++code) {
                            long c = code;
                            for (int s = 0; s < K; ++s, c /= N) path[static_cast<std::size_t>(s)] = static_cast<int>(c % N);
                            path[static_cast<std::size_t>(K)] = x;
                            double cost = f.values[static_cast<std::size_t>(path[0])];
                            bool ok = true;
                            for (int s = 0; s < K && ok; ++s) {
                                const int a = path[static_cast<std::size_t>(s)], b = path[static_cast<std::size_t>(s) + 1];
                                ok = std::abs(a - b) <= reach;
                                cost += ok ? hop_cost(a, b) : 0.0;
                            }
                            if (ok) best = std::min(best, cost);
                        }
                        brute = std::max(brute, std::abs(best - it.values[static_cast<std::size_t>(x)]));
                    }
                }
                out.push_back(check_le("c5.brute_force", brute, tol("operator")));
                break;
            }
            case 6: {
                const SolveResult& F = exp_solution();
                const ModelManifold& m = *cache_->exp_model;
                const SolveResult G = conjugate_solve(m, F.field, cache_->exp_params);
                const GridField& f = F.field;
                const double sup = sup_on(G.field, 0.0, 3.0, [&](std::size_t i) {
                    return std::abs(f.values[i] + G.field.values[i]);
                });
                double below = 0.0;
                for (std::size_t i = 0; i < f.size(); ++i)
                    if (f.valid[i] && G.field.valid[i]) below = std::max(below, -(f.values[i] + G.field.values[i]));
                out.push_back(check_ge("c6.exp.converged", G.converged ? 1.0 : 0.0, 1.0));
                out.push_back(check_le("c6.exp.sup_F_plus_G_core", sup, tol("conjugate_exp")));
                out.push_back(check_le("c6.exp.F_plus_G_below_zero", below, tol("conjugate_exp")));
                out.push_back(check_le("c6.exp.monotone_violation", G.max_monotone_violation, cfg_.real("solver.monotone_tol")));

                // Cosh: F calibrated from the left end, G from the right; their sum is the
                // action of the whole line, sqrt(2 c_V) times the integral of sech^3.
                const ModelManifold c = ModelManifold::cosh(4, 2.0);
                const RadialGrid grid = RadialGrid::over(-4.5, 4.5, 0.005);
                LaxOleinikParams p = LaxOleinikParams::for_grid(c, grid, 0.01);
                p.tol = 1e-6;
                const SolveResult FL = weak_kam_solve(c, grid, p, SeedKind::LeftEnd, 0.5);
                const SolveResult GR = weak_kam_solve(c, grid, p, SeedKind::RightEnd, 0.5);
                boost::math::quadrature::sinh_sinh<double> q;
                const double oracle = q.integrate([](double s) { return std::pow(std::cosh(s), -3.0); });
                const double dev = sup_on(FL.field, -3.0, 3.0, [&](std::size_t i) {
                    return GR.field.valid[i] ? std::abs(FL.field.values[i] + GR.field.values[i] - oracle) : 0.0;
                });
                out.push_back(check_ge("c6.cosh.converged", FL.converged && GR.converged ? 1.0 : 0.0, 1.0));
                out.push_back(check_le("c6.cosh.sup_F_plus_G_minus_line_action", dev, tol("conjugate_cosh")));
                out.push_back(check_le("c6.cosh.line_action_vs_half_pi", std::abs(oracle - std::numbers::pi / 2.0), tol("operator")));
                break;
            }
            case 7: {
                std::mt19937_64 rng(seed + 7);
                struct Case {
                    const char* name;
                    ModelManifold m;
                    double r0, T;
                };
                const Case rigid[] = {{"exp_n4", ModelManifold::exp(4, 2.0), 0.0, 2.0},
                                      {"cosh_n4", ModelManifold::cosh(4, 2.0), -1.0, 2.0}};
                for (const auto& c : rigid) {
                    const PhaseState s0 = zero_energy_start(c.m, c.r0, 1.0);
                    const Trajectory traj = integrate_minimizer(c.m, s0, c.T, 1e-4);
                    const FrameTransport fr = transport_frame(c.m, traj);
                    const RiccatiHistory h = integrate_riccati(c.m, traj, fr, radial_hessian_data(c.m, s0));
                    const TraceMargin tm = trace_inequality_margin(c.m, h);
                    double lemma = 0.0, cor = 0.0;
                    for (double v : tm.lemma) lemma = std::max(lemma, std::abs(v));
                    for (double v : tm.corollary) cor = std::max(cor, std::abs(v));
                    const std::string base = std::string("c7.") + c.name;
                    out.push_back(check_le(base + ".lemma_abs", lemma, tol("trace_rigid")));
                    out.push_back(check_le(base + ".corollary_abs", cor, tol("trace_rigid")));
                    out.push_back(check_ge(base + ".samples", static_cast<double>(h.samples.size()), traj.size()));
                    const Matrix S0 = random_symmetric(c.m.dim(), 0.3, rng);
                    out.push_back(check_le(base + ".jacobi_vs_riccati", jacobi_vs_riccati(c.m, traj, fr, S0),
                                           tol("jacobi_riccati")));
                }
                // w = cosh r + 0.05 exp(-r^2): Ricci bound and Delta g <= -lambda g hold for |r| <= 0.86.
                std::vector<double> r, w;
                for (int k = 0; k <= 600; ++k) {
                    const double x = -3.0 + 0.01 * k;
                    r.push_back(x);
                    w.push_back(std::cosh(x) + 0.05 * std::exp(-x * x));
                }
                const ModelManifold pm = ModelManifold::custom(4, 2.0, r, w);
                const PhaseState s0 = zero_energy_start(pm, -0.8, 1.0);
                const Trajectory traj = integrate_minimizer(pm, s0, 1.4, 1e-4);
                const FrameTransport fr = transport_frame(pm, traj);
                const RiccatiHistory h = integrate_riccati(pm, traj, fr, radial_hessian_data(pm, s0));
                const TraceMargin tm = trace_inequality_margin(pm, h);
                out.push_back(check_le("c7.perturbed.lemma_max", tm.max_lemma, tol("trace_perturbed")));
                double reach = 0.0;
                for (const auto& s : traj.states) reach = std::max(reach, std::abs(s.position.r));
                out.push_back(check_le("c7.perturbed.max_abs_r", reach, 0.86));
                break;
            }
            case 8: {
                std::mt19937_64 rng(seed + 8);
                std::uniform_real_distribution<double> U(0.0, 1.0);
                std::uniform_int_distribution<int> dims(3, 5);
                double excess = -std::numeric_limits<double>::infinity(), ode = 0.0;
                const long trials = cfg_.integer("verify.comparisons");
                for (long k = 0; k < trials; ++k) {
                    const int n = dims(rng);
                    const bool use_exp = U(rng) < 0.5;
                    const double lambda = 1.0 + 2.0 * U(rng);
                    const ModelManifold m = use_exp ? ModelManifold::exp(n, lambda) : ModelManifold::cosh(n, lambda);
                    const double r0 = 2.0 * U(rng) - 1.0;
                    // Exp orbits toward decreasing r reach the end in finite time.
                    const double dir = use_exp || U(rng) < 0.5 ? 1.0 : -1.0;
                    const PhaseState s0 = zero_energy_start(m, r0, dir);
                    Matrix S0 = radial_hessian_data(m, s0);
                    const double iso = U(rng) - 0.5;
                    for (int i = 1; i < n; ++i) S0(i, i) += iso;
                    if (n > 3) S0.bottomRightCorner(n - 2, n - 2) += random_symmetric(n - 2, 0.3, rng);

                    // Perturbations of S v = grad V grow like exp(-2 int S_11) toward small V,
                    // so the Riccati step tolerance sits near round-off here.
                    RiccatiOptions ro;
                    ro.step_tol = 1e-14;
                    const Trajectory traj = integrate_minimizer(m, s0, 3.0, 1e-3);
                    const RiccatiHistory h = integrate_riccati(m, traj, transport_frame(m, traj), S0, ro);
                    const GPath gp = g_path_along(m, h, arc_length(m, traj));
                    std::vector<double> b;
                    for (const auto& s : h.samples) b.push_back(s.b);
                    const BbarSeries bb = comparison_bbar(n, b.front(), gp, consistent_k(n));
                    const ComparisonReport rep = comparison_check(gp.t, b, h.blowup_time, bb);
                    excess = std::max(excess, rep.max_excess);

                    const GPath unit = radial_unit_path(m, r0, dir, 2.0, 1e-3);
                    const BbarSeries ub = comparison_bbar(n, b.front(), unit, consistent_k(n));
                    ode = std::max(ode, bbar_vs_ode(m, r0, dir, consistent_k(n), ub));
                }
                out.push_back(check_le("c8.bbar_vs_ode", ode, tol("bbar_ode")));
                out.push_back(check_le("c8.max_excess", excess, tol("comparison")));

                const ModelManifold m3 = ModelManifold::exp(3, 1.0);
                const BbarSeries blow = comparison_bbar(3, -1.0, radial_unit_path(m3, 0.0, 1.0, 3.0, 1e-3), consistent_k(3));
                out.push_back(check_le("c8.n3_blowup_time_error", blow.blowup_time ? std::abs(*blow.blowup_time - 2.0) : kNaN,
                                       tol("blowup")));
                break;
            }
            case 9: {
                namespace ode = boost::numeric::odeint;
                using State = std::array<double, 4>;  // columns of M, stacked
                double entry = 0.0, det = 0.0;
                const std::pair<int, double> cases[] = {{3, 1.0}, {4, 2.0}, {5, 3.0}};
                for (const auto& [n, lambda] : cases) {
                    const double nn = n;
                    auto rhs = [&](const State& x, State& dx, double) {
                        dx[0] = -lambda * x[1];
                        dx[1] = -x[0] / (nn - 2.0);
                        dx[2] = -lambda * x[3];
                        dx[3] = -x[2] / (nn - 2.0);
                    };
                    for (int s = 1; s <= 8; ++s) {
                        const double t = 0.25 * s;
                        State x{1.0, 0.0, 0.0, 1.0};
                        ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_fehlberg78<State>>(1e-15, 1e-15),
                                                rhs, x, 0.0, t, 1e-3);
                        const Eigen::Matrix2d M = fundamental_matrix_rigid(n, lambda, t);
                        entry = std::max({entry, std::abs(M(0, 0) - x[0]), std::abs(M(1, 0) - x[1]),
                                          std::abs(M(0, 1) - x[2]), std::abs(M(1, 1) - x[3])});
                        det = std::max(det, std::abs(M.determinant() - 1.0));
                    }
                }
                out.push_back(check_le("c9.fundamental_matrix_entries", entry, tol("fundamental")));
                out.push_back(check_le("c9.fundamental_matrix_det", det, tol("fundamental")));

                struct Case {
                    const char* name;
                    ModelManifold m;
                    double r0;
                    End end;
                    double c;  // <grad log g, v_1> at the base point
                };
                const Case cases2[] = {{"exp_n4", ModelManifold::exp(4, 2.0), 0.0, End::Right, 2.0},
                                       {"cosh_n4", ModelManifold::cosh(4, 2.0), 0.7, End::Left, -2.0 * std::tanh(0.7)}};
                for (const auto& c : cases2) {
                    const std::string base = std::string("c9.") + c.name;
                    const FlowGSeries fg = flow_g_measured(c.m, c.r0, c.end, 2.0, cfg_.real("rigidity.spacing"));
                    const RigidityPrediction pred = rigidity_prediction(c.m, c.r0, c.end);
                    double dev = 0.0;
                    for (std::size_t i = 0; i < fg.t.size(); ++i)
                        dev = std::max(dev, std::abs(fg.g[i] - pred.g(fg.t[i])) / pred.g(fg.t[i]));
                    const bool covers = !fg.t.empty() && fg.t.front() <= -2.0 + 1e-9 && fg.t.back() >= 2.0 - 1e-9;
                    out.push_back(check_le(base + ".flow_g_rel", covers ? dev : kNaN, tol("flow_g")));

                    const Trajectory traj = calibrated_orbit(c.m, c.r0, c.end, 2.0);
                    const BCheckReport bc = jacobian_B_check(c.m, traj, transport_frame(c.m, traj));
                    out.push_back(check_le(base + ".B_diag_rel", bc.max_rel_dev_diag, tol("b_diag")));
                    out.push_back(check_le(base + ".B_offdiag", bc.max_offdiag, tol("b_offdiag")));

                    const WarpReconstruction wr = reconstruct_warp(c.m, c.r0, c.end, 2.0);
                    out.push_back(check_le(base + ".fit_residual", wr.residual, tol("fit_residual")));
                    out.push_back(check_le(base + ".fit_lambda", std::abs(wr.lambda_fit - c.m.lambda()), tol("fit_params")));
                    out.push_back(check_le(base + ".fit_c", std::abs(wr.c_fit - c.c), tol("fit_params")));
                }
                break;
            }
            case 10: {
                // Cheap criteria re-run on a fresh verifier, plus one step at two worker counts.
                const std::vector<int> ids{1, 2, 3, 8};
                Verifier a(cfg_), b(cfg_);
                const std::string ra = a.run_all(ids).to_json(), rb = b.run_all(ids).to_json();
                out.push_back(check_ge("c10.rerun_identical", ra == rb ? 1.0 : 0.0, 1.0));

                const ModelManifold m = ModelManifold::exp(4, 2.0);
                const RadialGrid grid = RadialGrid::over(-1.0, 4.0, 0.005);
                std::mt19937_64 rng(seed + 10);
                std::uniform_real_distribution<double> U(0.0, 1.0);
                GridField f(grid, 0.0);
                for (double& v : f.values) v = U(rng);
                LaxOleinikParams p = LaxOleinikParams::for_grid(m, grid, 0.01);
                p.workers = 1;
                const GridField one = lax_oleinik_step(m, f, p);
                p.workers = 4;
                const GridField four = lax_oleinik_step(m, f, p);
                out.push_back(check_ge("c10.worker_independent", one.values == four.values ? 1.0 : 0.0, 1.0));
                break;
            }
        }
    } catch (const std::exception& e) {
        res.error = e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

VerificationReport Verifier::run_all(const std::vector<int>& ids,
                                     const std::function<void(const CriterionResult&)>& progress) {
    std::vector<int> todo = ids;
    if (todo.empty())
        for (int i = 1; i <= kCriteria; ++i) todo.push_back(i);
    std::sort(todo.begin(), todo.end());
    todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
    VerificationReport rep;
    rep.config_hash = cfg_.hash();
    for (int id : todo) {
        rep.criteria.push_back(run(id));
        if (progress) progress(rep.criteria.back());
    }
    return rep;
}

}  // namespace wkam
