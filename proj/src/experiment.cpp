#include "wkam/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include <json.hpp>

#include "wkam/artifacts.hpp"
#include "wkam/dynamics.hpp"
#include "wkam/error.hpp"
#include "wkam/riccati.hpp"
#include "wkam/rigidity.hpp"
#include "wkam/verify.hpp"

namespace wkam {

namespace fs = std::filesystem;
using json = nlohmann::json;

ModelManifold model_from_config(const ExperimentConfig& cfg) {
    const int n = static_cast<int>(cfg.integer("model.n"));
    const double lambda = cfg.real("model.lambda"), cv = cfg.real("model.c_V");
    switch (parse_warp_kind(cfg.text("model.warp"))) {
        case WarpKind::Exp:
            return ModelManifold::exp(n, lambda, cv);
        case WarpKind::Cosh:
            return ModelManifold::cosh(n, lambda, cv);
        case WarpKind::Custom: {
            const std::string& file = cfg.text("model.warp_file");
            if (file.empty()) throw ConfigError("model.warp_file: required for warp = custom");
            fs::path p(file);
            if (p.is_relative() && !cfg.base_dir().empty()) p = fs::path(cfg.base_dir()) / p;
            if (!fs::exists(p)) throw ConfigError("model.warp_file: " + p.string() + " does not exist");
            return ModelManifold::custom_from_file(n, lambda, p.string(), cv);
        }
    }
    throw ConfigError("model.warp: unsupported");
}

RadialGrid grid_from_config(const ExperimentConfig& cfg) {
    const double lo = cfg.real("model.window_lo"), hi = cfg.real("model.window_hi"), h = cfg.real("model.grid_h");
    if (!(hi > lo + 2.0 * h)) throw ConfigError("model.window_hi: window must hold at least three nodes");
    return RadialGrid::over(lo, hi, h);
}

LaxOleinikParams solver_params_from_config(const ExperimentConfig& cfg, const ModelManifold& model,
                                           const RadialGrid& grid) {
    LaxOleinikParams p = LaxOleinikParams::for_grid(model, grid, cfg.real("solver.h_t"));
    if (cfg.real("solver.search_radius") > 0.0) p.search_radius = cfg.real("solver.search_radius");
    p.tol = cfg.real("solver.tol");
    p.max_iters = static_cast<std::size_t>(cfg.integer("solver.max_iters"));
    p.candidates = cfg.text("solver.candidates") == "nodes" ? CandidateSet::Nodes : CandidateSet::Segments;
    p.rule = cfg.text("solver.rule") == "midpoint" ? PotentialRule::Midpoint : PotentialRule::Trapezoid;
    p.monotone_tol = cfg.real("solver.monotone_tol");
    p.workers = static_cast<unsigned>(cfg.integer("solver.workers"));
    try {
        p.validate(model, grid);
    } catch (const PreconditionError& e) {
        throw ConfigError(std::string("solver.search_radius: ") + e.what());
    }
    return p;
}

namespace {

struct Outputs {
    fs::path dir;
    bool csv = true;
    bool json_files = true;
    std::vector<std::string> plots;

    void table(const std::string& name, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& cols) const {
        if (csv) write_csv((dir / name).string(), header, cols);
    }
    void document(const std::string& name, const json& j) const {
        if (json_files) write_text((dir / name).string(), j.dump(2) + "\n");
    }
    bool wants(const std::string& kind) const { return std::find(plots.begin(), plots.end(), kind) != plots.end(); }
};

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }
json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

/// Oracle for the solver output: the one-sided weak KAM solutions selected by the seed.
std::optional<double> solve_oracle(const ModelManifold& m, const std::string& seed, double r) {
    if (m.warp_kind() == WarpKind::Exp) {
        if (seed == "left") return std::nullopt;
        return reference_weak_kam(m, r, End::Right);
    }
    if (seed == "left") return reference_weak_kam(m, r, End::Left);
    if (seed == "right") return reference_weak_kam(m, r, End::Right);
    return std::min(reference_weak_kam(m, r, End::Left), reference_weak_kam(m, r, End::Right));
}

void field_table(const Outputs& out, const std::string& name, const GridField& f) {
    std::vector<double> mask(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) mask[i] = f.valid[i];
    out.table(name, {"r", "value", "mask"}, {f.grid.nodes(), f.values, mask});
}

void history_table(const Outputs& out, const std::string& name, const std::vector<double>& hist) {
    std::vector<double> iter(hist.size());
    for (std::size_t i = 0; i < hist.size(); ++i) iter[i] = static_cast<double>(i + 1);
    out.table(name, {"iter", "sup_increment"}, {iter, hist});
}

int run_solve(const ExperimentConfig& cfg, const Outputs& out, PlotEmitter& plots, std::ostream& log) {
    const ModelManifold m = model_from_config(cfg);
    const RadialGrid grid = grid_from_config(cfg);
    const LaxOleinikParams p = solver_params_from_config(cfg, m, grid);
    const std::string seed = cfg.text("solver.seed");
    const SeedKind kind = seed == "left" ? SeedKind::LeftEnd : seed == "right" ? SeedKind::RightEnd : SeedKind::Zero;
    const double lo = cfg.real("solver.core_lo"), hi = cfg.real("solver.core_hi");
    auto in_core = [&](std::size_t i) { return grid.at(i) >= lo - 1e-12 && grid.at(i) <= hi + 1e-12; };

    const SolveResult F = weak_kam_solve(m, grid, p, kind, cfg.real("solver.seed_width"));
    field_table(out, "F.csv", F.field);
    history_table(out, "F_history.csv", F.residual_history);

    json rep;
    rep["config_hash"] = cfg.hash();
    rep["F"]["converged"] = F.converged;
    rep["F"]["iterations"] = F.iterations;
    rep["F"]["final_increment"] = F.residual_history.empty() ? 0.0 : F.residual_history.back();

    double min_F = std::numeric_limits<double>::infinity(), err = 0.0, hj = 0.0;
    bool have_oracle = true;
    std::vector<double> pr, pf, po;
    const GridField res = hj_residual(m, F.field);
    for (std::size_t i = 0; i < grid.size; ++i) {
        if (!F.field.valid[i]) continue;
        min_F = std::min(min_F, F.field.values[i]);
        if (!in_core(i)) continue;
        if (res.valid[i]) hj = std::max(hj, std::abs(res.values[i]));
        const auto o = have_oracle ? solve_oracle(m, seed, grid.at(i)) : std::nullopt;
        if (!o) {
            have_oracle = false;
            continue;
        }
        err = std::max(err, std::abs(F.field.values[i] - *o));
        pr.push_back(grid.at(i));
        pf.push_back(F.field.values[i]);
        po.push_back(*o);
    }
    const HarmonicityReport har = harmonicity_residual(m, F.field);
    rep["F"]["min_valid"] = finite_or_null(min_F);
    rep["F"]["hj_residual_core"] = hj;
    rep["F"]["harmonicity_abs_core"] = har.max_abs_on(lo, hi);
    rep["F"]["harmonicity_positive_core"] = har.max_positive_on(lo, hi);
    rep["F"]["sup_error_core"] = have_oracle ? json(err) : json(nullptr);
    if (have_oracle && out.wants("f_overlay")) plots.emit("f_overlay", {pr, pf, po}, "F.csv");

    bool converged = F.converged, invariant = min_F >= -1e-12 || !std::isfinite(min_F);
    if (!invariant) log << "invariant breach: F < 0 at a valid node (min " << min_F << ")\n";

    if (cfg.flag("solver.conjugate") && F.converged) {
        const SolveResult G = conjugate_solve(m, F.field, p);
        field_table(out, "G.csv", G.field);
        history_table(out, "G_history.csv", G.residual_history);
        double lo_sum = std::numeric_limits<double>::infinity(), hi_sum = -lo_sum;
        for (std::size_t i = 0; i < grid.size; ++i) {
            if (!F.field.valid[i] || !G.field.valid[i] || !in_core(i)) continue;
            const double s = F.field.values[i] + G.field.values[i];
            lo_sum = std::min(lo_sum, s);
            hi_sum = std::max(hi_sum, s);
        }
        rep["G"]["converged"] = G.converged;
        rep["G"]["iterations"] = G.iterations;
        rep["G"]["max_monotone_violation"] = G.max_monotone_violation;
        rep["G"]["monotone"] = G.monotone;
        rep["G"]["F_plus_G_core_min"] = finite_or_null(lo_sum);
        rep["G"]["F_plus_G_core_max"] = finite_or_null(hi_sum);
        converged = converged && G.converged;
        if (!G.monotone) {
            invariant = false;
            log << "invariant breach: conjugate iteration decreased by " << G.max_monotone_violation << "\n";
        }
    }
    out.document("solve.json", rep);
    if (!converged) {
        log << "solver did not converge within " << p.max_iters << " iterations\n";
        return kExitNonConvergence;
    }
    return invariant ? kExitOk : kExitInvariant;
}

PhaseState start_state(const ModelManifold& m, double r0, const std::string& direction) {
    PhaseState s;
    s.position = {r0, 0.0};
    s.u = (direction == "decreasing" ? -1.0 : 1.0) * std::sqrt(2.0 * m.potential_jet(r0).value);
    return s;
}

IntegratorOptions window_options(const ExperimentConfig& cfg, double r0) {
    IntegratorOptions o;
    o.r_min = cfg.real("model.window_lo");
    o.r_max = cfg.real("model.window_hi");
    if (r0 < o.r_min || r0 > o.r_max) throw ConfigError("base_r " + format_number(r0) + " lies outside the window");
    return o;
}

bool all_finite(const Trajectory& t) {
    return std::all_of(t.states.begin(), t.states.end(),
                       [](const PhaseState& s) { return std::isfinite(s.position.r) && std::isfinite(s.u); });
}

int run_flow(const ExperimentConfig& cfg, const Outputs& out, std::ostream& log) {
    const ModelManifold m = model_from_config(cfg);
    const double r0 = cfg.real("flow.base_r");
    const Trajectory traj = integrate_minimizer(m, start_state(m, r0, cfg.text("flow.direction")), cfg.real("flow.T"),
                                                cfg.real("flow.dt"), window_options(cfg, r0));
    std::vector<double> r, u, H;
    double maxH = 0.0;
    for (const auto& s : traj.states) {
        r.push_back(s.position.r);
        u.push_back(s.u);
        H.push_back(hamiltonian(m, s));
        maxH = std::max(maxH, std::abs(H.back()));
    }
    out.table("trajectory.csv", {"t", "r", "u", "H"}, {traj.times, r, u, H});
    json rep;
    rep["config_hash"] = cfg.hash();
    rep["scheme"] = traj.scheme;
    rep["order"] = traj.order;
    rep["step"] = traj.step;
    rep["samples"] = traj.size();
    rep["energy_drift"] = traj.energy_drift;
    rep["drift_constant"] = traj.drift_constant;
    rep["max_abs_H"] = maxH;
    rep["escaped"] = traj.escaped;
    rep["escape_time"] = optional_number(traj.escape_time);
    rep["final_r"] = r.back();
    out.document("flow.json", rep);
    if (!all_finite(traj)) {
        log << "invariant breach: non-finite state in the trajectory\n";
        return kExitInvariant;
    }
    return kExitOk;
}

int run_riccati(const ExperimentConfig& cfg, const Outputs& out, PlotEmitter& plots, std::ostream& log) {
    const ModelManifold m = model_from_config(cfg);
    const int n = m.dim();
    const double r0 = cfg.real("riccati.base_r");
    const PhaseState s0 = start_state(m, r0, cfg.text("riccati.direction"));
    const Trajectory traj =
        integrate_minimizer(m, s0, cfg.real("riccati.T"), cfg.real("riccati.dt"), window_options(cfg, r0));
    if (!all_finite(traj)) {
        log << "invariant breach: non-finite state in the trajectory\n";
        return kExitInvariant;
    }
    const FrameTransport frame = transport_frame(m, traj);

    Matrix S0 = radial_hessian_data(m, s0);
    const std::string spec = cfg.text("riccati.s0");
    const double scale = cfg.real("riccati.s0_scale");
    if (spec == "isotropic")
        for (int i = 1; i < n; ++i) S0(i, i) += scale;
    if (spec == "random") {
        std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.integer("riccati.seed")));
        std::normal_distribution<double> N(0.0, scale);
        for (int i = 2; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const double x = N(rng);
                S0(i, j) += x;
                if (i != j) S0(j, i) += x;
            }
    }

    const RiccatiHistory h = integrate_riccati(m, traj, frame, S0);
    const TraceMargin tm = trace_inequality_margin(m, h);
    std::vector<std::vector<double>> cols(10);
    for (const auto& s : h.samples) {
        const double row[] = {s.t, s.r, s.u, s.s, s.s3, s.S1, s.S2_norm, s.b};
        for (int c = 0; c < 8; ++c) cols[static_cast<std::size_t>(c)].push_back(row[c]);
    }
    for (std::size_t i = 0; i < h.samples.size(); ++i) {
        cols[8].push_back(i < tm.lemma.size() ? tm.lemma[i] : std::nan(""));
        cols[9].push_back(i < tm.corollary.size() ? tm.corollary[i] : std::nan(""));
    }
    out.table("riccati.csv", {"t", "r", "u", "s", "s3", "S1", "S2_norm", "b", "lemma", "corollary"}, cols);
    if (out.wants("riccati_margin")) plots.emit("riccati_margin", {tm.times, tm.lemma}, "riccati.csv");

    json rep;
    rep["config_hash"] = cfg.hash();
    rep["samples"] = h.samples.size();
    rep["blew_up"] = h.blew_up;
    rep["blowup_time"] = optional_number(h.blowup_time);
    rep["max_local_error"] = h.max_local_error;
    rep["max_lemma"] = tm.max_lemma;
    rep["max_corollary"] = tm.max_corollary;

    if (cfg.flag("riccati.rescale")) {
        const double k = cfg.text("riccati.k") == "printed" ? printed_k(n) : consistent_k(n);
        const GPath gp = g_path_along(m, h, arc_length(m, traj));
        std::vector<double> b;
        for (const auto& s : h.samples) b.push_back(s.b);
        const BbarSeries bb = comparison_bbar(n, b.front(), gp, k);
        const ComparisonReport cmp = comparison_check(gp.t, b, h.blowup_time, bb);
        const std::size_t common = std::min(bb.t.size(), b.size());
        out.table("comparison.csv", {"sigma", "b", "bbar"},
                  {std::vector<double>(bb.t.begin(), bb.t.begin() + static_cast<std::ptrdiff_t>(common)),
                   std::vector<double>(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(common)),
                   std::vector<double>(bb.bbar.begin(), bb.bbar.begin() + static_cast<std::ptrdiff_t>(common))});
        rep["comparison"] = {{"k", k},
                             {"max_excess", finite_or_null(cmp.max_excess)},
                             {"compared", cmp.compared},
                             {"bbar_blowup_time", optional_number(bb.blowup_time)},
                             {"max_det_error", bb.max_det_error}};
    }
    out.document("riccati.json", rep);
    return kExitOk;
}

int run_rigidity(const ExperimentConfig& cfg, const Outputs& out, PlotEmitter& plots) {
    const ModelManifold m = model_from_config(cfg);
    const double r0 = cfg.real("rigidity.base_r"), span = cfg.real("rigidity.span"), dt = cfg.real("rigidity.dt");
    const End end = cfg.text("rigidity.end") == "left" ? End::Left : End::Right;
    const RigidityPrediction pred = rigidity_prediction(m, r0, end);

    const FlowGSeries fg = flow_g_measured(m, r0, end, span, cfg.real("rigidity.spacing"), dt);
    std::vector<double> gp;
    double dev = 0.0;
    for (std::size_t i = 0; i < fg.t.size(); ++i) {
        double g = std::nan("");
        try {
            g = pred.g(fg.t[i]);
            dev = std::max(dev, std::abs(fg.g[i] - g) / g);
        } catch (const DomainError&) {
        }
        gp.push_back(g);
    }
    out.table("flow_g.csv", {"t", "r", "g_measured", "g_predicted"}, {fg.t, fg.r, fg.g, gp});

    const Trajectory traj = calibrated_orbit(m, r0, end, span, dt);
    const BCheckReport bc = jacobian_B_check(m, traj, transport_frame(m, traj));
    const WarpReconstruction wr = reconstruct_warp(m, r0, end, span, dt);
    const double alpha = std::sqrt(wr.lambda_fit / (m.dim() - 2));
    std::vector<double> wfit;
    for (double t : wr.t)
        wfit.push_back(pred.w_base * (std::cosh(alpha * t) - wr.c_fit / std::sqrt(wr.lambda_fit * (m.dim() - 2)) *
                                                                  std::sinh(alpha * t)));
    out.table("warp_reconstruction.csv", {"t", "w_rec", "w_fit"}, {wr.t, wr.w_rec, wfit});
    if (out.wants("warp_fit")) plots.emit("warp_fit", {wr.t, wr.w_rec, wfit}, "warp_reconstruction.csv");

    json rep;
    rep["config_hash"] = cfg.hash();
    rep["prediction"] = {{"n", pred.n},           {"lambda", pred.lambda},       {"c", pred.c},
                         {"g_base", pred.g_base}, {"w_base", pred.w_base},       {"direction", pred.direction},
                         {"pole", optional_number(pred.pole())}};
    rep["flow_g_max_rel_dev"] = dev;
    rep["B_check"] = {{"max_rel_dev_diag", bc.max_rel_dev_diag},
                      {"max_offdiag", bc.max_offdiag},
                      {"max_tangential_grad_g", bc.max_tangential_grad_g},
                      {"samples", bc.samples}};
    rep["warp_fit"] = json::parse(wr.to_json());
    out.document("rigidity.json", rep);
    return kExitOk;
}

int run_verify(const ExperimentConfig& cfg, const Outputs& out, std::ostream& log) {
    Verifier v(cfg);
    const VerificationReport rep = v.run_all({}, [&](const CriterionResult& c) {
        log << "criterion " << c.id << " (" << c.title << "): " << (c.pass() ? "pass" : "FAIL") << "\n";
        for (const auto& k : c.checks)
            if (!k.pass) log << "  " << k.name << " = " << k.value << " (" << k.relation << " " << k.tolerance << ")\n";
        if (!c.error.empty()) log << "  error: " << c.error << "\n";
    });
    write_text((out.dir / "report.json").string(), rep.to_json());
    return rep.pass() ? kExitOk : kExitInvariant;
}

}  // namespace

int run_command(const std::string& subcommand, const ExperimentConfig& cfg, const RunOptions& opts,
                std::ostream& log) {
    try {
        Outputs out;
        out.dir = opts.out_dir.empty() ? fs::path(cfg.text("outputs.directory")) : fs::path(opts.out_dir);
        const auto formats = cfg.list("outputs.formats");
        for (const auto& f : formats)
            if (f != "csv" && f != "json") throw ConfigError("outputs.formats: unknown format '" + f + "'");
        out.csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
        out.json_files = std::find(formats.begin(), formats.end(), "json") != formats.end();
        out.plots = opts.plots.empty() ? cfg.list("outputs.plots") : opts.plots;
        for (const auto& k : out.plots)
            if (!plot_kinds().count(k)) throw ConfigError("unknown plot kind '" + k + "'");
        fs::create_directories(out.dir);
        write_text((out.dir / "config.ini").string(), cfg.to_ini());

        PlotEmitter plots(out.dir.string());
        int code = kExitConfig;
        if (subcommand == "solve")
            code = run_solve(cfg, out, plots, log);
        else if (subcommand == "flow")
            code = run_flow(cfg, out, log);
        else if (subcommand == "riccati")
            code = run_riccati(cfg, out, plots, log);
        else if (subcommand == "rigidity")
            code = run_rigidity(cfg, out, plots);
        else if (subcommand == "verify")
            code = run_verify(cfg, out, log);
        else
            throw ConfigError("unknown subcommand '" + subcommand + "'");
        plots.write_manifest();
        return code;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PreconditionError& e) {
        log << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        log << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConvergenceError& e) {
        log << "no convergence: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const std::exception& e) {
        log << "internal error: " << e.what() << "\n";
        return kExitInvariant;
    }
}

}  // namespace wkam
