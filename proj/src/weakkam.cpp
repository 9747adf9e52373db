#include "wkam/weakkam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "wkam/error.hpp"

namespace wkam {

namespace {

constexpr double kUnreached = std::numeric_limits<double>::infinity();

unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("WKAM_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, count / 64)));
    if (workers <= 1) {
        body(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk, e = std::min(count, b + chunk);
        if (b < e) pool.emplace_back([&body, b, e] { body(b, e); });
    }
    for (auto& t : pool) t.join();
}

double max_potential(const ModelManifold& model, const RadialGrid& grid) {
    double m = 0.0;
    for (std::size_t i = 0; i < grid.size; ++i) m = std::max(m, model.potential_jet(grid.at(i)).value);
    return m;
}

}  // namespace

LaxOleinikParams LaxOleinikParams::for_grid(const ModelManifold& model, const RadialGrid& grid, double time_step) {
    LaxOleinikParams p;
    p.time_step = time_step;
    p.search_radius = 1.05 * std::sqrt(2.0 * max_potential(model, grid)) * time_step;
    return p;
}

void LaxOleinikParams::validate(const ModelManifold& model, const RadialGrid& grid) const {
    if (!(time_step > 0.0)) throw PreconditionError("lax-oleinik: time step must be positive");
    const double need = std::sqrt(2.0 * max_potential(model, grid)) * time_step;
    if (search_radius < need)
        throw PreconditionError("lax-oleinik: search radius " + std::to_string(search_radius) +
                                " below reachable hop " + std::to_string(need));
}

GridField lax_oleinik_step(const ModelManifold& model, const GridField& f, const LaxOleinikParams& params) {
    const RadialGrid& grid = f.grid;
    if (!(params.time_step > 0.0)) throw PreconditionError("lax-oleinik: time step must be positive");
    if (!(params.search_radius >= 0.0)) throw DomainError("lax-oleinik: empty search window");
    if (params.candidates == CandidateSet::Segments && params.rule == PotentialRule::Midpoint)
        throw PreconditionError("lax-oleinik: midpoint rule requires node candidates");
    if (grid.size < 2) throw DomainError("lax-oleinik: empty search window");

    const double ht = params.time_step;
    const double h = grid.h;
    const auto reach = static_cast<std::ptrdiff_t>(std::ceil(params.search_radius / h - 1e-9));
    const auto n = static_cast<std::ptrdiff_t>(grid.size);

    std::vector<double> V(grid.size);
    for (std::size_t i = 0; i < grid.size; ++i) V[i] = model.potential_jet(grid.at(i)).value;

    GridField out(grid, 0.0);
    const auto& fv = f.values;
    parallel_for(grid.size, resolve_workers(params.workers), [&](std::size_t begin, std::size_t end) {
        for (std::size_t ui = begin; ui < end; ++ui) {
            const auto i = static_cast<std::ptrdiff_t>(ui);
            const double x = grid.at(ui);
            const std::ptrdiff_t jlo = std::max<std::ptrdiff_t>(0, i - reach);
            const std::ptrdiff_t jhi = std::min<std::ptrdiff_t>(n - 1, i + reach);
            double best = std::numeric_limits<double>::infinity();

            if (params.candidates == CandidateSet::Nodes) {
                for (std::ptrdiff_t j = jlo; j <= jhi; ++j) {
                    const double y = grid.at(static_cast<std::size_t>(j));
                    const double d = x - y;
                    const double pot = params.rule == PotentialRule::Trapezoid
                                           ? 0.5 * ht * (V[j] + V[ui])
                                           : ht * model.potential_jet(0.5 * (x + y)).value;
                    const double c = fv[j] + d * d / (2.0 * ht) + pot;
                    if (c < best) best = c;
                }
            } else {
                // phi(s) = f_j + s df + (x - y_j - s h)^2/(2 ht) + ht/2 (V_j + s dV + V_x), s in [0,1]
                const double quad = h * h / (2.0 * ht);
                for (std::ptrdiff_t j = jlo; j < jhi; ++j) {
                    const double yj = grid.at(static_cast<std::size_t>(j));
                    if (!std::isfinite(fv[j]) || !std::isfinite(fv[j + 1])) {
                        // Half-reached cell: only its finite endpoint is a candidate.
                        for (std::ptrdiff_t k : {j, j + 1}) {
                            if (!std::isfinite(fv[k])) continue;
                            const double d = x - grid.at(static_cast<std::size_t>(k));
                            const double c = fv[k] + d * d / (2.0 * ht) + 0.5 * ht * (V[k] + V[ui]);
                            if (c < best) best = c;
                        }
                        continue;
                    }
                    const double df = fv[j + 1] - fv[j];
                    const double dV = V[j + 1] - V[j];
                    const double lin = df + 0.5 * ht * dV - h * (x - yj) / ht;
                    const double s = std::clamp(-lin / (2.0 * quad), 0.0, 1.0);
                    const double d = x - yj - s * h;
                    const double c = fv[j] + s * df + d * d / (2.0 * ht) + 0.5 * ht * (V[j] + s * dV + V[ui]);
                    if (c < best) best = c;
                }
                if (jlo == jhi) best = fv[jlo] + 0.5 * ht * (V[jlo] + V[ui]);
            }
            out.values[ui] = best;
            out.valid[ui] = (i - reach >= 0 && i + reach <= n - 1) ? 1 : 0;
        }
    });
    return out;
}

namespace {

double sup_increment(const GridField& prev, const GridField& next) {
    double m = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i)
        if (next.valid[i]) {
            if (next.values[i] == prev.values[i]) continue;  // also covers inf == inf
            m = std::max(m, std::abs(next.values[i] - prev.values[i]));
        }
    return m;
}

// With hold_boundary set, nodes whose search window is clipped keep the initial datum:
// they act as inflow data for curves entering from beyond the window.
SolveResult iterate(const ModelManifold& model, GridField f, const LaxOleinikParams& params, bool check_monotone,
                    bool hold_boundary = false) {
    SolveResult res;
    const std::vector<double> datum = f.values;
    int quiet = 0;
    for (std::size_t k = 0; k < params.max_iters; ++k) {
        GridField next = lax_oleinik_step(model, f, params);
        if (hold_boundary)
            for (std::size_t i = 0; i < next.size(); ++i)
                if (!next.valid[i]) next.values[i] = datum[i];
        const double inc = sup_increment(f, next);
        if (check_monotone) {
            for (std::size_t i = 0; i < next.size(); ++i)
                if (next.valid[i])
                    res.max_monotone_violation = std::max(res.max_monotone_violation, f.values[i] - next.values[i]);
        }
        res.residual_history.push_back(inc);
        f = std::move(next);
        res.iterations = k + 1;
        quiet = inc < params.tol ? quiet + 1 : 0;
        if (quiet >= 3) {
            res.converged = true;
            break;
        }
    }
    res.field = std::move(f);
    return res;
}

}  // namespace

SolveResult weak_kam_solve(const ModelManifold& model, const RadialGrid& grid, const LaxOleinikParams& params,
                           SeedKind seed, double seed_width) {
    params.validate(model, grid);
    for (std::size_t i = 0; i < grid.size; ++i)
        if (!(model.potential_jet(grid.at(i)).value > 0.0))
            throw PreconditionError("weak_kam_solve: potential must be positive on the window");

    GridField f0(grid, 0.0);
    if (seed != SeedKind::Zero) {
        for (std::size_t i = 0; i < grid.size; ++i) {
            const double r = grid.at(i);
            const bool inside = seed == SeedKind::LeftEnd ? r <= grid.lo + seed_width + 1e-12
                                                          : r >= grid.hi() - seed_width - 1e-12;
            f0.values[i] = inside ? 0.0 : kUnreached;
        }
    }
    return iterate(model, std::move(f0), params, false);
}

SolveResult value_iteration(const ModelManifold& model, const GridField& f0, const LaxOleinikParams& params) {
    params.validate(model, f0.grid);
    return iterate(model, f0, params, false);
}

SolveResult conjugate_solve(const ModelManifold& model, const GridField& F, const LaxOleinikParams& params) {
    params.validate(model, F.grid);
    GridField start = F;
    for (double& v : start.values) v = -v;
    SolveResult res = iterate(model, std::move(start), params, true, true);
    res.monotone = res.max_monotone_violation <= params.monotone_tol;
    return res;
}

GridField hj_residual(const ModelManifold& model, const GridField& F) {
    const RadialGrid& grid = F.grid;
    GridField out(grid, 0.0);
    out.valid.assign(grid.size, 0);
    for (std::size_t i = 1; i + 1 < grid.size; ++i) {
        const double d1 = (F.values[i + 1] - F.values[i - 1]) / (2.0 * grid.h);
        out.values[i] = 0.5 * d1 * d1 - model.potential_jet(grid.at(i)).value;
        out.valid[i] = F.valid[i - 1] && F.valid[i] && F.valid[i + 1];
    }
    return out;
}

double HarmonicityReport::max_abs_on(double lo, double hi) const {
    double m = 0.0;
    for (std::size_t i = 0; i < laplacian.size(); ++i) {
        const double r = laplacian.grid.at(i);
        if (laplacian.valid[i] && smooth[i] && r >= lo - 1e-12 && r <= hi + 1e-12)
            m = std::max(m, std::abs(laplacian.values[i]));
    }
    return m;
}

double HarmonicityReport::max_positive_on(double lo, double hi) const {
    double m = 0.0;
    for (std::size_t i = 0; i < laplacian.size(); ++i) {
        const double r = laplacian.grid.at(i);
        if (laplacian.valid[i] && smooth[i] && r >= lo - 1e-12 && r <= hi + 1e-12)
            m = std::max(m, laplacian.values[i]);
    }
    return m;
}

HarmonicityReport harmonicity_residual(const ModelManifold& model, const GridField& F) {
    HarmonicityReport rep;
    rep.laplacian = laplace_beltrami_radial(model, F);
    const std::size_t n = F.size();
    const double h2 = F.grid.h * F.grid.h;

    // Second differences and their jumps between neighbouring cells.
    std::vector<double> d2(n, 0.0), jump(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) d2[i] = (F.values[i + 1] - 2.0 * F.values[i] + F.values[i - 1]) / h2;
    for (std::size_t i = 2; i + 1 < n; ++i) jump[i] = std::abs(d2[i] - d2[i - 1]);

    constexpr std::size_t kHalfWindow = 4;
    constexpr double kFloor = 1e-8;
    rep.smooth.assign(n, 0);
    auto local_median = [&](std::size_t i) {
        std::vector<double> w;
        for (std::size_t k = (i > kHalfWindow + 2 ? i - kHalfWindow : 2); k <= std::min(n - 2, i + kHalfWindow); ++k)
            w.push_back(jump[k]);
        std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2), w.end());
        return w[w.size() / 2];
    };
    for (std::size_t i = 2; i + 2 < n; ++i) {
        const double thr = 10.0 * std::max(local_median(i), local_median(i + 1)) + kFloor;
        rep.smooth[i] = (jump[i] <= thr && jump[i + 1] <= thr) ? 1 : 0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!rep.laplacian.valid[i] || !rep.smooth[i]) continue;
        rep.max_positive = std::max(rep.max_positive, rep.laplacian.values[i]);
        rep.max_abs = std::max(rep.max_abs, std::abs(rep.laplacian.values[i]));
    }
    return rep;
}

double reference_weak_kam(const ModelManifold& model, double r, End end) {
    const int n = model.dim();
    const double scale = std::sqrt(2.0 * model.potential_coefficient());
    const double a = model.rate();
    auto integrand = [&](double s) { return std::pow(model.warp_jet(s).value, -(n - 1)); };
    switch (model.warp_kind()) {
        case WarpKind::Exp:
            if (end == End::Left) throw PreconditionError("exp model: infinite action toward the left end");
            return scale * std::exp(-(n - 1) * a * r) / ((n - 1) * a);
        case WarpKind::Cosh: {
            boost::math::quadrature::exp_sinh<double> q;
            const double v = end == End::Left ? q.integrate(integrand, -std::numeric_limits<double>::infinity(), r)
                                              : q.integrate(integrand, r, std::numeric_limits<double>::infinity());
            return scale * v;
        }
        case WarpKind::Custom: {
            // Truncated to the sample window of the warp.
            const auto [lo, hi] = model.warp_domain();
            boost::math::quadrature::tanh_sinh<double> q;
            if (end == End::Left) return lo < r ? scale * q.integrate(integrand, lo, r) : 0.0;
            return hi > r ? scale * q.integrate(integrand, r, hi) : 0.0;
        }
    }
    return 0.0;
}

GridField reference_weak_kam_field(const ModelManifold& model, const RadialGrid& grid, End end) {
    return sample(grid, [&](double r) { return reference_weak_kam(model, r, end); });
}

double line_action(const ModelManifold& model, const Trajectory& line) {
    if (model.warp_kind() == WarpKind::Exp)
        throw PreconditionError("line_defect: exp model has no bi-infinite finite-action line");
    if (line.size() < 2) throw PreconditionError("line_defect: line too short");
    const double H0 = hamiltonian(model, line.states.front());
    if (std::abs(H0) > 1e-6) throw PreconditionError("line_defect: line is not a zero-energy orbit");
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < line.size(); ++k)
        sum += 0.5 * (line.times[k + 1] - line.times[k]) *
               (lagrangian(model, line.states[k]) + lagrangian(model, line.states[k + 1]));
    const double r0 = line.states.front().position.r;
    const double r1 = line.states.back().position.r;
    // Tails: before the first sample the line comes from the end behind it.
    if (r1 > r0)
        sum += reference_weak_kam(model, r0, End::Left) + reference_weak_kam(model, r1, End::Right);
    else
        sum += reference_weak_kam(model, r0, End::Right) + reference_weak_kam(model, r1, End::Left);
    return sum;
}

GridField line_defect(const ModelManifold& model, const GridField& F, const GridField& G, const Trajectory& line) {
    if (F.size() != G.size()) throw PreconditionError("line_defect: F and G on different grids");
    const double total = line_action(model, line);
    double rmin = line.states.front().position.r, rmax = rmin;
    for (const auto& s : line.states) {
        rmin = std::min(rmin, s.position.r);
        rmax = std::max(rmax, s.position.r);
    }
    if (rmax < F.grid.lo || rmin > F.grid.hi())
        throw PreconditionError("line_defect: line does not cross the window");
    GridField D(F.grid, 0.0);
    for (std::size_t i = 0; i < F.size(); ++i) {
        D.values[i] = F.values[i] + G.values[i] - total;
        D.valid[i] = F.valid[i] && G.valid[i];
    }
    return D;
}

}  // namespace wkam
