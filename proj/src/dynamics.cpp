#include "wkam/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wkam {

double potential(const ModelManifold& model, const RadialPoint& x) { return model.potential_jet(x.r).value; }

double speed_squared(const ModelManifold& model, const PhaseState& s) {
    const double w = warp(model, s.position.r);
    return s.u * s.u + w * w * s.omega * s.omega;
}

double lagrangian(const ModelManifold& model, const PhaseState& s) {
    return 0.5 * speed_squared(model, s) + potential(model, s.position);
}

double hamiltonian(const ModelManifold& model, const PhaseState& s) {
    return 0.5 * speed_squared(model, s) - potential(model, s.position);
}

namespace {

// Yoshida weights for a fourth-order symmetric composition.
const double kCbrt2 = std::cbrt(2.0);
const double kOuter = 1.0 / (2.0 - kCbrt2);
const double kInner = -kCbrt2 / (2.0 - kCbrt2);

struct RadialSystem {
    const ModelManifold& model;
    double ell;  // conserved angular momentum w^2 omega

    double force(double r) const {
        const Jet w = model.warp_jet(r);
        const double V1 = model.potential_jet(r).d1;
        return ell * ell * w.d1 / (w.value * w.value * w.value) + V1;
    }
    double angular_rate(double r) const {
        const double w = model.warp_jet(r).value;
        return ell / (w * w);
    }
};

struct Slot {
    double r, theta, u;
};

void verlet(const RadialSystem& sys, Slot& s, double h) {
    s.u += 0.5 * h * sys.force(s.r);
    const double r0 = s.r;
    s.r += h * s.u;
    if (sys.ell != 0.0) {
        // theta' = ell / w(r)^2 along the straight drift, Simpson's rule
        s.theta += h / 6.0 *
                   (sys.angular_rate(r0) + 4.0 * sys.angular_rate(0.5 * (r0 + s.r)) + sys.angular_rate(s.r));
    }
    s.u += 0.5 * h * sys.force(s.r);
}

}  // namespace

Trajectory integrate_minimizer(const ModelManifold& model, const PhaseState& initial, double duration,
                               double dt, const IntegratorOptions& opts) {
    if (!(dt > 0.0)) throw PreconditionError("integrate_minimizer: dt must be positive");
    if (!(duration >= 0.0)) throw PreconditionError("integrate_minimizer: negative duration");
    const auto steps = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
    if (steps > opts.max_steps) throw PreconditionError("integrate_minimizer: too many steps");

    const double w0 = warp(model, initial.position.r);
    RadialSystem sys{model, w0 * w0 * initial.omega};

    Trajectory traj;
    traj.step = dt;
    traj.scheme = "yoshida4-verlet";
    traj.order = 4;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.times.push_back(0.0);
    traj.states.push_back(initial);
    const double H0 = hamiltonian(model, initial);

    Slot s{initial.position.r, initial.position.theta, initial.u};
    for (std::size_t k = 1; k <= steps; ++k) {
        verlet(sys, s, kOuter * dt);
        verlet(sys, s, kInner * dt);
        verlet(sys, s, kOuter * dt);
        const double t = static_cast<double>(k) * dt;
        if (!std::isfinite(s.r) || !std::isfinite(s.u) || s.r < opts.r_min || s.r > opts.r_max) {
            traj.escaped = true;
            traj.escape_time = t;
            break;
        }
        PhaseState st;
        st.position = model.normalize({s.r, s.theta});
        st.u = s.u;
        st.omega = sys.angular_rate(s.r);
        traj.times.push_back(t);
        traj.states.push_back(st);
        traj.energy_drift = std::max(traj.energy_drift, std::abs(hamiltonian(model, st) - H0));
    }
    traj.drift_constant = traj.energy_drift / std::pow(dt, traj.order);
    return traj;
}

namespace {

double metric_increment_sq(const ModelManifold& model, const RadialPoint& a, const RadialPoint& b) {
    const double dr = b.r - a.r;
    double dth = b.theta - a.theta;
    if (dth == 0.0) return dr * dr;
    if (model.fiber() == FiberGeometry::FlatCircle) {
        const double L = model.circumference();
        dth = std::remainder(dth, L);
    }
    const double w = warp(model, 0.5 * (a.r + b.r));
    return dr * dr + w * w * dth * dth;
}

}  // namespace

double action(const ModelManifold& model, const PathPolyline& path) {
    const std::size_t n = path.positions.size();
    if (n < 2 || path.times.size() != n) throw PreconditionError("action: need >= 2 matching samples");
    double sum = 0.0;
    double Vprev = potential(model, path.positions[0]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dt = path.times[i + 1] - path.times[i];
        if (!(dt > 0.0)) throw DomainError("action: zero-length or reversed segment");
        const double Vnext = potential(model, path.positions[i + 1]);
        sum += metric_increment_sq(model, path.positions[i], path.positions[i + 1]) / (2.0 * dt) +
               0.5 * dt * (Vprev + Vnext);
        Vprev = Vnext;
    }
    return sum;
}

std::vector<double> discrete_energy(const ModelManifold& model, const PathPolyline& path) {
    std::vector<double> e;
    for (std::size_t i = 0; i + 1 < path.positions.size(); ++i) {
        const double dt = path.times[i + 1] - path.times[i];
        const double v2 = metric_increment_sq(model, path.positions[i], path.positions[i + 1]) / (dt * dt);
        e.push_back(0.5 * v2 - 0.5 * (potential(model, path.positions[i]) + potential(model, path.positions[i + 1])));
    }
    return e;
}

namespace {

struct RadialAction {
    const ModelManifold& model;
    double tau;

    double value(const std::vector<double>& r) const {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < r.size(); ++i) {
            const double d = r[i + 1] - r[i];
            s += d * d / (2.0 * tau) +
                 0.5 * tau * (model.potential_jet(r[i]).value + model.potential_jet(r[i + 1]).value);
        }
        return s;
    }
    // Gradient over interior nodes (entries 0 and m are unused).
    std::vector<double> gradient(const std::vector<double>& r) const {
        std::vector<double> g(r.size(), 0.0);
        for (std::size_t i = 1; i + 1 < r.size(); ++i)
            g[i] = (2.0 * r[i] - r[i - 1] - r[i + 1]) / tau + tau * model.potential_jet(r[i]).d1;
        return g;
    }
    double residual(const std::vector<double>& grad) const {
        double m = 0.0;
        for (std::size_t i = 1; i + 1 < grad.size(); ++i) m = std::max(m, std::abs(grad[i]) / tau);
        return m;
    }
};

PathPolyline to_path(const std::vector<double>& r, double tau, double theta) {
    PathPolyline p;
    for (std::size_t i = 0; i < r.size(); ++i) {
        p.times.push_back(static_cast<double>(i) * tau);
        p.positions.push_back({r[i], theta});
    }
    return p;
}

// Solves the tridiagonal system (sub, diag, sup) x = rhs in place over indices 1..m-1.
bool solve_tridiagonal(std::vector<double> diag, double off, std::vector<double> rhs, std::vector<double>& x) {
    const std::size_t m = diag.size() - 1;
    for (std::size_t i = 2; i < m; ++i) {
        if (diag[i - 1] == 0.0) return false;
        const double f = off / diag[i - 1];
        diag[i] -= f * off;
        rhs[i] -= f * rhs[i - 1];
    }
    x.assign(diag.size(), 0.0);
    for (std::size_t i = m - 1; i >= 1; --i) {
        if (diag[i] == 0.0) return false;
        const double next = (i + 1 < m) ? x[i + 1] : 0.0;
        x[i] = (rhs[i] - off * next) / diag[i];
    }
    return true;
}

}  // namespace

double euler_lagrange_residual(const ModelManifold& model, const PathPolyline& path) {
    const std::size_t n = path.positions.size();
    if (n < 3) return 0.0;
    const double tau = path.times[1] - path.times[0];
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = path.positions[i].r;
    RadialAction act{model, tau};
    return act.residual(act.gradient(r));
}

PathPolyline minimize_action_fixed_endpoints(const ModelManifold& model, const RadialPoint& x_a,
                                             const RadialPoint& x_b, double duration, int segments,
                                             const ActionMinimizerOptions& opts) {
    if (!(duration > 0.0)) throw PreconditionError("minimize_action: duration must be positive");
    if (segments < 2) throw PreconditionError("minimize_action: need at least 2 segments");
    if (x_a.theta != x_b.theta) throw PreconditionError("minimize_action: endpoints must share the angle");

    const auto m = static_cast<std::size_t>(segments);
    const double tau = duration / static_cast<double>(m);
    RadialAction act{model, tau};
    std::vector<double> r(m + 1);
    for (std::size_t i = 0; i <= m; ++i)
        r[i] = x_a.r + (x_b.r - x_a.r) * static_cast<double>(i) / static_cast<double>(m);

    double value = act.value(r);
    std::vector<double> grad = act.gradient(r);
    double res = act.residual(grad);

    auto line_search = [&](const std::vector<double>& dir, double slope) {
        double step = 1.0;
        std::vector<double> trial(r);
        for (int k = 0; k < 60; ++k) {
            for (std::size_t i = 1; i < m; ++i) trial[i] = r[i] + step * dir[i];
            const double v = act.value(trial);
            if (v <= value + 1e-4 * step * slope || (slope == 0.0 && v <= value)) {
                r = trial;
                value = v;
                return true;
            }
            step *= 0.5;
        }
        return false;
    };

    for (int it = 0; it < opts.max_newton_iters && res > opts.tol; ++it) {
        std::vector<double> diag(m + 1, 0.0), rhs(m + 1, 0.0), dir;
        for (std::size_t i = 1; i < m; ++i) {
            diag[i] = 2.0 / tau + tau * model.potential_jet(r[i]).d2;
            rhs[i] = -grad[i];
        }
        double slope = 0.0;
        const bool ok = solve_tridiagonal(diag, -1.0 / tau, rhs, dir);
        if (ok)
            for (std::size_t i = 1; i < m; ++i) slope += grad[i] * dir[i];
        if (!ok || !(slope < 0.0)) {
            dir.assign(m + 1, 0.0);
            slope = 0.0;
            for (std::size_t i = 1; i < m; ++i) {
                dir[i] = -grad[i];
                slope -= grad[i] * grad[i];
            }
        }
        const std::vector<double> before = r;
        if (!line_search(dir, slope)) {
            // Accept a full Newton step near the optimum, where round-off hides the decrease.
            for (std::size_t i = 1; i < m; ++i) r[i] = before[i] + dir[i];
            const auto g2 = act.gradient(r);
            if (act.residual(g2) >= res) {
                r = before;
                break;
            }
            value = act.value(r);
        }
        grad = act.gradient(r);
        res = act.residual(grad);
    }

    if (res > opts.tol) {
        // Gradient descent fallback with the Lipschitz step of the kinetic part.
        for (int it = 0; it < opts.max_descent_iters && res > opts.tol; ++it) {
            std::vector<double> dir(m + 1, 0.0);
            double slope = 0.0;
            for (std::size_t i = 1; i < m; ++i) {
                dir[i] = -grad[i] * tau / 4.0;
                slope -= grad[i] * grad[i] * tau / 4.0;
            }
            if (!line_search(dir, slope)) break;
            grad = act.gradient(r);
            res = act.residual(grad);
        }
    }
    PathPolyline path = to_path(r, tau, x_a.theta);
    if (res > opts.tol)
        throw ActionMinimizationError("minimize_action: no convergence (residual " + std::to_string(res) + ")",
                                      std::move(path), res);
    return path;
}

}  // namespace wkam
