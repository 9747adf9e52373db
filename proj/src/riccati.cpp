#include "wkam/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wkam/error.hpp"

namespace wkam {

Matrix hessian_V(const ModelManifold& model, double r) {
    const int n = model.dim();
    const Jet w = model.warp_jet(r);
    const Jet V = model.potential_jet(r);
    Matrix H = Matrix::Zero(n, n);
    H(0, 0) = V.d2;
    for (int i = 1; i < n; ++i) H(i, i) = V.d1 * w.d1 / w.value;
    return H;
}

Matrix jacobi_curvature(const ModelManifold& model, double r, const Eigen::VectorXd& velocity) {
    const int n = model.dim();
    const Jet w = model.warp_jet(r);
    const double k_radial = -w.d2 / w.value;
    const double lw = w.d1 / w.value;
    const double k_fibre = -lw * lw;
    // The curvature operator is diagonal on the coordinate 2-planes e_p ^ e_q, so
    // <Rm(e_a, v) v, e_c> = sum_{p<q} kappa_pq (e_a ^ v)_pq (e_c ^ v)_pq.
    Matrix R = Matrix::Zero(n, n);
    for (int p = 0; p < n; ++p) {
        for (int q = p + 1; q < n; ++q) {
            const double kappa = p == 0 ? k_radial : k_fibre;
            // (e_a ^ v)_pq = delta_ap v_q - delta_aq v_p
            R(p, p) += kappa * velocity(q) * velocity(q);
            R(q, q) += kappa * velocity(p) * velocity(p);
            R(p, q) -= kappa * velocity(q) * velocity(p);
            R(q, p) -= kappa * velocity(p) * velocity(q);
        }
    }
    return R;
}

namespace {

// Kinematics of the radial reduction at (r, u) with angular momentum ell = w^2 omega.
struct Kinematics {
    int n = 0;
    Jet w, V;
    double u = 0.0, vt = 0.0;  // model-frame velocity components (u, w omega)
    double speed2 = 0.0, speed = 0.0;
    double accel = 0.0;        // du/dt

    Kinematics(const ModelManifold& model, double r, double u_, double ell)
        : n(model.dim()), w(model.warp_jet(r)), V(model.potential_jet(r)), u(u_) {
        vt = ell / w.value;
        speed2 = u * u + vt * vt;
        speed = std::sqrt(speed2);
        accel = ell * ell * w.d1 / (w.value * w.value * w.value) + V.d1;
    }

    Eigen::VectorXd velocity() const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
        v(0) = u;
        v(1) = vt;
        return v;
    }

    Matrix frame() const {
        Matrix E = Matrix::Identity(n, n);
        E(0, 0) = u / speed;
        E(0, 1) = vt / speed;
        E(1, 0) = -vt / speed;
        E(1, 1) = u / speed;
        return E;
    }

    // A_12 = <grad V, v_2>/|v| with grad V = V' e_r and (v_2)_r = -vt/|v|.
    double a12() const { return -V.d1 * vt / speed2; }

    double a12_dot(double ell) const {
        const double vt_dot = -ell * w.d1 * u / (w.value * w.value);
        const double speed2_dot = 2.0 * (u * accel + vt * vt_dot);
        const double num = V.d1 * vt;
        const double num_dot = V.d2 * u * vt + V.d1 * vt_dot;
        return -(num_dot * speed2 - num * speed2_dot) / (speed2 * speed2);
    }

    Matrix A() const { return skew(a12()); }
    Matrix Adot(double ell) const { return skew(a12_dot(ell)); }

    Matrix skew(double a) const {
        Matrix M = Matrix::Zero(n, n);
        M(0, 1) = a;
        M(1, 0) = -a;
        return M;
    }
};

void require_speed(const Kinematics& k, double floor, const char* who) {
    if (!(k.speed > floor)) throw DomainError(std::string(who) + ": speed below floor");
}

double angular_momentum(const ModelManifold& model, const PhaseState& s) {
    const double w = warp(model, s.position.r);
    return w * w * s.omega;
}

void check_frame(const FrameTransport& frame, const Trajectory& traj) {
    if (frame.times.size() != traj.size()) throw PreconditionError("frame does not match the trajectory");
}

double max_abs(const Matrix& M) { return M.cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------------------
// Riccati system

struct RState {
    double r, u;
    Matrix S;
};

struct RiccatiSystem {
    const ModelManifold& model;
    double ell;

    RState deriv(const RState& y) const {
        const Kinematics k(model, y.r, y.u, ell);
        const Matrix E = k.frame();
        const Matrix A = k.A();
        const Matrix R = E * jacobi_curvature(model, y.r, k.velocity()) * E.transpose();
        const Matrix W = E * hessian_V(model, y.r) * E.transpose();
        return {y.u, k.accel, -y.S * y.S - y.S * A - A.transpose() * y.S - R + W};
    }
};

RState axpy(const RState& y, double h, const RState& k) { return {y.r + h * k.r, y.u + h * k.u, y.S + h * k.S}; }

template <class System>
RState rk4(const System& sys, const RState& y, double h) {
    const RState k1 = sys.deriv(y);
    const RState k2 = sys.deriv(axpy(y, 0.5 * h, k1));
    const RState k3 = sys.deriv(axpy(y, 0.5 * h, k2));
    const RState k4 = sys.deriv(axpy(y, h, k3));
    return {y.r + h / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r),
            y.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
            y.S + h / 6.0 * (k1.S + 2.0 * k2.S + 2.0 * k3.S + k4.S)};
}

double state_gap(const RState& a, const RState& b) {
    const double scale = 1.0 + max_abs(b.S);
    return std::max({std::abs(a.r - b.r), std::abs(a.u - b.u), max_abs(a.S - b.S) / scale});
}

// One step of size h: compare one RK4 step with two half steps, subdividing while the
// estimate exceeds tol. Returns the half-step result.
RState controlled_step(const RiccatiSystem& sys, const RState& y, double h, const RiccatiOptions& opts, int depth,
                       double& max_err) {
    const RState full = rk4(sys, y, h);
    const RState half = rk4(sys, rk4(sys, y, 0.5 * h), 0.5 * h);
    const double err = state_gap(full, half);
    if (err > opts.step_tol && depth < opts.max_subdivisions && std::isfinite(err)) {
        const RState mid = controlled_step(sys, y, 0.5 * h, opts, depth + 1, max_err);
        return controlled_step(sys, mid, 0.5 * h, opts, depth + 1, max_err);
    }
    max_err = std::max(max_err, err);
    return half;
}

RiccatiSample make_sample(const ModelManifold& model, double t, const RState& y, double ell) {
    const int n = model.dim();
    const Kinematics k(model, y.r, y.u, ell);
    const Matrix E = k.frame();
    RiccatiSample s;
    s.t = t;
    s.r = y.r;
    s.u = y.u;
    s.omega = ell / (k.w.value * k.w.value);
    s.speed = k.speed;
    s.S = y.S;
    s.A = k.A();
    s.R = E * jacobi_curvature(model, y.r, k.velocity()) * E.transpose();
    s.W = E * hessian_V(model, y.r) * E.transpose();
    s.s = y.S.trace();
    s.S1 = y.S(0, 0);
    s.s3 = s.s - s.S1;
    s.S2_norm = y.S.block(0, 1, 1, n - 1).norm();
    s.b = s.s / std::pow(eigenfunction_g(model, y.r), (n - 1.0) / (n - 2.0));
    return s;
}

}  // namespace

FrameTransport transport_frame(const ModelManifold& model, const Trajectory& traj, double speed_floor) {
    if (traj.size() == 0) throw PreconditionError("transport_frame: empty trajectory");
    const double ell = angular_momentum(model, traj.states.front());
    FrameTransport fr;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const PhaseState& st = traj.states[i];
        const Kinematics k(model, st.position.r, st.u, ell);
        require_speed(k, speed_floor, "transport_frame");
        fr.times.push_back(traj.times[i]);
        fr.E.push_back(k.frame());
        fr.A.push_back(k.A());
        fr.Adot.push_back(k.Adot(ell));
        fr.speed.push_back(k.speed);
    }
    return fr;
}

Matrix radial_hessian_data(const ModelManifold& model, const PhaseState& state) {
    const int n = model.dim();
    const double r = state.position.r;
    const Jet w = model.warp_jet(r);
    const Jet V = model.potential_jet(r);
    const double speed2 = speed_squared(model, state);
    if (!(speed2 > 0.0)) throw DomainError("radial_hessian_data: zero velocity");
    Matrix S = Matrix::Zero(n, n);
    S(0, 0) = V.d1 * state.u / speed2;
    for (int i = 1; i < n; ++i) S(i, i) = state.u * w.d1 / w.value;
    return S;
}

RiccatiHistory integrate_riccati(const ModelManifold& model, const Trajectory& traj, const FrameTransport& frame,
                                 const Matrix& S0, const RiccatiOptions& opts) {
    check_frame(frame, traj);
    const int n = model.dim();
    if (S0.rows() != n || S0.cols() != n) throw PreconditionError("integrate_riccati: S0 must be n x n");
    if (!S0.allFinite()) throw PreconditionError("integrate_riccati: S0 not finite");

    const PhaseState& first = traj.states.front();
    const double ell = angular_momentum(model, first);
    RiccatiSystem sys{model, ell};
    RState y{first.position.r, first.u, S0};

    RiccatiHistory hist;
    hist.samples.push_back(make_sample(model, traj.times.front(), y, ell));
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const double h = traj.times[i] - traj.times[i - 1];
        y = controlled_step(sys, y, h, opts, 0, hist.max_local_error);
        if (!y.S.allFinite() || max_abs(y.S) > opts.blowup_cap) {
            hist.blew_up = true;
            hist.blowup_time = traj.times[i];
            break;
        }
        hist.samples.push_back(make_sample(model, traj.times[i], y, ell));
    }
    return hist;
}

TraceMargin trace_inequality_margin(const ModelManifold& model, const RiccatiHistory& history, double energy_tol) {
    const int n = model.dim();
    const double K = model.ricci_bound();
    TraceMargin out;
    out.max_lemma = out.max_corollary = -std::numeric_limits<double>::infinity();
    for (const RiccatiSample& smp : history.samples) {
        const Jet w = model.warp_jet(smp.r);
        const Jet V = model.potential_jet(smp.r);
        const double speed2 = smp.speed * smp.speed;
        const double H = 0.5 * speed2 - V.value;
        if (std::abs(H) > energy_tol * (0.5 * speed2 + V.value))
            throw PreconditionError("trace_inequality_margin: trajectory is not at zero energy");

        const Matrix rhs = -smp.S * smp.S - smp.S * smp.A - smp.A.transpose() * smp.S - smp.R + smp.W;
        const double sdot = rhs.trace();
        const double s = smp.s;
        const double gv = V.d1 * smp.u;  // <grad V, velocity>
        const double perp2 = V.d1 * V.d1 - gv * gv / speed2;
        const double lemma = sdot + s * s / (n - 1) - 2.0 * s / (n - 1) * gv / speed2 +
                             n * gv * gv / ((n - 1) * speed2 * speed2) + 2.0 * perp2 / speed2 +
                             2.0 * K * V.value - laplacian_V(model, smp.r);
        // <grad g, velocity>/g = -(n-2) (w'/w) u
        const double corollary = sdot + s * s / (n - 1) + 2.0 * s * (w.d1 / w.value) * smp.u;
        out.times.push_back(smp.t);
        out.lemma.push_back(lemma);
        out.corollary.push_back(corollary);
        out.max_lemma = std::max(out.max_lemma, lemma);
        out.max_corollary = std::max(out.max_corollary, corollary);
    }
    return out;
}

namespace {

// Derivative at each sample of the polynomial through the (up to) five nearest samples.
// Uses only the data, so it holds for any parametrization of the curve.
std::vector<double> sampled_derivative(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = t.size();
    const std::size_t width = std::min<std::size_t>(5, n);
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = std::min(i >= width / 2 ? i - width / 2 : 0, n - width);
        double sum = 0.0, self = 0.0;
        for (std::size_t j = lo; j < lo + width; ++j) {
            if (j == i) continue;
            self += 1.0 / (t[i] - t[j]);
            double lj = 1.0 / (t[j] - t[i]);
            for (std::size_t m = lo; m < lo + width; ++m)
                if (m != i && m != j) lj *= (t[i] - t[m]) / (t[j] - t[m]);
            sum += lj * y[j];
        }
        d[i] = sum + self * y[i];
    }
    return d;
}

// Cubic Hermite interpolation on [0, h] at offset x.
double hermite(double x, double h, double y0, double d0, double y1, double d1) {
    const double s = x / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

std::vector<double> sampled_speed(const ModelManifold& model, const Trajectory& traj) {
    std::vector<double> speed(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) speed[i] = std::sqrt(speed_squared(model, traj.states[i]));
    return speed;
}

// Trapezoid with the endpoint-derivative correction h^2/12 (f'_0 - f'_1).
std::vector<double> integrate_speed(const std::vector<double>& t, const std::vector<double>& speed) {
    const std::vector<double> rate = sampled_derivative(t, speed);
    std::vector<double> sigma(t.size(), 0.0);
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double h = t[i] - t[i - 1];
        sigma[i] = sigma[i - 1] + 0.5 * h * (speed[i - 1] + speed[i]) + h * h / 12.0 * (rate[i - 1] - rate[i]);
    }
    return sigma;
}

}  // namespace

std::vector<double> arc_length(const ModelManifold& model, const Trajectory& traj) {
    return integrate_speed(traj.times, sampled_speed(model, traj));
}

Rescaled rescale_unit_speed(const ModelManifold& model, const Trajectory& traj, double spacing, double speed_floor) {
    if (traj.size() < 2) throw PreconditionError("rescale_unit_speed: need at least 2 samples");
    if (spacing <= 0.0) spacing = traj.step;
    if (!(spacing > 0.0)) throw PreconditionError("rescale_unit_speed: spacing must be positive");
    const std::vector<double> speed = sampled_speed(model, traj);
    for (double s : speed)
        if (!(s > speed_floor)) throw DomainError("rescale_unit_speed: speed below floor");
    std::vector<double> u(traj.size()), omega(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        u[i] = traj.states[i].u;
        omega[i] = traj.states[i].omega;
    }
    const std::vector<double> udot = sampled_derivative(traj.times, u);
    const std::vector<double> omegadot = sampled_derivative(traj.times, omega);
    const std::vector<double> sigma = integrate_speed(traj.times, speed);

    Rescaled out;
    out.unit.step = spacing;
    out.unit.scheme = traj.scheme + "+arclength";
    out.unit.order = traj.order;
    const auto count = static_cast<std::size_t>(std::floor(sigma.back() / spacing + 1e-9)) + 1;
    std::size_t i = 0;
    for (std::size_t j = 0; j < count; ++j) {
        const double target = static_cast<double>(j) * spacing;
        while (i + 2 < traj.size() && sigma[i + 1] < target) ++i;
        const double ds = sigma[i + 1] - sigma[i];
        const double t0 = traj.times[i], t1 = traj.times[i + 1];
        // t(sigma) has slope 1/|v|
        const double t = hermite(target - sigma[i], ds, t0, 1.0 / speed[i], t1, 1.0 / speed[i + 1]);
        const double dt = t1 - t0, x = t - t0;
        const PhaseState& a = traj.states[i];
        const PhaseState& b = traj.states[i + 1];
        PhaseState st;
        st.position.r = hermite(x, dt, a.position.r, a.u, b.position.r, b.u);
        double dtheta = b.position.theta - a.position.theta;
        if (model.fiber() == FiberGeometry::FlatCircle) dtheta = std::remainder(dtheta, model.circumference());
        st.position.theta = hermite(x, dt, 0.0, a.omega, dtheta, b.omega) + a.position.theta;
        st.position = model.normalize(st.position);
        st.u = hermite(x, dt, a.u, udot[i], b.u, udot[i + 1]);
        st.omega = hermite(x, dt, a.omega, omegadot[i], b.omega, omegadot[i + 1]);
        const double sp = std::sqrt(speed_squared(model, st));
        st.u /= sp;
        st.omega /= sp;
        out.unit.times.push_back(target);
        out.unit.states.push_back(st);
        out.c.push_back(t);
    }
    return out;
}

GPath g_path_along(const ModelManifold& model, const RiccatiHistory& history, const std::vector<double>& sigma) {
    if (sigma.size() < history.samples.size()) throw PreconditionError("g_path_along: sigma shorter than history");
    const int n = model.dim();
    GPath p;
    for (std::size_t i = 0; i < history.samples.size(); ++i) {
        const RiccatiSample& s = history.samples[i];
        const Jet w = model.warp_jet(s.r);
        p.t.push_back(sigma[i]);
        p.g.push_back(eigenfunction_g(model, s.r));
        p.d.push_back(-(n - 2) * (w.d1 / w.value) * s.u / s.speed);
    }
    return p;
}

double printed_k(int n) { return (n - 3.0) * (n - 1.0) / (2.0 * (n - 2.0) * (n - 2.0)); }

double consistent_k(int n) { return (n - 3.0) / (2.0 * (n - 2.0)); }

BbarSeries comparison_bbar(int n, double b0, const GPath& path, double k) {
    if (n < 3) throw PreconditionError("comparison_bbar: n must be >= 3");
    const std::size_t N = path.t.size();
    if (N == 0 || path.g.size() != N || path.d.size() != N)
        throw PreconditionError("comparison_bbar: path arrays must match");
    for (double g : path.g)
        if (!(g > 0.0)) throw PreconditionError("comparison_bbar: g must be positive");

    BbarSeries out;
    out.k = k;
    const double g0 = path.g.front();
    std::vector<double> den;
    double integral = 0.0;  // int_0^t (g0/g)^{2k} / (n-1)
    double G_prev = 1.0, Gd_prev = -2.0 * k * path.d.front();
    for (std::size_t i = 0; i < N; ++i) {
        const double G = std::pow(g0 / path.g[i], 2.0 * k);
        const double Gd = -2.0 * k * path.d[i] * G;
        if (i > 0) {
            const double h = path.t[i] - path.t[i - 1];
            integral += (0.5 * h * (G_prev + G) + h * h / 12.0 * (Gd_prev - Gd)) / (n - 1);
        }
        G_prev = G;
        Gd_prev = Gd;
        const double D = b0 * integral + 1.0;
        if (!(D > 0.0)) {
            out.blew_up = true;
            const double Dp = den.back();
            out.blowup_time = path.t[i - 1] + (path.t[i] - path.t[i - 1]) * Dp / (Dp - D);
            break;
        }
        den.push_back(D);
        out.t.push_back(path.t[i]);
        out.bbar.push_back(G * b0 / D);

        // M_21 = int g0^k g(t)^k / ((n-1) g(s)^{2k}) ds = (g(t)/g0)^k * integral
        const double m11 = std::pow(g0 / path.g[i], k);
        const double m22 = 1.0 / m11;
        Eigen::Matrix2d M;
        M << m11, 0.0, m22 * integral, m22;
        out.M.push_back(M);
        out.max_det_error = std::max(out.max_det_error, std::abs(M.determinant() - 1.0));
        const Eigen::Vector2d x = M * Eigen::Vector2d(b0, 1.0);
        out.max_formula_vs_M = std::max(out.max_formula_vs_M, std::abs(out.bbar.back() - x(0) / x(1)));
    }

    // Five-point derivative check on uniform grids.
    const std::size_t m = out.t.size();
    bool uniform = m >= 5;
    const double h = m >= 2 ? out.t[1] - out.t[0] : 0.0;
    for (std::size_t i = 1; uniform && i < m; ++i)
        if (std::abs(out.t[i] - out.t[i - 1] - h) > 1e-9 * std::abs(h)) uniform = false;
    if (!uniform) {
        out.ode_residual = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    for (std::size_t i = 2; i + 2 < m; ++i) {
        if (den[i - 2] < 0.1 || den[i + 2] < 0.1) continue;
        const auto& b = out.bbar;
        const double db = (-b[i + 2] + 8.0 * b[i + 1] - 8.0 * b[i - 1] + b[i - 2]) / (12.0 * h);
        const double res = db + b[i] * b[i] / (n - 1) + 2.0 * k * b[i] * path.d[i];
        out.ode_residual = std::max(out.ode_residual, std::abs(res));
    }
    return out;
}

ComparisonReport comparison_check(const std::vector<double>& t, const std::vector<double>& b,
                                  std::optional<double> b_blowup_time, const BbarSeries& bbar) {
    if (t.size() != b.size()) throw PreconditionError("comparison_check: t and b differ in length");
    ComparisonReport rep;
    rep.b_blowup_time = b_blowup_time;
    rep.bbar_blowup_time = bbar.blowup_time;
    const std::size_t m = std::min(t.size(), bbar.t.size());
    rep.max_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(t[i] - bbar.t[i]) > 1e-9 * std::max(1.0, std::abs(t[i])))
            throw PreconditionError("comparison_check: time grids do not match");
        rep.max_excess = std::max(rep.max_excess, (b[i] - bbar.bbar[i]) / (1.0 + std::abs(bbar.bbar[i])));
        ++rep.compared;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Jacobi matrix

namespace {

struct JState {
    double r, u;
    Matrix B, Bd;
};

struct JacobiSystem {
    const ModelManifold& model;
    double ell;

    JState deriv(const JState& y) const {
        const Kinematics k(model, y.r, y.u, ell);
        const Matrix E = k.frame();
        const Matrix A = k.A();
        const Matrix Ad = k.Adot(ell);
        const Matrix R = E * jacobi_curvature(model, y.r, k.velocity()) * E.transpose();
        const Matrix W = E * hessian_V(model, y.r) * E.transpose();
        const Matrix Bdd = -2.0 * y.Bd * A - y.B * Ad - y.B * A * A - y.B * R + y.B * W;
        return {y.u, k.accel, y.Bd, Bdd};
    }
};

JState jaxpy(const JState& y, double h, const JState& k) {
    return {y.r + h * k.r, y.u + h * k.u, y.B + h * k.B, y.Bd + h * k.Bd};
}

}  // namespace

JacobiHistory integrate_jacobi(const ModelManifold& model, const Trajectory& traj, const FrameTransport& frame,
                               const Matrix& B0, const Matrix& Bdot0) {
    check_frame(frame, traj);
    const int n = model.dim();
    if (B0.rows() != n || B0.cols() != n || Bdot0.rows() != n || Bdot0.cols() != n)
        throw PreconditionError("integrate_jacobi: B0 and Bdot0 must be n x n");
    const PhaseState& first = traj.states.front();
    const double ell = angular_momentum(model, first);
    JacobiSystem sys{model, ell};
    JState y{first.position.r, first.u, B0, Bdot0};

    JacobiHistory hist;
    auto record = [&](double t) {
        Eigen::PartialPivLU<Matrix> lu(y.B);
        if (!(lu.rcond() > 1e-12)) return false;
        // det B changes sign only through a singular B between two samples
        if (!hist.det.empty() && (lu.determinant() > 0.0) != (hist.det.back() > 0.0)) return false;
        const Kinematics k(model, y.r, y.u, ell);
        hist.times.push_back(t);
        hist.B.push_back(y.B);
        hist.Bdot.push_back(y.Bd);
        hist.det.push_back(lu.determinant());
        hist.S.push_back(lu.solve(y.Bd) + k.A());
        return true;
    };
    if (!record(traj.times.front())) throw PreconditionError("integrate_jacobi: B0 must be invertible");
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const double h = traj.times[i] - traj.times[i - 1];
        const JState k1 = sys.deriv(y);
        const JState k2 = sys.deriv(jaxpy(y, 0.5 * h, k1));
        const JState k3 = sys.deriv(jaxpy(y, 0.5 * h, k2));
        const JState k4 = sys.deriv(jaxpy(y, h, k3));
        y.r += h / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
        y.u += h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
        y.B += h / 6.0 * (k1.B + 2.0 * k2.B + 2.0 * k3.B + k4.B);
        y.Bd += h / 6.0 * (k1.Bd + 2.0 * k2.Bd + 2.0 * k3.Bd + k4.Bd);
        if (!record(traj.times[i])) {
            hist.conjugate_point = true;
            hist.conjugate_time = traj.times[i];
            break;
        }
    }
    return hist;
}

}  // namespace wkam
