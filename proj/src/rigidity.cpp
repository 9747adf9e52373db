#include "wkam/rigidity.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "wkam/error.hpp"

namespace wkam {

Eigen::Matrix2d fundamental_matrix_rigid(int n, double lambda, double t) {
    if (n < 3) throw PreconditionError("fundamental_matrix_rigid: n must be >= 3");
    if (!(lambda > 0.0)) throw PreconditionError("fundamental_matrix_rigid: lambda must be positive");
    const double alpha = std::sqrt(lambda / (n - 2));
    const double ch = std::cosh(alpha * t), sh = std::sinh(alpha * t);
    Eigen::Matrix2d M;
    M << ch, -std::sqrt(lambda * (n - 2)) * sh, -std::sqrt(1.0 / (lambda * (n - 2))) * sh, ch;
    return M;
}

double RigidityPrediction::stretch(double t) const {
    const double alpha = std::sqrt(lambda / (n - 2));
    return std::cosh(alpha * t) - c / std::sqrt(lambda * (n - 2)) * std::sinh(alpha * t);
}

double RigidityPrediction::g(double t) const {
    const double s = stretch(t);
    if (!(s > 0.0)) throw DomainError("rigidity prediction: flow time past the pole");
    return g_base * std::pow(s, -(n - 2.0));
}

double RigidityPrediction::w(double t) const { return w_base * stretch(t); }

std::optional<double> RigidityPrediction::pole() const {
    // kappa = 1 is the exponential (equality) case; fitted values land within round-off of it.
    const double kappa = c / std::sqrt(lambda * (n - 2));
    if (kappa <= 1.0 + 1e-8) return std::nullopt;
    return std::atanh(1.0 / kappa) / std::sqrt(lambda / (n - 2));
}

namespace {

double end_direction(End end) { return end == End::Left ? 1.0 : -1.0; }

}  // namespace

RigidityPrediction rigidity_prediction(const ModelManifold& model, double base_r, End end) {
    const int n = model.dim();
    const Jet w = model.warp_jet(base_r);
    RigidityPrediction p;
    p.n = n;
    p.lambda = model.lambda();
    p.direction = end_direction(end);
    // grad log g = -(n-2) (w'/w) e_r; the flow runs along grad F, away from the calibrating end.
    p.c = -(n - 2) * (w.d1 / w.value) * p.direction;
    p.g_base = eigenfunction_g(model, base_r);
    p.w_base = w.value;
    if (p.lambda * (n - 2) - p.c * p.c < -1e-12)
        throw PreconditionError("rigidity: lambda(n-2) < c^2 at the base point");
    return p;
}

double flow_g_prediction(const ModelManifold& model, double base_r, End end, double t) {
    return rigidity_prediction(model, base_r, end).g(t);
}

namespace {

// Zero-energy radial orbit from base_r moving in direction dir (+1: increasing r) long
// enough to cover the arc length span. The step shrinks with the largest speed met.
Trajectory radial_orbit(const ModelManifold& model, double base_r, double dir, double span, double dt) {
    const auto [lo, hi] = model.warp_domain();
    const double far = base_r + dir * span;
    if (far < lo || far > hi) throw DomainError("flow leaves the warp's sample window");

    // The orbit is cut slightly past the span: toward growing V it reaches the end of
    // the line in finite time.
    const double margin = 0.05;
    IntegratorOptions opts;
    opts.r_min = std::min(base_r, far) - margin;
    opts.r_max = std::max(base_r, far) + margin;

    constexpr int kSamples = 2000;
    double vmax = 0.0, duration = 0.0;
    double prev = 1.0 / std::sqrt(2.0 * model.potential_jet(base_r).value);
    for (int k = 1; k <= kSamples; ++k) {
        const double r = base_r + dir * (span + margin) * k / kSamples;
        const double V = model.potential_jet(r).value;
        vmax = std::max(vmax, std::sqrt(2.0 * V));
        const double inv = 1.0 / std::sqrt(2.0 * V);
        duration += 0.5 * (prev + inv) * (span + margin) / kSamples;
        prev = inv;
    }
    vmax = std::max(vmax, std::sqrt(2.0 * model.potential_jet(base_r).value));
    const double step = dt / std::max(1.0, vmax);

    PhaseState s0;
    s0.position = {base_r, 0.0};
    s0.u = dir * std::sqrt(2.0 * model.potential_jet(base_r).value);
    duration = 1.02 * duration + 10.0 * step;
    for (int attempt = 0; attempt < 8; ++attempt) {
        Trajectory traj = integrate_minimizer(model, s0, duration, step, opts);
        if (arc_length(model, traj).back() >= span) return traj;
        duration *= 2.0;
    }
    throw ConvergenceError("flow did not cover the requested span");
}

}  // namespace

Trajectory calibrated_orbit(const ModelManifold& model, double base_r, End end, double span, double dt) {
    return radial_orbit(model, base_r, end_direction(end), span, dt);
}

FlowGSeries flow_g_measured(const ModelManifold& model, double base_r, End end, double span, double spacing,
                            double dt) {
    if (!(span >= 0.0) || !(spacing > 0.0)) throw PreconditionError("flow_g_measured: bad span or spacing");
    const double dir = end_direction(end);
    FlowGSeries out;
    std::vector<std::pair<double, double>> back, fwd;  // (t, r)
    for (double sense : {-1.0, 1.0}) {
        const Trajectory traj = radial_orbit(model, base_r, sense * dir, span, dt);
        const Rescaled unit = rescale_unit_speed(model, traj, spacing);
        for (std::size_t j = 0; j < unit.unit.size(); ++j) {
            const double t = unit.unit.times[j];
            if (t > span + 1e-12) break;
            (sense > 0 ? fwd : back).emplace_back(sense * t, unit.unit.states[j].position.r);
        }
    }
    std::reverse(back.begin(), back.end());
    back.pop_back();  // t = 0 appears in both halves
    back.insert(back.end(), fwd.begin(), fwd.end());
    for (const auto& [t, r] : back) {
        out.t.push_back(t);
        out.r.push_back(r);
        out.g.push_back(eigenfunction_g(model, r));
    }
    return out;
}

FlowGSeries flow_g_measured(const ModelManifold& model, const GridField& F, double base_r, double span,
                            double spacing, double dt) {
    const double h = F.grid.h;
    const double slope = (F.interpolate(base_r + h) - F.interpolate(base_r - h)) / (2.0 * h);
    const double expected = std::sqrt(2.0 * model.potential_jet(base_r).value);
    if (!(std::abs(slope) > 1e-12)) throw DomainError("flow_g_measured: |grad F| below floor");
    if (std::abs(std::abs(slope) - expected) > 0.05 * expected)
        throw PreconditionError("flow_g_measured: |F'| departs from sqrt(2V) at the base point");
    return flow_g_measured(model, base_r, slope > 0.0 ? End::Left : End::Right, span, spacing, dt);
}

BCheckReport jacobian_B_check(const ModelManifold& model, const Trajectory& traj, const FrameTransport& frame) {
    const int n = model.dim();
    const PhaseState& s0 = traj.states.front();
    if (s0.omega != 0.0) throw PreconditionError("jacobian_B_check: trajectory must be radial");
    const double V0 = potential(model, s0.position);
    if (std::abs(hamiltonian(model, s0)) > 1e-8 * std::max(1.0, V0))
        throw PreconditionError("jacobian_B_check: trajectory must have zero energy");

    const Matrix S0 = radial_hessian_data(model, s0);
    const JacobiHistory jac = integrate_jacobi(model, traj, frame, Matrix::Identity(n, n), S0 - frame.A.front());
    const double p = (n - 1.0) / (n - 2.0);
    const double g0 = eigenfunction_g(model, s0.position.r);

    BCheckReport rep;
    for (std::size_t i = 0; i < jac.times.size(); ++i) {
        const double r = traj.states[i].position.r;
        const Jet gj = model.eigenfunction_jet(r);
        const double ratio = gj.value / g0;
        const Matrix& B = jac.B[i];
        for (int a = 0; a < n; ++a) {
            const double expected = a == 0 ? std::pow(ratio, p) : std::pow(ratio, -1.0 / (n - 2.0));
            rep.max_rel_dev_diag = std::max(rep.max_rel_dev_diag, std::abs(B(a, a) - expected) / std::abs(expected));
            for (int b = 0; b < n; ++b)
                if (a != b) rep.max_offdiag = std::max(rep.max_offdiag, std::abs(B(a, b)));
        }
        for (int a = 1; a < n; ++a)
            rep.max_tangential_grad_g = std::max(rep.max_tangential_grad_g, std::abs(gj.d1 * frame.E[i](a, 0)));
        ++rep.samples;
    }
    return rep;
}

namespace {

// Residuals w_rec - w_base (cosh(alpha t) - c/sqrt(lambda(n-2)) sinh(alpha t)) in (lambda, c).
struct WarpFit : Eigen::DenseFunctor<double> {
    const std::vector<double>& t;
    const std::vector<double>& w;
    double w0;
    int n;

    WarpFit(const std::vector<double>& t_, const std::vector<double>& w_, double w0_, int n_)
        : Eigen::DenseFunctor<double>(2, static_cast<int>(t_.size())), t(t_), w(w_), w0(w0_), n(n_) {}

    int operator()(const InputType& x, ValueType& f) const {
        const double lambda = x(0), c = x(1);
        if (!(lambda > 0.0)) {
            f.setConstant(1e6);
            return 0;
        }
        const double alpha = std::sqrt(lambda / (n - 2)), beta = c / std::sqrt(lambda * (n - 2));
        for (std::size_t i = 0; i < t.size(); ++i)
            f(static_cast<Eigen::Index>(i)) = w[i] - w0 * (std::cosh(alpha * t[i]) - beta * std::sinh(alpha * t[i]));
        return 0;
    }

    int df(const InputType& x, JacobianType& J) const {
        const double lambda = x(0), c = x(1);
        const double alpha = std::sqrt(lambda / (n - 2)), beta = c / std::sqrt(lambda * (n - 2));
        const double dalpha = 0.5 * alpha / lambda, dbeta_dl = -0.5 * beta / lambda;
        const double dbeta_dc = 1.0 / std::sqrt(lambda * (n - 2));
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const double ch = std::cosh(alpha * t[i]), sh = std::sinh(alpha * t[i]);
            J(k, 0) = -w0 * (sh * t[i] * dalpha - dbeta_dl * sh - beta * ch * t[i] * dalpha);
            J(k, 1) = w0 * dbeta_dc * sh;
        }
        return 0;
    }
};

}  // namespace

WarpReconstruction reconstruct_warp(const ModelManifold& model, double base_r, End end, double span, double dt) {
    if (!(span >= 1.0)) throw PreconditionError("reconstruct_warp: need at least 1 unit of flow time");
    const int n = model.dim();
    const Trajectory traj = radial_orbit(model, base_r, end_direction(end), span, dt);
    const FrameTransport frame = transport_frame(model, traj);
    const std::vector<double> sigma = arc_length(model, traj);
    const BCheckReport bcheck = jacobian_B_check(model, traj, frame);

    const PhaseState& s0 = traj.states.front();
    const JacobiHistory jac =
        integrate_jacobi(model, traj, frame, Matrix::Identity(n, n), radial_hessian_data(model, s0) - frame.A.front());
    const double w0 = warp(model, base_r);

    WarpReconstruction out;
    out.max_rel_dev_B = bcheck.max_rel_dev_diag;
    // Thin to about 400 fit points.
    const std::size_t stride = std::max<std::size_t>(1, jac.times.size() / 400);
    for (std::size_t i = 0; i < jac.times.size(); i += stride) {
        if (sigma[i] > span + 1e-12) break;
        out.t.push_back(sigma[i]);
        out.w_rec.push_back(w0 * jac.B[i](1, 1));
    }
    if (out.t.size() < 8) throw PreconditionError("reconstruct_warp: too few samples");

    // Initial guess from the first two derivatives of w_rec at the base point:
    // w'/w = -c/(n-2) and w''/w = lambda/(n-2).
    const std::size_t m = std::min<std::size_t>(out.t.size() - 1, 4);
    const double h = out.t[m] / 2.0;
    const auto interp = [&](double t) {
        auto it = std::upper_bound(out.t.begin(), out.t.end(), t);
        const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - out.t.begin()), out.t.size() - 1);
        const std::size_t i = j == 0 ? 0 : j - 1;
        const double s = (t - out.t[i]) / (out.t[j] - out.t[i]);
        return out.w_rec[i] + s * (out.w_rec[j] - out.w_rec[i]);
    };
    const double w1 = interp(h), w2 = interp(2 * h);
    Eigen::VectorXd x(2);
    x(0) = std::max(1e-3, (n - 2) * (w2 - 2 * w1 + w0) / (h * h * w0));
    x(1) = -(n - 2) * (-3 * w0 + 4 * w1 - w2) / (2 * h * w0);

    WarpFit fit(out.t, out.w_rec, w0, n);
    Eigen::LevenbergMarquardt<WarpFit> lm(fit);
    lm.setXtol(1e-14);
    lm.setFtol(1e-14);
    lm.setMaxfev(2000);
    lm.minimize(x);
    out.lambda_fit = x(0);
    out.c_fit = x(1);

    Eigen::VectorXd f(static_cast<Eigen::Index>(out.t.size()));
    fit(x, f);
    out.residual = f.cwiseAbs().maxCoeff();

    RigidityPrediction fitted;
    fitted.n = n;
    fitted.lambda = out.lambda_fit;
    fitted.c = out.c_fit;
    out.blowup_time = fitted.pole();
    return out;
}

std::string WarpReconstruction::to_json() const {
    nlohmann::json j;
    j["lambda_fit"] = lambda_fit;
    j["c_fit"] = c_fit;
    j["residual"] = residual;
    j["blowup_time"] = blowup_time ? nlohmann::json(*blowup_time) : nlohmann::json(nullptr);
    j["max_rel_dev_B"] = max_rel_dev_B;
    return j.dump(2);
}

}  // namespace wkam
