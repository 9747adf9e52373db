#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wkam/error.hpp"
#include "wkam/geometry.hpp"

namespace wkam {

/// Point of the tangent bundle: position plus radial velocity u = dr/dt and
/// angular velocity omega = dtheta/dt.
struct PhaseState {
    RadialPoint position;
    double u = 0.0;
    double omega = 0.0;
};

/// Time-stamped phase states produced by one integrator run.
struct Trajectory {
    std::vector<double> times;
    std::vector<PhaseState> states;
    double step = 0.0;
    std::string scheme;
    int order = 0;

    /// Set when the orbit left the working window (blow-up toward an end).
    bool escaped = false;
    std::optional<double> escape_time;

    double energy_drift = 0.0;    ///< max_t |H(t) - H(0)|
    double drift_constant = 0.0;  ///< energy_drift / step^order

    std::size_t size() const { return states.size(); }
};

/// Competitor curve for the action: positions at increasing times.
struct PathPolyline {
    std::vector<double> times;
    std::vector<RadialPoint> positions;
};

double potential(const ModelManifold& model, const RadialPoint& x);
/// |v|^2 = u^2 + w(r)^2 omega^2.
double speed_squared(const ModelManifold& model, const PhaseState& s);
/// L = |v|^2/2 + V.
double lagrangian(const ModelManifold& model, const PhaseState& s);
/// H = |v|^2/2 - V. Sign convention: Euler-Lagrange reads D^2 gamma/dt^2 = +grad V.
double hamiltonian(const ModelManifold& model, const PhaseState& s);

struct IntegratorOptions {
    double r_min = -1e300;
    double r_max = 1e300;
    std::size_t max_steps = 50'000'000;
};

/// Fourth-order symplectic integration (Yoshida triple composition of velocity
/// Verlet) of r'' = w w' omega^2 + V'(r) with w^2 omega conserved.
///
/// Leaving [r_min, r_max] truncates the run and sets the escape marker.
Trajectory integrate_minimizer(const ModelManifold& model, const PhaseState& initial, double duration,
                               double dt, const IntegratorOptions& opts = {});

/// Trapezoidal discrete action sum_i [ |dx|^2/(2 dt) + dt (V_i + V_{i+1})/2 ].
///
/// The metric increment is |dx|^2 = dr^2 + w(r_mid)^2 dtheta^2.
double action(const ModelManifold& model, const PathPolyline& path);

/// Segment energies |dx/dt|^2/2 - (V_i + V_{i+1})/2 of a polyline.
std::vector<double> discrete_energy(const ModelManifold& model, const PathPolyline& path);

struct ActionMinimizerOptions {
    double tol = 1e-7;  ///< max discrete Euler-Lagrange residual
    int max_newton_iters = 100;
    int max_descent_iters = 200000;
};

/// Minimization failed; carries the best iterate found.
class ActionMinimizationError : public ConvergenceError {
public:
    ActionMinimizationError(const std::string& what, PathPolyline best, double residual)
        : ConvergenceError(what), best_(std::move(best)), residual_(residual) {}
    const PathPolyline& best_iterate() const { return best_; }
    double residual() const { return residual_; }

private:
    PathPolyline best_;
    double residual_;
};

/// Radial fixed-endpoint minimizer of the trapezoidal action with m uniform segments.
///
/// Damped Newton on the interior nodes using the tridiagonal Hessian, started from
/// the straight line; falls back to gradient descent when Newton stalls.
PathPolyline minimize_action_fixed_endpoints(const ModelManifold& model, const RadialPoint& x_a,
                                             const RadialPoint& x_b, double duration, int segments,
                                             const ActionMinimizerOptions& opts = {});

/// Max over interior nodes of |-(r_{i+1} - 2 r_i + r_{i-1})/dt^2 + V'(r_i)|.
double euler_lagrange_residual(const ModelManifold& model, const PathPolyline& path);

}  // namespace wkam
