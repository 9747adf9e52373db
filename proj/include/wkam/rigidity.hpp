#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wkam/dynamics.hpp"
#include "wkam/geometry.hpp"
#include "wkam/grid.hpp"
#include "wkam/riccati.hpp"
#include "wkam/weakkam.hpp"

namespace wkam {

/// Fundamental matrix of x' = [[0, -lambda], [-1/(n-2), 0]] x.
Eigen::Matrix2d fundamental_matrix_rigid(int n, double lambda, double t);

/// Closed-form data of the rigid case at one base point, for the unit-speed flow along
/// grad F, where F is the weak KAM solution calibrated from the given end.
struct RigidityPrediction {
    int n = 0;
    double lambda = 0.0;
    double c = 0.0;       ///< <grad log g, v_1> at the base point (signed)
    double g_base = 0.0;
    double w_base = 0.0;
    double direction = 0.0;  ///< +1 when the flow moves toward increasing r

    /// cosh(t sqrt(lambda/(n-2))) - c/sqrt(lambda(n-2)) sinh(t sqrt(lambda/(n-2)))
    double stretch(double t) const;
    /// g along the flow; DomainError past the pole.
    double g(double t) const;
    /// w along the flow, w_base * stretch(t).
    double w(double t) const;
    /// First t > 0 where the stretch vanishes, when c exceeds sqrt(lambda(n-2)).
    std::optional<double> pole() const;
};

/// Checks lambda(n-2) >= c^2 (to 1e-12) and returns the prediction.
RigidityPrediction rigidity_prediction(const ModelManifold& model, double base_r, End end);

/// g(phi_{c(t)}(x)) from the closed form.
double flow_g_prediction(const ModelManifold& model, double base_r, End end, double t);

/// Zero-energy radial orbit from base_r along grad F (away from the given end), long enough
/// to cover `span` units of arc length. The time step is dt divided by the largest speed met.
Trajectory calibrated_orbit(const ModelManifold& model, double base_r, End end, double span, double dt = 1e-3);

struct FlowGSeries {
    std::vector<double> t;  ///< unit-speed time, from -span to span
    std::vector<double> r;
    std::vector<double> g;
};

/// Integrates the zero-energy Hamiltonian flow along grad F from base_r (both time
/// directions), reparametrizes it by arc length and samples g every `spacing`.
/// `dt` is the Hamiltonian time step.
FlowGSeries flow_g_measured(const ModelManifold& model, double base_r, End end, double span, double spacing,
                            double dt = 1e-3);

/// Same flow with the direction read from a discrete F. Requires |F'| within 5% of
/// sqrt(2V) at the base node (the rigid identity |grad F| = g^{(n-1)/(n-2)} when c_V = 1/2).
FlowGSeries flow_g_measured(const ModelManifold& model, const GridField& F, double base_r, double span,
                            double spacing, double dt = 1e-3);

struct BCheckReport {
    double max_rel_dev_diag = 0.0;       ///< vs the displayed diagonal B(t)
    double max_offdiag = 0.0;
    double max_tangential_grad_g = 0.0;  ///< max |<grad g, v_i>|, i >= 2
    std::size_t samples = 0;
};

/// Integrates B with B(0) = I, B'(0) = S(0) - A(0), S(0) the rigid Hessian data, along a
/// zero-energy radial trajectory, and compares it with the diagonal closed form.
BCheckReport jacobian_B_check(const ModelManifold& model, const Trajectory& traj, const FrameTransport& frame);

struct WarpReconstruction {
    std::vector<double> t;      ///< unit-speed flow time
    std::vector<double> w_rec;  ///< w(base) times the tangential block of B
    double lambda_fit = 0.0;
    double c_fit = 0.0;
    double residual = 0.0;      ///< max |w_rec - fitted model|
    std::optional<double> blowup_time;
    double max_rel_dev_B = 0.0;

    std::string to_json() const;
};

/// Rebuilds w along the flow from the Jacobi matrix and fits (lambda, c) of the rigid
/// warp by Levenberg-Marquardt. span is the unit-speed flow time covered (>= 1).
WarpReconstruction reconstruct_warp(const ModelManifold& model, double base_r, End end, double span,
                                    double dt = 1e-3);

}  // namespace wkam
