#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wkam/dynamics.hpp"
#include "wkam/geometry.hpp"

namespace wkam {

using Matrix = Eigen::MatrixXd;

/// Hessian of the radial potential in the model frame (e_r, e_theta, e_3, ..., e_n):
/// diag(V'', V' w'/w, ..., V' w'/w). Its trace is laplacian_V.
Matrix hessian_V(const ModelManifold& model, double r);

/// R_ij = <Rm(e_i, v) v, e_j> in the model frame for the velocity with model-frame
/// components (u, w omega, 0, ...). Sectional curvatures: -w''/w on radial planes,
/// -(w'/w)^2 on fibre planes.
Matrix jacobi_curvature(const ModelManifold& model, double r, const Eigen::VectorXd& velocity);

/// Orthonormal frame along a trajectory with v_1 = velocity/|velocity|.
///
/// Rows of E are v_i in the model frame. v_2 is v_1 rotated by a quarter turn inside the
/// (e_r, e_theta) plane and v_k = e_k for k >= 3; the e_k are parallel and the plane is
/// two-dimensional, so the rotation Q of the construction is the identity here.
struct FrameTransport {
    std::vector<double> times;
    std::vector<Matrix> E;
    std::vector<Matrix> A;     ///< dE/dt = A E, A = [[0, A_2], [-A_2^T, 0]]
    std::vector<Matrix> Adot;
    std::vector<double> speed;
};

FrameTransport transport_frame(const ModelManifold& model, const Trajectory& traj, double speed_floor = 1e-8);

/// One sample of the Riccati history; matrices are in the moving frame.
struct RiccatiSample {
    double t = 0.0;
    double r = 0.0;
    double u = 0.0;
    double omega = 0.0;
    double speed = 0.0;
    Matrix S, A, R, W;
    double s = 0.0;       ///< tr S
    double s3 = 0.0;      ///< tr S_3
    double S1 = 0.0;
    double S2_norm = 0.0;
    double b = 0.0;       ///< s / g^{(n-1)/(n-2)}
};

struct RiccatiOptions {
    double blowup_cap = 1e6;   ///< max |S_ij| before the run is cut
    double step_tol = 1e-10;   ///< local error allowed per step (full step vs two half steps)
    int max_subdivisions = 12;
};

struct RiccatiHistory {
    std::vector<RiccatiSample> samples;
    bool blew_up = false;
    std::optional<double> blowup_time;
    double max_local_error = 0.0;
};

/// RK4 for dS/dt = -S^2 - S A - A^T S - R + W, co-integrated with the radial motion so the
/// coefficients are exact at the stage times. Output on the trajectory's time grid.
RiccatiHistory integrate_riccati(const ModelManifold& model, const Trajectory& traj, const FrameTransport& frame,
                                 const Matrix& S0, const RiccatiOptions& opts = {});

/// Frame matrix of the Hessian of a radial solution of 1/2 |grad F|^2 = V at a point of a
/// radial zero-energy orbit: diag(<grad V, v>/|v|^2, u w'/w, ..., u w'/w).
Matrix radial_hessian_data(const ModelManifold& model, const PhaseState& state);

struct TraceMargin {
    std::vector<double> times;
    std::vector<double> lemma;      ///< left side of the trace inequality, Ricci bound K
    std::vector<double> corollary;  ///< ds/dt + s^2/(n-1) - 2s/(n-2) <grad g, v>/g
    double max_lemma = 0.0;
    double max_corollary = 0.0;
};

/// Both forms of the trace inequality along a history. Refuses histories whose energy
/// |H| exceeds energy_tol times the kinetic scale.
TraceMargin trace_inequality_margin(const ModelManifold& model, const RiccatiHistory& history,
                                    double energy_tol = 1e-6);

/// Arc length sigma(t) along a trajectory; trapezoid with the endpoint-derivative correction.
std::vector<double> arc_length(const ModelManifold& model, const Trajectory& traj);

struct Rescaled {
    Trajectory unit;        ///< uniform in arc length, unit speed
    std::vector<double> c;  ///< original time of each sample
};

/// Reparametrization by arc length sampled with the given spacing (the trajectory's step by default).
Rescaled rescale_unit_speed(const ModelManifold& model, const Trajectory& traj, double spacing = 0.0,
                            double speed_floor = 1e-8);

/// g along a unit-speed curve and d(t) = d/dt log g.
struct GPath {
    std::vector<double> t;
    std::vector<double> g;
    std::vector<double> d;
};

/// g sampled at the arc length of each history sample.
GPath g_path_along(const ModelManifold& model, const RiccatiHistory& history, const std::vector<double>& sigma);

/// The coefficient k printed with the explicit comparison solution: (n-3)(n-1)/(2(n-2)^2).
double printed_k(int n);
/// The coefficient obtained by rescaling the trace inequality directly: (n-3)/(2(n-2)).
double consistent_k(int n);

struct BbarSeries {
    std::vector<double> t;
    std::vector<double> bbar;
    std::vector<Eigen::Matrix2d> M;  ///< fundamental matrix of x' = [[-k d, 0], [1/(n-1), k d]] x
    double k = 0.0;
    double max_det_error = 0.0;       ///< max |det M - 1|
    double max_formula_vs_M = 0.0;    ///< max |bbar - (M x0)_1/(M x0)_2|
    bool blew_up = false;
    std::optional<double> blowup_time;
    /// Max |bbar' + bbar^2/(n-1) + 2k bbar d| with bbar' by five-point differences, over
    /// interior samples whose denominator is at least 0.1; NaN unless the grid is uniform.
    double ode_residual = 0.0;
};

/// Explicit solution of bbar' = -bbar^2/(n-1) - 2k bbar d(t), bbar(0) = b0; the series stops
/// where the denominator crosses zero.
BbarSeries comparison_bbar(int n, double b0, const GPath& path, double k);

struct ComparisonReport {
    double max_excess = 0.0;  ///< max (b - bbar)/(1 + |bbar|) over common samples before either blow-up
    std::size_t compared = 0;
    std::optional<double> b_blowup_time;
    std::optional<double> bbar_blowup_time;
    bool holds(double tol) const { return max_excess <= tol; }
};

/// b(t) on a grid that agrees with bbar.t over the common prefix (either series may stop
/// early at its blow-up). Mismatched grids raise PreconditionError.
ComparisonReport comparison_check(const std::vector<double>& t, const std::vector<double>& b,
                                  std::optional<double> b_blowup_time, const BbarSeries& bbar);

struct JacobiHistory {
    std::vector<double> times;
    std::vector<Matrix> B;
    std::vector<Matrix> Bdot;
    std::vector<double> det;
    std::vector<Matrix> S;  ///< B^{-1} Bdot + A
    bool conjugate_point = false;
    std::optional<double> conjugate_time;
};

/// RK4 for B'' + 2 B' A + B A' + B A^2 + B R - B W = 0 co-integrated with the radial motion.
/// Stops at the first sample where B is numerically singular (a conjugate point).
JacobiHistory integrate_jacobi(const ModelManifold& model, const Trajectory& traj, const FrameTransport& frame,
                               const Matrix& B0, const Matrix& Bdot0);

}  // namespace wkam
