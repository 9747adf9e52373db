#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wkam/grid.hpp"

namespace wkam {

enum class WarpKind { Cosh, Exp, Custom };
enum class FiberGeometry { ReducedRadial, FlatCircle };

std::string to_string(WarpKind kind);
/// Parses "cosh" | "exp" | "custom"; throws ConfigError otherwise.
WarpKind parse_warp_kind(const std::string& name);

/// Value and first two derivatives of a scalar function of r.
struct Jet {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Natural cubic spline through (x_i, y_i). Derivatives come from the interpolant.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);

    Jet eval(double x) const;
    double lo() const { return x_.front(); }
    double hi() const { return x_.back(); }
    bool empty() const { return x_.empty(); }

private:
    std::vector<double> x_, y_, m_;  // m_: second derivatives at knots
};

/// Coordinates on the warped product R x N: r along the line factor and an
/// optional angle when N is a flat circle.
struct RadialPoint {
    double r = 0.0;
    double theta = 0.0;
};

/// Warped product R x N with metric dr^2 + w(r)^2 g_N, N flat.
///
/// The eigenfunction is fixed as g = w^{-(n-2)}; for the cosh and exp warps with
/// a = sqrt(lambda/(n-2)) it satisfies Delta g = -lambda g exactly.
/// Immutable after construction.
class ModelManifold {
public:
    static ModelManifold cosh(int n, double lambda, double potential_coefficient = 0.5);
    static ModelManifold exp(int n, double lambda, double potential_coefficient = 0.5);
    /// Custom warp from samples (r_i, w_i), interpolated by a natural cubic spline.
    static ModelManifold custom(int n, double lambda, std::vector<double> r, std::vector<double> w,
                                double potential_coefficient = 0.5);
    /// Reads a two-column text file "r w(r)"; '#' starts a comment.
    static ModelManifold custom_from_file(int n, double lambda, const std::string& path,
                                          double potential_coefficient = 0.5);

    ModelManifold with_potential_coefficient(double c) const;
    ModelManifold with_flat_circle(double circumference) const;

    int dim() const { return n_; }
    double lambda() const { return lambda_; }
    /// a = sqrt(lambda/(n-2)).
    double rate() const { return a_; }
    double potential_coefficient() const { return c_v_; }
    WarpKind warp_kind() const { return kind_; }
    FiberGeometry fiber() const { return fiber_; }
    double circumference() const { return circumference_; }
    /// Ricci lower bound K = -lambda (n-1)/(n-2).
    double ricci_bound() const;

    /// w, w', w''. Throws DomainError for a custom warp queried outside its samples.
    Jet warp_jet(double r) const;
    /// g = w^{-(n-2)} with derivatives.
    Jet eigenfunction_jet(double r) const;
    /// V = c_V g^{(2n-2)/(n-2)} = c_V w^{-(2n-2)} with derivatives.
    Jet potential_jet(double r) const;

    /// Sample window of a custom warp; the whole line for the closed-form warps.
    std::pair<double, double> warp_domain() const;

    /// Wraps theta into [0, circumference) for a flat-circle fiber.
    RadialPoint normalize(RadialPoint p) const;

private:
    ModelManifold(int n, double lambda, double c_v, WarpKind kind);

    int n_ = 3;
    double lambda_ = 1.0;
    double a_ = 1.0;
    double c_v_ = 0.5;
    WarpKind kind_ = WarpKind::Cosh;
    FiberGeometry fiber_ = FiberGeometry::ReducedRadial;
    double circumference_ = 0.0;
    CubicSpline spline_;
};

double warp(const ModelManifold& model, double r);
double eigenfunction_g(const ModelManifold& model, double r);

/// Central-difference Delta f = f'' + (n-1)(w'/w) f' at interior nodes; endpoints invalid.
GridField laplace_beltrami_radial(const ModelManifold& model, const GridField& f);

/// sup over interior nodes of |Delta g + lambda g| with g sampled on the grid.
double eigen_residual(const ModelManifold& model, const RadialGrid& grid);
/// Same residual for an arbitrary candidate field in place of g.
double eigen_residual(const ModelManifold& model, const GridField& candidate);

struct RicciMargin {
    double radial = 0.0;      ///< Ric(d_r, d_r) = -(n-1) w''/w
    double tangential = 0.0;  ///< Ric(X, X), X unit tangent to the flat fiber
    double min_eigenvalue = 0.0;
    double bound = 0.0;       ///< -lambda (n-1)/(n-2)
    double margin() const { return min_eigenvalue - bound; }
};
RicciMargin ricci_bound_margin(const ModelManifold& model, double r);

/// Delta V = V'' + (n-1)(w'/w) V'.
double laplacian_V(const ModelManifold& model, double r);

}  // namespace wkam
