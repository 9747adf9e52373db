#include "wkam/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "wkam/error.hpp"

namespace wkam {

std::string to_string(WarpKind kind) {
    switch (kind) {
        case WarpKind::Cosh: return "cosh";
        case WarpKind::Exp: return "exp";
        case WarpKind::Custom: return "custom";
    }
    return "?";
}

WarpKind parse_warp_kind(const std::string& name) {
    if (name == "cosh") return WarpKind::Cosh;
    if (name == "exp") return WarpKind::Exp;
    if (name == "custom") return WarpKind::Custom;
    throw ConfigError("unknown warp kind '" + name + "' (expected cosh|exp|custom)");
}

// ---------------------------------------------------------------------------
// CubicSpline

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)), m_(x_.size(), 0.0) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw DomainError("spline: need >= 3 matching samples");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw DomainError("spline: abscissae must increase");

    // Natural end conditions; Thomas algorithm on the interior second derivatives.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x_[i] - x_[i - 1];
        const double h1 = x_[i + 1] - x_[i];
        const double diag = 2.0 * (h0 + h1);
        const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
        const double denom = diag - h0 * c[i - 1];
        c[i] = h1 / denom;
        d[i] = (rhs - h0 * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
}

Jet CubicSpline::eval(double x) const {
    if (x < x_.front() - 1e-12 || x > x_.back() + 1e-12)
        throw DomainError("custom warp queried outside its sample window");
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin() - 1, 0));
    i = std::min(i, x_.size() - 2);
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - x) / h;
    const double B = (x - x_[i]) / h;
    Jet j;
    j.value = A * y_[i] + B * y_[i + 1] +
              ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
    j.d1 = (y_[i + 1] - y_[i]) / h - (3.0 * A * A - 1.0) / 6.0 * h * m_[i] +
           (3.0 * B * B - 1.0) / 6.0 * h * m_[i + 1];
    j.d2 = A * m_[i] + B * m_[i + 1];
    return j;
}

// ---------------------------------------------------------------------------
// ModelManifold

ModelManifold::ModelManifold(int n, double lambda, double c_v, WarpKind kind)
    : n_(n), lambda_(lambda), c_v_(c_v), kind_(kind) {
    if (n < 3) throw PreconditionError("model: dimension must be >= 3");
    if (!(lambda > 0.0)) throw PreconditionError("model: lambda must be positive");
    if (!(c_v > 0.0)) throw PreconditionError("model: potential coefficient must be positive");
    a_ = std::sqrt(lambda / (n - 2));
}

ModelManifold ModelManifold::cosh(int n, double lambda, double c) {
    return ModelManifold(n, lambda, c, WarpKind::Cosh);
}

ModelManifold ModelManifold::exp(int n, double lambda, double c) {
    return ModelManifold(n, lambda, c, WarpKind::Exp);
}

ModelManifold ModelManifold::custom(int n, double lambda, std::vector<double> r, std::vector<double> w,
                                    double c) {
    for (double v : w)
        if (!(v > 0.0)) throw PreconditionError("custom warp: samples must be positive");
    ModelManifold m(n, lambda, c, WarpKind::Custom);
    m.spline_ = CubicSpline(std::move(r), std::move(w));
    return m;
}

ModelManifold ModelManifold::custom_from_file(int n, double lambda, const std::string& path, double c) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open custom warp file '" + path + "'");
    std::vector<double> r, w;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto p = line.find('#'); p != std::string::npos) line.erase(p);
        std::istringstream ss(line);
        double a, b;
        if (!(ss >> a)) continue;
        if (!(ss >> b))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected two columns");
        r.push_back(a);
        w.push_back(b);
    }
    return custom(n, lambda, std::move(r), std::move(w), c);
}

ModelManifold ModelManifold::with_potential_coefficient(double c) const {
    if (!(c > 0.0)) throw PreconditionError("model: potential coefficient must be positive");
    ModelManifold m = *this;
    m.c_v_ = c;
    return m;
}

ModelManifold ModelManifold::with_flat_circle(double circumference) const {
    if (!(circumference > 0.0)) throw PreconditionError("model: circumference must be positive");
    ModelManifold m = *this;
    m.fiber_ = FiberGeometry::FlatCircle;
    m.circumference_ = circumference;
    return m;
}

double ModelManifold::ricci_bound() const { return -lambda_ * (n_ - 1) / (n_ - 2); }

Jet ModelManifold::warp_jet(double r) const {
    switch (kind_) {
        case WarpKind::Cosh: {
            const double c = std::cosh(a_ * r), s = std::sinh(a_ * r);
            return {c, a_ * s, a_ * a_ * c};
        }
        case WarpKind::Exp: {
            const double e = std::exp(a_ * r);
            return {e, a_ * e, a_ * a_ * e};
        }
        case WarpKind::Custom: return spline_.eval(r);
    }
    return {};
}

Jet ModelManifold::eigenfunction_jet(double r) const {
    const Jet w = warp_jet(r);
    const double m = n_ - 2;
    const double g = std::pow(w.value, -m);
    const double lw1 = w.d1 / w.value;
    const double lw2 = w.d2 / w.value;
    return {g, -m * g * lw1, g * (m * (m + 1.0) * lw1 * lw1 - m * lw2)};
}

Jet ModelManifold::potential_jet(double r) const {
    const Jet w = warp_jet(r);
    const double q = 2.0 * n_ - 2.0;
    const double V = c_v_ * std::pow(w.value, -q);
    const double lw1 = w.d1 / w.value;
    const double lw2 = w.d2 / w.value;
    return {V, -q * V * lw1, V * (q * (q + 1.0) * lw1 * lw1 - q * lw2)};
}

std::pair<double, double> ModelManifold::warp_domain() const {
    if (kind_ == WarpKind::Custom) return {spline_.lo(), spline_.hi()};
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
}

RadialPoint ModelManifold::normalize(RadialPoint p) const {
    if (fiber_ == FiberGeometry::FlatCircle) {
        p.theta = std::fmod(p.theta, circumference_);
        if (p.theta < 0.0) p.theta += circumference_;
    }
    return p;
}

// ---------------------------------------------------------------------------

double warp(const ModelManifold& model, double r) { return model.warp_jet(r).value; }

double eigenfunction_g(const ModelManifold& model, double r) { return model.eigenfunction_jet(r).value; }

GridField laplace_beltrami_radial(const ModelManifold& model, const GridField& f) {
    const RadialGrid& grid = f.grid;
    if (grid.size < 3) throw DomainError("laplacian: grid needs at least 3 points");
    if (!(grid.h > 0.0)) throw DomainError("laplacian: non-positive spacing");
    GridField out(grid, 0.0);
    const double h = grid.h;
    const int n = model.dim();
    out.valid[0] = out.valid[grid.size - 1] = 0;
    for (std::size_t i = 1; i + 1 < grid.size; ++i) {
        const Jet w = model.warp_jet(grid.at(i));
        const double d2 = (f.values[i + 1] - 2.0 * f.values[i] + f.values[i - 1]) / (h * h);
        const double d1 = (f.values[i + 1] - f.values[i - 1]) / (2.0 * h);
        out.values[i] = d2 + (n - 1) * (w.d1 / w.value) * d1;
        out.valid[i] = f.valid[i - 1] && f.valid[i] && f.valid[i + 1];
    }
    return out;
}

double eigen_residual(const ModelManifold& model, const GridField& candidate) {
    const GridField lap = laplace_beltrami_radial(model, candidate);
    double sup = 0.0;
    for (std::size_t i = 0; i < lap.size(); ++i)
        if (lap.valid[i]) sup = std::max(sup, std::abs(lap.values[i] + model.lambda() * candidate.values[i]));
    return sup;
}

double eigen_residual(const ModelManifold& model, const RadialGrid& grid) {
    return eigen_residual(model, sample(grid, [&](double r) { return eigenfunction_g(model, r); }));
}

RicciMargin ricci_bound_margin(const ModelManifold& model, double r) {
    const Jet w = model.warp_jet(r);
    const int n = model.dim();
    const double lw1 = w.d1 / w.value;
    const double lw2 = w.d2 / w.value;
    RicciMargin m;
    m.radial = -(n - 1) * lw2;
    m.tangential = -lw2 - (n - 2) * lw1 * lw1;
    m.min_eigenvalue = std::min(m.radial, m.tangential);
    m.bound = model.ricci_bound();
    return m;
}

double laplacian_V(const ModelManifold& model, double r) {
    const Jet w = model.warp_jet(r);
    const Jet V = model.potential_jet(r);
    return V.d2 + (model.dim() - 1) * (w.d1 / w.value) * V.d1;
}

}  // namespace wkam
