#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace wkam {

/// Uniform radial grid r_i = lo + i*h, i = 0..size-1.
struct RadialGrid {
    double lo = 0.0;
    double h = 0.0;
    std::size_t size = 0;

    static RadialGrid over(double lo, double hi, double h);
    /// Rebuilds a grid from explicit node coordinates; rejects non-uniform spacing.
    static RadialGrid from_nodes(std::span<const double> nodes);

    double at(std::size_t i) const { return lo + static_cast<double>(i) * h; }
    double hi() const { return at(size - 1); }
    std::vector<double> nodes() const;
};

/// Scalar samples on a RadialGrid with a per-node validity mask.
///
/// The mask marks nodes whose value is trustworthy: interior points of
/// finite-difference stencils, or Lax-Oleinik nodes whose search window
/// did not clip the grid boundary.
struct GridField {
    RadialGrid grid;
    std::vector<double> values;
    std::vector<std::uint8_t> valid;

    GridField() = default;
    GridField(RadialGrid g, double fill);
    GridField(RadialGrid g, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    bool is_valid(std::size_t i) const { return valid[i] != 0; }

    /// Linear interpolation at r (clamped to the grid).
    double interpolate(double r) const;

    /// Sup over valid nodes with r in [lo, hi] of |values| (0 when no node qualifies).
    double sup_abs_on(double lo, double hi) const;
};

/// Samples a callable on every node of the grid; all nodes valid.
template <class Fn>
GridField sample(const RadialGrid& grid, Fn&& fn) {
    std::vector<double> v(grid.size);
    for (std::size_t i = 0; i < grid.size; ++i) v[i] = fn(grid.at(i));
    return GridField(grid, std::move(v));
}

}  // namespace wkam
