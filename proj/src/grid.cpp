#include "wkam/grid.hpp"

#include <algorithm>
#include <cmath>

#include "wkam/error.hpp"

namespace wkam {

RadialGrid RadialGrid::over(double lo, double hi, double h) {
    if (!(h > 0.0) || !(hi > lo)) throw DomainError("grid: need hi > lo and h > 0");
    const auto cells = static_cast<std::size_t>(std::llround((hi - lo) / h));
    return RadialGrid{lo, h, cells + 1};
}

RadialGrid RadialGrid::from_nodes(std::span<const double> nodes) {
    if (nodes.size() < 2) throw DomainError("grid: need at least two nodes");
    const double h = (nodes.back() - nodes.front()) / static_cast<double>(nodes.size() - 1);
    if (!(h > 0.0)) throw DomainError("grid: nodes must be increasing");
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (std::abs((nodes[i] - nodes[i - 1]) - h) > 1e-9 * std::max(1.0, h))
            throw DomainError("grid: non-uniform spacing");
    }
    return RadialGrid{nodes.front(), h, nodes.size()};
}

std::vector<double> RadialGrid::nodes() const {
    std::vector<double> out(size);
    for (std::size_t i = 0; i < size; ++i) out[i] = at(i);
    return out;
}

GridField::GridField(RadialGrid g, double fill)
    : grid(g), values(g.size, fill), valid(g.size, 1) {}

GridField::GridField(RadialGrid g, std::vector<double> v)
    : grid(g), values(std::move(v)), valid(grid.size, 1) {
    if (values.size() != grid.size) throw DomainError("grid field: value count mismatch");
}

double GridField::interpolate(double r) const {
    const double s = std::clamp((r - grid.lo) / grid.h, 0.0, static_cast<double>(grid.size - 1));
    const auto i = std::min(static_cast<std::size_t>(s), grid.size - 2);
    const double t = s - static_cast<double>(i);
    return (1.0 - t) * values[i] + t * values[i + 1];
}

double GridField::sup_abs_on(double lo, double hi) const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const double r = grid.at(i);
        if (valid[i] && r >= lo - 1e-12 && r <= hi + 1e-12) m = std::max(m, std::abs(values[i]));
    }
    return m;
}

}  // namespace wkam
