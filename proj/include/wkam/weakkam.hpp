#pragma once

#include <cstddef>
#include <vector>

#include "wkam/dynamics.hpp"
#include "wkam/geometry.hpp"
#include "wkam/grid.hpp"

namespace wkam {

/// Candidate set for the inner minimization of one Lax-Oleinik step.
enum class CandidateSet {
    Nodes,     ///< grid nodes only (exactly enumerable)
    Segments,  ///< every point of the piecewise-linear interpolant, minimized per cell in closed form
};

/// Quadrature of the potential over one step.
enum class PotentialRule {
    Trapezoid,  ///< (h_t/2)(V(y) + V(x))
    Midpoint,   ///< h_t V((x+y)/2); node candidates only
};

struct LaxOleinikParams {
    double time_step = 0.01;      ///< h_t
    double search_radius = 0.05;  ///< max hop per step, in length units
    double tol = 1e-7;            ///< sup-norm Cauchy tolerance on valid nodes
    std::size_t max_iters = 200000;
    CandidateSet candidates = CandidateSet::Segments;
    PotentialRule rule = PotentialRule::Trapezoid;
    double monotone_tol = 1e-3;   ///< allowed decrease per iteration in conjugate_solve
    unsigned workers = 0;         ///< 0: WKAM_WORKERS env var, else hardware concurrency

    /// Radius sqrt(2 V_max) h_t (times a 5% margin) with V_max over the grid.
    static LaxOleinikParams for_grid(const ModelManifold& model, const RadialGrid& grid, double time_step);
    /// Throws PreconditionError unless search_radius >= sqrt(2 V_max) h_t on the grid.
    void validate(const ModelManifold& model, const RadialGrid& grid) const;
};

/// (S_{h_t} f)(x) = min_y [ f(y) + |x-y|^2/(2 h_t) + h_t-weighted potential ].
///
/// Candidates lie within search_radius of x and inside the grid; nodes whose search
/// window reaches past the grid edge are marked invalid in the output mask. Ties go to
/// the smallest candidate index, so results do not depend on the worker count.
GridField lax_oleinik_step(const ModelManifold& model, const GridField& f, const LaxOleinikParams& params);

/// Where the initial datum of the value iteration vanishes.
enum class SeedKind {
    Zero,      ///< f = 0 everywhere
    LeftEnd,   ///< f = 0 within seed_width of the left edge, unreachable elsewhere
    RightEnd,  ///< mirror image of LeftEnd
};

struct SolveResult {
    GridField field;
    std::size_t iterations = 0;
    std::vector<double> residual_history;  ///< sup increment per iteration
    bool converged = false;
    double max_monotone_violation = 0.0;   ///< conjugate_solve only
    bool monotone = true;                  ///< max_monotone_violation <= monotone_tol
};

/// Value iteration of lax_oleinik_step from the seed until the sup increment over valid
/// nodes stays below tol for 3 consecutive iterations.
SolveResult weak_kam_solve(const ModelManifold& model, const RadialGrid& grid, const LaxOleinikParams& params,
                           SeedKind seed = SeedKind::Zero, double seed_width = 0.0);

/// Value iteration from an arbitrary datum with the same stop rule.
SolveResult value_iteration(const ModelManifold& model, const GridField& f0, const LaxOleinikParams& params);

/// Value iteration started from -F; the limit is the conjugate solution G.
///
/// Nodes whose search window is clipped keep -F throughout, so curves entering the
/// window from outside see the datum they would see on the whole line.
SolveResult conjugate_solve(const ModelManifold& model, const GridField& F, const LaxOleinikParams& params);

/// 1/2 |grad F|^2 - V at interior nodes (central differences).
GridField hj_residual(const ModelManifold& model, const GridField& F);

struct HarmonicityReport {
    GridField laplacian;                ///< Delta F at interior nodes
    std::vector<std::uint8_t> smooth;   ///< nodes kept after kink exclusion
    double max_positive = 0.0;          ///< max (Delta F)_+ over smooth valid nodes
    double max_abs = 0.0;               ///< max |Delta F| over smooth valid nodes

    /// Same maxima restricted to r in [lo, hi].
    double max_abs_on(double lo, double hi) const;
    double max_positive_on(double lo, double hi) const;
};

/// Delta F per interior node, excluding cells whose second difference jumps by more than
/// ten times the median jump of the neighbouring cells.
HarmonicityReport harmonicity_residual(const ModelManifold& model, const GridField& F);

/// Which end a finite-action curve escapes to.
enum class End { Left, Right };

/// Closed-form or quadrature value of F(r) = inf of the action of curves ending at r and
/// coming from the given end: sqrt(2 c_V) times the integral of w^{-(n-1)} toward that end.
double reference_weak_kam(const ModelManifold& model, double r, End end);
GridField reference_weak_kam_field(const ModelManifold& model, const RadialGrid& grid, End end);

/// D(y) = F(y) + G(y) - integral of L along the line (with quadrature tails past its ends).
///
/// The line must be a radial zero-energy minimizer; the exp model has no finite-action
/// bi-infinite line and is rejected.
GridField line_defect(const ModelManifold& model, const GridField& F, const GridField& G, const Trajectory& line);

/// The action of the whole line used by line_defect.
double line_action(const ModelManifold& model, const Trajectory& line);

}  // namespace wkam
