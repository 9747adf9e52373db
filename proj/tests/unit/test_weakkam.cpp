#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "wkam/error.hpp"
#include "wkam/weakkam.hpp"

using namespace wkam;

namespace {

LaxOleinikParams coarse_params(const ModelManifold& m, const RadialGrid& grid, double ht) {
    LaxOleinikParams p = LaxOleinikParams::for_grid(m, grid, ht);
    p.workers = 1;
    return p;
}

double max_valid_diff(const GridField& a, const GridField& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.is_valid(i) && b.is_valid(i)) d = std::max(d, std::abs(a.values[i] - b.values[i]));
    return d;
}

}  // namespace

TEST_CASE("one step from zero lies between 0 and h V") {
    const auto m = ModelManifold::cosh(4, 2.0);
    const auto grid = RadialGrid::over(-2.0, 2.0, 0.02);
    const auto p = coarse_params(m, grid, 0.05);
    const GridField out = lax_oleinik_step(m, GridField(grid, 0.0), p);
    std::size_t valid = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!out.is_valid(i)) continue;
        ++valid;
        CHECK(out.values[i] >= 0.0);
        CHECK(out.values[i] <= 0.05 * m.potential_jet(grid.at(i)).value + 1e-15);
    }
    CHECK(valid > grid.size / 2);
    CHECK_FALSE(out.is_valid(0));
}

TEST_CASE("constant shift and monotonicity") {
    const auto m = ModelManifold::exp(4, 2.0);
    const auto grid = RadialGrid::over(1.0, 3.0, 0.05);
    const auto p = coarse_params(m, grid, 0.05);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GridField f(grid, 0.0);
    for (auto& v : f.values) v = u(rng);
    GridField shifted = f, above = f;
    for (auto& v : shifted.values) v += 0.75;
    for (auto& v : above.values) v += std::abs(u(rng));

    const GridField Sf = lax_oleinik_step(m, f, p);
    const GridField Ss = lax_oleinik_step(m, shifted, p);
    const GridField Sa = lax_oleinik_step(m, above, p);
    for (std::size_t i = 0; i < Sf.size(); ++i) {
        CHECK(Ss.values[i] - Sf.values[i] == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(Sa.values[i] >= Sf.values[i]);
    }
}

TEST_CASE("node candidates never beat segment candidates") {
    const auto m = ModelManifold::exp(4, 2.0);
    const auto grid = RadialGrid::over(1.0, 3.0, 0.05);
    auto p = coarse_params(m, grid, 0.05);
    GridField f = sample(grid, [](double r) { return std::sin(3 * r); });
    const GridField seg = lax_oleinik_step(m, f, p);
    p.candidates = CandidateSet::Nodes;
    const GridField nodes = lax_oleinik_step(m, f, p);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(seg.values[i] <= nodes.values[i] + 1e-15);
}

TEST_CASE("two half steps track one full step") {
    const auto m = ModelManifold::exp(4, 2.0);
    const auto grid = RadialGrid::over(0.0, 3.0, 0.005);
    const GridField F = reference_weak_kam_field(m, grid, End::Right);
    const GridField one = lax_oleinik_step(m, F, coarse_params(m, grid, 0.02));
    const auto half = coarse_params(m, grid, 0.01);
    const GridField two = lax_oleinik_step(m, lax_oleinik_step(m, F, half), half);
    CHECK(max_valid_diff(one, two) < 1e-4);
}

TEST_CASE("parameter validation") {
    const auto m = ModelManifold::exp(4, 2.0);
    const auto grid = RadialGrid::over(0.0, 2.0, 0.01);
    auto p = LaxOleinikParams::for_grid(m, grid, 0.01);
    CHECK_NOTHROW(p.validate(m, grid));
    p.search_radius *= 0.5;
    CHECK_THROWS_AS(p.validate(m, grid), PreconditionError);
    p = LaxOleinikParams::for_grid(m, grid, 0.01);
    p.rule = PotentialRule::Midpoint;
    CHECK_THROWS_AS(lax_oleinik_step(m, GridField(grid, 0.0), p), PreconditionError);
}

TEST_CASE("reference solution on the exp model") {
    const auto m = ModelManifold::exp(4, 2.0);
    // F = e^{-3r}/3 toward the right end; the left end carries infinite action.
    CHECK(reference_weak_kam(m, 0.5, End::Right) == doctest::Approx(std::exp(-1.5) / 3).epsilon(1e-14));
    CHECK_THROWS_AS(reference_weak_kam(m, 0.5, End::Left), PreconditionError);

    const auto grid = RadialGrid::over(0.0, 3.0, 0.005);
    const GridField F = reference_weak_kam_field(m, grid, End::Right);
    CHECK(hj_residual(m, F).sup_abs_on(0.0, 3.0) < 1e-3);
    const HarmonicityReport h = harmonicity_residual(m, F);
    CHECK(h.max_abs_on(0.1, 2.9) < 1e-3);

    // F = 0 leaves the whole potential in the residual.
    const GridField R0 = hj_residual(m, GridField(grid, 0.0));
    CHECK(R0.values[100] == doctest::Approx(-m.potential_jet(grid.at(100)).value));
}

TEST_CASE("reference solutions on the cosh model sum to the line action") {
    const auto m = ModelManifold::cosh(4, 2.0);
    for (double r : {-1.0, 0.0, 0.6}) {
        const double sum = reference_weak_kam(m, r, End::Left) + reference_weak_kam(m, r, End::Right);
        CHECK(sum == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
    }
    CHECK(reference_weak_kam(m, 0.0, End::Left) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-12));
}

TEST_CASE("weak KAM solve converges to the reference") {
    const auto m = ModelManifold::exp(4, 2.0);
    const auto grid = RadialGrid::over(0.0, 3.0, 0.02);
    auto p = coarse_params(m, grid, 0.04);
    p.tol = 1e-8;
    const SolveResult res = weak_kam_solve(m, grid, p);
    REQUIRE(res.converged);
    CHECK(res.residual_history.size() == res.iterations);
    const GridField F = reference_weak_kam_field(m, grid, End::Right);
    double err = 0.0;
    for (std::size_t i = 0; i < grid.size; ++i)
        if (res.field.is_valid(i) && grid.at(i) >= 0.5 && grid.at(i) <= 2.5)
            err = std::max(err, std::abs(res.field.values[i] - F.values[i]));
    CHECK(err < 0.02);

    p.max_iters = 1;
    const SolveResult capped = weak_kam_solve(m, grid, p);
    CHECK_FALSE(capped.converged);
    CHECK(capped.iterations == 1);
}

TEST_CASE("left seed marks unreached nodes") {
    const auto m = ModelManifold::cosh(4, 2.0);
    const auto grid = RadialGrid::over(-2.0, 2.0, 0.05);
    auto p = coarse_params(m, grid, 0.05);
    p.max_iters = 1;
    const SolveResult res = weak_kam_solve(m, grid, p, SeedKind::LeftEnd, 0.2);
    CHECK(std::isinf(res.field.values.back()));
    CHECK(std::isfinite(res.field.values[2]));
}

TEST_CASE("conjugate of the exp solution is its negative") {
    const auto m = ModelManifold::exp(4, 2.0);
    const auto grid = RadialGrid::over(1.0, 3.0, 0.05);
    auto p = coarse_params(m, grid, 0.05);
    p.tol = 1e-9;
    const GridField F = reference_weak_kam_field(m, grid, End::Right);
    const SolveResult G = conjugate_solve(m, F, p);
    REQUIRE(G.converged);
    CHECK(G.monotone);
    double dev = 0.0;
    for (std::size_t i = 0; i < grid.size; ++i)
        if (G.field.is_valid(i)) {
            CHECK(F.values[i] + G.field.values[i] <= 1e-12);
            dev = std::max(dev, std::abs(F.values[i] + G.field.values[i]));
        }
    CHECK(dev < 0.02);
}

TEST_CASE("line defect") {
    const auto m = ModelManifold::cosh(4, 2.0);
    const auto grid = RadialGrid::over(-1.0, 1.0, 0.05);
    const GridField FL = reference_weak_kam_field(m, grid, End::Left);
    const GridField FR = reference_weak_kam_field(m, grid, End::Right);
    const PhaseState start{{-1.5, 0.0}, std::sqrt(2 * m.potential_jet(-1.5).value), 0.0};
    const Trajectory line = integrate_minimizer(m, start, 8.0, 1e-3);
    CHECK(line_action(m, line) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-8));
    const GridField D = line_defect(m, FL, FR, line);
    CHECK(D.sup_abs_on(-1.0, 1.0) < 1e-8);

    const auto e = ModelManifold::exp(4, 2.0);
    CHECK_THROWS_AS(line_defect(e, FL, FR, line), PreconditionError);
}
