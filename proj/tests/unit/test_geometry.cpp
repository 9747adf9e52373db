#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "wkam/error.hpp"
#include "wkam/geometry.hpp"

using namespace wkam;

TEST_CASE("closed-form warps and their eigenfunction") {
    const auto cosh4 = ModelManifold::cosh(4, 2.0);
    CHECK(cosh4.rate() == doctest::Approx(1.0));
    CHECK(warp(cosh4, 0.0) == doctest::Approx(1.0));
    CHECK(warp(cosh4, 1.0) == doctest::Approx(std::cosh(1.0)).epsilon(1e-14));
    CHECK(eigenfunction_g(cosh4, 1.0) == doctest::Approx(std::pow(std::cosh(1.0), -2.0)).epsilon(1e-14));

    const auto exp3 = ModelManifold::exp(3, 1.0);
    CHECK(warp(exp3, 0.5) == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
    CHECK(eigenfunction_g(exp3, 0.5) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));

    // V = c_V w^{-(2n-2)}: at n = 4, c_V = 1/2 this is cosh^{-6}/2.
    CHECK(cosh4.potential_jet(0.3).value == doctest::Approx(0.5 * std::pow(std::cosh(0.3), -6.0)).epsilon(1e-14));
    CHECK(cosh4.ricci_bound() == doctest::Approx(-3.0));
}

TEST_CASE("jets agree with central differences") {
    for (const auto& m : {ModelManifold::cosh(5, 3.0), ModelManifold::exp(4, 2.0)}) {
        const double h = 1e-5;
        for (double r : {-0.7, 0.2, 1.1}) {
            const Jet w = m.warp_jet(r);
            CHECK(w.d1 == doctest::Approx((warp(m, r + h) - warp(m, r - h)) / (2 * h)).epsilon(1e-8));
            const Jet V = m.potential_jet(r);
            const double Vp = m.potential_jet(r + h).value, Vm = m.potential_jet(r - h).value;
            CHECK(V.d1 == doctest::Approx((Vp - Vm) / (2 * h)).epsilon(1e-7));
            CHECK(V.d2 == doctest::Approx((Vp - 2 * V.value + Vm) / (h * h)).epsilon(1e-4));
        }
    }
}

TEST_CASE("discrete Laplacian") {
    const auto m = ModelManifold::cosh(4, 2.0);
    const auto grid = RadialGrid::over(-2.0, 2.0, 0.01);
    const GridField one(grid, 1.0);
    const GridField lap = laplace_beltrami_radial(m, one);
    CHECK_FALSE(lap.is_valid(0));
    CHECK_FALSE(lap.is_valid(grid.size - 1));
    CHECK(lap.sup_abs_on(-2.0, 2.0) == 0.0);

    // With g replaced by 1 the residual |Delta 1 + lambda 1| is lambda.
    CHECK(eigen_residual(m, one) == doctest::Approx(2.0));
    CHECK(eigen_residual(m, grid) < 1e-3);
}

TEST_CASE("eigen residual converges at second order") {
    const auto m = ModelManifold::cosh(3, 1.0);
    const double coarse = eigen_residual(m, RadialGrid::over(-3.0, 3.0, 0.02));
    const double fine = eigen_residual(m, RadialGrid::over(-3.0, 3.0, 0.01));
    CHECK(std::log2(coarse / fine) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("Ricci eigenvalues against the bound") {
    const auto exp4 = ModelManifold::exp(4, 2.0);
    for (double r : {-3.0, 0.0, 2.5}) {
        const RicciMargin rm = ricci_bound_margin(exp4, r);
        CHECK(rm.radial == doctest::Approx(-3.0));
        CHECK(rm.tangential == doctest::Approx(-3.0));
        CHECK(std::abs(rm.margin()) < 1e-12);
    }
    const RicciMargin at0 = ricci_bound_margin(ModelManifold::cosh(4, 2.0), 0.0);
    CHECK(at0.radial == doctest::Approx(-3.0));
    CHECK(at0.tangential == doctest::Approx(-1.0));
    CHECK(at0.min_eigenvalue == doctest::Approx(-3.0));
    CHECK(at0.margin() == doctest::Approx(0.0));
    for (double r : {-4.0, -1.0, 0.5, 3.0}) CHECK(ricci_bound_margin(ModelManifold::cosh(3, 1.0), r).margin() >= -1e-12);
}

TEST_CASE("constructor preconditions") {
    CHECK_THROWS_AS(ModelManifold::cosh(2, 1.0), PreconditionError);
    CHECK_THROWS_AS(ModelManifold::cosh(4, 0.0), PreconditionError);
    CHECK_THROWS_AS(ModelManifold::exp(4, 2.0, -1.0), PreconditionError);
    CHECK_THROWS_AS(parse_warp_kind("sinh"), ConfigError);
    CHECK(parse_warp_kind("exp") == WarpKind::Exp);
}

TEST_CASE("custom warp from samples") {
    std::vector<double> r, w;
    for (int i = 0; i <= 400; ++i) {
        r.push_back(-2.0 + 0.01 * i);
        w.push_back(std::cosh(r.back()));
    }
    const auto m = ModelManifold::custom(4, 2.0, r, w);
    CHECK(warp(m, 0.333) == doctest::Approx(std::cosh(0.333)).epsilon(1e-7));
    CHECK(m.warp_jet(0.333).d1 == doctest::Approx(std::sinh(0.333)).epsilon(1e-5));
    CHECK_THROWS_AS(m.warp_jet(2.5), DomainError);
    CHECK(m.warp_domain().first == -2.0);

    const std::string path = "wkam_unit_warp.txt";
    {
        std::ofstream out(path);
        out.precision(17);
        out << "# r w\n";
        for (std::size_t i = 0; i < r.size(); ++i) out << r[i] << ' ' << w[i] << '\n';
    }
    const auto fromfile = ModelManifold::custom_from_file(4, 2.0, path);
    CHECK(warp(fromfile, 1.0) == doctest::Approx(warp(m, 1.0)).epsilon(1e-9));
    std::remove(path.c_str());
    CHECK_THROWS(ModelManifold::custom_from_file(4, 2.0, "does/not/exist.txt"));
}
