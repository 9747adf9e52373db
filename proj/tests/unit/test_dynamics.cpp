#include <doctest.h>

#include <cmath>

#include "wkam/dynamics.hpp"

using namespace wkam;

TEST_CASE("Lagrangian and Hamiltonian") {
    const auto m = ModelManifold::cosh(4, 2.0);
    const PhaseState rest{{0.4, 0.0}, 0.0, 0.0};
    CHECK(hamiltonian(m, rest) == doctest::Approx(-potential(m, rest.position)));
    CHECK(lagrangian(m, rest) == doctest::Approx(potential(m, rest.position)));

    // L is even in the velocity.
    const PhaseState fwd{{0.4, 1.0}, 0.3, -0.2};
    const PhaseState back{{0.4, 1.0}, -0.3, 0.2};
    CHECK(lagrangian(m, fwd) == lagrangian(m, back));
    CHECK(speed_squared(m, fwd) == doctest::Approx(0.09 + std::pow(std::cosh(0.4), 2) * 0.04));
}

TEST_CASE("zero-energy exp orbit matches the closed form") {
    // On exp(4, 2): V = e^{-6r}/2, so r' = e^{-3r} and r(t) = log(3t + 1)/3.
    const auto m = ModelManifold::exp(4, 2.0);
    const PhaseState start{{0.0, 0.0}, 1.0, 0.0};
    const Trajectory traj = integrate_minimizer(m, start, 2.0, 1e-3);
    REQUIRE(traj.size() > 1);
    CHECK(traj.order == 4);
    for (std::size_t i = 0; i < traj.size(); i += 250) {
        const double t = traj.times[i];
        CHECK(traj.states[i].position.r == doctest::Approx(std::log(3 * t + 1) / 3).epsilon(1e-9));
        CHECK(std::abs(hamiltonian(m, traj.states[i])) < 1e-10);
    }
}

TEST_CASE("integration window truncates the run") {
    const auto m = ModelManifold::exp(4, 2.0);
    IntegratorOptions opts;
    opts.r_max = 0.2;
    const Trajectory traj = integrate_minimizer(m, {{0.0, 0.0}, 1.0, 0.0}, 5.0, 1e-3, opts);
    CHECK(traj.escaped);
    REQUIRE(traj.escape_time.has_value());
    // r reaches 0.2 at t = (e^{0.6} - 1)/3.
    CHECK(*traj.escape_time == doctest::Approx((std::exp(0.6) - 1) / 3).epsilon(1e-2));
}

TEST_CASE("action of a constant path") {
    const auto m = ModelManifold::cosh(4, 2.0);
    PathPolyline p;
    for (int i = 0; i <= 10; ++i) {
        p.times.push_back(0.1 * i);
        p.positions.push_back({0.5, 0.0});
    }
    CHECK(action(m, p) == doctest::Approx(1.0 * potential(m, {0.5, 0.0})).epsilon(1e-14));
    for (double e : discrete_energy(m, p)) CHECK(e == doctest::Approx(-potential(m, {0.5, 0.0})));
}

TEST_CASE("fixed-endpoint minimizer recovers the orbit") {
    const auto m = ModelManifold::exp(4, 2.0);
    const double T = 1.0;
    const double rT = std::log(3 * T + 1) / 3;
    const PathPolyline p = minimize_action_fixed_endpoints(m, {0.0, 0.0}, {rT, 0.0}, T, 200);
    CHECK(euler_lagrange_residual(m, p) < 1e-7);
    double err = 0.0;
    for (std::size_t i = 0; i < p.times.size(); ++i)
        err = std::max(err, std::abs(p.positions[i].r - std::log(3 * p.times[i] + 1) / 3));
    CHECK(err < 1e-4);

    // Any perturbation of the minimizer raises the action.
    PathPolyline q = p;
    q.positions[100].r += 1e-3;
    CHECK(action(m, q) > action(m, p));
}
