#include <doctest.h>

#include <cmath>

#include "wkam/error.hpp"
#include "wkam/riccati.hpp"

using namespace wkam;

namespace {

PhaseState zero_energy(const ModelManifold& m, double r0, double dir) {
    return {{r0, 0.0}, dir * std::sqrt(2 * m.potential_jet(r0).value), 0.0};
}

GPath straight_path(const ModelManifold& m, double r0, double length, double step) {
    GPath p;
    for (int i = 0; i * step <= length + 1e-12; ++i) {
        const double t = i * step;
        const Jet g = m.eigenfunction_jet(r0 + t);
        p.t.push_back(t);
        p.g.push_back(g.value);
        p.d.push_back(g.d1 / g.value);
    }
    return p;
}

}  // namespace

TEST_CASE("comparison coefficients") {
    CHECK(printed_k(4) == doctest::Approx(3.0 / 8.0));
    CHECK(consistent_k(4) == doctest::Approx(0.25));
    CHECK(printed_k(3) == 0.0);
    CHECK(consistent_k(3) == 0.0);
}

TEST_CASE("potential Hessian trace is the Laplacian of V") {
    const auto m = ModelManifold::cosh(5, 3.0);
    for (double r : {-0.4, 0.9}) CHECK(hessian_V(m, r).trace() == doctest::Approx(laplacian_V(m, r)).epsilon(1e-12));
}

TEST_CASE("transported frame stays orthonormal") {
    const auto m = ModelManifold::cosh(4, 2.0);
    const PhaseState s0{{-0.5, 0.0}, 0.3, 0.2};
    const Trajectory traj = integrate_minimizer(m, s0, 1.0, 1e-3);
    const FrameTransport fr = transport_frame(m, traj);
    REQUIRE(fr.E.size() == traj.size());
    for (std::size_t i = 0; i < fr.E.size(); i += 100) {
        const Matrix& E = fr.E[i];
        CHECK((E * E.transpose() - Matrix::Identity(4, 4)).norm() < 1e-12);
        CHECK((fr.A[i] + fr.A[i].transpose()).norm() < 1e-12);
    }
}

TEST_CASE("rigid Hessian data solves the Riccati equation") {
    const auto m = ModelManifold::exp(4, 2.0);
    const PhaseState s0 = zero_energy(m, 0.0, 1.0);
    const Trajectory traj = integrate_minimizer(m, s0, 1.0, 1e-3);
    const FrameTransport fr = transport_frame(m, traj);
    const RiccatiHistory h = integrate_riccati(m, traj, fr, radial_hessian_data(m, s0));
    REQUIRE(h.samples.size() == traj.size());
    CHECK_FALSE(h.blew_up);
    for (std::size_t i = 0; i < traj.size(); i += 100) {
        const Matrix expect = radial_hessian_data(m, traj.states[i]);
        CHECK((h.samples[i].S - expect).norm() < 1e-8);
    }
    const TraceMargin tm = trace_inequality_margin(m, h);
    for (double v : tm.corollary) CHECK(std::abs(v) < 1e-6);
    CHECK_THROWS_AS(integrate_riccati(m, traj, fr, Matrix::Zero(3, 3)), PreconditionError);
}

TEST_CASE("unit-speed rescaling is idempotent") {
    const auto m = ModelManifold::cosh(4, 2.0);
    const Trajectory traj = integrate_minimizer(m, zero_energy(m, -1.0, 1.0), 2.0, 1e-3);
    const Rescaled once = rescale_unit_speed(m, traj, 0.01);
    for (const auto& s : once.unit.states) CHECK(std::sqrt(speed_squared(m, s)) == doctest::Approx(1.0).epsilon(1e-9));
    const Rescaled twice = rescale_unit_speed(m, once.unit, 0.01);
    const std::size_t n = std::min(once.unit.size(), twice.unit.size());
    REQUIRE(n + 1 >= once.unit.size());
    for (std::size_t i = 0; i < n; ++i)
        CHECK(twice.unit.states[i].position.r == doctest::Approx(once.unit.states[i].position.r).epsilon(1e-9));
}

TEST_CASE("comparison solution") {
    const auto m = ModelManifold::cosh(4, 2.0);
    const GPath path = straight_path(m, -1.0, 2.0, 1e-3);
    const BbarSeries zero = comparison_bbar(4, 0.0, path, consistent_k(4));
    for (double v : zero.bbar) CHECK(v == 0.0);
    CHECK(zero.max_det_error < 1e-10);

    // On exp(3, 1), d = -1 and k = 0, so bbar = 1/(t/2 - 1) blows up at t = 2.
    const auto e3 = ModelManifold::exp(3, 1.0);
    const BbarSeries blow = comparison_bbar(3, -1.0, straight_path(e3, 0.0, 3.0, 1e-3), consistent_k(3));
    REQUIRE(blow.blowup_time.has_value());
    CHECK(*blow.blowup_time == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(blow.bbar[500] == doctest::Approx(1.0 / (0.25 - 1.0)).epsilon(1e-10));
}

TEST_CASE("comparison check") {
    const auto m = ModelManifold::cosh(4, 2.0);
    const GPath path = straight_path(m, 0.0, 1.0, 1e-2);
    const BbarSeries bb = comparison_bbar(4, 0.5, path, consistent_k(4));
    std::vector<double> below = bb.bbar;
    for (auto& v : below) v -= 0.1;
    const ComparisonReport ok = comparison_check(bb.t, below, std::nullopt, bb);
    CHECK(ok.holds(0.0));
    CHECK(ok.compared == bb.t.size());
    std::vector<double> above = bb.bbar;
    above[10] += 0.2;
    CHECK_FALSE(comparison_check(bb.t, above, std::nullopt, bb).holds(1e-3));
    std::vector<double> shifted = bb.t;
    shifted[3] += 0.5;
    CHECK_THROWS_AS(comparison_check(shifted, below, std::nullopt, bb), PreconditionError);
}

TEST_CASE("Jacobi matrix of the rigid flow") {
    const auto m = ModelManifold::cosh(4, 2.0);
    const PhaseState s0 = zero_energy(m, -1.0, 1.0);
    const Trajectory traj = integrate_minimizer(m, s0, 1.5, 1e-3);
    const FrameTransport fr = transport_frame(m, traj);
    const Matrix S0 = radial_hessian_data(m, s0);
    const JacobiHistory jh = integrate_jacobi(m, traj, fr, Matrix::Identity(4, 4), S0 - fr.A.front());
    CHECK_FALSE(jh.conjugate_point);
    for (double d : jh.det) CHECK(d > 0.0);
    for (std::size_t i = 0; i < jh.B.size(); i += 100) {
        const Matrix& B = jh.B[i];
        CHECK((B - Matrix(B.diagonal().asDiagonal())).norm() < 1e-8);
        CHECK((jh.S[i] - radial_hessian_data(m, traj.states[i])).norm() < 1e-6);
    }
    CHECK_THROWS_AS(integrate_jacobi(m, traj, fr, Matrix::Zero(4, 4), Matrix::Zero(4, 4)), PreconditionError);
}

TEST_CASE("rescaled time of the exp orbit") {
    // Speed 1/(3t + 1), so sigma = log(3t + 1)/3 and the original time is (e^{3 sigma} - 1)/3.
    const auto m = ModelManifold::exp(4, 2.0);
    const Trajectory traj = integrate_minimizer(m, zero_energy(m, 0.0, 1.0), 3.0, 1e-3);
    const Rescaled rs = rescale_unit_speed(m, traj, 0.01);
    REQUIRE(rs.c.size() > 10);
    for (std::size_t j = 0; j < rs.c.size(); ++j) {
        const double sigma = rs.unit.times[j];
        CHECK(std::abs(rs.c[j] - (std::exp(3 * sigma) - 1) / 3) < 1e-6);
        CHECK(rs.unit.states[j].position.r == doctest::Approx(sigma).epsilon(1e-9));
    }
    CHECK_THROWS_AS(rescale_unit_speed(m, Trajectory{}, 0.01), PreconditionError);
}
