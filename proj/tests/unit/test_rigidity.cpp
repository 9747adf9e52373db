#include <doctest.h>

#include <cmath>

#include "wkam/error.hpp"
#include "wkam/rigidity.hpp"

using namespace wkam;

TEST_CASE("fundamental matrix of the rigid system") {
    // Eigenvalues +-a with a = sqrt(lambda/(n-2)); the generator squares to a^2 I.
    const int n = 4;
    const double lambda = 2.0, a = 1.0;
    const Eigen::Matrix2d M = fundamental_matrix_rigid(n, lambda, 1.0);
    CHECK(M(0, 0) == doctest::Approx(std::cosh(a)).epsilon(1e-12));
    CHECK(M(1, 1) == doctest::Approx(std::cosh(a)).epsilon(1e-12));
    CHECK(M(0, 1) == doctest::Approx(-lambda / a * std::sinh(a)).epsilon(1e-12));
    CHECK(M(1, 0) == doctest::Approx(-std::sinh(a) / ((n - 2) * a)).epsilon(1e-12));
    CHECK(M.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    for (double t : {0.3, 1.7}) {
        const Eigen::Matrix2d P = fundamental_matrix_rigid(5, 3.0, t) * fundamental_matrix_rigid(5, 3.0, -t);
        CHECK((P - Eigen::Matrix2d::Identity()).norm() < 1e-12);
    }
    CHECK_THROWS_AS(fundamental_matrix_rigid(2, 1.0, 1.0), PreconditionError);
}

TEST_CASE("prediction on the exp model is the equality case") {
    const auto m = ModelManifold::exp(4, 2.0);
    const RigidityPrediction p = rigidity_prediction(m, 0.0, End::Right);
    CHECK(std::abs(p.c) == doctest::Approx(std::sqrt(p.lambda * (p.n - 2))));
    // The flow moves along grad F, so g along it is the exponential e^{-2 a t}.
    for (double t : {-1.0, 0.5, 2.0}) {
        const double r = p.direction * t;
        CHECK(flow_g_prediction(m, 0.0, End::Right, t) == doctest::Approx(eigenfunction_g(m, r)).epsilon(1e-12));
    }
}

TEST_CASE("measured flow matches the prediction") {
    const auto m = ModelManifold::cosh(4, 2.0);
    const FlowGSeries fg = flow_g_measured(m, 0.7, End::Left, 1.5, 0.05);
    REQUIRE(fg.t.size() > 10);
    CHECK(fg.t.front() <= -1.5 + 1e-9);
    CHECK(fg.t.back() >= 1.5 - 1e-9);
    for (std::size_t i = 0; i < fg.t.size(); ++i) {
        const double pred = flow_g_prediction(m, 0.7, End::Left, fg.t[i]);
        CHECK(std::abs(fg.g[i] - pred) <= 1e-6 * pred);
    }
}

TEST_CASE("Jacobi matrix and warp reconstruction") {
    const auto m = ModelManifold::exp(4, 2.0);
    const Trajectory traj = calibrated_orbit(m, 0.0, End::Right, 1.5);
    const BCheckReport bc = jacobian_B_check(m, traj, transport_frame(m, traj));
    CHECK(bc.samples > 0);
    CHECK(bc.max_rel_dev_diag < 1e-6);
    CHECK(bc.max_offdiag < 1e-8);

    const WarpReconstruction wr = reconstruct_warp(m, 0.0, End::Right, 1.5);
    CHECK(wr.lambda_fit == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(wr.residual < 1e-5);
    CHECK(wr.to_json().find("\"lambda_fit\"") != std::string::npos);
}

TEST_CASE("scaling the warp leaves the rigidity data unchanged") {
    const double s = 2.5;
    std::vector<double> r, w1, ws;
    for (int k = 0; k <= 800; ++k) {
        r.push_back(-4.0 + 0.01 * k);
        w1.push_back(std::cosh(r.back()));
        ws.push_back(s * std::cosh(r.back()));
    }
    const auto m1 = ModelManifold::custom(4, 2.0, r, w1);
    const auto ms = ModelManifold::custom(4, 2.0, r, ws);
    CHECK(eigenfunction_g(ms, 0.4) == doctest::Approx(std::pow(s, -2.0) * eigenfunction_g(m1, 0.4)).epsilon(1e-12));
    const RigidityPrediction p1 = rigidity_prediction(m1, 0.7, End::Left);
    const RigidityPrediction ps = rigidity_prediction(ms, 0.7, End::Left);
    CHECK(ps.c == doctest::Approx(p1.c).epsilon(1e-12));
    for (double t : {-1.0, 0.8})
        CHECK(ps.g(t) / ps.g_base == doctest::Approx(p1.g(t) / p1.g_base).epsilon(1e-12));
}
