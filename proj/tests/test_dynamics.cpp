#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "grc/dynamics.hpp"

using namespace grc;
using dynamics::JointState;
using dynamics::ManipulatorParams;
using dynamics::TwoLinkArm;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

ManipulatorParams reference_params() {
    return ManipulatorParams{};  // m = 1, 1; I = 1, 1; l = 2, 1; lc = 1, 0.5; g0 = 9.81
}

double min_eigenvalue(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("mass matrix closed form at q2 = pi/2") {
    TwoLinkArm arm(reference_params());
    const Vector2d q(0.3, std::numbers::pi / 2.0);
    const MatrixXd m = arm.mass_matrix(q);
    // cos q2 = 0, so M11 = m1 lc1^2 + m2 (l1^2 + lc2^2) + I1 + I2
    CHECK(m(0, 0) == doctest::Approx(7.25).epsilon(1e-12));
    CHECK(m(0, 1) == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(m(1, 0) == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(m(1, 1) == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("mass matrix is symmetric positive definite over the joint range") {
    TwoLinkArm arm(reference_params());
    for (int i = 0; i <= 60; ++i) {
        for (int j = 0; j <= 60; ++j) {
            const double q1 = -std::numbers::pi + i * (2.0 * std::numbers::pi / 60.0);
            const double q2 = -std::numbers::pi + j * (2.0 * std::numbers::pi / 60.0);
            const MatrixXd m = arm.mass_matrix(Vector2d(q1, q2));
            REQUIRE((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
            REQUIRE(min_eigenvalue(m) > 0.0);
        }
    }
}

TEST_CASE("coriolis matrix vanishes where it should") {
    TwoLinkArm arm(reference_params());
    const Vector2d q(0.7, -0.4);
    CHECK((arm.coriolis_matrix(q, Vector2d::Zero()) * Vector2d::Zero()).norm() == 0.0);
    CHECK(arm.coriolis_matrix(Vector2d(1.1, 0.0), Vector2d(0.5, -0.2)).norm() == 0.0);
}

TEST_CASE("dM/dt - 2C is skew symmetric along trajectories") {
    TwoLinkArm arm(reference_params());
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        const Vector2d q(dist(rng), dist(rng));
        const Vector2d qd(dist(rng), dist(rng));
        const Vector2d x = Vector2d(dist(rng), dist(rng)).normalized();
        const MatrixXd mdot =
            (arm.mass_matrix(q + h * qd) - arm.mass_matrix(q - h * qd)) / (2.0 * h);
        const MatrixXd c = arm.coriolis_matrix(q, qd);
        CHECK(std::abs(x.dot((mdot - 2.0 * c) * x)) <= 1e-6);
    }
}

TEST_CASE("gravity vector closed form") {
    TwoLinkArm arm(reference_params());
    SUBCASE("upright configuration has no torque") {
        const VectorXd g = arm.gravity_vector(Vector2d(std::numbers::pi / 2.0, 0.0));
        CHECK(g.cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("gravity-free arm") {
        ManipulatorParams p = reference_params();
        p.g0 = 0.0;
        TwoLinkArm flat(p);
        CHECK(flat.gravity_vector(Vector2d(0.4, 0.8)).norm() == 0.0);
    }
    SUBCASE("stretched horizontal arm") {
        const VectorXd g = arm.gravity_vector(Vector2d::Zero());
        CHECK(g[0] == doctest::Approx(34.335).epsilon(1e-12));
        CHECK(g[1] == doctest::Approx(4.905).epsilon(1e-12));
    }
}

TEST_CASE("forward dynamics") {
    TwoLinkArm arm(reference_params());
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);

    SUBCASE("static equilibrium under gravity compensation") {
        const Vector2d q(0.5, -0.9);
        const JointState s(q, Vector2d::Zero());
        const VectorXd qdd = arm.forward_dynamics(s, {arm.gravity_vector(q)});
        CHECK(qdd.norm() <= 1e-12);
    }
    SUBCASE("exact inverse-dynamics cancellation") {
        for (int trial = 0; trial < 20; ++trial) {
            const Vector2d q(dist(rng), dist(rng));
            const Vector2d qd(dist(rng), dist(rng));
            const Vector2d a(dist(rng), dist(rng));
            const VectorXd u = arm.mass_matrix(q) * a + arm.coriolis_matrix(q, qd) * qd +
                               arm.gravity_vector(q);
            const VectorXd qdd = arm.forward_dynamics(JointState(q, qd), {u});
            CHECK((qdd - a).norm() <= 1e-10 * (1.0 + a.norm()));
        }
    }
    SUBCASE("torque balance residual") {
        for (int trial = 0; trial < 20; ++trial) {
            const Vector2d q(dist(rng), dist(rng));
            const Vector2d qd(dist(rng), dist(rng));
            const Vector2d u(10.0 * dist(rng), 10.0 * dist(rng));
            const JointState s(q, qd);
            const VectorXd qdd = arm.forward_dynamics(s, {u});
            const double residual = (arm.mass_matrix(q) * qdd +
                                     arm.coriolis_matrix(q, qd) * qd +
                                     arm.gravity_vector(q) - u)
                                        .norm();
            CHECK(residual <= 1e-10 * (1.0 + u.norm()));
        }
    }
}

TEST_CASE("model entries are smooth: central differences converge at second order") {
    TwoLinkArm arm(reference_params());
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const Vector2d q(0.37, -0.55);
    const Vector2d qd(0.8, -0.3);
    const Vector2d dir = Vector2d(dist(rng), dist(rng)).normalized();

    auto richardson_ratio = [&](auto&& f) {
        auto diff = [&](double h) {
            return ((f(q + h * dir) - f(q - h * dir)) / (2.0 * h)).eval();
        };
        const double h = 1e-3;
        const double e1 = (diff(h) - diff(h / 2.0)).norm();
        const double e2 = (diff(h / 2.0) - diff(h / 4.0)).norm();
        REQUIRE(e2 > 0.0);
        return e1 / e2;
    };

    CHECK(richardson_ratio([&](const Vector2d& x) { return arm.mass_matrix(x); }) ==
          doctest::Approx(4.0).epsilon(0.25));
    CHECK(richardson_ratio([&](const Vector2d& x) { return arm.coriolis_matrix(x, qd); }) ==
          doctest::Approx(4.0).epsilon(0.25));
    CHECK(richardson_ratio([&](const Vector2d& x) { return arm.gravity_vector(x); }) ==
          doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("parameter validation") {
    ManipulatorParams p = reference_params();
    p.m2 = 0.0;
    CHECK_THROWS_AS(TwoLinkArm{p}, ConfigError);
    p = reference_params();
    p.lc1 = 2.5;  // beyond the link
    CHECK_THROWS_AS(TwoLinkArm{p}, ConfigError);
    p = reference_params();
    p.g0 = -1.0;
    CHECK_THROWS_AS(TwoLinkArm{p}, ConfigError);
    CHECK_THROWS_AS(dynamics::with_mass_error(reference_params(), -1.0), ConfigError);
}

TEST_CASE("mass error scales only the masses") {
    const ManipulatorParams p = reference_params();
    const ManipulatorParams hat = dynamics::with_mass_error(p, 0.2);
    CHECK(hat.m1 == doctest::Approx(1.2));
    CHECK(hat.m2 == doctest::Approx(1.2));
    CHECK(hat.I1 == p.I1);
    CHECK(hat.l1 == p.l1);
    CHECK(hat.lc2 == p.lc2);
}

TEST_CASE("joint state requires matching lengths") {
    CHECK_THROWS_AS(JointState(VectorXd::Zero(2), VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("kinetic energy is a positive quadratic form") {
    TwoLinkArm arm(reference_params());
    CHECK(arm.kinetic_energy(JointState(Vector2d(0.2, 0.4), Vector2d::Zero())) == 0.0);
    CHECK(arm.kinetic_energy(JointState(Vector2d(0.2, 0.4), Vector2d(1.0, -2.0))) > 0.0);
}
