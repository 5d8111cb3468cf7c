#include <doctest.h>

#include <cmath>
#include <random>

#include "grc/control.hpp"
#include "grc/dynamics.hpp"

using namespace grc;
using control::OuterLoopGains;
using control::TrackingError;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

OuterLoopGains diag_gains(double kp, double kd, Eigen::Index n = 2) {
    return {kp * MatrixXd::Identity(n, n), kd * MatrixXd::Identity(n, n)};
}

MatrixXd random_spd(std::mt19937& rng, Eigen::Index n, double scale) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = dist(rng);
    }
    return scale * (a * a.transpose()) + 0.1 * MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("error system assembly and eigenvalues") {
    SUBCASE("kp = 7 I, kd = I") {
        const auto sys = control::build_error_system(diag_gains(7.0, 1.0));
        REQUIRE(sys.a.rows() == 4);
        Eigen::EigenSolver<MatrixXd> es(sys.a);
        for (int i = 0; i < 4; ++i) {
            CHECK(es.eigenvalues()[i].real() == doctest::Approx(-0.5).epsilon(1e-9));
            CHECK(std::abs(es.eigenvalues()[i].imag()) ==
                  doctest::Approx(std::sqrt(27.0) / 2.0).epsilon(1e-9));
        }
        CHECK(sys.b.topRows(2).cwiseAbs().maxCoeff() == 0.0);
        CHECK((sys.b.bottomRows(2) - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("critically damped pair") {
        const auto sys = control::build_error_system(diag_gains(1.0, 2.0));
        Eigen::EigenSolver<MatrixXd> es(sys.a);
        for (int i = 0; i < 4; ++i) {
            CHECK(es.eigenvalues()[i].real() == doctest::Approx(-1.0).epsilon(1e-6));
            CHECK(std::abs(es.eigenvalues()[i].imag()) <= 1e-6);
        }
    }
    SUBCASE("destabilising gains are rejected") {
        CHECK_THROWS_AS(control::build_error_system(diag_gains(-1.0, 1.0)), ConfigError);
        CHECK_THROWS_AS(control::build_error_system(diag_gains(1.0, 0.0)), ConfigError);
    }
}

TEST_CASE("lyapunov solver") {
    SUBCASE("diagonal balance") {
        const MatrixXd p =
            control::solve_lyapunov(-MatrixXd::Identity(2, 2), 2.0 * MatrixXd::Identity(2, 2));
        CHECK((p - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("scalar equations") {
        MatrixXd a = MatrixXd::Zero(2, 2);
        a(0, 0) = -1.0;
        a(1, 1) = -2.0;
        const MatrixXd p = control::solve_lyapunov(a, MatrixXd::Identity(2, 2));
        CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(p(1, 1) == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(std::abs(p(0, 1)) <= 1e-12);
    }
    SUBCASE("random stable gains satisfy the residual bound") {
        std::mt19937 rng(61);
        for (int trial = 0; trial < 20; ++trial) {
            const OuterLoopGains g{random_spd(rng, 2, 3.0), random_spd(rng, 2, 1.0)};
            const auto sys = control::build_error_system(g);
            const MatrixXd q = random_spd(rng, 4, 1.0);
            const MatrixXd p = control::solve_lyapunov(sys.a, q);
            CHECK((sys.a.transpose() * p + p * sys.a + q).norm() <= 1e-9 * q.norm());
            CHECK((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(p);
            CHECK(es.eigenvalues().minCoeff() > 0.0);
        }
    }
    SUBCASE("pair carries Q together with its solution") {
        const auto sys = control::build_error_system(diag_gains(7.0, 1.0));
        const auto pair = control::make_lyapunov_pair(sys.a, 2.0 * MatrixXd::Identity(4, 4));
        CHECK((pair.q - 2.0 * MatrixXd::Identity(4, 4)).norm() == 0.0);
        CHECK((sys.a.transpose() * pair.p + pair.p * sys.a + pair.q).norm() <=
              1e-9 * pair.q.norm());
    }
    SUBCASE("error paths") {
        CHECK_THROWS_AS(
            control::solve_lyapunov(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)),
            NumericalError);  // unstable A
        MatrixXd asym = MatrixXd::Identity(2, 2);
        asym(0, 1) = 0.5;
        CHECK_THROWS_AS(control::solve_lyapunov(-MatrixXd::Identity(2, 2), asym),
                        std::invalid_argument);
        CHECK_THROWS_AS(control::solve_lyapunov(-MatrixXd::Identity(2, 2),
                                                -MatrixXd::Identity(2, 2)),
                        std::invalid_argument);
    }
}

TEST_CASE("robust term") {
    const auto sys = control::build_error_system(diag_gains(7.0, 1.0));
    const MatrixXd p = control::solve_lyapunov(sys.a, MatrixXd::Identity(4, 4));

    SUBCASE("zero error or zero bound give zero correction") {
        CHECK(control::robust_term(p, VectorXd::Zero(4), 5.0, 1e-3).norm() == 0.0);
        VectorXd e(4);
        e << 0.1, -0.2, 0.3, 0.4;
        CHECK(control::robust_term(p, e, 0.0, 1e-3).norm() == 0.0);
    }
    SUBCASE("outside the dead zone the correction has magnitude rho") {
        std::mt19937 rng(67);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        const double eps = 1e-2;
        for (int trial = 0; trial < 100; ++trial) {
            VectorXd e(4);
            for (int i = 0; i < 4; ++i) e[i] = dist(rng);
            const VectorXd w = (p * e).tail(2);
            if (w.norm() == 0.0) continue;
            // rescale so ||w|| = 2 eps
            e *= 2.0 * eps / w.norm();
            const VectorXd w2 = (p * e).tail(2);
            const VectorXd r = control::robust_term(p, e, 1.0, eps);
            CHECK(r.norm() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(r.dot(w2) == doctest::Approx(-r.norm() * w2.norm()).epsilon(1e-12));
        }
    }
    SUBCASE("norm never exceeds rho and the boundary is continuous") {
        std::mt19937 rng(71);
        std::uniform_real_distribution<double> dist(-2.0, 2.0);
        std::uniform_real_distribution<double> rho_dist(0.0, 10.0);
        std::uniform_real_distribution<double> eps_dist(1e-6, 1e-1);
        for (int trial = 0; trial < 1000; ++trial) {
            VectorXd e(4);
            for (int i = 0; i < 4; ++i) e[i] = dist(rng);
            const double rho = rho_dist(rng);
            const double eps = eps_dist(rng);
            CHECK(control::robust_term(p, e, rho, eps).norm() <= rho * (1.0 + 1e-12));

            const VectorXd w = (p * e).tail(2);
            if (w.norm() > 0.0) {
                const VectorXd lo = control::robust_term(
                    p, e * (eps * (1.0 - 1e-9) / w.norm()), rho, eps);
                const VectorXd hi = control::robust_term(
                    p, e * (eps * (1.0 + 1e-9) / w.norm()), rho, eps);
                CHECK((hi - lo).norm() <= 1e-8 * (1.0 + rho));
            }
        }
    }
    SUBCASE("the correction dominates any bounded disturbance") {
        // w^T (eta + r) <= 0 whenever ||w|| > eps and ||eta|| <= rho
        std::mt19937 rng(73);
        std::uniform_real_distribution<double> dist(-2.0, 2.0);
        for (int trial = 0; trial < 1000; ++trial) {
            VectorXd e(4);
            for (int i = 0; i < 4; ++i) e[i] = dist(rng);
            const double rho = 3.0;
            const double eps = 1e-3;
            const VectorXd w = (p * e).tail(2);
            if (w.norm() <= eps) continue;
            VectorXd eta(2);
            eta << dist(rng), dist(rng);
            if (eta.norm() > rho) eta *= rho / eta.norm();
            const VectorXd r = control::robust_term(p, e, rho, eps);
            CHECK(w.dot(eta + r) <= 1e-12);
        }
    }
}

TEST_CASE("rho saturation") {
    CHECK(control::saturate_rho(5.0, 10.0) == 5.0);
    CHECK(control::saturate_rho(10.0, 5.0) == 5.0);
    CHECK(control::saturate_rho(7.0, 7.0) == 7.0);
    CHECK_THROWS_AS(control::saturate_rho(-1.0, 5.0), std::invalid_argument);
}

TEST_CASE("outer loop is affine with unit gain on the correction") {
    const auto gains = diag_gains(7.0, 1.0);
    const Vector2d qdd_d(0.3, -0.6);

    SUBCASE("pure feedforward") {
        const TrackingError e{Vector2d::Zero(), Vector2d::Zero()};
        CHECK((control::outer_loop(qdd_d, e, gains, Vector2d::Zero()) - qdd_d).norm() == 0.0);
    }
    SUBCASE("proportional action") {
        const TrackingError e{Vector2d(1.0, 0.0), Vector2d::Zero()};
        const VectorXd a =
            control::outer_loop(Vector2d::Zero(), e, gains, Vector2d::Zero());
        CHECK(a[0] == doctest::Approx(-7.0));
        CHECK(a[1] == doctest::Approx(0.0));
    }
    SUBCASE("correction enters additively") {
        std::mt19937 rng(79);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            const TrackingError e{Vector2d(dist(rng), dist(rng)),
                                  Vector2d(dist(rng), dist(rng))};
            const Vector2d r(dist(rng), dist(rng));
            const VectorXd with = control::outer_loop(qdd_d, e, gains, r);
            const VectorXd without = control::outer_loop(qdd_d, e, gains, Vector2d::Zero());
            CHECK((with - without - r).cwiseAbs().maxCoeff() <= 1e-15);
        }
    }
}

TEST_CASE("inner loop") {
    const dynamics::ManipulatorParams p{};
    const dynamics::TwoLinkArm truth(p);

    SUBCASE("exact model cancels the dynamics") {
        std::mt19937 rng(83);
        std::uniform_real_distribution<double> dist(-1.5, 1.5);
        for (int trial = 0; trial < 20; ++trial) {
            const dynamics::JointState s(Vector2d(dist(rng), dist(rng)),
                                         Vector2d(dist(rng), dist(rng)));
            const Vector2d a_q(dist(rng), dist(rng));
            const auto u = control::inner_loop(truth, s, a_q);
            const VectorXd qdd = truth.forward_dynamics(s, u);
            CHECK((qdd - a_q).norm() <= 1e-9);
        }
    }
    SUBCASE("at rest with no command, the torque is gravity compensation") {
        const dynamics::JointState s(Vector2d(0.4, -0.7), Vector2d::Zero());
        const auto u = control::inner_loop(truth, s, Vector2d::Zero());
        CHECK((u.u - truth.gravity_vector(s.q)).norm() <= 1e-15);
    }
    SUBCASE("mismatched model produces the parametric acceleration gap") {
        const dynamics::TwoLinkArm estimate(dynamics::with_mass_error(p, 0.2));
        std::mt19937 rng(89);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            const dynamics::JointState s(Vector2d(dist(rng), dist(rng)),
                                         Vector2d(dist(rng), dist(rng)));
            const Vector2d a_q(dist(rng), dist(rng));
            const VectorXd qdd =
                truth.forward_dynamics(s, control::inner_loop(estimate, s, a_q));
            const MatrixXd m_t = estimate.mass_matrix(s.q) - truth.mass_matrix(s.q);
            const MatrixXd c_t =
                estimate.coriolis_matrix(s.q, s.qd) - truth.coriolis_matrix(s.q, s.qd);
            const VectorXd g_t = estimate.gravity_vector(s.q) - truth.gravity_vector(s.q);
            const VectorXd eta = truth.mass_matrix(s.q).llt().solve(
                m_t * a_q + c_t * s.qd + g_t);
            CHECK((qdd - a_q - eta).norm() <= 1e-9);
        }
    }
}

TEST_CASE("epsilon diagnostic") {
    const auto sys = control::build_error_system(diag_gains(7.0, 1.0));
    const MatrixXd q = MatrixXd::Identity(4, 4);
    const MatrixXd p = control::solve_lyapunov(sys.a, q);
    VectorXd e0(4);
    e0 << 0.1, 0.1, 0.0, 0.0;

    SUBCASE("zero epsilon gives a zero ball") {
        const auto d = control::check_epsilon({0.0, 2.0}, q, p, e0);
        CHECK(d.delta == 0.0);
        CHECK(d.ok);
    }
    SUBCASE("formula value") {
        const auto d = control::check_epsilon({0.001, 2.0}, q, p, e0);
        CHECK(d.delta == doctest::Approx(std::sqrt(0.001)).epsilon(1e-12));
    }
    SUBCASE("quadrupling epsilon doubles delta") {
        const auto d1 = control::check_epsilon({0.001, 2.0}, q, p, e0);
        const auto d4 = control::check_epsilon({0.004, 2.0}, q, p, e0);
        CHECK(d4.delta == doctest::Approx(2.0 * d1.delta).epsilon(1e-12));
    }
}
