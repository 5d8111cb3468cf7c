#pragma once

#include <Eigen/Dense>

#include "grc/dynamics.hpp"
#include "grc/errors.hpp"

namespace grc::control {

struct OuterLoopGains {
    Eigen::MatrixXd kp;  // N x N, [1/s^2]
    Eigen::MatrixXd kd;  // N x N, [1/s]
};

// Error dynamics e' = A e + B (r + eta) with
// A = [[0, I], [-Kp, -Kd]], B = [[0], [I]].
struct ErrorSystem {
    Eigen::MatrixXd a;  // 2N x 2N
    Eigen::MatrixXd b;  // 2N x N
};

struct TrackingError {
    Eigen::VectorXd pos;  // q - q_d
    Eigen::VectorXd vel;  // qd - qd_d

    Eigen::VectorXd stacked() const;
};

struct RobustConfig {
    double epsilon = 1e-5;  // dead-zone width
    double rho_bar = 1e6;   // hard cap on the uncertainty bound
};

struct EpsilonDiagnostic {
    double delta;  // radius below which the error ball cannot be certified shrinking
    bool ok;       // ball of radius delta fits inside {e : e^T P e < e0^T P e0}
};

// All eigenvalue real parts < -tol.
bool is_hurwitz(const Eigen::MatrixXd& a, double tol = 1e-9);

// Throws ConfigError when the assembled A is not Hurwitz.
ErrorSystem build_error_system(const OuterLoopGains& gains);

// Unique P solving A^T P + P A = -Q for Hurwitz A and symmetric positive
// definite Q. Solved by vectorising into a (2N)^2 linear system and
// symmetrising the result; fine for the small systems handled here.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

// A Q together with its solution P; both symmetric positive definite.
struct LyapunovPair {
    Eigen::MatrixXd q;
    Eigen::MatrixXd p;
};

LyapunovPair make_lyapunov_pair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

// Dead-zone unit-vector feedback: with w = B^T P e,
//   r = -rho w / ||w||   if ||w|| > epsilon
//   r = -rho w / epsilon otherwise (covers w = 0 with r = 0).
// Continuous in e, and ||r|| <= rho always.
Eigen::VectorXd robust_term(const Eigen::MatrixXd& p, const Eigen::VectorXd& e,
                            double rho, double epsilon);

double saturate_rho(double rho_gp, double rho_bar);

// a_q = qdd_d - Kp e_pos - Kd e_vel + r
Eigen::VectorXd outer_loop(const Eigen::VectorXd& qdd_d, const TrackingError& e,
                           const OuterLoopGains& gains, const Eigen::VectorXd& r);

// u = C_hat(q, qd) qd + g_hat(q) + M_hat(q) a_q, evaluated on the estimated
// model. With an exact model the closed loop realises qdd = a_q.
dynamics::GeneralizedForce inner_loop(const dynamics::LagrangianModel& model_hat,
                                      const dynamics::JointState& s,
                                      const Eigen::VectorXd& a_q);

// delta = sqrt(epsilon rho_bar / (2 lambda_min(Q))); ok when the ball of that
// radius lies inside the initial Lyapunov sublevel set.
EpsilonDiagnostic check_epsilon(const RobustConfig& cfg, const Eigen::MatrixXd& q,
                                const Eigen::MatrixXd& p, const Eigen::VectorXd& e0);

}  // namespace grc::control
