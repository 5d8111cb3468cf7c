#include "grc/control.hpp"

#include <cmath>

namespace grc::control {

Eigen::VectorXd TrackingError::stacked() const {
    Eigen::VectorXd e(pos.size() + vel.size());
    e << pos, vel;
    return e;
}

bool is_hurwitz(const Eigen::MatrixXd& a, double tol) {
    if (a.rows() != a.cols()) throw std::invalid_argument("is_hurwitz: matrix must be square");
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
    return es.eigenvalues().real().maxCoeff() < -tol;
}

ErrorSystem build_error_system(const OuterLoopGains& gains) {
    const Eigen::Index n = gains.kp.rows();
    if (gains.kp.cols() != n || gains.kd.rows() != n || gains.kd.cols() != n) {
        throw ConfigError("gains: Kp and Kd must be square matrices of equal size");
    }
    ErrorSystem sys;
    sys.a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    sys.a.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    sys.a.bottomLeftCorner(n, n) = -gains.kp;
    sys.a.bottomRightCorner(n, n) = -gains.kd;
    sys.b = Eigen::MatrixXd::Zero(2 * n, n);
    sys.b.bottomRows(n) = Eigen::MatrixXd::Identity(n, n);
    if (!is_hurwitz(sys.a)) {
        throw ConfigError("gains: error-system matrix is not Hurwitz");
    }
    return sys;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || q.rows() != n || q.cols() != n) {
        throw std::invalid_argument("lyapunov: A and Q must be square and of equal size");
    }
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + q.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument("lyapunov: Q must be symmetric");
    }
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
        if (es.eigenvalues().minCoeff() <= 0.0) {
            throw std::invalid_argument("lyapunov: Q must be positive definite");
        }
    }
    if (!is_hurwitz(a)) {
        throw NumericalError("lyapunov: A is not Hurwitz, no unique solution");
    }

    // vec(A^T P) + vec(P A) = (I (x) A^T + A^T (x) I) vec(P), column-major.
    const Eigen::MatrixXd at = a.transpose();
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) big.block(i * n, j * n, n, n) += at;
            big.block(i * n, j * n, n, n) += at(i, j) * Eigen::MatrixXd::Identity(n, n);
        }
    }
    Eigen::VectorXd rhs(n * n);
    Eigen::Map<Eigen::MatrixXd>(rhs.data(), n, n) = -q;
    const Eigen::VectorXd x = big.partialPivLu().solve(rhs);
    Eigen::MatrixXd p = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
    p = 0.5 * (p + p.transpose()).eval();  // kill roundoff asymmetry

    const double residual = (a.transpose() * p + p * a + q).norm();
    if (!(residual <= 1e-9 * q.norm())) {
        throw NumericalError("lyapunov: residual exceeds tolerance");
    }
    return p;
}

LyapunovPair make_lyapunov_pair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
    return {q, solve_lyapunov(a, q)};
}

Eigen::VectorXd robust_term(const Eigen::MatrixXd& p, const Eigen::VectorXd& e,
                            double rho, double epsilon) {
    if (e.size() % 2 != 0 || p.rows() != e.size() || p.cols() != e.size()) {
        throw std::invalid_argument("robust_term: P must be 2N x 2N matching e");
    }
    if (rho < 0.0) throw std::invalid_argument("robust_term: rho must be nonnegative");
    if (!(epsilon > 0.0)) throw std::invalid_argument("robust_term: epsilon must be positive");
    const Eigen::Index n = e.size() / 2;
    const Eigen::VectorXd w = (p * e).tail(n);  // B^T P e with B = [0; I]
    const double norm = w.norm();
    if (norm > epsilon) return (-rho / norm) * w;
    return (-rho / epsilon) * w;
}

double saturate_rho(double rho_gp, double rho_bar) {
    if (rho_gp < 0.0 || rho_bar < 0.0) {
        throw std::invalid_argument("saturate_rho: inputs must be nonnegative");
    }
    return std::min(rho_gp, rho_bar);
}

Eigen::VectorXd outer_loop(const Eigen::VectorXd& qdd_d, const TrackingError& e,
                           const OuterLoopGains& gains, const Eigen::VectorXd& r) {
    if (e.pos.size() != qdd_d.size() || e.vel.size() != qdd_d.size() ||
        r.size() != qdd_d.size() || gains.kp.rows() != qdd_d.size()) {
        throw std::invalid_argument("outer_loop: dimension mismatch");
    }
    return qdd_d - gains.kp * e.pos - gains.kd * e.vel + r;
}

dynamics::GeneralizedForce inner_loop(const dynamics::LagrangianModel& model_hat,
                                      const dynamics::JointState& s,
                                      const Eigen::VectorXd& a_q) {
    dynamics::GeneralizedForce f;
    f.u = model_hat.coriolis_matrix(s.q, s.qd) * s.qd + model_hat.gravity_vector(s.q) +
          model_hat.mass_matrix(s.q) * a_q;
    return f;
}

EpsilonDiagnostic check_epsilon(const RobustConfig& cfg, const Eigen::MatrixXd& q,
                                const Eigen::MatrixXd& p, const Eigen::VectorXd& e0) {
    if (cfg.epsilon < 0.0 || cfg.rho_bar < 0.0) {
        throw std::invalid_argument("check_epsilon: epsilon and rho_bar must be nonnegative");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eq(q);
    const double lambda_min_q = eq.eigenvalues().minCoeff();
    if (!(lambda_min_q > 0.0)) {
        throw std::invalid_argument("check_epsilon: Q must be positive definite");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(p);
    const double lambda_max_p = ep.eigenvalues().maxCoeff();

    EpsilonDiagnostic out;
    out.delta = std::sqrt(cfg.epsilon * cfg.rho_bar / (2.0 * lambda_min_q));
    out.ok = out.delta * out.delta * lambda_max_p < e0.dot(p * e0);
    return out;
}

}  // namespace grc::control
