#include "grc/dynamics.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace grc::dynamics {

void ManipulatorParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) {
            throw ConfigError(std::string("manipulator parameter must be positive: ") + name);
        }
    };
    positive(m1, "m1");
    positive(m2, "m2");
    positive(I1, "I1");
    positive(I2, "I2");
    positive(l1, "l1");
    positive(l2, "l2");
    positive(lc1, "lc1");
    positive(lc2, "lc2");
    if (lc1 > l1 || lc2 > l2) {
        throw ConfigError("centre of mass must lie on the link: require lc_i <= l_i");
    }
    if (g0 < 0.0 || !std::isfinite(g0)) {
        throw ConfigError("gravitational acceleration g0 must be finite and nonnegative");
    }
}

ManipulatorParams with_mass_error(const ManipulatorParams& p, double fraction) {
    if (!(fraction > -1.0)) {
        throw ConfigError("mass error fraction must exceed -1");
    }
    ManipulatorParams out = p;
    out.m1 *= 1.0 + fraction;
    out.m2 *= 1.0 + fraction;
    return out;
}

JointState::JointState(Eigen::VectorXd q_in, Eigen::VectorXd qd_in)
    : q(std::move(q_in)), qd(std::move(qd_in)) {
    if (q.size() != qd.size()) {
        throw std::invalid_argument("joint state: q and qd must have equal length");
    }
}

Eigen::VectorXd LagrangianModel::forward_dynamics(const JointState& s,
                                                  const GeneralizedForce& f) const {
    const Eigen::MatrixXd m = mass_matrix(s.q);
    const Eigen::VectorXd rhs =
        f.u - coriolis_matrix(s.q, s.qd) * s.qd - gravity_vector(s.q);
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("forward dynamics: mass matrix is not positive definite");
    }
    const Eigen::VectorXd qdd = llt.solve(rhs);
    const double residual = (m * qdd - rhs).norm();
    if (!(residual <= 1e-10 * (1.0 + f.u.norm()))) {
        throw NumericalError("forward dynamics: torque balance residual too large");
    }
    return qdd;
}

double LagrangianModel::kinetic_energy(const JointState& s) const {
    return 0.5 * s.qd.dot(mass_matrix(s.q) * s.qd);
}

TwoLinkArm::TwoLinkArm(const ManipulatorParams& p) : p_(p) { p_.validate(); }

Eigen::MatrixXd TwoLinkArm::mass_matrix(const Eigen::VectorXd& q) const {
    if (q.size() != 2) throw std::invalid_argument("two-link arm expects q of length 2");
    const double c2 = std::cos(q[1]);
    Eigen::MatrixXd m(2, 2);
    m(0, 0) = p_.m1 * p_.lc1 * p_.lc1 +
              p_.m2 * (p_.l1 * p_.l1 + p_.lc2 * p_.lc2 + 2.0 * p_.l1 * p_.lc2 * c2) +
              p_.I1 + p_.I2;
    m(0, 1) = p_.m2 * (p_.lc2 * p_.lc2 + p_.l1 * p_.lc2 * c2) + p_.I2;
    m(1, 0) = m(0, 1);
    m(1, 1) = p_.m2 * p_.lc2 * p_.lc2 + p_.I2;
    return m;
}

Eigen::MatrixXd TwoLinkArm::coriolis_matrix(const Eigen::VectorXd& q,
                                            const Eigen::VectorXd& qd) const {
    if (q.size() != 2 || qd.size() != 2) {
        throw std::invalid_argument("two-link arm expects q, qd of length 2");
    }
    const double h = -p_.m2 * p_.l1 * p_.lc2 * std::sin(q[1]);
    Eigen::MatrixXd c(2, 2);
    c(0, 0) = h * qd[1];
    c(0, 1) = h * (qd[0] + qd[1]);
    c(1, 0) = -h * qd[0];
    c(1, 1) = 0.0;
    return c;
}

Eigen::VectorXd TwoLinkArm::gravity_vector(const Eigen::VectorXd& q) const {
    if (q.size() != 2) throw std::invalid_argument("two-link arm expects q of length 2");
    Eigen::VectorXd g(2);
    const double c1 = std::cos(q[0]);
    const double c12 = std::cos(q[0] + q[1]);
    g[0] = (p_.m1 * p_.lc1 + p_.m2 * p_.l1) * p_.g0 * c1 + p_.m2 * p_.lc2 * p_.g0 * c12;
    g[1] = p_.m2 * p_.lc2 * p_.g0 * c12;
    return g;
}

}  // namespace grc::dynamics
