#pragma once

#include <Eigen/Dense>

#include "grc/errors.hpp"

namespace grc::dynamics {

// Physical parameters of the two-link planar arm operating in a vertical
// plane. lc_i is the distance from joint i to the link's centre of mass and
// I_i the rotational inertia about that centre. Set g0 = 0 for a horizontal
// (gravity-free) arm.
struct ManipulatorParams {
    double m1 = 1.0, m2 = 1.0;    // link masses [kg]
    double I1 = 1.0, I2 = 1.0;    // link inertias [kg m^2]
    double l1 = 2.0, l2 = 1.0;    // link lengths [m]
    double lc1 = 1.0, lc2 = 0.5;  // joint-to-COM distances [m]
    double g0 = 9.81;             // gravitational acceleration [m/s^2]

    void validate() const;  // throws ConfigError
};

// Copy with both link masses scaled by (1 + fraction); how an imperfect
// a-priori model of this arm is produced.
ManipulatorParams with_mass_error(const ManipulatorParams& p, double fraction);

struct JointState {
    Eigen::VectorXd q;   // joint angles [rad]
    Eigen::VectorXd qd;  // joint velocities [rad/s]

    JointState() = default;
    JointState(Eigen::VectorXd q_in, Eigen::VectorXd qd_in);
};

struct GeneralizedForce {
    Eigen::VectorXd u;  // joint torques [N m]
};

// Rigid-body model M(q) qdd + C(q, qd) qd + g(q) = u. All queries are pure
// functions of their value inputs and safe to call concurrently.
class LagrangianModel {
public:
    virtual ~LagrangianModel() = default;

    virtual Eigen::Index dof() const = 0;
    virtual Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const = 0;
    virtual Eigen::MatrixXd coriolis_matrix(const Eigen::VectorXd& q,
                                            const Eigen::VectorXd& qd) const = 0;
    virtual Eigen::VectorXd gravity_vector(const Eigen::VectorXd& q) const = 0;

    // qdd = M(q)^{-1} (u - C qd - g), residual-checked.
    Eigen::VectorXd forward_dynamics(const JointState& s, const GeneralizedForce& f) const;

    // 0.5 qd^T M(q) qd
    double kinetic_energy(const JointState& s) const;
};

class TwoLinkArm final : public LagrangianModel {
public:
    explicit TwoLinkArm(const ManipulatorParams& p);

    Eigen::Index dof() const override { return 2; }
    Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const override;
    Eigen::MatrixXd coriolis_matrix(const Eigen::VectorXd& q,
                                    const Eigen::VectorXd& qd) const override;
    Eigen::VectorXd gravity_vector(const Eigen::VectorXd& q) const override;

    const ManipulatorParams& params() const { return p_; }

private:
    ManipulatorParams p_;
};

}  // namespace grc::dynamics
