#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grc/control.hpp"
#include "grc/dynamics.hpp"
#include "grc/gp.hpp"
#include "grc/random.hpp"

namespace grc::sim {

enum class TrajectoryForm { RaisedCosine, Sine };

// Per-joint reference q_d(t); raised cosine A (1 - cos wt) starts at rest,
// sine A sin wt starts with velocity A w.
struct TrajectorySpec {
    TrajectoryForm form = TrajectoryForm::RaisedCosine;
    Eigen::VectorXd amplitude;  // [rad]
    Eigen::VectorXd frequency;  // [rad/s]
    double duration = 20.0;     // [s]
};

struct TrajectorySample {
    Eigen::VectorXd q_d, qd_d, qdd_d;
};

TrajectorySample desired_trajectory(const TrajectorySpec& spec, double t);

// Model mismatch injected into a run: the estimated masses are off by
// mass_error_fraction, and an unstructured acceleration-level term
// c1 qd + c2 (q .* qd) can be added on top.
struct UncertaintySpec {
    double mass_error_fraction = 0.0;
    double additive_c1 = 0.0;
    double additive_c2 = 0.0;
};

enum class ControllerVariant { Nominal, FixedRobust, LearnDeltaU, RobustLearning };

struct GpConfig {
    double sigma_eta = 1.0;
    double sigma_omega = 0.001;
    double length_scale = 0.5;
    int window = 20;
    double beta_sqrt = 3.0;
};

struct Scenario {
    dynamics::ManipulatorParams params;  // true plant
    UncertaintySpec uncertainty;
    TrajectorySpec trajectory;
    ControllerVariant variant = ControllerVariant::RobustLearning;
    control::OuterLoopGains gains;
    control::RobustConfig robust;
    GpConfig gp;
    double dt = 1e-4;  // integrator and controller step [s]
    double ts = 0.1;   // GP sampling interval [s]; integer multiple of dt
    Eigen::VectorXd label_noise_std;  // per joint
    std::uint64_t seed = 42;
    double fixed_rho = 1000.0;            // bound used by the fixed-robust variant
    Eigen::MatrixXd lyapunov_q;           // empty => identity
    Eigen::VectorXd q0_offset;            // initial q - q_d(0); empty => zero
    Eigen::VectorXd qd0_offset;           // initial qd - qd_d(0); empty => zero
    bool label_finite_difference = false; // derive labels from velocity differences
    double divergence_threshold = 1e3;    // abort once ||e|| exceeds this

    void validate() const;  // throws ConfigError
    Eigen::Index dof() const { return trajectory.amplitude.size(); }
};

// Time series at dt resolution plus summary metrics. RMS values are over the
// position error only; e_norm is the full 2N error norm.
struct SimResult {
    std::vector<double> t;
    Eigen::MatrixXd q, q_des, qd, a_q, u, eta;  // samples x N
    Eigen::VectorXd rho, e_norm;                // samples

    Eigen::VectorXd rms_per_joint;
    double rms_aggregate = 0.0;
    double rms_steady_state = 0.0;  // over the final 20% of samples
    double max_e_norm = 0.0;
    bool diverged = false;

    Eigen::Index samples() const { return static_cast<Eigen::Index>(t.size()); }
    void write_csv(std::ostream& os) const;
};

// Header + numeric rows; values written with write_csv round-trip exactly.
struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd rows;
};
CsvTable read_csv_table(std::istream& is);

// eta = M^{-1} (M_tilde a_q + C_tilde qd + g_tilde) + c1 qd + c2 (q .* qd),
// the gap between commanded and realised acceleration for this scenario.
Eigen::VectorXd true_eta(const Scenario& sc, const dynamics::JointState& s,
                         const Eigen::VectorXd& a_q);

struct LabeledSample {
    Eigen::VectorXd a_aug;  // (q, qd, a_q)
    Eigen::VectorXd y;      // qdd - a_q + noise, one entry per joint
};

// Builds one training sample from a measured acceleration; noise is drawn
// from the stream, one value per joint.
LabeledSample gp_label(const dynamics::JointState& s, const Eigen::VectorXd& a_q_held,
                       const Eigen::VectorXd& qdd_measured,
                       const Eigen::VectorXd& noise_std, GaussianStream& rng);

// One classical RK4 step of the plant under constant torque; extra_accel
// (may be empty) is added to the rigid-body acceleration at every stage.
dynamics::JointState integrate_plant(
    const dynamics::LagrangianModel& model, const dynamics::JointState& s,
    const Eigen::VectorXd& u,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>&
        extra_accel,
    double dt);

// Full closed-loop run. Deterministic: the same scenario and seed reproduce
// the series bit for bit, and all controller variants consume the noise
// stream at the same instants so they share it under a common seed.
SimResult run(const Scenario& sc);

struct RmsSummary {
    Eigen::VectorXd per_joint;
    double aggregate;
};

// Rows are samples, columns joints. aggregate = sqrt(mean ||row||^2 / N).
RmsSummary rms(const Eigen::MatrixXd& e_pos);

}  // namespace grc::sim
