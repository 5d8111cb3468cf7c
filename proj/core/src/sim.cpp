#include "grc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace grc::sim {

namespace {

void append_value(std::string& line, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

Eigen::VectorXd additive_eta(const UncertaintySpec& u, const Eigen::VectorXd& q,
                             const Eigen::VectorXd& qd) {
    return u.additive_c1 * qd + u.additive_c2 * q.cwiseProduct(qd);
}

// Reference acceleration only; the integrator stages need nothing else.
Eigen::VectorXd reference_accel(const TrajectorySpec& spec, double t) {
    const Eigen::Index n = spec.amplitude.size();
    Eigen::VectorXd qdd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = spec.amplitude[i];
        const double w = spec.frequency[i];
        qdd[i] = spec.form == TrajectoryForm::RaisedCosine
                     ? a * w * w * std::cos(w * t)
                     : -a * w * w * std::sin(w * t);
    }
    return qdd;
}

Eigen::VectorXd concat3(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& c) {
    Eigen::VectorXd out(a.size() + b.size() + c.size());
    out << a, b, c;
    return out;
}

// Classical RK4 on (q, qd) for a generic acceleration field accel(tau, q, qd).
template <typename Accel>
dynamics::JointState rk4_step(const Accel& accel, double t, const dynamics::JointState& s,
                              double dt) {
    const Eigen::VectorXd k1q = s.qd;
    const Eigen::VectorXd k1v = accel(t, s.q, s.qd);

    const Eigen::VectorXd k2q = s.qd + 0.5 * dt * k1v;
    const Eigen::VectorXd k2v =
        accel(t + 0.5 * dt, s.q + 0.5 * dt * k1q, s.qd + 0.5 * dt * k1v);

    const Eigen::VectorXd k3q = s.qd + 0.5 * dt * k2v;
    const Eigen::VectorXd k3v =
        accel(t + 0.5 * dt, s.q + 0.5 * dt * k2q, s.qd + 0.5 * dt * k2v);

    const Eigen::VectorXd k4q = s.qd + dt * k3v;
    const Eigen::VectorXd k4v = accel(t + dt, s.q + dt * k3q, s.qd + dt * k3v);

    dynamics::JointState out;
    out.q = s.q + (dt / 6.0) * (k1q + 2.0 * (k2q + k3q) + k4q);
    out.qd = s.qd + (dt / 6.0) * (k1v + 2.0 * (k2v + k3v) + k4v);
    return out;
}

// Torque that would realise the commanded acceleration on the true plant,
// accounting for the additive acceleration-level disturbance.
Eigen::VectorXd needed_torque(const dynamics::LagrangianModel& truth,
                              const UncertaintySpec& u, const dynamics::JointState& s,
                              const Eigen::VectorXd& a_q) {
    return truth.mass_matrix(s.q) * (a_q - additive_eta(u, s.q, s.qd)) +
           truth.coriolis_matrix(s.q, s.qd) * s.qd + truth.gravity_vector(s.q);
}

Eigen::VectorXd eta_between(const dynamics::LagrangianModel& truth,
                            const dynamics::LagrangianModel& estimate,
                            const UncertaintySpec& unc, const dynamics::JointState& s,
                            const Eigen::VectorXd& a_q) {
    const Eigen::MatrixXd m_tilde = estimate.mass_matrix(s.q) - truth.mass_matrix(s.q);
    const Eigen::MatrixXd c_tilde =
        estimate.coriolis_matrix(s.q, s.qd) - truth.coriolis_matrix(s.q, s.qd);
    const Eigen::VectorXd g_tilde =
        estimate.gravity_vector(s.q) - truth.gravity_vector(s.q);
    const Eigen::VectorXd parametric =
        truth.mass_matrix(s.q).llt().solve(m_tilde * a_q + c_tilde * s.qd + g_tilde);
    return parametric + additive_eta(unc, s.q, s.qd);
}

struct SeriesBuffer {
    std::vector<double> t;
    std::vector<Eigen::VectorXd> q, q_des, qd, a_q, u, eta;
    std::vector<double> rho, e_norm;

    void push(double time, const dynamics::JointState& s, const TrajectorySample& traj,
              const Eigen::VectorXd& aq, const Eigen::VectorXd& torque,
              const Eigen::VectorXd& eta_now, double rho_now, double err_norm) {
        t.push_back(time);
        q.push_back(s.q);
        q_des.push_back(traj.q_d);
        qd.push_back(s.qd);
        a_q.push_back(aq);
        u.push_back(torque);
        eta.push_back(eta_now);
        rho.push_back(rho_now);
        e_norm.push_back(err_norm);
    }
};

Eigen::MatrixXd stack(const std::vector<Eigen::VectorXd>& rows) {
    if (rows.empty()) return {};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
    return m;
}

}  // namespace

TrajectorySample desired_trajectory(const TrajectorySpec& spec, double t) {
    if (t < 0.0) throw std::invalid_argument("trajectory: t must be nonnegative");
    if (spec.amplitude.size() != spec.frequency.size()) {
        throw std::invalid_argument("trajectory: amplitude/frequency size mismatch");
    }
    const Eigen::Index n = spec.amplitude.size();
    TrajectorySample out;
    out.q_d.resize(n);
    out.qd_d.resize(n);
    out.qdd_d.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = spec.amplitude[i];
        const double w = spec.frequency[i];
        if (spec.form == TrajectoryForm::RaisedCosine) {
            out.q_d[i] = a * (1.0 - std::cos(w * t));
            out.qd_d[i] = a * w * std::sin(w * t);
            out.qdd_d[i] = a * w * w * std::cos(w * t);
        } else {
            out.q_d[i] = a * std::sin(w * t);
            out.qd_d[i] = a * w * std::cos(w * t);
            out.qdd_d[i] = -a * w * w * std::sin(w * t);
        }
    }
    return out;
}

void Scenario::validate() const {
    params.validate();
    if (!(uncertainty.mass_error_fraction > -1.0)) {
        throw ConfigError("scenario: mass_error_fraction must exceed -1");
    }
    const Eigen::Index n = trajectory.amplitude.size();
    if (n == 0 || trajectory.frequency.size() != n) {
        throw ConfigError("scenario: trajectory amplitude/frequency must be per-joint");
    }
    if (!(trajectory.duration > 0.0)) throw ConfigError("scenario: duration must be positive");
    if (!(dt > 0.0) || !(ts > 0.0) || dt > ts) {
        throw ConfigError("scenario: require 0 < dt <= ts");
    }
    const double ratio = ts / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw ConfigError("scenario: ts must be an integer multiple of dt");
    }
    if (gains.kp.rows() != n || gains.kp.cols() != n || gains.kd.rows() != n ||
        gains.kd.cols() != n) {
        throw ConfigError("scenario: gains must be N x N");
    }
    if (!(robust.epsilon > 0.0)) throw ConfigError("scenario: epsilon must be positive");
    if (!(robust.rho_bar > 0.0)) throw ConfigError("scenario: rho_bar must be positive");
    if (!(gp.sigma_eta > 0.0) || !(gp.sigma_omega > 0.0) || !(gp.length_scale > 0.0)) {
        throw ConfigError("scenario: gp hyperparameters must be positive");
    }
    if (gp.window < 1) throw ConfigError("scenario: gp window must be at least 1");
    if (gp.beta_sqrt < 0.0) throw ConfigError("scenario: beta_sqrt must be nonnegative");
    if (label_noise_std.size() != n || (label_noise_std.array() < 0.0).any()) {
        throw ConfigError("scenario: label_noise_std must be per-joint and nonnegative");
    }
    if (fixed_rho < 0.0) throw ConfigError("scenario: fixed_rho must be nonnegative");
    if (lyapunov_q.size() != 0 &&
        (lyapunov_q.rows() != 2 * n || lyapunov_q.cols() != 2 * n)) {
        throw ConfigError("scenario: lyapunov_q must be 2N x 2N");
    }
    if (q0_offset.size() != 0 && q0_offset.size() != n) {
        throw ConfigError("scenario: q0_offset must be per-joint");
    }
    if (qd0_offset.size() != 0 && qd0_offset.size() != n) {
        throw ConfigError("scenario: qd0_offset must be per-joint");
    }
    if (!(divergence_threshold > 0.0)) {
        throw ConfigError("scenario: divergence_threshold must be positive");
    }
}

Eigen::VectorXd true_eta(const Scenario& sc, const dynamics::JointState& s,
                         const Eigen::VectorXd& a_q) {
    const dynamics::TwoLinkArm truth(sc.params);
    const dynamics::TwoLinkArm estimate(
        dynamics::with_mass_error(sc.params, sc.uncertainty.mass_error_fraction));
    return eta_between(truth, estimate, sc.uncertainty, s, a_q);
}

LabeledSample gp_label(const dynamics::JointState& s, const Eigen::VectorXd& a_q_held,
                       const Eigen::VectorXd& qdd_measured,
                       const Eigen::VectorXd& noise_std, GaussianStream& rng) {
    LabeledSample out;
    out.a_aug = concat3(s.q, s.qd, a_q_held);
    out.y = qdd_measured - a_q_held + rng.next(noise_std.size()).cwiseProduct(noise_std);
    return out;
}

dynamics::JointState integrate_plant(
    const dynamics::LagrangianModel& model, const dynamics::JointState& s,
    const Eigen::VectorXd& u,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>&
        extra_accel,
    double dt) {
    const dynamics::GeneralizedForce f{u};
    auto accel = [&](double, const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
        Eigen::VectorXd a = model.forward_dynamics(dynamics::JointState(q, qd), f);
        if (extra_accel) a += extra_accel(q, qd);
        return a;
    };
    return rk4_step(accel, 0.0, s, dt);
}

RmsSummary rms(const Eigen::MatrixXd& e_pos) {
    if (e_pos.rows() == 0) throw std::invalid_argument("rms: series must not be empty");
    RmsSummary out;
    out.per_joint = e_pos.array().square().colwise().mean().sqrt();
    out.aggregate = std::sqrt(out.per_joint.squaredNorm() /
                              static_cast<double>(e_pos.cols()));
    return out;
}

SimResult run(const Scenario& sc) {
    sc.validate();
    const Eigen::Index n = sc.dof();

    const dynamics::TwoLinkArm truth(sc.params);
    if (truth.dof() != n) throw ConfigError("scenario: trajectory must cover every joint");
    const dynamics::TwoLinkArm estimate(
        dynamics::with_mass_error(sc.params, sc.uncertainty.mass_error_fraction));

    const control::ErrorSystem es = control::build_error_system(sc.gains);
    const control::LyapunovPair lyap = control::make_lyapunov_pair(
        es.a, sc.lyapunov_q.size() != 0 ? sc.lyapunov_q
                                        : Eigen::MatrixXd::Identity(2 * n, 2 * n));
    const Eigen::MatrixXd& p = lyap.p;

    const auto steps = static_cast<long>(std::llround(sc.trajectory.duration / sc.dt));
    const auto stride = static_cast<long>(std::llround(sc.ts / sc.dt));

    GaussianStream rng(sc.seed);

    const bool learning = sc.variant == ControllerVariant::RobustLearning ||
                          sc.variant == ControllerVariant::LearnDeltaU;
    gp::Hyperparams hp;
    hp.sigma_eta_sq = sc.gp.sigma_eta * sc.gp.sigma_eta;
    hp.sigma_omega_sq = sc.gp.sigma_omega * sc.gp.sigma_omega;
    hp.length_scales = Eigen::VectorXd::Constant(3 * n, sc.gp.length_scale);
    std::optional<gp::Bank> bank;
    if (learning) {
        bank.emplace(hp, n, static_cast<std::size_t>(sc.gp.window),
                     gp::ConfidenceConfig{Eigen::VectorXd::Constant(n, sc.gp.beta_sqrt)});
    }

    double rho_held = 0.0;
    if (sc.variant == ControllerVariant::RobustLearning) {
        // value the first sampling instant produces from an empty bank
        rho_held = control::saturate_rho(
            sc.gp.beta_sqrt * sc.gp.sigma_eta * std::sqrt(static_cast<double>(n)),
            sc.robust.rho_bar);
    } else if (sc.variant == ControllerVariant::FixedRobust) {
        rho_held = sc.fixed_rho;
    }

    // Label pending between sampling instants: ingested one interval late,
    // with the acceleration attributed to the instant the input was taken.
    bool has_pending = false;
    Eigen::VectorXd pend_input, pend_y, pend_qd, pend_aq, pend_noise;

    // torque correction for the LearnDeltaU variant, zero-order held between
    // sampling instants like the uncertainty bound
    Eigen::VectorXd delta_u_held = Eigen::VectorXd::Zero(n);

    dynamics::JointState state;
    {
        const TrajectorySample traj0 = desired_trajectory(sc.trajectory, 0.0);
        state.q = traj0.q_d;
        state.qd = traj0.qd_d;
        if (sc.q0_offset.size() != 0) state.q += sc.q0_offset;
        if (sc.qd0_offset.size() != 0) state.qd += sc.qd0_offset;
    }

    SeriesBuffer series;
    series.t.reserve(static_cast<std::size_t>(steps) + 1);
    bool diverged = false;

    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) * sc.dt;
        const TrajectorySample traj = desired_trajectory(sc.trajectory, t);
        control::TrackingError err{state.q - traj.q_d, state.qd - traj.qd_d};
        const Eigen::VectorXd e_vec = err.stacked();
        const double err_norm = e_vec.norm();

        if (!e_vec.allFinite() || err_norm > sc.divergence_threshold) {
            diverged = true;
            break;
        }

        const bool sampling = (k % stride == 0);
        if (sampling) {
            if (learning && has_pending) {
                Eigen::VectorXd y = pend_y;
                if (sc.label_finite_difference &&
                    sc.variant == ControllerVariant::RobustLearning) {
                    // mean acceleration over the elapsed interval
                    y = (state.qd - pend_qd) / sc.ts - pend_aq + pend_noise;
                }
                bank->ingest(pend_input, y);
                has_pending = false;
                if (sc.variant == ControllerVariant::LearnDeltaU) {
                    // refresh the held correction at the newest supported
                    // input; querying ahead of the data support makes the
                    // near-interpolating posterior ring
                    delta_u_held = bank->means(pend_input);
                }
            }
            if (sc.variant == ControllerVariant::RobustLearning) {
                // Query at the acceleration the interval is about to command.
                // The bound itself feeds that acceleration, so one fixed-point
                // pass is taken with the previously held bound.
                const Eigen::VectorXd r_tent =
                    control::robust_term(p, e_vec, rho_held, sc.robust.epsilon);
                const Eigen::VectorXd aq_tent =
                    control::outer_loop(traj.qdd_d, err, sc.gains, r_tent);
                const Eigen::VectorXd query = concat3(state.q, state.qd, aq_tent);
                rho_held = control::saturate_rho(bank->rho(query), sc.robust.rho_bar);
            }
        }

        Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
        if (sc.variant == ControllerVariant::RobustLearning ||
            sc.variant == ControllerVariant::FixedRobust) {
            r = control::robust_term(p, e_vec, rho_held, sc.robust.epsilon);
        }
        const Eigen::VectorXd a_q = control::outer_loop(traj.qdd_d, err, sc.gains, r);
        const Eigen::VectorXd& delta_u = delta_u_held;
        const Eigen::VectorXd u = control::inner_loop(estimate, state, a_q).u + delta_u;

        const Eigen::VectorXd eta_now = eta_between(truth, estimate, sc.uncertainty, state, a_q);
        const double rho_row =
            (sc.variant == ControllerVariant::RobustLearning ||
             sc.variant == ControllerVariant::FixedRobust)
                ? rho_held
                : 0.0;
        series.push(t, state, traj, a_q, u, eta_now, rho_row, err_norm);

        if (k == steps) break;

        if (sampling) {
            // One draw per joint at every sampling instant in every variant,
            // so runs with a shared seed consume an identical stream.
            const Eigen::VectorXd noise =
                rng.next(n).cwiseProduct(sc.label_noise_std);
            if (learning) {
                pend_input = concat3(state.q, state.qd, a_q);
                pend_qd = state.qd;
                pend_aq = a_q;
                pend_noise = noise;
                if (sc.variant == ControllerVariant::RobustLearning) {
                    pend_y = eta_now + noise;  // qdd - a_q at this instant
                } else {
                    pend_y = needed_torque(truth, sc.uncertainty, state, a_q) -
                             control::inner_loop(estimate, state, a_q).u + noise;
                }
                has_pending = true;
            }
        }

        // The measured feedback (PD + robust term, plus any torque
        // correction) is held over the step; the analytic reference
        // feedforward and the inverse-dynamics actuation follow the
        // integrator stages.
        const Eigen::VectorXd feedback_held = a_q - traj.qdd_d;
        auto accel = [&](double tau, const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
            const dynamics::JointState stage(q, qd);
            const Eigen::VectorXd a_cmd = reference_accel(sc.trajectory, tau) + feedback_held;
            const dynamics::GeneralizedForce f{
                control::inner_loop(estimate, stage, a_cmd).u + delta_u};
            Eigen::VectorXd a = truth.forward_dynamics(stage, f);
            if (sc.uncertainty.additive_c1 != 0.0 || sc.uncertainty.additive_c2 != 0.0) {
                a += additive_eta(sc.uncertainty, q, qd);
            }
            return a;
        };
        state = rk4_step(accel, t, state, sc.dt);
    }

    SimResult out;
    out.t = series.t;
    out.q = stack(series.q);
    out.q_des = stack(series.q_des);
    out.qd = stack(series.qd);
    out.a_q = stack(series.a_q);
    out.u = stack(series.u);
    out.eta = stack(series.eta);
    out.rho = Eigen::Map<const Eigen::VectorXd>(series.rho.data(),
                                                static_cast<Eigen::Index>(series.rho.size()));
    out.e_norm = Eigen::Map<const Eigen::VectorXd>(
        series.e_norm.data(), static_cast<Eigen::Index>(series.e_norm.size()));
    out.diverged = diverged;

    if (out.samples() > 0) {
        const Eigen::MatrixXd e_pos = out.q - out.q_des;
        const RmsSummary all = rms(e_pos);
        out.rms_per_joint = all.per_joint;
        out.rms_aggregate = all.aggregate;
        const Eigen::Index start = out.samples() * 4 / 5;
        out.rms_steady_state =
            rms(e_pos.bottomRows(out.samples() - start)).aggregate;
        out.max_e_norm = out.e_norm.maxCoeff();
    }
    return out;
}

void SimResult::write_csv(std::ostream& os) const {
    const Eigen::Index n = q.cols();
    std::string line;
    line = "t";
    auto cols = [&](const char* stem) {
        for (Eigen::Index i = 0; i < n; ++i) {
            line += ',';
            line += stem;
            line += std::to_string(i + 1);
        }
    };
    cols("q");
    cols("qd");     // desired positions
    cols("qdot");   // velocities
    cols("aq");
    cols("u");
    cols("eta");
    line += ",rho,e_norm\n";
    os << line;

    for (Eigen::Index k = 0; k < samples(); ++k) {
        line.clear();
        append_value(line, t[static_cast<std::size_t>(k)]);
        auto row = [&](const Eigen::MatrixXd& m) {
            for (Eigen::Index i = 0; i < n; ++i) {
                line += ',';
                append_value(line, m(k, i));
            }
        };
        row(q);
        row(q_des);
        row(qd);
        row(a_q);
        row(u);
        row(eta);
        line += ',';
        append_value(line, rho[k]);
        line += ',';
        append_value(line, e_norm[k]);
        line += '\n';
        os << line;
    }
}

CsvTable read_csv_table(std::istream& is) {
    CsvTable out;
    std::string line;
    if (!std::getline(is, line)) return out;
    {
        std::stringstream head(line);
        std::string cell;
        while (std::getline(head, cell, ',')) out.header.push_back(cell);
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        if (values.size() != out.header.size()) {
            throw std::invalid_argument("csv: row width differs from the header");
        }
        rows.push_back(std::move(values));
    }
    out.rows.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(out.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            out.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return out;
}

}  // namespace grc::sim
