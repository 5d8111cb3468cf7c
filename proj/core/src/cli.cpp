#include "grc/cli.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace grc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write file: " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw ConfigError("wrong type: " + path + " (expected object)");
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ConfigError("missing field: " + (path.empty() ? key : path + "." + key));
    }
    return *it;
}

double require_number(const json& obj, const std::string& key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number()) {
        throw ConfigError("wrong type: " + (path.empty() ? key : path + "." + key) +
                          " (expected number)");
    }
    return v.get<double>();
}

std::string require_string(const json& obj, const std::string& key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_string()) {
        throw ConfigError("wrong type: " + (path.empty() ? key : path + "." + key) +
                          " (expected string)");
    }
    return v.get<std::string>();
}

// number => constant vector, array => per-joint values
Eigen::VectorXd parse_vector(const json& v, Eigen::Index n, const std::string& where) {
    if (v.is_number()) return Eigen::VectorXd::Constant(n, v.get<double>());
    if (v.is_array()) {
        if (static_cast<Eigen::Index>(v.size()) != n) {
            throw ConfigError("wrong size: " + where + " (expected " + std::to_string(n) +
                              " entries)");
        }
        Eigen::VectorXd out(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!v[static_cast<std::size_t>(i)].is_number()) {
                throw ConfigError("wrong type: " + where + " (expected numbers)");
            }
            out[i] = v[static_cast<std::size_t>(i)].get<double>();
        }
        return out;
    }
    throw ConfigError("wrong type: " + where + " (expected number or array)");
}

// number => scalar * I, array => diagonal, array of arrays => full matrix
Eigen::MatrixXd parse_matrix(const json& v, Eigen::Index n, const std::string& where) {
    if (v.is_number()) {
        return v.get<double>() * Eigen::MatrixXd::Identity(n, n);
    }
    if (v.is_array() && !v.empty() && v[0].is_array()) {
        if (static_cast<Eigen::Index>(v.size()) != n) {
            throw ConfigError("wrong size: " + where);
        }
        Eigen::MatrixXd out(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& row = v[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
                throw ConfigError("wrong size: " + where);
            }
            for (Eigen::Index j = 0; j < n; ++j) {
                out(i, j) = row[static_cast<std::size_t>(j)].get<double>();
            }
        }
        return out;
    }
    if (v.is_array()) {
        return parse_vector(v, n, where).asDiagonal();
    }
    throw ConfigError("wrong type: " + where + " (expected number, array or nested array)");
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

std::string form_name(sim::TrajectoryForm f) {
    return f == sim::TrajectoryForm::RaisedCosine ? "raised_cosine" : "sine";
}

sim::TrajectoryForm form_from_name(const std::string& name) {
    if (name == "raised_cosine") return sim::TrajectoryForm::RaisedCosine;
    if (name == "sine") return sim::TrajectoryForm::Sine;
    throw ConfigError("unknown trajectory form: " + name +
                      " (expected raised_cosine or sine)");
}

sim::TrajectorySpec parse_trajectory(const json& j, const std::string& path) {
    sim::TrajectorySpec spec;
    spec.form = form_from_name(require_string(j, "form", path));
    const json& amp = require(j, "amplitude", path);
    if (!amp.is_array() || amp.empty()) {
        throw ConfigError("wrong type: " + path + ".amplitude (expected per-joint array)");
    }
    const auto n = static_cast<Eigen::Index>(amp.size());
    spec.amplitude = parse_vector(amp, n, path + ".amplitude");
    spec.frequency = parse_vector(require(j, "frequency", path), n, path + ".frequency");
    spec.duration = require_number(j, "duration", path);
    return spec;
}

json trajectory_to_json(const sim::TrajectorySpec& spec) {
    json j;
    j["form"] = form_name(spec.form);
    j["amplitude"] = vector_to_json(spec.amplitude);
    j["frequency"] = vector_to_json(spec.frequency);
    j["duration"] = spec.duration;
    return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

struct CellSpec {
    std::size_t level, traj, variant;
    sim::Scenario scenario;
};

std::vector<CellSpec> expand_cells(const BenchmarkMatrix& m) {
    std::vector<CellSpec> cells;
    cells.reserve(m.levels.size() * m.battery.size() * m.variants.size());
    for (std::size_t li = 0; li < m.levels.size(); ++li) {
        for (std::size_t ti = 0; ti < m.battery.size(); ++ti) {
            for (std::size_t vi = 0; vi < m.variants.size(); ++vi) {
                CellSpec c{li, ti, vi, m.base};
                c.scenario.uncertainty.mass_error_fraction = m.levels[li];
                c.scenario.trajectory = m.battery[ti];
                c.scenario.variant = m.variants[vi];
                cells.push_back(std::move(c));
            }
        }
    }
    return cells;
}

}  // namespace

std::string variant_name(sim::ControllerVariant v) {
    switch (v) {
        case sim::ControllerVariant::Nominal: return "nominal";
        case sim::ControllerVariant::FixedRobust: return "fixed_robust";
        case sim::ControllerVariant::LearnDeltaU: return "learn_delta_u";
        case sim::ControllerVariant::RobustLearning: return "robust_learning";
    }
    throw std::invalid_argument("unknown controller variant");
}

sim::ControllerVariant variant_from_name(const std::string& name) {
    if (name == "nominal") return sim::ControllerVariant::Nominal;
    if (name == "fixed_robust") return sim::ControllerVariant::FixedRobust;
    if (name == "learn_delta_u") return sim::ControllerVariant::LearnDeltaU;
    if (name == "robust_learning") return sim::ControllerVariant::RobustLearning;
    throw ConfigError("unknown variant: " + name +
                      " (expected nominal, fixed_robust, learn_delta_u or robust_learning)");
}

sim::Scenario make_default_scenario() {
    sim::Scenario sc;
    sc.params = dynamics::ManipulatorParams{};  // 1 kg links, 1 kg m^2, 2 m / 1 m, COM mid-link
    sc.uncertainty = {0.2, 0.0, 0.0};
    sc.trajectory.form = sim::TrajectoryForm::RaisedCosine;
    sc.trajectory.amplitude = Eigen::VectorXd::Constant(2, 0.25);
    sc.trajectory.frequency = Eigen::VectorXd::Constant(2, 2.0);
    sc.trajectory.duration = 20.0;
    sc.variant = sim::ControllerVariant::RobustLearning;
    sc.gains.kp = 7.0 * Eigen::MatrixXd::Identity(2, 2);
    sc.gains.kd = 6.0 * Eigen::MatrixXd::Identity(2, 2);
    sc.robust.epsilon = 1e-5;
    sc.robust.rho_bar = 1e6;
    sc.gp = sim::GpConfig{};
    sc.dt = 1e-4;
    sc.ts = 0.1;
    sc.label_noise_std = Eigen::VectorXd::Constant(2, 0.001);
    sc.seed = 42;
    sc.fixed_rho = 1000.0;
    return sc;
}

BenchmarkMatrix make_default_matrix() {
    BenchmarkMatrix m;
    m.base = make_default_scenario();
    m.levels = {0.1, 0.2, 0.3};
    for (double a : {0.2, 0.4, 0.6, 0.8}) {
        for (double w : {0.5, 1.0, 2.0}) {
            sim::TrajectorySpec spec;
            spec.form = sim::TrajectoryForm::RaisedCosine;
            spec.amplitude = Eigen::VectorXd::Constant(2, a);
            spec.frequency = Eigen::VectorXd::Constant(2, w);
            spec.duration = 20.0;
            m.battery.push_back(std::move(spec));
        }
    }
    m.variants = {sim::ControllerVariant::Nominal, sim::ControllerVariant::FixedRobust,
                  sim::ControllerVariant::LearnDeltaU,
                  sim::ControllerVariant::RobustLearning};
    return m;
}

namespace {

json scenario_to_json(const sim::Scenario& sc) {
    json j;
    j["params"] = {{"m1", sc.params.m1},   {"m2", sc.params.m2},  {"I1", sc.params.I1},
                   {"I2", sc.params.I2},   {"l1", sc.params.l1},  {"l2", sc.params.l2},
                   {"lc1", sc.params.lc1}, {"lc2", sc.params.lc2}, {"g0", sc.params.g0}};
    j["uncertainty"] = {{"mass_error_fraction", sc.uncertainty.mass_error_fraction},
                        {"additive_c1", sc.uncertainty.additive_c1},
                        {"additive_c2", sc.uncertainty.additive_c2}};
    j["trajectory"] = trajectory_to_json(sc.trajectory);
    j["variant"] = variant_name(sc.variant);
    j["gains"] = {{"kp", matrix_to_json(sc.gains.kp)}, {"kd", matrix_to_json(sc.gains.kd)}};
    j["robust"] = {{"epsilon", sc.robust.epsilon}, {"rho_bar", sc.robust.rho_bar}};
    j["gp"] = {{"sigma_eta", sc.gp.sigma_eta},
               {"sigma_omega", sc.gp.sigma_omega},
               {"length_scale", sc.gp.length_scale},
               {"window", sc.gp.window},
               {"beta_sqrt", sc.gp.beta_sqrt}};
    j["rates"] = {{"dt", sc.dt}, {"ts", sc.ts}};
    j["label_noise_std"] = vector_to_json(sc.label_noise_std);
    j["seed"] = sc.seed;
    j["fixed_rho"] = sc.fixed_rho;
    if (sc.lyapunov_q.size() != 0) j["lyapunov_q"] = matrix_to_json(sc.lyapunov_q);
    if (sc.q0_offset.size() != 0 || sc.qd0_offset.size() != 0) {
        json off;
        if (sc.q0_offset.size() != 0) off["q"] = vector_to_json(sc.q0_offset);
        if (sc.qd0_offset.size() != 0) off["qd"] = vector_to_json(sc.qd0_offset);
        j["initial_offset"] = off;
    }
    if (sc.label_finite_difference) j["label_finite_difference"] = true;
    j["divergence_threshold"] = sc.divergence_threshold;
    return j;
}

sim::Scenario scenario_from_json(const json& j) {
    sim::Scenario sc;

    const json& params = require(j, "params", "");
    sc.params.m1 = require_number(params, "m1", "params");
    sc.params.m2 = require_number(params, "m2", "params");
    sc.params.I1 = require_number(params, "I1", "params");
    sc.params.I2 = require_number(params, "I2", "params");
    sc.params.l1 = require_number(params, "l1", "params");
    sc.params.l2 = require_number(params, "l2", "params");
    sc.params.lc1 = require_number(params, "lc1", "params");
    sc.params.lc2 = require_number(params, "lc2", "params");
    sc.params.g0 = require_number(params, "g0", "params");

    const json& unc = require(j, "uncertainty", "");
    sc.uncertainty.mass_error_fraction =
        require_number(unc, "mass_error_fraction", "uncertainty");
    sc.uncertainty.additive_c1 = require_number(unc, "additive_c1", "uncertainty");
    sc.uncertainty.additive_c2 = require_number(unc, "additive_c2", "uncertainty");

    sc.trajectory = parse_trajectory(require(j, "trajectory", ""), "trajectory");
    const Eigen::Index n = sc.trajectory.amplitude.size();

    sc.variant = variant_from_name(require_string(j, "variant", ""));

    const json& gains = require(j, "gains", "");
    sc.gains.kp = parse_matrix(require(gains, "kp", "gains"), n, "gains.kp");
    sc.gains.kd = parse_matrix(require(gains, "kd", "gains"), n, "gains.kd");

    const json& robust = require(j, "robust", "");
    sc.robust.epsilon = require_number(robust, "epsilon", "robust");
    sc.robust.rho_bar = require_number(robust, "rho_bar", "robust");

    const json& gpc = require(j, "gp", "");
    sc.gp.sigma_eta = require_number(gpc, "sigma_eta", "gp");
    sc.gp.sigma_omega = require_number(gpc, "sigma_omega", "gp");
    sc.gp.length_scale = require_number(gpc, "length_scale", "gp");
    sc.gp.window = static_cast<int>(require_number(gpc, "window", "gp"));
    sc.gp.beta_sqrt = require_number(gpc, "beta_sqrt", "gp");

    const json& rates = require(j, "rates", "");
    sc.dt = require_number(rates, "dt", "rates");
    sc.ts = require_number(rates, "ts", "rates");

    sc.label_noise_std = parse_vector(require(j, "label_noise_std", ""), n, "label_noise_std");

    const json& seed = require(j, "seed", "");
    if (!seed.is_number_unsigned()) {
        throw ConfigError("wrong type: seed (expected unsigned integer)");
    }
    sc.seed = seed.get<std::uint64_t>();

    if (j.contains("fixed_rho")) sc.fixed_rho = j["fixed_rho"].get<double>();
    if (j.contains("lyapunov_q")) {
        sc.lyapunov_q = parse_matrix(j["lyapunov_q"], 2 * n, "lyapunov_q");
    }
    if (j.contains("initial_offset")) {
        const json& off = j["initial_offset"];
        if (off.contains("q")) sc.q0_offset = parse_vector(off["q"], n, "initial_offset.q");
        if (off.contains("qd")) {
            sc.qd0_offset = parse_vector(off["qd"], n, "initial_offset.qd");
        }
    }
    if (j.contains("label_finite_difference")) {
        sc.label_finite_difference = j["label_finite_difference"].get<bool>();
    }
    if (j.contains("divergence_threshold")) {
        sc.divergence_threshold = j["divergence_threshold"].get<double>();
    }

    sc.validate();
    return sc;
}

json parse_text(const std::string& text) {
    json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ConfigError("config is not valid JSON");
    return j;
}

}  // namespace

std::string scenario_to_json_text(const sim::Scenario& sc) {
    return scenario_to_json(sc).dump(2) + "\n";
}

sim::Scenario scenario_from_json_text(const std::string& text) {
    return scenario_from_json(parse_text(text));
}

std::string matrix_to_json_text(const BenchmarkMatrix& m) {
    json j;
    j["scenario"] = scenario_to_json(m.base);
    j["levels"] = m.levels;
    json battery = json::array();
    for (const auto& spec : m.battery) battery.push_back(trajectory_to_json(spec));
    j["battery"] = battery;
    json variants = json::array();
    for (auto v : m.variants) variants.push_back(variant_name(v));
    j["variants"] = variants;
    return j.dump(2) + "\n";
}

BenchmarkMatrix matrix_from_json_text(const std::string& text) {
    const json j = parse_text(text);
    BenchmarkMatrix m;
    m.base = scenario_from_json(require(j, "scenario", ""));

    const json& levels = require(j, "levels", "");
    if (!levels.is_array() || levels.empty()) {
        throw ConfigError("wrong type: levels (expected nonempty array)");
    }
    for (const auto& v : levels) m.levels.push_back(v.get<double>());

    const json& battery = require(j, "battery", "");
    if (battery.is_array() && !battery.empty()) {
        for (std::size_t i = 0; i < battery.size(); ++i) {
            m.battery.push_back(
                parse_trajectory(battery[i], "battery[" + std::to_string(i) + "]"));
        }
    } else if (battery.is_object()) {
        // cross-product shorthand: amplitudes x frequencies, same per joint
        const Eigen::Index n = m.base.trajectory.amplitude.size();
        const json& amps = require(battery, "amplitudes", "battery");
        const json& freqs = require(battery, "frequencies", "battery");
        const sim::TrajectoryForm form =
            form_from_name(require_string(battery, "form", "battery"));
        const double duration = require_number(battery, "duration", "battery");
        for (const auto& a : amps) {
            for (const auto& w : freqs) {
                sim::TrajectorySpec spec;
                spec.form = form;
                spec.amplitude = Eigen::VectorXd::Constant(n, a.get<double>());
                spec.frequency = Eigen::VectorXd::Constant(n, w.get<double>());
                spec.duration = duration;
                m.battery.push_back(std::move(spec));
            }
        }
    } else {
        throw ConfigError("wrong type: battery (expected array or cross-product object)");
    }
    if (m.battery.empty()) throw ConfigError("battery must not be empty");

    const json& variants = require(j, "variants", "");
    if (!variants.is_array() || variants.empty()) {
        throw ConfigError("wrong type: variants (expected nonempty array)");
    }
    for (const auto& v : variants) m.variants.push_back(variant_from_name(v.get<std::string>()));
    return m;
}

std::string scenario_hash(const sim::Scenario& sc) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(scenario_to_json(sc).dump())));
    return buf;
}

std::string summary_json_text(const sim::Scenario& sc, const sim::SimResult& res) {
    json j;
    j["scenario_hash"] = scenario_hash(sc);
    j["seed"] = sc.seed;
    j["samples"] = res.samples();
    j["rms_per_joint"] = vector_to_json(res.rms_per_joint);
    j["rms_aggregate"] = res.rms_aggregate;
    j["rms_steady_state"] = res.rms_steady_state;
    j["max_e_norm"] = res.max_e_norm;
    j["diverged"] = res.diverged;
    return j.dump(2) + "\n";
}

std::vector<CellResult> run_matrix(const BenchmarkMatrix& m, int jobs) {
    if (m.levels.empty() || m.battery.empty() || m.variants.empty()) {
        throw ConfigError("benchmark matrix must have levels, battery and variants");
    }
    const std::vector<CellSpec> cells = expand_cells(m);
    for (const auto& c : cells) c.scenario.validate();

    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
            const sim::SimResult res = sim::run(cells[i].scenario);
            results[i] = {cells[i].level, cells[i].traj, cells[i].variant,
                          res.rms_aggregate, res.rms_steady_state, res.diverged};
        }
    };

    unsigned n_threads = jobs > 0 ? static_cast<unsigned>(jobs)
                                  : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(cells.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

BenchmarkTable build_table(const BenchmarkMatrix& m, const std::vector<CellResult>& cells) {
    BenchmarkTable t;
    t.levels = m.levels;
    t.variants = m.variants;
    t.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.levels.size()),
                                     static_cast<Eigen::Index>(m.variants.size()));
    t.cell_diverged.assign(m.levels.size(), std::vector<bool>(m.variants.size(), false));

    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(t.values.rows(), t.values.cols());
    for (const auto& c : cells) {
        const auto li = static_cast<Eigen::Index>(c.level);
        const auto vi = static_cast<Eigen::Index>(c.variant);
        if (c.diverged) t.cell_diverged[c.level][c.variant] = true;
        t.values(li, vi) += c.rms_aggregate;
        counts(li, vi) += 1.0;
    }
    for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.values.cols(); ++j) {
            if (counts(i, j) > 0.0) t.values(i, j) /= counts(i, j);
        }
    }
    return t;
}

double improvement_fraction(double nominal_rms, double robust_rms) {
    if (!(nominal_rms > 0.0)) {
        throw std::invalid_argument("improvement: nominal RMS must be positive");
    }
    return 1.0 - robust_rms / nominal_rms;
}

namespace {

int find_variant(const BenchmarkTable& t, sim::ControllerVariant v) {
    for (std::size_t i = 0; i < t.variants.size(); ++i) {
        if (t.variants[i] == v) return static_cast<int>(i);
    }
    return -1;
}

}  // namespace

std::string table_to_csv(const BenchmarkTable& t) {
    const int nom = find_variant(t, sim::ControllerVariant::Nominal);
    const int rob = find_variant(t, sim::ControllerVariant::RobustLearning);
    const bool with_improvement = nom >= 0 && rob >= 0;

    std::string out = "uncertainty";
    for (auto v : t.variants) out += "," + variant_name(v);
    if (with_improvement) out += ",improvement";
    out += '\n';

    for (std::size_t i = 0; i < t.levels.size(); ++i) {
        out += fmt17(t.levels[i]);
        for (std::size_t j = 0; j < t.variants.size(); ++j) {
            out += ',';
            out += t.cell_diverged[i][j]
                       ? "diverged"
                       : fmt17(t.values(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j)));
        }
        if (with_improvement) {
            out += ',';
            if (t.cell_diverged[i][static_cast<std::size_t>(nom)] ||
                t.cell_diverged[i][static_cast<std::size_t>(rob)]) {
                out += "diverged";
            } else {
                out += fmt17(improvement_fraction(
                    t.values(static_cast<Eigen::Index>(i), nom),
                    t.values(static_cast<Eigen::Index>(i), rob)));
            }
        }
        out += '\n';
    }
    return out;
}

void print_table(const BenchmarkTable& t, std::ostream& os) {
    const int nom = find_variant(t, sim::ControllerVariant::Nominal);
    const int rob = find_variant(t, sim::ControllerVariant::RobustLearning);
    os << std::left << std::setw(14) << "uncertainty";
    for (auto v : t.variants) os << std::setw(17) << variant_name(v);
    if (nom >= 0 && rob >= 0) os << std::setw(14) << "improvement";
    os << '\n';
    for (std::size_t i = 0; i < t.levels.size(); ++i) {
        std::ostringstream level;
        level << t.levels[i] * 100.0 << "%";
        os << std::setw(14) << level.str();
        for (std::size_t j = 0; j < t.variants.size(); ++j) {
            if (t.cell_diverged[i][j]) {
                os << std::setw(17) << "diverged";
            } else {
                std::ostringstream val;
                val << std::setprecision(4)
                    << t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                os << std::setw(17) << val.str();
            }
        }
        if (nom >= 0 && rob >= 0) {
            if (t.cell_diverged[i][static_cast<std::size_t>(nom)] ||
                t.cell_diverged[i][static_cast<std::size_t>(rob)]) {
                os << std::setw(14) << "diverged";
            } else {
                std::ostringstream imp;
                imp << std::setprecision(3)
                    << improvement_fraction(t.values(static_cast<Eigen::Index>(i), nom),
                                            t.values(static_cast<Eigen::Index>(i), rob)) *
                           100.0
                    << "%";
                os << std::setw(14) << imp.str();
            }
        }
        os << '\n';
    }
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, std::ostream& diag) {
    sim::Scenario sc;
    try {
        sc = scenario_from_json_text(read_file(config_path));
        if (seed_override) sc.seed = *seed_override;
    } catch (const std::exception& e) {
        diag << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    sim::SimResult res;
    try {
        res = sim::run(sc);
    } catch (const std::exception& e) {
        diag << "run error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        fs::create_directories(out_dir);
        std::ostringstream csv;
        res.write_csv(csv);
        write_file_atomic(fs::path(out_dir) / "timeseries.csv", csv.str());
        write_file_atomic(fs::path(out_dir) / "summary.json", summary_json_text(sc, res));
    } catch (const std::exception& e) {
        diag << "output error: " << e.what() << '\n';
        return kExitConfig;
    }

    if (res.diverged) {
        diag << "run diverged: tracking error exceeded "
             << sc.divergence_threshold << "; partial artifacts kept\n";
        return kExitDiverged;
    }
    return kExitOk;
}

int cmd_benchmark(const std::optional<std::string>& matrix_path, const std::string& out_dir,
                  int jobs, std::optional<std::uint64_t> seed_override, std::ostream& diag) {
    BenchmarkMatrix m;
    try {
        m = matrix_path ? matrix_from_json_text(read_file(*matrix_path))
                        : make_default_matrix();
        if (seed_override) m.base.seed = *seed_override;
    } catch (const std::exception& e) {
        diag << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        const std::vector<CellResult> cells = run_matrix(m, jobs);

        fs::create_directories(fs::path(out_dir) / "cells");
        const std::vector<CellSpec> specs = expand_cells(m);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            json j;
            j["level"] = m.levels[cells[i].level];
            j["trajectory_index"] = cells[i].traj;
            j["variant"] = variant_name(m.variants[cells[i].variant]);
            j["scenario_hash"] = scenario_hash(specs[i].scenario);
            j["rms_aggregate"] = cells[i].rms_aggregate;
            j["rms_steady_state"] = cells[i].rms_steady_state;
            j["diverged"] = cells[i].diverged;
            const std::string name = "l" + std::to_string(cells[i].level) + "_t" +
                                     std::to_string(cells[i].traj) + "_" +
                                     variant_name(m.variants[cells[i].variant]) +
                                     ".summary.json";
            write_file_atomic(fs::path(out_dir) / "cells" / name, j.dump(2) + "\n");
        }

        const BenchmarkTable table = build_table(m, cells);
        write_file_atomic(fs::path(out_dir) / "table.csv", table_to_csv(table));
        print_table(table, diag);
    } catch (const std::exception& e) {
        diag << "benchmark error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}

int cmd_sweep_epsilon(const std::string& config_path, const std::vector<double>& epsilons,
                      const std::string& out_dir, std::optional<std::uint64_t> seed_override,
                      std::ostream& diag) {
    sim::Scenario sc;
    try {
        if (epsilons.size() < 2) {
            throw ConfigError("epsilon sweep needs at least two values");
        }
        for (double e : epsilons) {
            if (!(e > 0.0)) throw ConfigError("epsilon values must be positive");
        }
        sc = scenario_from_json_text(read_file(config_path));
        if (seed_override) sc.seed = *seed_override;
    } catch (const std::exception& e) {
        diag << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::vector<double> steady, aggregate;
    bool any_diverged = false;
    try {
        fs::create_directories(out_dir);
        for (double eps : epsilons) {
            sim::Scenario cur = sc;
            cur.robust.epsilon = eps;
            const sim::SimResult res = sim::run(cur);
            steady.push_back(res.rms_steady_state);
            aggregate.push_back(res.rms_aggregate);
            any_diverged = any_diverged || res.diverged;
            diag << "epsilon " << eps << ": steady-state RMS " << res.rms_steady_state
                 << (res.diverged ? " (diverged)" : "") << '\n';
        }

        bool monotone = true;
        for (std::size_t i = 1; i < steady.size(); ++i) {
            if (steady[i] > steady[i - 1]) monotone = false;
        }

        std::string csv = "epsilon,steady_state_rms,aggregate_rms\n";
        for (std::size_t i = 0; i < epsilons.size(); ++i) {
            csv += fmt17(epsilons[i]) + "," + fmt17(steady[i]) + "," + fmt17(aggregate[i]) +
                   "\n";
        }
        write_file_atomic(fs::path(out_dir) / "sweep.csv", csv);

        json j;
        j["epsilons"] = epsilons;
        j["steady_state_rms"] = steady;
        j["aggregate_rms"] = aggregate;
        j["monotone"] = monotone;
        write_file_atomic(fs::path(out_dir) / "sweep.json", j.dump(2) + "\n");

        diag << "epsilon sweep monotonicity: " << (monotone ? "PASS" : "FAIL") << '\n';
    } catch (const std::exception& e) {
        diag << "sweep error: " << e.what() << '\n';
        return kExitConfig;
    }
    if (any_diverged) return kExitDiverged;
    return kExitOk;
}

}  // namespace grc::cli
