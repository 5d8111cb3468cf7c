#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "grc/sim.hpp"

namespace grc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;

// Benchmark grid: every (level, trajectory, variant) cell runs the base
// scenario with those three fields substituted, under the base seed.
struct BenchmarkMatrix {
    sim::Scenario base;
    std::vector<double> levels;  // mass-error fractions
    std::vector<sim::TrajectorySpec> battery;
    std::vector<sim::ControllerVariant> variants;
};

struct CellResult {
    std::size_t level, traj, variant;
    double rms_aggregate = 0.0;
    double rms_steady_state = 0.0;
    bool diverged = false;
};

// level x variant table of battery-averaged aggregate RMS. A cell with any
// diverged run is flagged instead of averaged.
struct BenchmarkTable {
    std::vector<double> levels;
    std::vector<sim::ControllerVariant> variants;
    Eigen::MatrixXd values;           // levels x variants
    std::vector<std::vector<bool>> cell_diverged;
};

std::string variant_name(sim::ControllerVariant v);
sim::ControllerVariant variant_from_name(const std::string& name);

sim::Scenario make_default_scenario();
BenchmarkMatrix make_default_matrix();

std::string scenario_to_json_text(const sim::Scenario& sc);
sim::Scenario scenario_from_json_text(const std::string& text);  // ConfigError names the field
std::string matrix_to_json_text(const BenchmarkMatrix& m);
BenchmarkMatrix matrix_from_json_text(const std::string& text);

// FNV-1a over the canonical scenario serialisation (seed included).
std::string scenario_hash(const sim::Scenario& sc);

std::string summary_json_text(const sim::Scenario& sc, const sim::SimResult& res);

// Runs every cell, jobs at a time (jobs <= 0 picks the hardware count).
// Deterministic regardless of the parallelism.
std::vector<CellResult> run_matrix(const BenchmarkMatrix& m, int jobs);

BenchmarkTable build_table(const BenchmarkMatrix& m, const std::vector<CellResult>& cells);

// 1 - robust/nominal
double improvement_fraction(double nominal_rms, double robust_rms);

std::string table_to_csv(const BenchmarkTable& t);
void print_table(const BenchmarkTable& t, std::ostream& os);

// Subcommand bodies. Artifacts are written atomically under out_dir;
// diagnostics go to diag. Return value is the process exit code.
int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, std::ostream& diag);
int cmd_benchmark(const std::optional<std::string>& matrix_path, const std::string& out_dir,
                  int jobs, std::optional<std::uint64_t> seed_override, std::ostream& diag);
int cmd_sweep_epsilon(const std::string& config_path, const std::vector<double>& epsilons,
                      const std::string& out_dir, std::optional<std::uint64_t> seed_override,
                      std::ostream& diag);

}  // namespace grc::cli
