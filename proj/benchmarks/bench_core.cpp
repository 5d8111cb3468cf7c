#include <benchmark/benchmark.h>

#include <random>

#include "grc/cli.hpp"
#include "grc/control.hpp"
#include "grc/dynamics.hpp"
#include "grc/gp.hpp"
#include "grc/sim.hpp"

using namespace grc;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

gp::Regressor filled_regressor(int window) {
    gp::Hyperparams hp;
    hp.sigma_eta_sq = 1.0;
    hp.length_scales = VectorXd::Constant(6, 0.5);
    hp.sigma_omega_sq = 1e-6;
    gp::Regressor reg(hp, static_cast<std::size_t>(window));
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < window; ++i) {
        VectorXd x(6);
        for (int d = 0; d < 6; ++d) x[d] = dist(rng);
        reg.ingest(x, dist(rng));
    }
    return reg;
}

}  // namespace

static void BM_MassMatrix(benchmark::State& state) {
    const dynamics::TwoLinkArm arm(dynamics::ManipulatorParams{});
    const Vector2d q(0.3, -0.7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(arm.mass_matrix(q));
    }
}
BENCHMARK(BM_MassMatrix);

static void BM_ForwardDynamics(benchmark::State& state) {
    const dynamics::TwoLinkArm arm(dynamics::ManipulatorParams{});
    const dynamics::JointState s(Vector2d(0.3, -0.7), Vector2d(0.5, 0.2));
    const dynamics::GeneralizedForce f{Vector2d(4.0, -1.0)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(arm.forward_dynamics(s, f));
    }
}
BENCHMARK(BM_ForwardDynamics);

static void BM_PlantStep(benchmark::State& state) {
    const dynamics::TwoLinkArm arm(dynamics::ManipulatorParams{});
    dynamics::JointState s(Vector2d(0.3, -0.7), Vector2d(0.5, 0.2));
    const Vector2d u(4.0, -1.0);
    for (auto _ : state) {
        s = sim::integrate_plant(arm, s, u, nullptr, 1e-3);
        benchmark::DoNotOptimize(s.q.data());
    }
}
BENCHMARK(BM_PlantStep);

static void BM_GpPredict(benchmark::State& state) {
    const auto reg = filled_regressor(static_cast<int>(state.range(0)));
    const VectorXd query = VectorXd::Constant(6, 0.25);
    for (auto _ : state) {
        benchmark::DoNotOptimize(reg.predict(query));
    }
}
BENCHMARK(BM_GpPredict)->Arg(5)->Arg(20)->Arg(50);

static void BM_GpIngest(benchmark::State& state) {
    auto reg = filled_regressor(static_cast<int>(state.range(0)));
    const VectorXd x = VectorXd::Constant(6, 0.1);
    for (auto _ : state) {
        reg.ingest(x, 0.2);  // full window: evict + refactor
    }
}
BENCHMARK(BM_GpIngest)->Arg(20)->Arg(50);

static void BM_RobustTerm(benchmark::State& state) {
    const auto sys = control::build_error_system(
        {7.0 * MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)});
    const MatrixXd p = control::solve_lyapunov(sys.a, MatrixXd::Identity(4, 4));
    VectorXd e(4);
    e << 0.02, -0.01, 0.1, 0.05;
    for (auto _ : state) {
        benchmark::DoNotOptimize(control::robust_term(p, e, 3.0, 1e-5));
    }
}
BENCHMARK(BM_RobustTerm);

static void BM_RunRobustLearning(benchmark::State& state) {
    sim::Scenario sc = cli::make_default_scenario();
    sc.trajectory.duration = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sim::run(sc).rms_aggregate);
    }
}
BENCHMARK(BM_RunRobustLearning)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
