#include <benchmark/benchmark.h>

#include <random>

#include "rolling/dataset.hpp"
#include "rolling/metrics.hpp"
#include "rolling/net.hpp"
#include "rolling/sampler.hpp"

using namespace rolling;

namespace {

NetConfig default_net() {
    NetConfig cfg;
    cfg.window = 8;
    cfg.frame_dim = 32;
    return cfg;
}

void bench_net_forward(benchmark::State& state) {
    const NetConfig cfg = default_net();
    const DenoiserNet net(cfg, 1);
    const long batch = state.range(0);
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Random(batch, cfg.input_width());
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward(inputs));
    }
    state.SetItemsProcessed(state.iterations() * batch);
}

void bench_net_backward(benchmark::State& state) {
    const NetConfig cfg = default_net();
    const DenoiserNet net(cfg, 1);
    const long batch = state.range(0);
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Random(batch, cfg.input_width());
    Eigen::MatrixXd grad_out = Eigen::MatrixXd::Random(batch, cfg.output_width());
    DenoiserNet::Cache cache;
    net.forward(inputs, &cache);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.backward(cache, grad_out));
    }
    state.SetItemsProcessed(state.iterations() * batch);
}

void bench_ancestral_step(benchmark::State& state) {
    const SnrSchedule snr;
    const double rho = 0.9;
    const DenoiserFn oracle = [rho, &snr](const Eigen::MatrixXd& z,
                                          const std::vector<double>& lts) {
        return ar1_posterior_mean(rho, lts, snr, z);
    };
    const ScheduleSpec lin{ScheduleKind::Lin, 8, 2};
    WindowState ws;
    ws.z = Eigen::MatrixXd::Random(4, 8);
    ws.local_times = local_times(lin, 0.75);
    std::mt19937_64 rng(1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ancestral_step(oracle, ws, lin, 0.75, 0.5, snr, rng));
    }
}

void bench_fsd(benchmark::State& state) {
    const long f = state.range(0);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd a(f, f), b(f, f);
    for (long i = 0; i < a.size(); ++i) {
        a(i) = gauss(rng);
        b(i) = gauss(rng);
    }
    SpectralStats sa, sb;
    sa.mean = Eigen::VectorXd::Random(f);
    sb.mean = Eigen::VectorXd::Random(f);
    sa.cov = a * a.transpose() + Eigen::MatrixXd::Identity(f, f);
    sb.cov = b * b.transpose() + Eigen::MatrixXd::Identity(f, f);
    sa.n = sb.n = 100;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fsd(sa, sb));
    }
}

void bench_dft(benchmark::State& state) {
    const Eigen::VectorXd frame = Eigen::VectorXd::Random(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(dft_magnitudes(frame));
    }
}

}  // namespace

BENCHMARK(bench_net_forward)->Arg(1)->Arg(64);
BENCHMARK(bench_net_backward)->Arg(1)->Arg(64);
BENCHMARK(bench_ancestral_step);
BENCHMARK(bench_fsd)->Arg(17)->Arg(33);
BENCHMARK(bench_dft)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
