// OpenMP kernels against their serial references on SEIR-sized problems.
#include <map>

#include <benchmark/benchmark.h>

#include "sindympc/dynamics.hpp"
#include "sindympc/features.hpp"
#include "sindympc/signals.hpp"
#include "sindympc/sysid.hpp"

namespace {

using namespace sindympc;

struct Data {
    Trajectory      traj;
    Eigen::MatrixXd xdot;
};

const Data& data(double duration) {
    static std::map<double, Data> cache;
    auto it = cache.find(duration);
    if (it == cache.end()) {
        signals::SignalSpec spec;
        spec.duration           = duration;
        const auto   u          = signals::generate(spec);
        const auto   sys        = seir_system(SeirParams{});
        Trajectory   traj       = integrate_rk4(sys, seir_default_x0(), u, spec.dt, spec.sample_count() - 1);
        Eigen::MatrixXd xdot    = exact_derivatives(sys, traj);
        it = cache.emplace(duration, Data{std::move(traj), std::move(xdot)}).first;
    }
    return it->second;
}

template <bool Parallel>
void BM_Library(benchmark::State& state) {
    const Data& d   = data(static_cast<double>(state.range(0)));
    const auto  lib = features::build_library(4, 1, 3);
    for (auto _ : state) {
        auto theta = Parallel ? features::evaluate(lib, d.traj.states(), d.traj.inputs())
                              : features::evaluate_serial(lib, d.traj.states(), d.traj.inputs());
        benchmark::DoNotOptimize(theta.data());
    }
    state.SetItemsProcessed(state.iterations() * d.traj.rows());
}

template <bool Parallel>
void BM_Stls(benchmark::State& state) {
    const Data& d     = data(static_cast<double>(state.range(0)));
    const auto  lib   = features::build_library(4, 1, 3);
    const auto  theta = features::evaluate_serial(lib, d.traj.states(), d.traj.inputs());
    for (auto _ : state) {
        auto fit = Parallel ? sysid::stls(theta, d.xdot, 0.1) : sysid::stls_serial(theta, d.xdot, 0.1);
        benchmark::DoNotOptimize(fit.xi.data());
    }
}

} // namespace

BENCHMARK(BM_Library<true>)->Name("library/openmp")->Arg(100)->Arg(1000)->Arg(10000);
BENCHMARK(BM_Library<false>)->Name("library/serial")->Arg(100)->Arg(1000)->Arg(10000);
BENCHMARK(BM_Stls<true>)->Name("stls/openmp")->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Stls<false>)->Name("stls/serial")->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
