#include <span>
#include <vector>

#include <benchmark/benchmark.h>

#include "vofde/graph.hpp"
#include "vofde/kernels.hpp"
#include "vofde/solvers.hpp"
#include "vofde/special.hpp"

using namespace vofde;

namespace {

solve::State decay(double, std::span<const double> x) { return {-x[0]}; }

void BM_L1Weights(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(frac::l1_weights(n, 0.6, 1e-3));
    }
}
BENCHMARK(BM_L1Weights)->Arg(100)->Arg(1000)->Arg(10000);

void BM_CorrectorSplitWeights(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(frac::corrector_split_weights(n, 0.6, 1e-3));
    }
}
BENCHMARK(BM_CorrectorSplitWeights)->Arg(100)->Arg(1000)->Arg(10000);

void BM_MittagLeffler(benchmark::State& state) {
    double z = -0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(frac::mittag_leffler(0.6, z));
    }
}
BENCHMARK(BM_MittagLeffler);

void BM_Solve(benchmark::State& state, solve::Scheme scheme) {
    const auto steps = static_cast<std::size_t>(state.range(0));
    const std::vector<double> x0{1.0};
    const auto order = order::OrderModel::grid(0.0, 1.0, 11, 0.7);
    const solve::SolverConfig cfg{.t0 = 0.0, .t1 = 1.0, .steps = steps, .scheme = scheme,
                                  .memory_window = std::nullopt};
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve::solve(decay, order, x0, cfg));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK_CAPTURE(BM_Solve, l1, solve::Scheme::L1)->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)->Complexity();
BENCHMARK_CAPTURE(BM_Solve, abm_p, solve::Scheme::AbmPredictor)
    ->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)->Complexity();
BENCHMARK_CAPTURE(BM_Solve, abm_pc, solve::Scheme::AbmPredictorCorrector)
    ->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)->Complexity();

void BM_SolveOnTapeWithBackward(benchmark::State& state) {
    const auto steps = static_cast<std::size_t>(state.range(0));
    auto order = order::OrderModel::state_net(1, 0.0, 1.0, {.hidden = 16});
    const solve::SolverConfig cfg{.t0 = 0.0, .t1 = 1.0, .steps = steps,
                                  .scheme = solve::Scheme::AbmPredictor,
                                  .memory_window = std::nullopt};
    for (auto _ : state) {
        ad::Tape tape;
        const auto tt = solve::solve_on_tape(
            tape, [](double, ad::Var x) { return -1.0 * x; }, order,
            tape.constant(ad::Tensor::vector({1.0})), cfg);
        tape.backward(ad::sum(tt.states.back()));
        benchmark::DoNotOptimize(tape.gradients(order.params()));
    }
}
BENCHMARK(BM_SolveOnTapeWithBackward)->Arg(20)->Arg(100);

void BM_AttentionMatrix(benchmark::State& state) {
    const auto g = graph::generate_sbm({.n = static_cast<std::size_t>(state.range(0))});
    const ad::Tensor support = graph::edge_support(g);
    const ad::Tensor y({g.n_nodes, 16}, 0.1);
    const graph::AttentionParams p{ad::Tensor({16, 16}, 0.05), ad::Tensor({16, 16}, -0.05)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(graph::attention_matrix(support, y, p));
    }
}
BENCHMARK(BM_AttentionMatrix)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
