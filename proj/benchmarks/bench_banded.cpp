#include <benchmark/benchmark.h>

#include <random>

#include <sagfree/banded.hpp>

namespace {

using namespace sagfree;

BandedSym random_spd(int n, int hbw, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BandedSym A(n, hbw);
    for (int d = 1; d <= hbw; ++d)
        for (int j = 0; j + d < n; ++j) A.add(j + d, j, u(rng));
    for (int i = 0; i < n; ++i) A.add(i, i, 2.0 * hbw + 2.0 + u(rng));
    return A;
}

void BM_LdltFactorize(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int hbw = static_cast<int>(state.range(1));
    const BandedSym A = random_spd(n, hbw, 7);
    for (auto _ : state) {
        LdlFactor F = ldlt_factorize(A);
        benchmark::DoNotOptimize(F.diag);
    }
}
BENCHMARK(BM_LdltFactorize)->Args({112, 10})->Args({1192, 10})->Args({4000, 10});

void BM_LdltSolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const BandedSym A = random_spd(n, 10, 7);
    const LdlFactor F = ldlt_factorize(A);
    const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
    for (auto _ : state) {
        Eigen::VectorXd z = F.solve(r);
        benchmark::DoNotOptimize(z);
    }
}
BENCHMARK(BM_LdltSolve)->Arg(112)->Arg(1192)->Arg(4000);

void BM_FilteredSolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const BandedSym A = random_spd(n, 10, 7);
    const LdlFactor F = ldlt_factorize(A);
    const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
    ActiveSet a = ActiveSet::all_free(n);
    for (int i = 0; i < n; i += 5) a.flags[i] = 1;
    for (auto _ : state) {
        Eigen::VectorXd z = F.solve_filtered(r, a);
        benchmark::DoNotOptimize(z);
    }
}
BENCHMARK(BM_FilteredSolve)->Arg(112)->Arg(1192)->Arg(4000);

} // namespace
