#include <benchmark/benchmark.h>

#include <sagfree/alm.hpp>
#include <sagfree/bcqp.hpp>

namespace {

using namespace sagfree;

struct BenchSystem {
    BandedSym H;
    BcqpProblem qp;
};

// Newton system of the horizontal scene at the initial parameters.
BenchSystem make_system(int n_vertices, double mu) {
    auto [config, state] = make_scene(SceneKind::Horizontal, n_vertices, 1.0);
    const RestParams rest0 = naive_rest_params(config, state);
    AlmOptions opt;
    opt.mu = mu;
    const AlmProblem prob(config, state, rest0, opt);
    const VectorXd p = prob.p0();
    const VectorXd lambda = VectorXd::Zero(config.num_active_dofs());
    BenchSystem sys{prob.hessian(p), {}};
    sys.qp.b = -prob.gradient(p, lambda);
    sys.qp.lo = prob.lower() - p;
    sys.qp.hi = prob.upper() - p;
    sys.qp.x0 = VectorXd::Zero(p.size());
    return sys;
}

void BM_Mprgp(benchmark::State& state, PrecKind prec) {
    BenchSystem sys = make_system(static_cast<int>(state.range(0)), 0.4);
    sys.qp.A = &sys.H;
    BcqpOptions opt;
    opt.preconditioner = prec;
    for (auto _ : state) {
        BcqpResult r = mprgp(sys.qp, opt);
        benchmark::DoNotOptimize(r.x);
    }
}
BENCHMARK_CAPTURE(BM_Mprgp, none, PrecKind::None)->Arg(30)->Arg(100);
BENCHMARK_CAPTURE(BM_Mprgp, diagonal, PrecKind::Diagonal)->Arg(30)->Arg(100);
BENCHMARK_CAPTURE(BM_Mprgp, asc, PrecKind::Asc)->Arg(30)->Arg(100);

} // namespace

BENCHMARK_MAIN();
