#include <benchmark/benchmark.h>

#include "llsh/baselines.hpp"
#include "llsh/e2lsh.hpp"

using namespace llsh;

namespace {

std::shared_ptr<Dataset> bench_data(uint32_t n, uint32_t d) {
    return std::make_shared<Dataset>(generate({DistKind::Uniform, n, d, 11}));
}

void BM_brute_query(benchmark::State& state) {
    auto data = bench_data(20000, static_cast<uint32_t>(state.range(0)));
    Dataset queries = generate({DistKind::Uniform, 64, data->dim, 12});
    size_t qi = 0;
    for (auto _ : state) {
        auto res = brute_knn(*data, queries.point(qi++ % queries.size()), 10);
        benchmark::DoNotOptimize(res.data());
    }
}
BENCHMARK(BM_brute_query)->Arg(10)->Arg(50);

void BM_kdtree_query(benchmark::State& state) {
    auto data = bench_data(20000, static_cast<uint32_t>(state.range(0)));
    KdTree tree(data);
    Dataset queries = generate({DistKind::Uniform, 64, data->dim, 12});
    size_t qi = 0;
    for (auto _ : state) {
        auto res = tree.query(queries.point(qi++ % queries.size()), 10);
        benchmark::DoNotOptimize(res.data());
    }
}
BENCHMARK(BM_kdtree_query)->Arg(10)->Arg(50);

void BM_balltree_query(benchmark::State& state) {
    auto data = bench_data(20000, static_cast<uint32_t>(state.range(0)));
    BallTree tree(data);
    Dataset queries = generate({DistKind::Uniform, 64, data->dim, 12});
    size_t qi = 0;
    for (auto _ : state) {
        auto res = tree.query(queries.point(qi++ % queries.size()), 10);
        benchmark::DoNotOptimize(res.data());
    }
}
BENCHMARK(BM_balltree_query)->Arg(10)->Arg(50);

void BM_e2lsh_query(benchmark::State& state) {
    auto data = bench_data(20000, static_cast<uint32_t>(state.range(0)));
    E2lshIndex idx = build_e2lsh_index(data, {.num_tables = 30, .k = 10, .r = 4.0}, 13);
    Dataset queries = generate({DistKind::Uniform, 64, data->dim, 12});
    size_t qi = 0;
    for (auto _ : state) {
        auto res = query(idx, queries.point(qi++ % queries.size()), 10);
        benchmark::DoNotOptimize(res.data());
    }
}
BENCHMARK(BM_e2lsh_query)->Arg(10)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
