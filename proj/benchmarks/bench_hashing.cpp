#include <benchmark/benchmark.h>

#include "llsh/e2lsh.hpp"
#include "llsh/learned.hpp"
#include "llsh/rng.hpp"

using namespace llsh;

namespace {

// Classical hashing: k*L projections per point, looped per function.
void BM_e2lsh_hash(benchmark::State& state) {
    const auto d = static_cast<uint32_t>(state.range(0));
    Dataset ds = generate({DistKind::Uniform, 256, d, 1});
    auto rng = make_engine(2);
    std::vector<HashFamily> families;
    for (int t = 0; t < 30; ++t) families.push_back(sample_family(d, 10, 4.0, rng));

    for (auto _ : state) {
        int64_t sink = 0;
        for (size_t i = 0; i < ds.size(); ++i) {
            for (const auto& fam : families) {
                auto sig = hash_family(fam, ds.point(i));
                sink += sig[0];
            }
        }
        benchmark::DoNotOptimize(sink);
    }
    state.SetItemsProcessed(state.iterations() * ds.size());
}
BENCHMARK(BM_e2lsh_hash)->Arg(50)->Arg(100)->Arg(200)->Arg(500);

// Learned hashing: one encoder pass plus 30 small units, batched.
void BM_llsh_hash(benchmark::State& state) {
    const auto d = static_cast<uint32_t>(state.range(0));
    Dataset ds = generate({DistKind::Uniform, 256, d, 1});

    LlshConfig cfg;
    LlshModel model;
    model.cfg = cfg;
    model.input_dim = d;
    model.encoder = Mlp::glorot({d, cfg.m1, cfg.m2}, 3);
    for (uint32_t j = 0; j < cfg.L; ++j) {
        model.units.push_back(Mlp::glorot({cfg.m2, cfg.m3, cfg.k}, 100 + j));
    }
    model.label_mean.assign(static_cast<size_t>(cfg.L) * cfg.k, 0.0);
    model.label_std.assign(static_cast<size_t>(cfg.L) * cfg.k, 1.0);
    Autoencoder ae;
    ae.encoder = model.encoder;

    for (auto _ : state) {
        Dataset codes = encode(ae, ds);
        IntMatrix pred = predict_hash_batch(model, codes);
        benchmark::DoNotOptimize(pred.v.data());
    }
    state.SetItemsProcessed(state.iterations() * ds.size());
}
BENCHMARK(BM_llsh_hash)->Arg(50)->Arg(100)->Arg(200)->Arg(500);

void BM_bucket_hash(benchmark::State& state) {
    auto rng = make_engine(5);
    BucketHasher h = sample_bucket_hasher(10, 100000, rng);
    std::vector<int64_t> sig{3, -1, 4, -1, 5, -9, 2, 6, -5, 3};
    for (auto _ : state) {
        auto bh = h.hash(sig);
        benchmark::DoNotOptimize(bh);
    }
}
BENCHMARK(BM_bucket_hash);

}  // namespace
