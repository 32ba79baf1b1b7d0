#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "llsh/e2lsh.hpp"
#include "llsh/learned.hpp"
#include "llsh/metrics.hpp"
#include "llsh/rng.hpp"

using namespace llsh;

TEST_CASE("fitting_rate counts exact integer matches") {
    IntMatrix a(2, 3), b(2, 3);
    a.v = {1, 2, 3, 4, 5, 6};
    b.v = a.v;
    CHECK(fitting_rate(a, b) == 1.0);

    for (auto& v : b.v) v += 1;
    CHECK(fitting_rate(a, b) == 0.0);

    b.v = {1, 2, 3, 0, 0, 0};  // half match
    CHECK(fitting_rate(a, b) == 0.5);

    IntMatrix c(3, 2);
    CHECK_THROWS_AS(fitting_rate(a, c), std::invalid_argument);
}

TEST_CASE("recall_at_k basics") {
    GroundTruth truth{{{1, 0.1}, {2, 0.2}, {3, 0.3}, {4, 0.4}}};
    CHECK(recall_at_k(truth, truth, 4) == 1.0);

    GroundTruth empty{{}};
    CHECK(recall_at_k(empty, truth, 4) == 0.0);

    GroundTruth half{{{1, 0.1}, {2, 0.2}, {8, 0.25}, {9, 0.33}}};
    CHECK(recall_at_k(half, truth, 4) == 0.5);

    CHECK_THROWS_AS(recall_at_k(truth, truth, 5), std::invalid_argument);
}

TEST_CASE("fitting_rate is invariant to consistent row reordering") {
    IntMatrix a(3, 2), b(3, 2);
    a.v = {1, 2, 3, 4, 5, 6};
    b.v = {1, 0, 3, 4, 0, 6};
    double forward = fitting_rate(a, b);

    IntMatrix ar(3, 2), br(3, 2);
    for (size_t r = 0; r < 3; ++r) {
        for (size_t c = 0; c < 2; ++c) {
            ar.at(r, c) = a.at(2 - r, c);
            br.at(r, c) = b.at(2 - r, c);
        }
    }
    CHECK(fitting_rate(ar, br) == forward);
}

TEST_CASE("recall_at_k is invariant to consistent query reordering") {
    GroundTruth truth{{{1, 0.1}, {2, 0.2}}, {{7, 0.3}, {8, 0.4}}};
    GroundTruth res{{{1, 0.1}, {9, 0.9}}, {{7, 0.3}, {8, 0.4}}};
    double forward = recall_at_k(res, truth, 2);

    GroundTruth truth_r{truth[1], truth[0]};
    GroundTruth res_r{res[1], res[0]};
    CHECK(recall_at_k(res_r, truth_r, 2) == forward);
}

TEST_CASE("collision_prob matches independently derived values") {
    // closed form for the Gaussian case:
    // p(c) = 2*Phi(r/c) - 1 - 2c/(sqrt(2pi) r) (1 - exp(-r^2/(2c^2)))
    CHECK(collision_prob(0.5, 4.0, 2) == doctest::Approx(0.900264429900).epsilon(1e-6));
    CHECK(collision_prob(1.0, 4.0, 2) == doctest::Approx(0.800532432428).epsilon(1e-6));
    CHECK(collision_prob(2.0, 4.0, 2) == doctest::Approx(0.609548422215).epsilon(1e-6));
    CHECK(collision_prob(4.0, 4.0, 2) == doctest::Approx(0.368746380373).epsilon(1e-6));
    CHECK(collision_prob(8.0, 4.0, 2) == doctest::Approx(0.195417107999).epsilon(1e-6));

    CHECK(collision_prob(0.5, 4.0, 1) == doctest::Approx(0.754739559583).epsilon(1e-6));
    CHECK(collision_prob(1.0, 4.0, 1) == doctest::Approx(0.618581784975).epsilon(1e-6));
    CHECK(collision_prob(2.0, 4.0, 1) == doctest::Approx(0.448682765336).epsilon(1e-6));
    CHECK(collision_prob(4.0, 4.0, 1) == doctest::Approx(0.279364399847).epsilon(1e-6));
    CHECK(collision_prob(8.0, 4.0, 1) == doctest::Approx(0.153109638458).epsilon(1e-6));
}

TEST_CASE("collision_prob agrees with a Monte-Carlo oracle") {
    // collision prob = E_g[max(0, 1 - |c g| / r)] for g ~ N(0,1)
    auto rng = make_engine(777);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const size_t n = 1000000;
    std::vector<double> gs(n);
    for (auto& g : gs) g = gauss(rng);

    for (double c : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        double acc = 0.0;
        for (double g : gs) acc += std::max(0.0, 1.0 - std::abs(c * g) / 4.0);
        double mc = acc / static_cast<double>(n);
        CAPTURE(c);
        CHECK(std::abs(collision_prob(c, 4.0, 2) - mc) < 0.005);
    }
}

TEST_CASE("collision_prob limits and monotonicity") {
    CHECK(collision_prob(1e-6, 4.0, 2) >= 0.999);
    double at_r = collision_prob(4.0, 4.0, 2);
    double at_4r = collision_prob(16.0, 4.0, 2);
    CHECK(at_4r < 0.35);
    CHECK(at_4r < at_r);

    for (int p : {1, 2}) {
        double prev = 1.1;
        for (int i = 1; i <= 50; ++i) {
            double c = 0.2 * i;
            double v = collision_prob(c, 4.0, p);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(v <= prev);
            prev = v;
        }
    }

    CHECK_THROWS_AS(collision_prob(0.0, 4.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(collision_prob(1.0, 0.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(collision_prob(1.0, 4.0, 3), std::invalid_argument);
}

TEST_CASE("time_op reports a sane median and honors the repetition count") {
    CHECK(time_op([] {}) >= 0);

    std::atomic<int> calls{0};
    time_op([&] { calls++; }, 7);
    CHECK(calls.load() == 8);  // warmup + reps

    int64_t ns = time_op([] { std::this_thread::sleep_for(std::chrono::milliseconds(20)); }, 5);
    CHECK(ns > 10'000'000);
    CHECK(ns < 200'000'000);

    CHECK_THROWS_AS(time_op([] {}, 0), std::invalid_argument);
}

TEST_CASE("e2lsh size accounting separates coefficients from tables") {
    auto data = std::make_shared<Dataset>(generate({DistKind::Uniform, 2, 100, 1}));
    E2lshIndex idx = build_e2lsh_index(data, {.num_tables = 30, .k = 10, .r = 4.0}, 5);

    size_t tables = 0;
    for (const auto& t : idx.tables()) tables += t.size_bytes();
    size_t coeff = idx.size_bytes() - tables;
    // a: d*k*L*8 = 240000, b: k*L*8 = 2400, bucket coefficients: 2*k*L*8 = 4800
    CHECK(coeff == 240000 + 2400 + 4800);
}

TEST_CASE("llsh model parameter bytes undercut classical coefficients at f32") {
    LlshConfig cfg;  // defaults, d = 100
    LlshModel model;
    model.cfg = cfg;
    model.encoder = Mlp::glorot({100, cfg.m1, cfg.m2}, 1);
    for (uint32_t j = 0; j < cfg.L; ++j) {
        model.units.push_back(Mlp::glorot({cfg.m2, cfg.m3, cfg.k}, j));
    }
    model.label_mean.assign(cfg.L * cfg.k, 0.0);
    model.label_std.assign(cfg.L * cfg.k, 1.0);

    size_t classical_f32 = (100ull * cfg.k * cfg.L + cfg.k * cfg.L) * 4;  // a and b at f32
    CHECK(model.param_bytes() < classical_f32);
}

TEST_CASE("serialized blob length equals the accounted size plus documented overhead") {
    auto data = std::make_shared<Dataset>(generate({DistKind::Uniform, 300, 12, 3}));
    E2lshParams params{.num_tables = 5, .k = 4, .r = 4.0};
    E2lshIndex idx = build_e2lsh_index(data, params, 17);

    std::ostringstream blob;
    std::string dataset_path = "some/data.llshbin";
    idx.save(blob, dataset_path);

    // fixed header: magic 4 + version 2 + L 4 + k 4 + r 8 + T 8 + d 4 +
    // seed 8 + n 8 + path length prefix 4 = 54; per table: 16 bytes of counts
    size_t overhead = 54 + dataset_path.size() + params.num_tables * 16;
    CHECK(blob.str().size() == idx.size_bytes() + overhead);
}

TEST_CASE("empty tables cost only their directory bytes") {
    HashTable t(std::vector<HashTable::Triple>{});
    CHECK(t.entry_count() == 0);
    CHECK(t.slot_count() == 0);
    CHECK(t.size_bytes() == 0);
}

TEST_CASE("bench report CSV and JSON carry identical fields") {
    BenchReport rep;
    rep.algorithm = "e2lsh";
    rep.dataset = "uniform-n100-d10-seed1";
    rep.kind = "uniform";
    rep.n = 100;
    rep.d = 10;
    rep.seed = 1;
    rep.L = 30;
    rep.k = 10;
    rep.r = 4.0;
    rep.topk = 10;
    rep.num_queries = 50;
    rep.recall = 0.93;
    rep.build_time_ns = 123456;
    rep.index_bytes = 999;

    std::string header = BenchReport::csv_header();
    CHECK(header.rfind("# llsh-bench-csv v1", 0) == 0);
    size_t columns = std::count(header.begin(), header.end(), ',');

    std::string row = rep.csv_row();
    CHECK(std::count(row.begin(), row.end(), ',') == columns);
    CHECK(row.find("e2lsh") == 0);
    CHECK(row.find("0.93") != std::string::npos);

    auto j = rep.json();
    CHECK(j.find("\"recall\":0.93") != std::string::npos);
    CHECK(j.find("\"fitting_rate\":null") != std::string::npos);
    CHECK(j.find("\"mean_query_time_ns\":null") != std::string::npos);
}
