#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "llsh/dataset.hpp"
#include "llsh/errors.hpp"
#include "temp_dir.hpp"

using namespace llsh;

namespace {

double sample_mean(const std::vector<float>& v) {
    double s = 0.0;
    for (float x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<float>& v) {
    double mean = sample_mean(v);
    double s = 0.0;
    for (float x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// KS statistic of samples against an analytic CDF.
double ks_statistic(std::vector<float> samples, double (*cdf)(double)) {
    std::sort(samples.begin(), samples.end());
    double n = static_cast<double>(samples.size());
    double worst = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        double F = cdf(samples[i]);
        worst = std::max(worst, std::abs(F - static_cast<double>(i) / n));
        worst = std::max(worst, std::abs(F - static_cast<double>(i + 1) / n));
    }
    return worst;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double uniform_cdf(double x) { return std::clamp(x, 0.0, 1.0); }
double lognormal_cdf(double x) { return x <= 0.0 ? 0.0 : normal_cdf(std::log(x)); }
double exponential_cdf(double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x); }

}  // namespace

TEST_CASE("generator matches the documented distribution moments") {
    // uniform: mean 0.5, std 0.29
    Dataset u = generate({DistKind::Uniform, 100000, 100, 42});
    CHECK(u.size() == 100000);
    CHECK(u.dim == 100);
    CHECK(std::abs(sample_mean(u.values) - 0.5) < 0.01);
    CHECK(std::abs(sample_std(u.values) - 0.29) < 0.01);

    // lognormal: mean 1.65, std 2.16
    Dataset ln = generate({DistKind::Lognormal, 100000, 100, 43});
    CHECK(std::abs(sample_mean(ln.values) - 1.65) < 0.05);
    CHECK(std::abs(sample_std(ln.values) - 2.16) < 0.05);

    // normal: mean 0, std 1; exponential: mean 1, std 1
    Dataset nm = generate({DistKind::Normal, 100000, 10, 44});
    CHECK(std::abs(sample_mean(nm.values)) < 0.01);
    CHECK(std::abs(sample_std(nm.values) - 1.0) < 0.01);
    Dataset ex = generate({DistKind::Exponential, 100000, 10, 45});
    CHECK(std::abs(sample_mean(ex.values) - 1.0) < 0.01);
    CHECK(std::abs(sample_std(ex.values) - 1.0) < 0.01);
}

TEST_CASE("generator is deterministic and ids run 0..n-1") {
    DatasetSpec spec{DistKind::Normal, 500, 20, 7};
    Dataset a = generate(spec);
    Dataset b = generate(spec);
    CHECK(a == b);
    for (uint32_t i = 0; i < 500; ++i) CHECK(a.ids[i] == i);

    Dataset c = generate({DistKind::Normal, 500, 20, 8});
    CHECK(a.values != c.values);
}

TEST_CASE("generator coordinate samples pass a KS test against the analytic CDF") {
    auto run = [](DistKind kind, double (*cdf)(double)) {
        Dataset ds = generate({kind, 100000, 1, 11});
        return ks_statistic(ds.values, cdf);
    };
    CHECK(run(DistKind::Uniform, uniform_cdf) < 0.01);
    CHECK(run(DistKind::Normal, normal_cdf) < 0.01);
    CHECK(run(DistKind::Lognormal, lognormal_cdf) < 0.01);
    CHECK(run(DistKind::Exponential, exponential_cdf) < 0.01);
}

TEST_CASE("generator rejects invalid specs") {
    CHECK_THROWS_AS(generate({DistKind::Uniform, 0, 10, 1}), std::invalid_argument);
    CHECK_THROWS_AS(generate({DistKind::Uniform, 10, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(parse_dist_kind("weibull"), std::invalid_argument);
}

TEST_CASE("llshbin roundtrip is bit-exact") {
    TempDir tmp;
    Dataset ds = generate({DistKind::Lognormal, 257, 33, 3});
    auto path = tmp.file("a.llshbin");
    write_vectors(ds, path, FileFormat::Llshbin);
    Dataset back = read_vectors(path, FileFormat::Llshbin);
    CHECK(back == ds);

    // byte determinism of the writer
    auto path2 = tmp.file("b.llshbin");
    write_vectors(ds, path2, FileFormat::Llshbin);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), {});
    std::string s2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(s1 == s2);
}

TEST_CASE("empty llshbin keeps its dimension") {
    TempDir tmp;
    Dataset empty;
    empty.dim = 100;
    auto path = tmp.file("empty.llshbin");
    write_vectors(empty, path, FileFormat::Llshbin);
    Dataset back = read_vectors(path, FileFormat::Llshbin);
    CHECK(back.size() == 0);
    CHECK(back.dim == 100);
}

TEST_CASE("llshbin rejects foreign and truncated files") {
    TempDir tmp;
    auto bad = tmp.file("bad.bin");
    {
        std::ofstream os(bad, std::ios::binary);
        os << "NOPExxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_AS(read_vectors(bad, FileFormat::Llshbin), DataError);

    Dataset ds = generate({DistKind::Uniform, 10, 4, 1});
    auto path = tmp.file("trunc.llshbin");
    write_vectors(ds, path, FileFormat::Llshbin);
    std::filesystem::resize_file(path, 40);  // cut into the payload
    try {
        read_vectors(path, FileFormat::Llshbin);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
}

TEST_CASE("csv roundtrip is exact at 17 significant digits") {
    TempDir tmp;
    Dataset ds = generate({DistKind::Normal, 64, 5, 9});
    auto path = tmp.file("a.csv");
    write_vectors(ds, path, FileFormat::Csv);
    Dataset back = read_vectors(path, FileFormat::Csv);
    CHECK(back == ds);
}

TEST_CASE("csv parse errors name the offending line") {
    TempDir tmp;
    auto path = tmp.file("ragged.csv");
    {
        std::ofstream os(path);
        os << "1.0,2.0,3.0\n1.0,2.0\n";
    }
    try {
        read_vectors(path, FileFormat::Csv);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("expected 3 fields, got 2") != std::string::npos);
    }

    auto header = tmp.file("header.csv");
    {
        std::ofstream os(header);
        os << "x,y,z\n1.0,2.0,3.0\n";
    }
    try {
        read_vectors(header, FileFormat::Csv);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }

    auto inf = tmp.file("inf.csv");
    {
        std::ofstream os(inf);
        os << "1.0,inf\n";
    }
    CHECK_THROWS_AS(read_vectors(inf, FileFormat::Csv), DataError);
}

TEST_CASE("split partitions are disjoint, exhaustive and deterministic") {
    Dataset ds = generate({DistKind::Uniform, 10, 3, 5});
    auto [train, hold] = split(ds, 0.1, 99);
    CHECK(train.size() == 9);
    CHECK(hold.size() == 1);

    std::set<uint32_t> all(train.ids.begin(), train.ids.end());
    all.insert(hold.ids.begin(), hold.ids.end());
    CHECK(all.size() == 10);
    CHECK(*all.begin() == 0);
    CHECK(*all.rbegin() == 9);

    auto [train2, hold2] = split(ds, 0.1, 99);
    CHECK(train2 == train);
    CHECK(hold2 == hold);

    auto [train3, hold3] = split(ds, 0.1, 100);
    CHECK((train3 != train || hold3 != hold));

    CHECK_THROWS_AS(split(ds, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(split(ds, 1.0, 1), std::invalid_argument);
}

TEST_CASE("split halves of a uniform dataset have balanced means") {
    Dataset ds = generate({DistKind::Uniform, 10000, 10, 12});
    auto [a, b] = split(ds, 0.5, 77);
    CHECK(a.size() == 5000);
    CHECK(b.size() == 5000);
    CHECK(std::abs(sample_mean(a.values) - 0.5) < 0.02);
    CHECK(std::abs(sample_mean(b.values) - 0.5) < 0.02);
}

TEST_CASE("split works for many fractions and seeds") {
    Dataset ds = generate({DistKind::Normal, 101, 2, 4});
    for (double f : {0.01, 0.25, 0.5, 0.75, 0.99}) {
        for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            auto [train, hold] = split(ds, f, seed);
            CHECK(train.size() + hold.size() == ds.size());
            std::set<uint32_t> ids(train.ids.begin(), train.ids.end());
            for (uint32_t id : hold.ids) CHECK(ids.insert(id).second);
            CHECK(ids.size() == ds.size());
        }
    }
}
