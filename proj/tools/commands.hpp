#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "llsh/dataset.hpp"
#include "llsh/learned.hpp"

namespace llsh::cli {

struct GenSettings {
    std::string kind = "uniform";
    uint64_t n = 0;
    uint32_t d = 0;
    uint64_t seed = 1;
    std::string out;
    std::string format;  // empty: guess from extension
};

struct BuildSettings {
    std::string algo = "e2lsh";
    std::string data_path;
    std::string out;        // index file (e2lsh/llsh)
    std::string model_out;  // optional LLM1 dump for llsh
    std::string report_csv;

    uint32_t L = 30;
    uint32_t K = 10;
    double r = 4.0;
    uint32_t M = 2;
    uint32_t m1 = 32, m2 = 16, m3 = 8;
    uint32_t ensemble_size = 3;
    size_t leaf_size = 16;

    double lr = 3e-3;
    uint64_t batch_size = 64;
    uint64_t max_epochs = 120;
    uint64_t patience = 12;
    double holdout = 0.1;
    uint64_t seed = 1;
};

struct QuerySettings {
    std::string index_path;
    std::string query_path;
    std::string data_path;  // optional override of the recorded dataset path
    std::string out;        // empty: stdout
    size_t topk = 10;
};

struct BenchSettings {
    std::vector<std::string> algos{"e2lsh"};
    std::string data_path;  // empty: synthetic
    std::string kind = "uniform";
    uint64_t n = 10000;
    uint32_t d = 100;
    size_t num_queries = 1000;
    size_t topk = 10;
    std::vector<uint64_t> seeds{1};

    uint32_t L = 30;
    uint32_t K = 10;
    double r = 4.0;
    uint32_t M = 2;
    uint32_t m1 = 32, m2 = 16, m3 = 8;
    uint32_t ensemble_size = 3;
    size_t leaf_size = 16;

    double lr = 3e-3;
    uint64_t batch_size = 64;
    uint64_t max_epochs = 120;
    uint64_t patience = 12;
    double holdout = 0.1;

    std::string sweep_axis;  // one of L, K, M, n, d; empty for a single cell
    std::vector<uint64_t> sweep_grid;

    std::string out_csv;   // empty: stdout
    std::string out_json;  // optional JSON-lines sink
};

struct InspectSettings {
    std::string path;
};

int run_gen(const GenSettings& s);
int run_build(const BuildSettings& s);
int run_query(const QuerySettings& s);
int run_bench(const BenchSettings& s);
int run_inspect(const InspectSettings& s);

}  // namespace llsh::cli
