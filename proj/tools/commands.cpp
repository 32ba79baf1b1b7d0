#include "commands.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "llsh/baselines.hpp"
#include "llsh/e2lsh.hpp"
#include "llsh/errors.hpp"
#include "llsh/metrics.hpp"
#include "llsh/rng.hpp"

namespace llsh::cli {

namespace {

Dataset load_dataset(const std::string& path) {
    std::ifstream probe(path);
    if (!probe.good()) throw DataError("dataset not found: " + path);
    return read_vectors(path, guess_file_format(path));
}

LlshConfig llsh_config_from(uint32_t L, uint32_t K, double r, uint32_t M, uint32_t m1,
                            uint32_t m2, uint32_t m3, uint32_t ensemble, double lr,
                            uint64_t batch, uint64_t epochs, uint64_t patience, double holdout,
                            uint64_t seed) {
    LlshConfig cfg;
    cfg.L = L;
    cfg.k = K;
    cfg.r = r;
    cfg.M = M;
    cfg.m1 = m1;
    cfg.m2 = m2;
    cfg.m3 = m3;
    cfg.ensemble_size = ensemble;
    cfg.train.lr = lr;
    cfg.train.batch_size = batch;
    cfg.train.max_epochs = epochs;
    cfg.train.patience = patience;
    cfg.train.holdout_fraction = holdout;
    cfg.train.seed = seed;
    return cfg;
}

void fill_llsh_fields(BenchReport& rep, const LlshConfig& cfg) {
    rep.M = cfg.M;
    rep.m1 = cfg.m1;
    rep.m2 = cfg.m2;
    rep.m3 = cfg.m3;
    rep.ensemble_size = cfg.ensemble_size;
    rep.lr = cfg.train.lr;
    rep.batch_size = cfg.train.batch_size;
    rep.max_epochs = cfg.train.max_epochs;
    rep.patience = cfg.train.patience;
}

int64_t now_minus_ns(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                                t0)
        .count();
}

}  // namespace

int run_gen(const GenSettings& s) {
    DatasetSpec spec;
    spec.kind = parse_dist_kind(s.kind);
    spec.n = static_cast<uint32_t>(s.n);
    spec.d = s.d;
    spec.seed = s.seed;
    Dataset ds = generate(spec);
    FileFormat fmt = s.format.empty() ? guess_file_format(s.out) : parse_file_format(s.format);
    write_vectors(ds, s.out, fmt);
    std::cout << "wrote " << ds.size() << "x" << ds.dim << " " << s.kind << " dataset to "
              << s.out << "\n";
    return 0;
}

int run_build(const BuildSettings& s) {
    auto data = std::make_shared<Dataset>(load_dataset(s.data_path));
    if (data->size() == 0) throw DataError("cannot index an empty dataset: " + s.data_path);

    BenchReport rep;
    rep.algorithm = s.algo;
    rep.dataset = s.data_path;
    rep.kind = "file";
    rep.n = data->size();
    rep.d = data->dim;
    rep.seed = s.seed;
    rep.L = s.L;
    rep.k = s.K;
    rep.r = s.r;
    rep.topk = 0;
    rep.num_queries = 0;

    if (s.algo == "e2lsh") {
        auto t0 = std::chrono::steady_clock::now();
        E2lshIndex idx = build_e2lsh_index(data, {.num_tables = s.L, .k = s.K, .r = s.r}, s.seed);
        rep.build_time_ns = now_minus_ns(t0);
        rep.index_bytes = idx.size_bytes();
        if (s.out.empty()) throw std::invalid_argument("build: --out is required for e2lsh");
        idx.save(s.out, s.data_path);
    } else if (s.algo == "llsh" || s.algo == "llsh-ensemble") {
        LlshConfig cfg = llsh_config_from(s.L, s.K, s.r, s.M, s.m1, s.m2, s.m3,
                                          s.algo == "llsh-ensemble" ? s.ensemble_size : 1, s.lr,
                                          s.batch_size, s.max_epochs, s.patience, s.holdout,
                                          s.seed);
        if (auto warning = cfg.validate(data->dim)) std::cerr << "warning: " << *warning << "\n";
        fill_llsh_fields(rep, cfg);
        LlshBuildResult result = build_llsh_pipeline(data, cfg);
        rep.train_time_ns = result.train_ns;
        rep.build_time_ns = result.build_ns;
        rep.fit_rate = result.model.holdout_fit;
        rep.degenerate_columns = result.model.degenerate_columns;
        rep.index_bytes = result.index.size_bytes();
        if (s.out.empty()) throw std::invalid_argument("build: --out is required for llsh");
        result.index.save(s.out, s.data_path);
        if (!s.model_out.empty()) result.model.save(s.model_out);
    } else if (s.algo == "kdtree" || s.algo == "balltree" || s.algo == "brute") {
        // trees and the brute scan are rebuilt per run; report timings only
        auto t0 = std::chrono::steady_clock::now();
        if (s.algo == "kdtree") {
            KdTree tree(data, s.leaf_size);
            rep.build_time_ns = now_minus_ns(t0);
        } else if (s.algo == "balltree") {
            BallTree tree(data, s.leaf_size);
            rep.build_time_ns = now_minus_ns(t0);
        } else {
            rep.build_time_ns = 0;
        }
    } else {
        throw std::invalid_argument("unknown algorithm: " + s.algo);
    }

    std::cout << rep.json() << "\n";
    if (!s.report_csv.empty()) {
        std::ofstream os(s.report_csv, std::ios::trunc);
        if (!os) throw DataError("cannot open " + s.report_csv + " for writing");
        os << BenchReport::csv_header() << rep.csv_row();
    }
    return 0;
}

int run_query(const QuerySettings& s) {
    if (s.topk < 1) throw std::invalid_argument("query: --topk must be >= 1");

    std::ifstream head(s.index_path, std::ios::binary);
    if (!head) throw DataError("cannot open " + s.index_path);
    char magic[4] = {0};
    head.read(magic, 4);
    if (!head) throw DataError(s.index_path + ": too short to be an index");
    head.seekg(0);

    std::shared_ptr<const Dataset> override_data;
    if (!s.data_path.empty()) {
        override_data = std::make_shared<Dataset>(load_dataset(s.data_path));
    }

    Dataset queries = load_dataset(s.query_path);

    std::ofstream file_out;
    if (!s.out.empty()) {
        file_out.open(s.out, std::ios::trunc);
        if (!file_out) throw DataError("cannot open " + s.out + " for writing");
    }
    std::ostream& out = s.out.empty() ? std::cout : file_out;

    auto emit = [&](size_t qi, const std::vector<Neighbor>& res) {
        nlohmann::json j;
        j["query"] = qi;
        auto ids = nlohmann::json::array();
        auto dists = nlohmann::json::array();
        for (const auto& n : res) {
            ids.push_back(n.id);
            dists.push_back(n.dist);
        }
        j["ids"] = std::move(ids);
        j["distances"] = std::move(dists);
        out << j.dump() << "\n";
    };

    if (std::string_view(magic, 4) == "E2LX") {
        E2lshIndex idx = E2lshIndex::load(head, override_data, nullptr);
        if (queries.size() > 0 && queries.dim != idx.dim()) {
            throw DataError("query file dimension " + std::to_string(queries.dim) +
                            " != index dimension " + std::to_string(idx.dim()));
        }
        for (size_t i = 0; i < queries.size(); ++i) emit(i, query(idx, queries.point(i), s.topk));
    } else if (std::string_view(magic, 4) == "LLIX") {
        LlshIndex idx = LlshIndex::load(head, override_data, nullptr);
        uint32_t d = static_cast<uint32_t>(idx.model().encoder.input_dim());
        if (queries.size() > 0 && queries.dim != d) {
            throw DataError("query file dimension " + std::to_string(queries.dim) +
                            " != index dimension " + std::to_string(d));
        }
        for (size_t i = 0; i < queries.size(); ++i) {
            emit(i, query_llsh(idx, queries.point(i), s.topk));
        }
    } else {
        throw DataError(s.index_path + ": not an E2LX or LLIX index");
    }
    return 0;
}

namespace {

struct BenchCell {
    Dataset indexed;   // points the index is built over, ids 0..n-1
    Dataset queries;   // held-out query points
    std::string descriptor;
    std::string kind;
    uint64_t seed = 0;
};

// Queries come from the same distribution but stay out of the index: for
// synthetic data the generator draws n + num_queries points and the tail
// becomes the query set; file datasets are split the same way.
BenchCell make_cell(const BenchSettings& s, uint64_t n, uint32_t d, uint64_t seed) {
    BenchCell cell;
    cell.seed = seed;
    if (s.data_path.empty()) {
        DatasetSpec spec;
        spec.kind = parse_dist_kind(s.kind);
        spec.n = static_cast<uint32_t>(n + s.num_queries);
        spec.d = d;
        spec.seed = seed;
        Dataset all = generate(spec);
        cell.indexed.dim = d;
        cell.indexed.values.assign(all.values.begin(), all.values.begin() + n * d);
        cell.indexed.ids.resize(n);
        for (uint64_t i = 0; i < n; ++i) cell.indexed.ids[i] = static_cast<uint32_t>(i);
        cell.queries.dim = d;
        cell.queries.values.assign(all.values.begin() + n * d, all.values.end());
        cell.queries.ids.resize(s.num_queries);
        for (size_t i = 0; i < s.num_queries; ++i) cell.queries.ids[i] = static_cast<uint32_t>(i);
        cell.descriptor = s.kind + "-n" + std::to_string(n) + "-d" + std::to_string(d) + "-seed" +
                          std::to_string(seed);
        cell.kind = s.kind;
    } else {
        Dataset all = load_dataset(s.data_path);
        if (all.size() < s.num_queries + 2) {
            throw DataError("dataset too small for " + std::to_string(s.num_queries) +
                            " held-out queries");
        }
        double fraction = static_cast<double>(s.num_queries) / static_cast<double>(all.size());
        auto [train, hold] = split(all, fraction, derive_seed(seed, 0xbe9c));
        // reassign contiguous ids so index entries stay 4-byte rows
        cell.indexed = std::move(train);
        for (size_t i = 0; i < cell.indexed.ids.size(); ++i) {
            cell.indexed.ids[i] = static_cast<uint32_t>(i);
        }
        cell.queries = std::move(hold);
        cell.descriptor = s.data_path + "-seed" + std::to_string(seed);
        cell.kind = "file";
    }
    return cell;
}

GroundTruth brute_truth(const Dataset& indexed, const Dataset& queries, size_t topk) {
    GroundTruth truth(queries.size());
    for (size_t i = 0; i < queries.size(); ++i) {
        truth[i] = brute_knn(indexed, queries.point(i), topk);
    }
    return truth;
}

// Hash the query batch the way the algorithm would during lookups:
// classical hashing loops over every function; the learned path encodes and
// runs the units batched.
int64_t e2lsh_hash_time(const E2lshIndex& idx, const Dataset& queries) {
    return time_op(
        [&] {
            int64_t sink = 0;
            for (size_t i = 0; i < queries.size(); ++i) {
                for (size_t t = 0; t < idx.families().size(); ++t) {
                    auto sig = hash_family(idx.families()[t], queries.point(i));
                    auto bh = idx.hashers()[t].hash(sig);
                    sink += static_cast<int64_t>(bh.h1);
                }
            }
            volatile int64_t keep = sink;
            (void)keep;
        },
        3);
}

int64_t llsh_hash_time(const LlshIndex& idx, const Autoencoder& ae, const Dataset& queries) {
    return time_op(
        [&] {
            Dataset codes = encode(ae, queries);
            IntMatrix pred = predict_hash_batch(idx.model(), codes);
            int64_t sink = 0;
            for (size_t i = 0; i < pred.rows; ++i) {
                for (size_t j = 0; j < idx.hashers().size(); ++j) {
                    std::span<const int64_t> sig(pred.v.data() + i * pred.cols +
                                                     j * idx.model().cfg.k,
                                                 idx.model().cfg.k);
                    auto bh = idx.hashers()[j].hash(sig);
                    sink += static_cast<int64_t>(bh.h1);
                }
            }
            volatile int64_t keep = sink;
            (void)keep;
        },
        3);
}

BenchReport bench_one(const BenchSettings& s, const std::string& algo, const BenchCell& cell,
                      const GroundTruth& truth, uint32_t L, uint32_t K, uint32_t M) {
    BenchReport rep;
    rep.algorithm = algo;
    rep.dataset = cell.descriptor;
    rep.kind = cell.kind;
    rep.n = cell.indexed.size();
    rep.d = cell.indexed.dim;
    rep.seed = cell.seed;
    rep.L = L;
    rep.k = K;
    rep.r = s.r;
    rep.topk = s.topk;
    rep.num_queries = cell.queries.size();

    auto data = std::make_shared<Dataset>(cell.indexed);
    const Dataset& queries = cell.queries;

    GroundTruth results(queries.size());
    auto timed_queries = [&](auto&& fn) {
        for (size_t i = 0; i < queries.size(); ++i) results[i] = fn(queries.point(i));
        int64_t batch_ns = time_op(
            [&] {
                for (size_t i = 0; i < queries.size(); ++i) {
                    volatile size_t keep = fn(queries.point(i)).size();
                    (void)keep;
                }
            },
            3);
        rep.mean_query_time_ns = batch_ns / static_cast<int64_t>(std::max<size_t>(queries.size(), 1));
    };

    if (algo == "brute") {
        rep.build_time_ns = 0;
        timed_queries([&](std::span<const float> q) { return brute_knn(*data, q, s.topk); });
    } else if (algo == "kdtree") {
        auto t0 = std::chrono::steady_clock::now();
        KdTree tree(data, s.leaf_size);
        rep.build_time_ns = now_minus_ns(t0);
        timed_queries([&](std::span<const float> q) { return tree.query(q, s.topk); });
    } else if (algo == "balltree") {
        auto t0 = std::chrono::steady_clock::now();
        BallTree tree(data, s.leaf_size);
        rep.build_time_ns = now_minus_ns(t0);
        timed_queries([&](std::span<const float> q) { return tree.query(q, s.topk); });
    } else if (algo == "e2lsh") {
        auto t0 = std::chrono::steady_clock::now();
        E2lshIndex idx = build_e2lsh_index(data, {.num_tables = L, .k = K, .r = s.r}, cell.seed);
        rep.build_time_ns = now_minus_ns(t0);
        rep.index_bytes = idx.size_bytes();
        timed_queries([&](std::span<const float> q) { return query(idx, q, s.topk); });
        rep.hash_time_ns = e2lsh_hash_time(idx, queries);
    } else if (algo == "llsh" || algo == "llsh-ensemble") {
        LlshConfig cfg = llsh_config_from(L, K, s.r, M, s.m1, s.m2, s.m3,
                                          algo == "llsh-ensemble" ? s.ensemble_size : 1, s.lr,
                                          s.batch_size, s.max_epochs, s.patience, s.holdout,
                                          cell.seed);
        if (auto warning = cfg.validate(data->dim)) std::cerr << "warning: " << *warning << "\n";
        fill_llsh_fields(rep, cfg);
        LlshBuildResult result = build_llsh_pipeline(data, cfg);
        rep.train_time_ns = result.train_ns;
        rep.build_time_ns = result.build_ns;
        rep.fit_rate = result.model.holdout_fit;
        rep.degenerate_columns = result.model.degenerate_columns;
        rep.index_bytes = result.index.size_bytes();
        timed_queries(
            [&](std::span<const float> q) { return query_llsh(result.index, q, s.topk); });
        rep.hash_time_ns = llsh_hash_time(result.index, result.ae, queries);
    } else {
        throw std::invalid_argument("unknown algorithm: " + algo);
    }

    rep.recall = recall_at_k(results, truth, s.topk);
    return rep;
}

}  // namespace

int run_bench(const BenchSettings& s) {
    static const std::set<std::string> kKnown{"brute", "kdtree",         "balltree",
                                              "e2lsh", "llsh",           "llsh-ensemble"};
    for (const auto& a : s.algos) {
        if (!kKnown.count(a)) throw std::invalid_argument("unknown algorithm: " + a);
    }
    if (!s.sweep_axis.empty()) {
        static const std::set<std::string> kAxes{"L", "K", "M", "n", "d"};
        if (!kAxes.count(s.sweep_axis)) {
            throw std::invalid_argument("sweep axis must be one of L, K, M, n, d");
        }
        if (s.sweep_grid.empty()) throw std::invalid_argument("sweep grid must be non-empty");
        for (uint64_t v : s.sweep_grid) {
            if (v == 0) throw std::invalid_argument("sweep grid values must be positive");
        }
        if ((s.sweep_axis == "n" || s.sweep_axis == "d") && !s.data_path.empty()) {
            throw std::invalid_argument("n/d sweeps require synthetic data");
        }
    }

    std::ofstream csv_file;
    if (!s.out_csv.empty()) {
        csv_file.open(s.out_csv, std::ios::trunc);
        if (!csv_file) throw DataError("cannot open " + s.out_csv + " for writing");
    }
    std::ostream& csv = s.out_csv.empty() ? std::cout : csv_file;
    csv << BenchReport::csv_header();
    csv.flush();

    std::ofstream json_file;
    if (!s.out_json.empty()) {
        json_file.open(s.out_json, std::ios::trunc);
        if (!json_file) throw DataError("cannot open " + s.out_json + " for writing");
    }

    std::vector<uint64_t> grid = s.sweep_grid.empty() ? std::vector<uint64_t>{0} : s.sweep_grid;
    for (uint64_t value : grid) {
        uint64_t n = s.n;
        uint32_t d = s.d;
        uint32_t L = s.L, K = s.K, M = s.M;
        if (!s.sweep_axis.empty()) {
            if (s.sweep_axis == "n") n = value;
            if (s.sweep_axis == "d") d = static_cast<uint32_t>(value);
            if (s.sweep_axis == "L") L = static_cast<uint32_t>(value);
            if (s.sweep_axis == "K") K = static_cast<uint32_t>(value);
            if (s.sweep_axis == "M") M = static_cast<uint32_t>(value);
        }
        for (uint64_t seed : s.seeds) {
            BenchCell cell = make_cell(s, n, d, seed);
            GroundTruth truth = brute_truth(cell.indexed, cell.queries, s.topk);
            for (const auto& algo : s.algos) {
                BenchReport rep = bench_one(s, algo, cell, truth, L, K, M);
                // one atomic row per cell: never leave a partial line behind
                csv << rep.csv_row();
                csv.flush();
                if (json_file.is_open()) {
                    json_file << rep.json() << "\n";
                    json_file.flush();
                }
            }
        }
    }
    return 0;
}

int run_inspect(const InspectSettings& s) {
    std::ifstream is(s.path, std::ios::binary);
    if (!is) throw DataError("cannot open " + s.path);
    char magic[4] = {0};
    is.read(magic, 4);
    if (!is) throw DataError(s.path + ": shorter than a magic number");
    is.seekg(0);
    std::string_view kind(magic, 4);

    if (kind == "LLSH") {
        Dataset ds = read_vectors(s.path, FileFormat::Llshbin);
        double mean = 0.0, var = 0.0;
        for (float v : ds.values) mean += v;
        if (!ds.values.empty()) mean /= static_cast<double>(ds.values.size());
        for (float v : ds.values) var += (v - mean) * (v - mean);
        if (!ds.values.empty()) var /= static_cast<double>(ds.values.size());
        std::cout << "type: dataset\n"
                  << "count: " << ds.size() << "\n"
                  << "dim: " << ds.dim << "\n"
                  << "mean: " << mean << "\n"
                  << "std: " << std::sqrt(var) << "\n";
    } else if (kind == "E2LX") {
        std::string recorded;
        // reuse the dataset the index references so load() can validate shapes
        E2lshIndex idx = E2lshIndex::load(is, nullptr, &recorded);
        std::cout << "type: e2lsh-index\n"
                  << "dataset: " << recorded << "\n"
                  << "n: " << idx.dataset().size() << "\n"
                  << "dim: " << idx.dim() << "\n"
                  << "L: " << idx.params().num_tables << "\n"
                  << "k: " << idx.params().k << "\n"
                  << "r: " << idx.params().r << "\n"
                  << "table_len: " << idx.params().table_len << "\n"
                  << "total_entries: " << idx.total_entries() << "\n"
                  << "index_bytes: " << idx.size_bytes() << "\n";
    } else if (kind == "LLIX") {
        std::string recorded;
        LlshIndex idx = LlshIndex::load(is, nullptr, &recorded);
        const auto& cfg = idx.model().cfg;
        std::cout << "type: llsh-index\n"
                  << "dataset: " << recorded << "\n"
                  << "n: " << idx.dataset().size() << "\n"
                  << "dim: " << idx.model().encoder.input_dim() << "\n"
                  << "L: " << cfg.L << "\n"
                  << "k: " << cfg.k << "\n"
                  << "M: " << cfg.M << "\n"
                  << "m1: " << cfg.m1 << "\nm2: " << cfg.m2 << "\nm3: " << cfg.m3 << "\n"
                  << "ensemble_size: " << cfg.ensemble_size << "\n"
                  << "total_entries: " << idx.total_entries() << "\n"
                  << "index_bytes: " << idx.size_bytes() << "\n";
    } else if (kind == "LLM1") {
        LlshModel model = LlshModel::load(is);
        std::cout << "type: llsh-model\n"
                  << "input_dim: " << model.input_dim << "\n"
                  << "L: " << model.cfg.L << "\n"
                  << "k: " << model.cfg.k << "\n"
                  << "units: " << model.units.size() << "\n"
                  << "param_bytes: " << model.param_bytes() << "\n"
                  << "degenerate_columns: " << model.degenerate_columns << "\n";
    } else if (kind == "MLP1") {
        Mlp net = Mlp::load(is);
        std::cout << "type: mlp\nlayers: " << net.layers().size() << "\n";
        for (const auto& l : net.layers()) {
            std::cout << "layer: " << l.in << " -> " << l.out << "\n";
        }
    } else {
        throw DataError(s.path + ": unrecognized magic");
    }
    return 0;
}

}  // namespace llsh::cli
