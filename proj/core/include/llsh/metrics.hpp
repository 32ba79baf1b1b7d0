#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "llsh/topk.hpp"

namespace llsh {

/// Row-major integer matrix used for hash labels and predictions.
struct IntMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<int64_t> v;

    IntMatrix() = default;
    IntMatrix(size_t r, size_t c) : rows(r), cols(c), v(r * c, 0) {}

    int64_t& at(size_t r, size_t c) { return v[r * cols + c]; }
    int64_t at(size_t r, size_t c) const { return v[r * cols + c]; }
};

/// Fraction of exactly equal integer entries (the correct-fit rate).
/// Both matrices must have the same shape.
double fitting_rate(const IntMatrix& pred, const IntMatrix& labels);

/// Exact top-k answers per query, ascending by (distance, id).
using GroundTruth = std::vector<std::vector<Neighbor>>;

/// |returned ids intersect true top-k ids| / k, averaged over queries.
/// Results with fewer than k entries simply score the ids they did return.
double recall_at_k(const GroundTruth& results, const GroundTruth& truth, size_t k);

/// Collision probability of one p-stable hash function for two points at
/// distance c with segment width r:
///
///   p(c) = integral over t in [0, r] of (1/c) f_p(t/c) (1 - t/r) dt
///
/// where f_p is the density of the absolute value of the p-stable
/// distribution (p=2 Gaussian, p=1 Cauchy) and the 1/c factor makes the
/// integrand the density of |c X|. Evaluated by adaptive Simpson on [0, r]
/// to absolute tolerance 1e-9.
double collision_prob(double c, double r, int p = 2);

/// Monotonic wall time of thunk() in nanoseconds: one warmup call, then the
/// median of `reps` timed calls.
int64_t time_op(const std::function<void()>& thunk, size_t reps = 5);

/// One (algorithm, dataset, config) measurement cell. Optional fields are
/// written as empty CSV cells / JSON nulls when a metric does not apply.
struct BenchReport {
    std::string algorithm;
    std::string dataset;  // path or synthetic descriptor
    std::string kind;     // distribution name for synthetic data, else "file"
    uint64_t n = 0;
    uint32_t d = 0;
    uint64_t seed = 0;

    uint32_t L = 0;
    uint32_t k = 0;
    double r = 0.0;
    uint32_t M = 0;
    uint32_t m1 = 0, m2 = 0, m3 = 0;
    uint32_t ensemble_size = 1;

    size_t topk = 0;
    size_t num_queries = 0;

    std::optional<double> recall;
    std::optional<double> fit_rate;
    std::optional<int64_t> build_time_ns;
    std::optional<int64_t> train_time_ns;
    std::optional<int64_t> mean_query_time_ns;
    std::optional<int64_t> hash_time_ns;  // hashing the query batch only
    std::optional<uint64_t> index_bytes;

    double lr = 0.0;
    uint64_t batch_size = 0;
    uint64_t max_epochs = 0;
    uint64_t patience = 0;
    uint32_t degenerate_columns = 0;

    /// Version comment line ("# ...") followed by the column-name row.
    static std::string csv_header();
    std::string csv_row() const;
    std::string json() const;
};

}  // namespace llsh
