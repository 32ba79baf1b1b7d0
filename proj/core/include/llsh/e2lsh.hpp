#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "llsh/dataset.hpp"
#include "llsh/topk.hpp"

namespace llsh {

/// One p-stable (p=2) hash function h(v) = floor((a.v + b) / r).
struct StableHashFunction {
    std::vector<double> a;  // i.i.d. standard Gaussian, length d
    double b = 0.0;         // uniform in (0, r)
    double r = 4.0;         // segment width
};

/// k stable functions evaluated together; g(v) is a k-integer signature.
struct HashFamily {
    std::vector<StableHashFunction> functions;

    size_t k() const { return functions.size(); }
};

/// a ~ N(0,1)^d, b ~ Uniform(0,r). Deterministic for a given engine state.
StableHashFunction sample_function(uint32_t d, double r, std::mt19937_64& rng);
HashFamily sample_family(uint32_t d, uint32_t k, double r, std::mt19937_64& rng);

/// Exact floor of (a.v + b)/r evaluated in 64-bit floats; may be negative.
int64_t hash_point(const StableHashFunction& f, std::span<const float> v);
std::vector<int64_t> hash_family(const HashFamily& g, std::span<const float> v);

struct BucketHash {
    uint64_t h1 = 0;  // table slot, in [0, T)
    uint64_t h2 = 0;  // fingerprint, in [0, C)
};

/// Second-level hashing of a k-signature into (table slot, fingerprint):
///   H2 = (sum r2_i * x_i) mod C,  H1 = ((sum r1_i * x_i) mod C) mod T
/// with C = 2^32 - 5 and the non-negative residue convention for the x_i.
/// Accumulation is term-by-term modulo C; every intermediate fits in u64.
struct BucketHasher {
    static constexpr uint64_t kPrime = 4294967291ULL;  // 2^32 - 5

    std::vector<uint64_t> r1;  // k coefficients in [1, C-1]
    std::vector<uint64_t> r2;
    uint64_t table_len = 1;  // T

    BucketHash hash(std::span<const int64_t> signature) const;
};

BucketHasher sample_bucket_hasher(uint32_t k, uint64_t table_len, std::mt19937_64& rng);

/// Immutable bucket store for one table: (fingerprint, id) entries grouped by
/// H1 slot. Stored as entries sorted by (h1, h2, id) plus a slot directory.
class HashTable {
public:
    struct Triple {
        uint64_t h1;
        uint64_t h2;
        uint32_t id;
    };

    HashTable() = default;
    explicit HashTable(std::vector<Triple> triples);

    /// Ids stored at slot h1 whose fingerprint equals h2, appended to out.
    void collect(uint64_t h1, uint64_t h2, std::vector<uint32_t>& out) const;

    size_t entry_count() const { return fingerprints_.size(); }
    size_t slot_count() const { return dir_.size(); }

    /// Byte accounting: 8-byte fingerprint + 4-byte id per entry, plus
    /// 16 bytes (slot key + offset) per occupied slot in the directory.
    size_t size_bytes() const { return entry_count() * 12 + slot_count() * 16; }

    std::vector<Triple> triples() const;  // sorted

    /// Grouped encoding of the sorted triples: slot directory followed by
    /// fingerprint and id arrays. 16 bytes of counts plus size_bytes().
    void save(std::ostream& os) const;
    static HashTable load(std::istream& is);

private:
    struct Slot {
        uint64_t h1;
        uint64_t begin;  // offset into fingerprints_/ids_
    };
    std::vector<Slot> dir_;
    std::vector<uint64_t> fingerprints_;
    std::vector<uint32_t> ids_;
};

struct E2lshParams {
    uint32_t num_tables = 30;  // L
    uint32_t k = 10;
    double r = 4.0;
    uint64_t table_len = 0;  // T; 0 means "use n"
};

/// Multi-table E2LSH index over a dataset. Immutable after build; concurrent
/// read-only queries are safe.
class E2lshIndex {
public:
    E2lshIndex() = default;

    const E2lshParams& params() const { return params_; }
    uint32_t dim() const { return dim_; }
    uint64_t seed() const { return seed_; }
    const Dataset& dataset() const { return *data_; }
    std::shared_ptr<const Dataset> dataset_ptr() const { return data_; }
    const std::vector<HashFamily>& families() const { return families_; }
    const std::vector<BucketHasher>& hashers() const { return hashers_; }
    const std::vector<HashTable>& tables() const { return tables_; }

    size_t total_entries() const;

    /// Coefficient bytes (a as f64, b as f64, bucket coefficients as u64)
    /// plus table bytes per HashTable::size_bytes.
    size_t size_bytes() const;

    void save(std::ostream& os, const std::string& dataset_path) const;
    void save(const std::string& path, const std::string& dataset_path) const;

    /// The dataset path recorded at save time; load() re-reads it unless the
    /// caller overrides.
    static E2lshIndex load(std::istream& is, std::shared_ptr<const Dataset> override_data,
                           std::string* recorded_path);
    static E2lshIndex load(const std::string& path,
                           std::shared_ptr<const Dataset> override_data = nullptr);

    friend E2lshIndex build_e2lsh_index(std::shared_ptr<const Dataset> data,
                                        const E2lshParams& params, uint64_t seed);

    size_t row_for_id(uint32_t id) const { return rows_.row(id); }

private:
    E2lshParams params_;
    uint32_t dim_ = 0;
    uint64_t seed_ = 0;
    std::shared_ptr<const Dataset> data_;
    RowLookup rows_;
    std::vector<HashFamily> families_;
    std::vector<BucketHasher> hashers_;
    std::vector<HashTable> tables_;
};

/// Inserts every point into all L tables under its (H1, H2). Families and
/// bucket hashers are drawn from per-table streams derived from `seed`, so
/// the result is independent of the build schedule.
E2lshIndex build_e2lsh_index(std::shared_ptr<const Dataset> data, const E2lshParams& params,
                             uint64_t seed);

/// Candidates are the union over tables of ids stored at slot H1(q) with
/// fingerprint H2(q); exact Euclidean distances, top-k by (distance, id).
/// May return fewer than topk results.
std::vector<Neighbor> query(const E2lshIndex& idx, std::span<const float> q, size_t topk);

double euclidean_distance(std::span<const float> a, std::span<const float> b);

}  // namespace llsh
