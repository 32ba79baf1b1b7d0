#include "llsh/e2lsh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "llsh/binio.hpp"
#include "llsh/errors.hpp"
#include "llsh/parallel.hpp"
#include "llsh/rng.hpp"

namespace llsh {

StableHashFunction sample_function(uint32_t d, double r, std::mt19937_64& rng) {
    if (d < 1) throw std::invalid_argument("sample_function: d must be >= 1");
    if (!(r > 0.0)) throw std::invalid_argument("sample_function: r must be positive");
    StableHashFunction f;
    f.r = r;
    f.a.resize(d);
    std::normal_distribution<double> gaussian(0.0, 1.0);
    for (auto& coeff : f.a) coeff = gaussian(rng);
    std::uniform_real_distribution<double> uniform(0.0, r);
    do {
        f.b = uniform(rng);
    } while (f.b == 0.0);  // b lies in the open interval (0, r)
    return f;
}

HashFamily sample_family(uint32_t d, uint32_t k, double r, std::mt19937_64& rng) {
    HashFamily g;
    g.functions.reserve(k);
    for (uint32_t i = 0; i < k; ++i) g.functions.push_back(sample_function(d, r, rng));
    return g;
}

int64_t hash_point(const StableHashFunction& f, std::span<const float> v) {
    if (v.size() != f.a.size()) {
        throw std::invalid_argument("hash_point: vector dimension " + std::to_string(v.size()) +
                                    " != function dimension " + std::to_string(f.a.size()));
    }
    double dot = 0.0;
    for (size_t i = 0; i < v.size(); ++i) dot += f.a[i] * static_cast<double>(v[i]);
    return static_cast<int64_t>(std::floor((dot + f.b) / f.r));
}

std::vector<int64_t> hash_family(const HashFamily& g, std::span<const float> v) {
    std::vector<int64_t> signature(g.k());
    for (size_t i = 0; i < g.k(); ++i) signature[i] = hash_point(g.functions[i], v);
    return signature;
}

BucketHash BucketHasher::hash(std::span<const int64_t> signature) const {
    if (signature.size() != r1.size()) {
        throw std::invalid_argument("bucket hash: signature length mismatch");
    }
    uint64_t acc1 = 0;
    uint64_t acc2 = 0;
    for (size_t i = 0; i < signature.size(); ++i) {
        int64_t rem = signature[i] % static_cast<int64_t>(kPrime);
        if (rem < 0) rem += static_cast<int64_t>(kPrime);
        auto x = static_cast<uint64_t>(rem);
        // r_i, x < C = 2^32-5, so r_i * x < 2^64.
        acc1 = (acc1 + r1[i] * x % kPrime) % kPrime;
        acc2 = (acc2 + r2[i] * x % kPrime) % kPrime;
    }
    return {acc1 % table_len, acc2};
}

BucketHasher sample_bucket_hasher(uint32_t k, uint64_t table_len, std::mt19937_64& rng) {
    if (table_len < 1) throw std::invalid_argument("bucket hasher: table length must be >= 1");
    BucketHasher h;
    h.table_len = table_len;
    h.r1.resize(k);
    h.r2.resize(k);
    std::uniform_int_distribution<uint64_t> coeff(1, BucketHasher::kPrime - 1);
    for (auto& c : h.r1) c = coeff(rng);
    for (auto& c : h.r2) c = coeff(rng);
    return h;
}

HashTable::HashTable(std::vector<Triple> triples) {
    std::sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
        if (a.h1 != b.h1) return a.h1 < b.h1;
        if (a.h2 != b.h2) return a.h2 < b.h2;
        return a.id < b.id;
    });
    fingerprints_.reserve(triples.size());
    ids_.reserve(triples.size());
    for (size_t i = 0; i < triples.size(); ++i) {
        if (i == 0 || triples[i].h1 != triples[i - 1].h1) {
            dir_.push_back({triples[i].h1, i});
        }
        fingerprints_.push_back(triples[i].h2);
        ids_.push_back(triples[i].id);
    }
}

void HashTable::collect(uint64_t h1, uint64_t h2, std::vector<uint32_t>& out) const {
    auto it = std::lower_bound(dir_.begin(), dir_.end(), h1,
                               [](const Slot& s, uint64_t key) { return s.h1 < key; });
    if (it == dir_.end() || it->h1 != h1) return;
    size_t begin = it->begin;
    size_t end = (it + 1 == dir_.end()) ? fingerprints_.size() : (it + 1)->begin;
    for (size_t i = begin; i < end; ++i) {
        if (fingerprints_[i] == h2) out.push_back(ids_[i]);
    }
}

std::vector<HashTable::Triple> HashTable::triples() const {
    std::vector<Triple> out;
    out.reserve(fingerprints_.size());
    for (size_t s = 0; s < dir_.size(); ++s) {
        size_t end = (s + 1 == dir_.size()) ? fingerprints_.size() : dir_[s + 1].begin;
        for (size_t i = dir_[s].begin; i < end; ++i) {
            out.push_back({dir_[s].h1, fingerprints_[i], ids_[i]});
        }
    }
    return out;
}

void HashTable::save(std::ostream& os) const {
    binio::write_raw<uint64_t>(os, dir_.size());
    binio::write_raw<uint64_t>(os, fingerprints_.size());
    for (const auto& s : dir_) {
        binio::write_raw<uint64_t>(os, s.h1);
        binio::write_raw<uint64_t>(os, s.begin);
    }
    binio::write_array(os, fingerprints_);
    binio::write_array(os, ids_);
}

HashTable HashTable::load(std::istream& is) {
    auto slots = binio::read_raw<uint64_t>(is, "table slot count");
    auto entries = binio::read_raw<uint64_t>(is, "table entry count");
    HashTable t;
    t.dir_.resize(slots);
    for (auto& s : t.dir_) {
        s.h1 = binio::read_raw<uint64_t>(is, "slot h1");
        s.begin = binio::read_raw<uint64_t>(is, "slot offset");
    }
    binio::read_array(is, t.fingerprints_, entries, "fingerprints");
    binio::read_array(is, t.ids_, entries, "entry ids");
    for (size_t s = 0; s + 1 < t.dir_.size(); ++s) {
        if (t.dir_[s].begin > t.dir_[s + 1].begin || t.dir_[s].h1 >= t.dir_[s + 1].h1) {
            throw DataError("hash table: corrupt slot directory");
        }
    }
    if (!t.dir_.empty() && t.dir_.back().begin > entries) {
        throw DataError("hash table: corrupt slot directory");
    }
    return t;
}

E2lshIndex build_e2lsh_index(std::shared_ptr<const Dataset> data, const E2lshParams& params,
                             uint64_t seed) {
    if (!data || data->size() < 1) {
        throw std::invalid_argument("e2lsh build: dataset must contain at least one point");
    }
    if (params.num_tables < 1 || params.k < 1) {
        throw std::invalid_argument("e2lsh build: L and k must be >= 1");
    }
    if (!(params.r > 0.0)) throw std::invalid_argument("e2lsh build: r must be positive");

    E2lshIndex idx;
    idx.params_ = params;
    if (idx.params_.table_len == 0) idx.params_.table_len = data->size();
    idx.dim_ = data->dim;
    idx.seed_ = seed;
    idx.data_ = std::move(data);
    idx.rows_ = RowLookup(*idx.data_);
    idx.families_.resize(params.num_tables);
    idx.hashers_.resize(params.num_tables);
    idx.tables_.resize(params.num_tables);

    const Dataset& ds = *idx.data_;
    parallel_for(params.num_tables, [&](size_t t) {
        auto rng = make_engine(derive_seed(seed, t));
        idx.families_[t] = sample_family(ds.dim, params.k, params.r, rng);
        idx.hashers_[t] = sample_bucket_hasher(params.k, idx.params_.table_len, rng);

        std::vector<HashTable::Triple> triples;
        triples.reserve(ds.size());
        for (size_t i = 0; i < ds.size(); ++i) {
            auto sig = hash_family(idx.families_[t], ds.point(i));
            auto bh = idx.hashers_[t].hash(sig);
            triples.push_back({bh.h1, bh.h2, ds.ids[i]});
        }
        idx.tables_[t] = HashTable(std::move(triples));
    });
    return idx;
}

double euclidean_distance(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += diff * diff;
    }
    return std::sqrt(s);
}

std::vector<Neighbor> query(const E2lshIndex& idx, std::span<const float> q, size_t topk) {
    if (q.size() != idx.dim()) {
        throw std::invalid_argument("query: vector dimension mismatch");
    }
    const Dataset& ds = idx.dataset();

    std::vector<uint32_t> candidates;
    for (size_t t = 0; t < idx.tables().size(); ++t) {
        auto sig = hash_family(idx.families()[t], q);
        auto bh = idx.hashers()[t].hash(sig);
        idx.tables()[t].collect(bh.h1, bh.h2, candidates);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    TopK best(topk);
    for (uint32_t id : candidates) {
        size_t row = idx.row_for_id(id);
        if (row == RowLookup::npos) continue;
        best.push(id, euclidean_distance(q, ds.point(row)));
    }
    return best.take_sorted();
}

namespace {
constexpr char kIndexMagic[4] = {'E', '2', 'L', 'X'};
constexpr uint16_t kIndexVersion = 1;
}  // namespace

size_t E2lshIndex::total_entries() const {
    size_t total = 0;
    for (const auto& t : tables_) total += t.entry_count();
    return total;
}

size_t E2lshIndex::size_bytes() const {
    size_t coeff = 0;
    for (const auto& fam : families_) {
        for (const auto& f : fam.functions) coeff += f.a.size() * 8 + 8;  // a (f64) + b
    }
    for (const auto& h : hashers_) coeff += (h.r1.size() + h.r2.size()) * 8;
    size_t tables = 0;
    for (const auto& t : tables_) tables += t.size_bytes();
    return coeff + tables;
}

void E2lshIndex::save(std::ostream& os, const std::string& dataset_path) const {
    binio::write_magic(os, kIndexMagic);
    binio::write_raw<uint16_t>(os, kIndexVersion);
    binio::write_raw<uint32_t>(os, params_.num_tables);
    binio::write_raw<uint32_t>(os, params_.k);
    binio::write_raw<double>(os, params_.r);
    binio::write_raw<uint64_t>(os, params_.table_len);
    binio::write_raw<uint32_t>(os, dim_);
    binio::write_raw<uint64_t>(os, seed_);
    binio::write_raw<uint64_t>(os, data_ ? data_->size() : 0);
    binio::write_string(os, dataset_path);

    for (const auto& fam : families_) {
        for (const auto& f : fam.functions) {
            binio::write_array(os, f.a);
            binio::write_raw<double>(os, f.b);
        }
    }
    for (const auto& h : hashers_) {
        binio::write_array(os, h.r1);
        binio::write_array(os, h.r2);
    }
    for (const auto& t : tables_) t.save(os);
}

void E2lshIndex::save(const std::string& path, const std::string& dataset_path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open " + path + " for writing");
    save(os, dataset_path);
    if (!os) throw DataError("write failed: " + path);
}

E2lshIndex E2lshIndex::load(std::istream& is, std::shared_ptr<const Dataset> override_data,
                            std::string* recorded_path) {
    binio::expect_magic(is, kIndexMagic, "E2LX");
    auto version = binio::read_raw<uint16_t>(is, "index version");
    if (version != kIndexVersion) {
        throw DataError("unsupported E2LX version " + std::to_string(version));
    }
    E2lshParams params;
    params.num_tables = binio::read_raw<uint32_t>(is, "L");
    params.k = binio::read_raw<uint32_t>(is, "k");
    params.r = binio::read_raw<double>(is, "r");
    params.table_len = binio::read_raw<uint64_t>(is, "T");
    auto dim = binio::read_raw<uint32_t>(is, "dim");
    auto seed = binio::read_raw<uint64_t>(is, "seed");
    auto count = binio::read_raw<uint64_t>(is, "count");
    auto dataset_path = binio::read_string(is, "dataset path");
    if (recorded_path) *recorded_path = dataset_path;

    std::shared_ptr<const Dataset> data = std::move(override_data);
    if (!data) {
        auto loaded = std::make_shared<Dataset>(
            read_vectors(dataset_path, guess_file_format(dataset_path)));
        data = loaded;
    }
    if (data->dim != dim || data->size() != count) {
        throw DataError("E2LX: dataset has shape " + std::to_string(data->size()) + "x" +
                        std::to_string(data->dim) + ", index expects " + std::to_string(count) +
                        "x" + std::to_string(dim));
    }

    E2lshIndex idx;
    idx.params_ = params;
    idx.dim_ = dim;
    idx.seed_ = seed;
    idx.data_ = std::move(data);
    idx.rows_ = RowLookup(*idx.data_);
    idx.families_.resize(params.num_tables);
    idx.hashers_.resize(params.num_tables);
    idx.tables_.resize(params.num_tables);
    for (auto& fam : idx.families_) {
        fam.functions.resize(params.k);
        for (auto& f : fam.functions) {
            f.r = params.r;
            binio::read_array(is, f.a, dim, "projection coefficients");
            f.b = binio::read_raw<double>(is, "offset b");
        }
    }
    for (auto& h : idx.hashers_) {
        h.table_len = params.table_len;
        binio::read_array(is, h.r1, params.k, "bucket coefficients r1");
        binio::read_array(is, h.r2, params.k, "bucket coefficients r2");
    }
    for (auto& t : idx.tables_) t = HashTable::load(is);
    return idx;
}

E2lshIndex E2lshIndex::load(const std::string& path, std::shared_ptr<const Dataset> override_data) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    return load(is, std::move(override_data), nullptr);
}

}  // namespace llsh
