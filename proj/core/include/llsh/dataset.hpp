#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace llsh {

enum class DistKind { Uniform, Normal, Lognormal, Exponential };

const char* to_string(DistKind kind);
DistKind parse_dist_kind(const std::string& name);  // throws std::invalid_argument

/// Recipe for a synthetic dataset. Per-coordinate distributions are fixed:
/// uniform on [0,1), normal(0,1), lognormal over an underlying normal(0,1),
/// exponential with rate 1.
struct DatasetSpec {
    DistKind kind = DistKind::Uniform;
    uint32_t n = 0;
    uint32_t d = 0;
    uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
};

/// An n x dim matrix of f32 vectors with stable unique ids.
/// Immutable after construction; safe to share across threads read-only.
struct Dataset {
    uint32_t dim = 0;
    std::vector<float> values;  // row-major, size() == n * dim
    std::vector<uint32_t> ids;  // unique, one per row

    size_t size() const { return ids.size(); }

    std::span<const float> point(size_t row) const {
        return {values.data() + row * dim, dim};
    }

    bool operator==(const Dataset&) const = default;

    /// Checks all invariants (finite values, consistent sizes, unique ids);
    /// throws DataError naming the first violation.
    void validate() const;
};

/// Maps ids back to row indices. Identity when ids are 0..n-1 (the common
/// case for generated and loaded datasets); otherwise a hash map.
class RowLookup {
public:
    RowLookup() = default;
    explicit RowLookup(const Dataset& ds);

    static constexpr size_t npos = static_cast<size_t>(-1);
    size_t row(uint32_t id) const {
        if (identity_) return id < n_ ? id : npos;
        auto it = map_.find(id);
        return it == map_.end() ? npos : it->second;
    }

private:
    bool identity_ = true;
    size_t n_ = 0;
    std::unordered_map<uint32_t, size_t> map_;
};

enum class FileFormat { Llshbin, Csv };

FileFormat parse_file_format(const std::string& name);
/// Picks the format from the file extension (.csv -> Csv, otherwise Llshbin).
FileFormat guess_file_format(const std::string& path);

/// Draws spec.n i.i.d. spec.d-dimensional vectors; ids are 0..n-1.
/// Single-threaded and deterministic for a given seed.
Dataset generate(const DatasetSpec& spec);

/// Reads a dataset from disk.
///
/// llshbin layout: magic "LLSH", u16 version = 1, u32 count, u32 dim, then
/// count*dim little-endian f32, row-major. CSV: comma-separated decimal
/// floats, one vector per line; a header line is rejected. Parse errors name
/// the offending line (CSV) or byte offset (llshbin).
Dataset read_vectors(const std::string& path, FileFormat format);
void write_vectors(const Dataset& ds, const std::string& path, FileFormat format);

/// Disjoint partition of ds into (train, holdout) with
/// |holdout| = round(fraction * n). Ids are preserved; deterministic for a
/// given seed. fraction must lie in (0,1) and n must be >= 2.
std::pair<Dataset, Dataset> split(const Dataset& ds, double holdout_fraction, uint64_t seed);

}  // namespace llsh
