#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llsh/dataset.hpp"
#include "llsh/e2lsh.hpp"
#include "llsh/metrics.hpp"
#include "llsh/nn.hpp"
#include "llsh/topk.hpp"

namespace llsh {

/// Shape and training knobs for the learned index. Unit j is an M-layer net
/// mapping m2-dimensional codes to its family's k hash values: m2 -> m3
/// (M-2 further m3 -> m3 layers) -> k.
struct LlshConfig {
    uint32_t M = 2;   // layers per hash unit
    uint32_t L = 30;  // parallel hash units / tables
    uint32_t k = 10;  // hash values per unit
    uint32_t m1 = 32;
    uint32_t m2 = 16;
    uint32_t m3 = 8;
    double r = 4.0;  // segment width used when generating labels
    uint32_t ensemble_size = 1;
    TrainConfig train;

    /// Throws std::invalid_argument on hard violations (m ordering, zero
    /// sizes); returns a warning string when the compactness requirement
    /// p1 < p2 does not hold for input dimension d.
    std::optional<std::string> validate(uint32_t d) const;
};

/// Inference parameter count p1 of the learned pipeline (encoder + units,
/// weights only) and p2 of the classical projections it replaces:
///   p1 = d*m1 + m1*m2 + (m2*m3 + m3*k)*L,   p2 = d*k*L
std::pair<uint64_t, uint64_t> param_count(const LlshConfig& cfg, uint32_t d);

struct Autoencoder {
    Mlp encoder;  // d -> m1 -> m2
    Mlp decoder;  // m2 -> m1 -> d
};

/// Trains encoder+decoder jointly on reconstruction MSE (the decoder reads
/// the encoder output directly, without an activation in between). The
/// result is then reparameterized, exactly preserving the reconstruction, so
/// code columns are standardized with a total spread proportional to r:
/// hash labels get the same integer spread whatever the input scale.
Autoencoder train_autoencoder(const Dataset& ds, const LlshConfig& cfg);

/// Encoder forward pass only; ids preserved, output dimension m2.
Dataset encode(const Autoencoder& ae, const Dataset& ds);
std::vector<float> encode_one(const Mlp& encoder, std::span<const float> v);

struct LabelSet {
    IntMatrix labels;  // n x (L*k)
    std::vector<HashFamily> families;
};

/// Classical hash signatures of every encoded point, concatenated over L
/// families into the training label matrix. Family j draws from the stream
/// derive_seed(seed, j).
LabelSet make_labels(const Dataset& encoded, const LlshConfig& cfg, uint64_t seed);

struct EnsembleLabelSet {
    IntMatrix labels;
    std::vector<std::vector<HashFamily>> family_sets;  // one set per instance
};

/// ensemble_size independent label blocks (distinct instance seeds, same
/// L/k/r), averaged elementwise and rounded half away from zero.
/// With a single instance this is exactly make_labels.
EnsembleLabelSet make_ensemble_labels(const Dataset& encoded, const LlshConfig& cfg,
                                      uint64_t seed);
EnsembleLabelSet make_ensemble_labels(const Dataset& encoded, const LlshConfig& cfg,
                                      std::span<const uint64_t> instance_seeds);

/// The learned replacement for the classical function families: L parallel
/// units plus the per-column standardization of their training labels.
/// The encoder that produced the unit inputs travels with the model so a
/// serialized model is self-contained.
struct LlshModel {
    LlshConfig cfg;
    uint32_t input_dim = 0;  // d of the raw data the encoder expects
    Mlp encoder;
    std::vector<Mlp> units;
    std::vector<double> label_mean;  // L*k
    std::vector<double> label_std;   // L*k, strictly positive
    uint32_t degenerate_columns = 0;

    // Training byproduct (holdout fitting rate); not serialized.
    double holdout_fit = -1.0;

    /// Serialized parameter bytes: f32 weights/biases plus f64 label stats.
    size_t param_bytes() const;

    void save(std::ostream& os) const;  // "LLM1"
    void save(const std::string& path) const;
    static LlshModel load(std::istream& is);
    static LlshModel load(const std::string& path);
};

/// Trains the L units independently (in parallel) against their own k label
/// columns, standardized per column. Each unit early-stops when its holdout
/// fitting rate stops improving for cfg.train.patience epochs. Label columns
/// with zero variance get std clamped to 1 and are counted in
/// degenerate_columns. The returned model has no encoder attached.
LlshModel train_llsh(const Dataset& encoded, const IntMatrix& labels, const LlshConfig& cfg);

/// Integer hash predictions for one encoded vector, L*k row-major (unit j
/// owns columns j*k .. j*k+k-1): forward, de-standardize, round half away
/// from zero.
std::vector<int64_t> predict_hash(const LlshModel& model, std::span<const float> encoded_v);
/// Same for a whole encoded dataset.
IntMatrix predict_hash_batch(const LlshModel& model, const Dataset& encoded);

/// Multi-table index over the model's predicted hash values; bucket hashing
/// follows the same modular rules as the classical index (C = 2^32-5,
/// T = n).
class LlshIndex {
public:
    LlshIndex() = default;

    const LlshModel& model() const { return model_; }
    const Dataset& dataset() const { return *data_; }
    std::shared_ptr<const Dataset> dataset_ptr() const { return data_; }
    const std::vector<BucketHasher>& hashers() const { return hashers_; }
    const std::vector<HashTable>& tables() const { return tables_; }
    uint64_t seed() const { return seed_; }

    size_t total_entries() const;
    size_t size_bytes() const;  // model param bytes + hasher + table bytes

    void save(std::ostream& os, const std::string& dataset_path) const;  // "LLIX"
    void save(const std::string& path, const std::string& dataset_path) const;
    static LlshIndex load(std::istream& is, std::shared_ptr<const Dataset> override_data,
                          std::string* recorded_path);
    static LlshIndex load(const std::string& path,
                          std::shared_ptr<const Dataset> override_data = nullptr);

    size_t row_for_id(uint32_t id) const { return rows_.row(id); }

    friend LlshIndex build_llsh_index(const LlshModel& model,
                                      std::shared_ptr<const Dataset> data,
                                      const Dataset& encoded, uint64_t seed);

private:
    LlshModel model_;
    uint64_t seed_ = 0;
    std::shared_ptr<const Dataset> data_;  // original-space points
    RowLookup rows_;
    std::vector<BucketHasher> hashers_;
    std::vector<HashTable> tables_;
};

/// Buckets every point of `encoded` (which must be encode(model.encoder,
/// data)) under the model's predicted hashes. `data` is the original-space
/// dataset used for distance ranking at query time.
LlshIndex build_llsh_index(const LlshModel& model, std::shared_ptr<const Dataset> data,
                           const Dataset& encoded, uint64_t seed);

/// Encode the raw query, predict its hashes, collect fingerprint-matching
/// candidates across the L tables and rank them by distance in the original
/// d-dimensional space (ties by id).
std::vector<Neighbor> query_llsh(const LlshIndex& idx, std::span<const float> q, size_t topk);
std::vector<Neighbor> query_llsh(const LlshIndex& idx, const Autoencoder& ae,
                                 std::span<const float> q, size_t topk);

/// End-to-end build: autoencoder, labels (ensemble when cfg.ensemble_size >
/// 1), unit training, index. Wall times for the training and indexing parts
/// are reported separately.
struct LlshBuildResult {
    Autoencoder ae;
    LlshModel model;  // encoder attached
    LlshIndex index;
    int64_t train_ns = 0;  // autoencoder + labels + units
    int64_t build_ns = 0;  // hashing + table construction
};

LlshBuildResult build_llsh_pipeline(std::shared_ptr<const Dataset> data, const LlshConfig& cfg);

}  // namespace llsh
