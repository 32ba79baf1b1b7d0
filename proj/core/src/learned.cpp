#include "llsh/learned.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "llsh/binio.hpp"
#include "llsh/errors.hpp"
#include "llsh/parallel.hpp"
#include "llsh/rng.hpp"

namespace llsh {

namespace {

// Stream tags for deriving independent rngs from one master seed.
enum SeedTag : uint64_t {
    kSeedAutoencoder = 0x01,
    kSeedLabels = 0x02,
    kSeedHoldout = 0x03,
    kSeedUnits = 0x04,
    kSeedIndex = 0x05,
    kSeedEnsemble = 0x06,
};

Matrix to_matrix(const Dataset& ds) {
    Matrix m(ds.size(), ds.dim);
    for (size_t i = 0; i < ds.values.size(); ++i) m.v[i] = static_cast<double>(ds.values[i]);
    return m;
}

// Round half away from zero, saturating instead of overflowing for the
// absurd values a linear extrapolation can produce on far-out queries.
int64_t round_half_away(double x) {
    constexpr double kLimit = 9.0e18;
    if (!(x > -kLimit)) return x < 0.0 ? static_cast<int64_t>(-kLimit) : 0;  // also NaN
    if (x > kLimit) return static_cast<int64_t>(kLimit);
    return std::llround(x);
}

int64_t elapsed_ns(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                                since)
        .count();
}

}  // namespace

std::optional<std::string> LlshConfig::validate(uint32_t d) const {
    if (M < 1) throw std::invalid_argument("llsh config: M must be >= 1");
    if (L < 1 || k < 1) throw std::invalid_argument("llsh config: L and k must be >= 1");
    if (!(r > 0.0)) throw std::invalid_argument("llsh config: r must be positive");
    if (ensemble_size < 1) throw std::invalid_argument("llsh config: ensemble_size must be >= 1");
    if (!(m2 < m1 && m1 < d)) {
        throw std::invalid_argument("llsh config: need m2 < m1 < d, got m1=" +
                                    std::to_string(m1) + " m2=" + std::to_string(m2) +
                                    " d=" + std::to_string(d));
    }
    if (m3 < 1) throw std::invalid_argument("llsh config: m3 must be >= 1");
    train.validate();

    auto [p1, p2] = param_count(*this, d);
    if (p1 >= p2) {
        return "llsh config: parameter count p1=" + std::to_string(p1) +
               " is not smaller than the classical p2=" + std::to_string(p2) +
               "; the learned index will not be more compact";
    }
    return std::nullopt;
}

std::pair<uint64_t, uint64_t> param_count(const LlshConfig& cfg, uint32_t d) {
    uint64_t p1 = static_cast<uint64_t>(d) * cfg.m1 + static_cast<uint64_t>(cfg.m1) * cfg.m2 +
                  (static_cast<uint64_t>(cfg.m2) * cfg.m3 +
                   static_cast<uint64_t>(cfg.m3) * cfg.k) *
                      cfg.L;
    uint64_t p2 = static_cast<uint64_t>(d) * cfg.k * cfg.L;
    return {p1, p2};
}

namespace {

// The reconstruction objective fixes only the composition decoder(encoder(x)),
// not the scale split at the linear junction: rescaling a code column and
// dividing it back out of the decoder's first layer is invisible to the loss.
// Pick that gauge explicitly: standardize every code column (over the
// training data) to `target_std`, folding the shift into the encoder bias and
// the inverse into the decoder. This pins the hash label spread to the
// segment width r no matter how large or heavy-tailed the input features are.
void standardize_code_gauge(Autoencoder& ae, const Dataset& ds, double target_std) {
    const size_t m2 = ae.encoder.output_dim();
    std::vector<double> mean(m2, 0.0), var(m2, 0.0);

    constexpr size_t kChunk = 4096;
    size_t total = ds.size();
    for (size_t start = 0; start < total; start += kChunk) {
        size_t stop = std::min(total, start + kChunk);
        Matrix x(stop - start, ds.dim);
        for (size_t i = 0; i < x.v.size(); ++i) {
            x.v[i] = static_cast<double>(ds.values[start * ds.dim + i]);
        }
        Matrix code = forward(ae.encoder, x);
        for (size_t i = 0; i < code.rows; ++i) {
            for (size_t j = 0; j < m2; ++j) mean[j] += code.at(i, j);
        }
    }
    for (auto& m : mean) m /= static_cast<double>(total);
    for (size_t start = 0; start < total; start += kChunk) {
        size_t stop = std::min(total, start + kChunk);
        Matrix x(stop - start, ds.dim);
        for (size_t i = 0; i < x.v.size(); ++i) {
            x.v[i] = static_cast<double>(ds.values[start * ds.dim + i]);
        }
        Matrix code = forward(ae.encoder, x);
        for (size_t i = 0; i < code.rows; ++i) {
            for (size_t j = 0; j < m2; ++j) {
                double diff = code.at(i, j) - mean[j];
                var[j] += diff * diff;
            }
        }
    }
    for (auto& v : var) v /= static_cast<double>(total);

    DenseLayer& enc_out = ae.encoder.layers().back();
    DenseLayer& dec_in = ae.decoder.layers().front();
    for (size_t j = 0; j < m2; ++j) {
        double sd = std::sqrt(var[j]);
        if (sd < 1e-9) sd = 1e-9;  // dead columns stay (numerically) dead
        double gain = target_std / sd;
        for (size_t c = 0; c < enc_out.in; ++c) enc_out.W[j * enc_out.in + c] *= gain;
        enc_out.b[j] = (enc_out.b[j] - mean[j]) * gain;
        for (size_t o = 0; o < dec_in.out; ++o) {
            dec_in.b[o] += dec_in.W[o * dec_in.in + j] * mean[j];
            dec_in.W[o * dec_in.in + j] /= gain;
        }
    }
}

// Code-cloud radius as a fraction of the hash segment width: the total code
// variance is set to (kCodeSpread * r)^2, i.e. per-column std
// kCodeSpread * r / sqrt(m2), which keeps the integer label spread (and with
// it the reachable fitting rate) independent of the input distribution.
constexpr double kCodeSpread = 0.4;

}  // namespace

Autoencoder train_autoencoder(const Dataset& ds, const LlshConfig& cfg) {
    if (!(cfg.m2 < cfg.m1 && cfg.m1 < ds.dim)) {
        throw std::invalid_argument("autoencoder: need m2 < m1 < d");
    }
    if (ds.size() == 0) throw std::invalid_argument("autoencoder: empty dataset");
    cfg.train.validate();

    const uint32_t d = ds.dim;
    uint64_t seed = derive_seed(cfg.train.seed, kSeedAutoencoder);
    Autoencoder ae;
    ae.encoder = Mlp::glorot({d, cfg.m1, cfg.m2}, derive_seed(seed, 1));
    ae.decoder = Mlp::glorot({cfg.m2, cfg.m1, d}, derive_seed(seed, 2));

    Matrix X = to_matrix(ds);
    AdamState adam_e = AdamState::init(ae.encoder, cfg.train.lr);
    AdamState adam_d = AdamState::init(ae.decoder, cfg.train.lr);

    auto rng = make_engine(derive_seed(seed, 3));
    std::vector<size_t> order(X.rows);
    std::iota(order.begin(), order.end(), size_t{0});

    auto reconstruction_mse = [&]() {
        Matrix code = forward(ae.encoder, X);
        Matrix out = forward(ae.decoder, code);
        return mse_loss(out, X);
    };

    double best_mse = std::numeric_limits<double>::infinity();
    Autoencoder best = ae;
    size_t stale = 0;

    Matrix bx;
    for (size_t epoch = 0; epoch < cfg.train.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t start = 0; start < X.rows; start += cfg.train.batch_size) {
            size_t stop = std::min(X.rows, start + cfg.train.batch_size);
            bx.rows = stop - start;
            bx.cols = X.cols;
            bx.v.resize(bx.rows * bx.cols);
            for (size_t i = start; i < stop; ++i) {
                std::copy_n(X.v.data() + order[i] * X.cols, X.cols,
                            bx.v.data() + (i - start) * X.cols);
            }
            auto trace_e = forward_trace(ae.encoder, bx);
            auto trace_d = forward_trace(ae.decoder, trace_e.output());
            const Matrix& out = trace_d.output();

            Matrix dY(out.rows, out.cols);
            double scale = 2.0 / static_cast<double>(out.v.size());
            for (size_t i = 0; i < out.v.size(); ++i) dY.v[i] = scale * (out.v[i] - bx.v[i]);

            Matrix dcode;
            auto g_d = backward_from(ae.decoder, trace_d, dY, &dcode);
            auto g_e = backward_from(ae.encoder, trace_e, dcode, nullptr);
            adam_step(adam_d, ae.decoder, g_d);
            adam_step(adam_e, ae.encoder, g_e);
        }

        double mse = reconstruction_mse();
        if (mse < best_mse) {
            best_mse = mse;
            best = ae;
            stale = 0;
        } else if (++stale >= cfg.train.patience) {
            break;
        }
    }
    standardize_code_gauge(best, ds, kCodeSpread * cfg.r / std::sqrt(double(cfg.m2)));
    best.encoder.quantize_to_f32();
    best.decoder.quantize_to_f32();
    return best;
}

std::vector<float> encode_one(const Mlp& encoder, std::span<const float> v) {
    Matrix x(1, v.size());
    for (size_t i = 0; i < v.size(); ++i) x.v[i] = static_cast<double>(v[i]);
    Matrix y = forward(encoder, x);
    std::vector<float> out(y.cols);
    for (size_t i = 0; i < y.cols; ++i) out[i] = static_cast<float>(y.v[i]);
    return out;
}

Dataset encode(const Autoencoder& ae, const Dataset& ds) {
    if (ds.dim != ae.encoder.input_dim()) {
        throw std::invalid_argument("encode: dataset dimension mismatch");
    }
    Dataset out;
    out.dim = static_cast<uint32_t>(ae.encoder.output_dim());
    out.ids = ds.ids;
    out.values.resize(ds.size() * out.dim);

    // Chunked so large datasets do not materialize an n x d double matrix.
    constexpr size_t kChunk = 4096;
    for (size_t start = 0; start < ds.size(); start += kChunk) {
        size_t stop = std::min(ds.size(), start + kChunk);
        Matrix x(stop - start, ds.dim);
        for (size_t i = 0; i < x.v.size(); ++i) {
            x.v[i] = static_cast<double>(ds.values[start * ds.dim + i]);
        }
        Matrix y = forward(ae.encoder, x);
        for (size_t i = 0; i < y.v.size(); ++i) {
            out.values[start * out.dim + i] = static_cast<float>(y.v[i]);
        }
    }
    return out;
}

LabelSet make_labels(const Dataset& encoded, const LlshConfig& cfg, uint64_t seed) {
    LabelSet result;
    result.labels = IntMatrix(encoded.size(), static_cast<size_t>(cfg.L) * cfg.k);
    result.families.resize(cfg.L);

    parallel_for(cfg.L, [&](size_t j) {
        auto rng = make_engine(derive_seed(seed, j));
        result.families[j] = sample_family(encoded.dim, cfg.k, cfg.r, rng);
        for (size_t i = 0; i < encoded.size(); ++i) {
            auto sig = hash_family(result.families[j], encoded.point(i));
            std::copy(sig.begin(), sig.end(),
                      result.labels.v.begin() + i * result.labels.cols + j * cfg.k);
        }
    });
    return result;
}

EnsembleLabelSet make_ensemble_labels(const Dataset& encoded, const LlshConfig& cfg,
                                      std::span<const uint64_t> instance_seeds) {
    if (instance_seeds.empty()) {
        throw std::invalid_argument("ensemble labels: need at least one instance");
    }
    EnsembleLabelSet out;
    out.family_sets.reserve(instance_seeds.size());

    std::vector<double> acc(encoded.size() * static_cast<size_t>(cfg.L) * cfg.k, 0.0);
    for (uint64_t s : instance_seeds) {
        LabelSet block = make_labels(encoded, cfg, s);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(block.labels.v[i]);
        out.family_sets.push_back(std::move(block.families));
    }
    out.labels = IntMatrix(encoded.size(), static_cast<size_t>(cfg.L) * cfg.k);
    double inv = 1.0 / static_cast<double>(instance_seeds.size());
    for (size_t i = 0; i < acc.size(); ++i) out.labels.v[i] = round_half_away(acc[i] * inv);
    return out;
}

EnsembleLabelSet make_ensemble_labels(const Dataset& encoded, const LlshConfig& cfg,
                                      uint64_t seed) {
    std::vector<uint64_t> seeds(cfg.ensemble_size);
    for (size_t e = 0; e < seeds.size(); ++e) {
        seeds[e] = derive_seed(derive_seed(seed, kSeedEnsemble), e);
    }
    return make_ensemble_labels(encoded, cfg, seeds);
}

namespace {

std::vector<size_t> unit_dims(const LlshConfig& cfg) {
    std::vector<size_t> dims;
    dims.push_back(cfg.m2);
    for (uint32_t l = 0; l + 1 < cfg.M; ++l) dims.push_back(cfg.m3);
    dims.push_back(cfg.k);
    return dims;
}

}  // namespace

LlshModel train_llsh(const Dataset& encoded, const IntMatrix& labels, const LlshConfig& cfg) {
    const size_t n = encoded.size();
    const size_t cols = static_cast<size_t>(cfg.L) * cfg.k;
    if (labels.rows != n || labels.cols != cols) {
        throw std::invalid_argument("train_llsh: label matrix shape mismatch");
    }
    if (encoded.dim != cfg.m2) {
        throw std::invalid_argument("train_llsh: encoded dimension != m2");
    }
    if (n < 2) throw std::invalid_argument("train_llsh: need at least 2 points");
    cfg.train.validate();

    // Row split shared by all units: holdout drives early stopping.
    std::vector<size_t> perm(n);
    std::iota(perm.begin(), perm.end(), size_t{0});
    auto rng = make_engine(derive_seed(cfg.train.seed, kSeedHoldout));
    std::shuffle(perm.begin(), perm.end(), rng);
    size_t hold_n = std::clamp<size_t>(
        static_cast<size_t>(std::llround(cfg.train.holdout_fraction * static_cast<double>(n))), 1,
        n - 1);
    std::vector<size_t> hold_rows(perm.begin(), perm.begin() + hold_n);
    std::vector<size_t> train_rows(perm.begin() + hold_n, perm.end());
    std::sort(hold_rows.begin(), hold_rows.end());
    std::sort(train_rows.begin(), train_rows.end());

    auto gather = [&](const std::vector<size_t>& rows) {
        Matrix m(rows.size(), encoded.dim);
        for (size_t i = 0; i < rows.size(); ++i) {
            auto p = encoded.point(rows[i]);
            for (size_t j = 0; j < p.size(); ++j) m.at(i, j) = static_cast<double>(p[j]);
        }
        return m;
    };
    Matrix x_train = gather(train_rows);
    Matrix x_hold = gather(hold_rows);

    LlshModel model;
    model.cfg = cfg;
    model.input_dim = 0;  // attached by the pipeline together with the encoder
    model.units.resize(cfg.L);
    model.label_mean.assign(cols, 0.0);
    model.label_std.assign(cols, 1.0);

    // Column statistics over the training rows.
    std::vector<uint8_t> degenerate(cols, 0);
    for (size_t c = 0; c < cols; ++c) {
        double mean = 0.0;
        for (size_t r : train_rows) mean += static_cast<double>(labels.at(r, c));
        mean /= static_cast<double>(train_rows.size());
        double var = 0.0;
        for (size_t r : train_rows) {
            double diff = static_cast<double>(labels.at(r, c)) - mean;
            var += diff * diff;
        }
        var /= static_cast<double>(train_rows.size());
        model.label_mean[c] = mean;
        double sd = std::sqrt(var);
        if (sd < 1e-12) {
            degenerate[c] = 1;
            sd = 1.0;
        }
        model.label_std[c] = sd;
    }
    model.degenerate_columns =
        static_cast<uint32_t>(std::count(degenerate.begin(), degenerate.end(), uint8_t{1}));

    std::vector<double> unit_fit(cfg.L, 0.0);
    parallel_for(cfg.L, [&](size_t j) {
        const size_t base = j * cfg.k;

        Matrix t_train(train_rows.size(), cfg.k);
        for (size_t i = 0; i < train_rows.size(); ++i) {
            for (size_t c = 0; c < cfg.k; ++c) {
                double raw = static_cast<double>(labels.at(train_rows[i], base + c));
                t_train.at(i, c) = (raw - model.label_mean[base + c]) / model.label_std[base + c];
            }
        }
        IntMatrix t_hold(hold_rows.size(), cfg.k);
        for (size_t i = 0; i < hold_rows.size(); ++i) {
            for (size_t c = 0; c < cfg.k; ++c) {
                t_hold.at(i, c) = labels.at(hold_rows[i], base + c);
            }
        }

        uint64_t unit_seed = derive_seed(derive_seed(cfg.train.seed, kSeedUnits), j);
        Mlp net = Mlp::glorot(unit_dims(cfg), derive_seed(unit_seed, 1));

        auto holdout_fit = [&](const Mlp& candidate) {
            Matrix y = forward(candidate, x_hold);
            size_t match = 0;
            for (size_t i = 0; i < y.rows; ++i) {
                for (size_t c = 0; c < cfg.k; ++c) {
                    int64_t pred = round_half_away(y.at(i, c) * model.label_std[base + c] +
                                                   model.label_mean[base + c]);
                    if (pred == t_hold.at(i, c)) ++match;
                }
            }
            return static_cast<double>(match) / static_cast<double>(y.rows * cfg.k);
        };

        TrainConfig unit_cfg = cfg.train;
        unit_cfg.seed = unit_seed;
        train_mlp(net, x_train, t_train, unit_cfg, holdout_fit);
        net.quantize_to_f32();
        unit_fit[j] = holdout_fit(net);  // re-evaluated at serialized precision
        model.units[j] = std::move(net);
    });

    model.holdout_fit =
        std::accumulate(unit_fit.begin(), unit_fit.end(), 0.0) / static_cast<double>(cfg.L);
    return model;
}

std::vector<int64_t> predict_hash(const LlshModel& model, std::span<const float> encoded_v) {
    if (encoded_v.size() != model.cfg.m2) {
        throw std::invalid_argument("predict_hash: encoded dimension != m2");
    }
    Matrix x(1, encoded_v.size());
    for (size_t i = 0; i < encoded_v.size(); ++i) x.v[i] = static_cast<double>(encoded_v[i]);

    std::vector<int64_t> out(static_cast<size_t>(model.cfg.L) * model.cfg.k);
    for (size_t j = 0; j < model.units.size(); ++j) {
        Matrix y = forward(model.units[j], x);
        size_t base = j * model.cfg.k;
        for (size_t c = 0; c < model.cfg.k; ++c) {
            out[base + c] =
                round_half_away(y.v[c] * model.label_std[base + c] + model.label_mean[base + c]);
        }
    }
    return out;
}

IntMatrix predict_hash_batch(const LlshModel& model, const Dataset& encoded) {
    if (encoded.dim != model.cfg.m2) {
        throw std::invalid_argument("predict_hash: encoded dimension != m2");
    }
    IntMatrix out(encoded.size(), static_cast<size_t>(model.cfg.L) * model.cfg.k);
    Matrix x = to_matrix(encoded);
    parallel_for(model.units.size(), [&](size_t j) {
        Matrix y = forward(model.units[j], x);
        size_t base = j * model.cfg.k;
        for (size_t i = 0; i < y.rows; ++i) {
            for (size_t c = 0; c < model.cfg.k; ++c) {
                out.at(i, base + c) = round_half_away(y.at(i, c) * model.label_std[base + c] +
                                                      model.label_mean[base + c]);
            }
        }
    });
    return out;
}

LlshIndex build_llsh_index(const LlshModel& model, std::shared_ptr<const Dataset> data,
                           const Dataset& encoded, uint64_t seed) {
    if (!data || data->size() != encoded.size()) {
        throw std::invalid_argument("llsh index: dataset / encoded size mismatch");
    }
    LlshIndex idx;
    idx.model_ = model;
    idx.seed_ = seed;
    idx.data_ = std::move(data);
    idx.rows_ = RowLookup(*idx.data_);
    idx.hashers_.resize(model.cfg.L);
    idx.tables_.resize(model.cfg.L);

    IntMatrix pred = predict_hash_batch(model, encoded);
    const uint64_t table_len = encoded.size();
    parallel_for(model.cfg.L, [&](size_t j) {
        auto rng = make_engine(derive_seed(derive_seed(seed, kSeedIndex), j));
        idx.hashers_[j] = sample_bucket_hasher(model.cfg.k, table_len, rng);
        std::vector<HashTable::Triple> triples;
        triples.reserve(encoded.size());
        std::span<const int64_t> all(pred.v);
        for (size_t i = 0; i < encoded.size(); ++i) {
            auto sig = all.subspan(i * pred.cols + j * model.cfg.k, model.cfg.k);
            auto bh = idx.hashers_[j].hash(sig);
            triples.push_back({bh.h1, bh.h2, idx.data_->ids[i]});
        }
        idx.tables_[j] = HashTable(std::move(triples));
    });
    return idx;
}

std::vector<Neighbor> query_llsh(const LlshIndex& idx, std::span<const float> q, size_t topk) {
    const LlshModel& model = idx.model();
    if (model.encoder.layers().empty()) {
        throw std::invalid_argument("query_llsh: model has no encoder attached");
    }
    if (q.size() != model.encoder.input_dim()) {
        throw std::invalid_argument("query_llsh: query dimension mismatch");
    }
    auto code = encode_one(model.encoder, q);
    auto pred = predict_hash(model, code);

    std::vector<uint32_t> candidates;
    for (size_t j = 0; j < idx.tables().size(); ++j) {
        std::span<const int64_t> sig(pred.data() + j * model.cfg.k, model.cfg.k);
        auto bh = idx.hashers()[j].hash(sig);
        idx.tables()[j].collect(bh.h1, bh.h2, candidates);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    const Dataset& ds = idx.dataset();
    TopK best(topk);
    for (uint32_t id : candidates) {
        size_t row = idx.row_for_id(id);
        if (row == RowLookup::npos) continue;
        best.push(id, euclidean_distance(q, ds.point(row)));
    }
    return best.take_sorted();
}

std::vector<Neighbor> query_llsh(const LlshIndex& idx, const Autoencoder& ae,
                                 std::span<const float> q, size_t topk) {
    if (q.size() != ae.encoder.input_dim()) {
        throw std::invalid_argument("query_llsh: query dimension mismatch");
    }
    auto code = encode_one(ae.encoder, q);
    auto pred = predict_hash(idx.model(), code);

    std::vector<uint32_t> candidates;
    for (size_t j = 0; j < idx.tables().size(); ++j) {
        std::span<const int64_t> sig(pred.data() + j * idx.model().cfg.k, idx.model().cfg.k);
        auto bh = idx.hashers()[j].hash(sig);
        idx.tables()[j].collect(bh.h1, bh.h2, candidates);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    const Dataset& ds = idx.dataset();
    TopK best(topk);
    for (uint32_t id : candidates) {
        size_t row = idx.row_for_id(id);
        if (row == RowLookup::npos) continue;
        best.push(id, euclidean_distance(q, ds.point(row)));
    }
    return best.take_sorted();
}

LlshBuildResult build_llsh_pipeline(std::shared_ptr<const Dataset> data, const LlshConfig& cfg) {
    if (!data) throw std::invalid_argument("llsh pipeline: null dataset");
    cfg.validate(data->dim);

    LlshBuildResult result;
    auto t0 = std::chrono::steady_clock::now();
    result.ae = train_autoencoder(*data, cfg);
    Dataset encoded = encode(result.ae, *data);

    uint64_t label_seed = derive_seed(cfg.train.seed, kSeedLabels);
    IntMatrix labels;
    if (cfg.ensemble_size > 1) {
        labels = make_ensemble_labels(encoded, cfg, label_seed).labels;
    } else {
        labels = make_labels(encoded, cfg, label_seed).labels;
    }

    result.model = train_llsh(encoded, labels, cfg);
    result.model.encoder = result.ae.encoder;
    result.model.input_dim = data->dim;
    result.train_ns = elapsed_ns(t0);

    auto t1 = std::chrono::steady_clock::now();
    result.index = build_llsh_index(result.model, std::move(data), encoded, cfg.train.seed);
    result.build_ns = elapsed_ns(t1);
    return result;
}

// --- serialization ---------------------------------------------------------

namespace {
constexpr char kModelMagic[4] = {'L', 'L', 'M', '1'};
constexpr char kIndexMagic[4] = {'L', 'L', 'I', 'X'};
constexpr uint16_t kFormatVersion = 1;

void write_config(std::ostream& os, const LlshConfig& cfg) {
    binio::write_raw<uint32_t>(os, cfg.M);
    binio::write_raw<uint32_t>(os, cfg.L);
    binio::write_raw<uint32_t>(os, cfg.k);
    binio::write_raw<uint32_t>(os, cfg.m1);
    binio::write_raw<uint32_t>(os, cfg.m2);
    binio::write_raw<uint32_t>(os, cfg.m3);
    binio::write_raw<double>(os, cfg.r);
    binio::write_raw<uint32_t>(os, cfg.ensemble_size);
    binio::write_raw<double>(os, cfg.train.lr);
    binio::write_raw<uint64_t>(os, cfg.train.batch_size);
    binio::write_raw<uint64_t>(os, cfg.train.max_epochs);
    binio::write_raw<uint64_t>(os, cfg.train.patience);
    binio::write_raw<double>(os, cfg.train.holdout_fraction);
    binio::write_raw<uint64_t>(os, cfg.train.seed);
}

LlshConfig read_config(std::istream& is) {
    LlshConfig cfg;
    cfg.M = binio::read_raw<uint32_t>(is, "M");
    cfg.L = binio::read_raw<uint32_t>(is, "L");
    cfg.k = binio::read_raw<uint32_t>(is, "k");
    cfg.m1 = binio::read_raw<uint32_t>(is, "m1");
    cfg.m2 = binio::read_raw<uint32_t>(is, "m2");
    cfg.m3 = binio::read_raw<uint32_t>(is, "m3");
    cfg.r = binio::read_raw<double>(is, "r");
    cfg.ensemble_size = binio::read_raw<uint32_t>(is, "ensemble_size");
    cfg.train.lr = binio::read_raw<double>(is, "lr");
    cfg.train.batch_size = binio::read_raw<uint64_t>(is, "batch_size");
    cfg.train.max_epochs = binio::read_raw<uint64_t>(is, "max_epochs");
    cfg.train.patience = binio::read_raw<uint64_t>(is, "patience");
    cfg.train.holdout_fraction = binio::read_raw<double>(is, "holdout_fraction");
    cfg.train.seed = binio::read_raw<uint64_t>(is, "seed");
    return cfg;
}

}  // namespace

size_t LlshModel::param_bytes() const {
    size_t params = encoder.param_count();
    for (const auto& u : units) params += u.param_count();
    return params * 4 + (label_mean.size() + label_std.size()) * 8;
}

void LlshModel::save(std::ostream& os) const {
    binio::write_magic(os, kModelMagic);
    binio::write_raw<uint16_t>(os, kFormatVersion);
    write_config(os, cfg);
    binio::write_raw<uint32_t>(os, input_dim);
    binio::write_raw<uint32_t>(os, degenerate_columns);
    encoder.save(os);
    binio::write_raw<uint32_t>(os, static_cast<uint32_t>(units.size()));
    for (const auto& u : units) u.save(os);
    binio::write_array(os, label_mean);
    binio::write_array(os, label_std);
}

void LlshModel::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open " + path + " for writing");
    save(os);
    if (!os) throw DataError("write failed: " + path);
}

LlshModel LlshModel::load(std::istream& is) {
    binio::expect_magic(is, kModelMagic, "LLM1");
    auto version = binio::read_raw<uint16_t>(is, "model version");
    if (version != kFormatVersion) {
        throw DataError("unsupported LLM1 version " + std::to_string(version));
    }
    LlshModel model;
    model.cfg = read_config(is);
    model.input_dim = binio::read_raw<uint32_t>(is, "input dim");
    model.degenerate_columns = binio::read_raw<uint32_t>(is, "degenerate columns");
    model.encoder = Mlp::load(is);
    auto count = binio::read_raw<uint32_t>(is, "unit count");
    if (count != model.cfg.L) throw DataError("LLM1: unit count does not match L");
    model.units.resize(count);
    for (auto& u : model.units) u = Mlp::load(is);
    size_t cols = static_cast<size_t>(model.cfg.L) * model.cfg.k;
    binio::read_array(is, model.label_mean, cols, "label means");
    binio::read_array(is, model.label_std, cols, "label stds");
    for (double sd : model.label_std) {
        if (!(sd > 0.0)) throw DataError("LLM1: non-positive label std");
    }
    return model;
}

LlshModel LlshModel::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    return load(is);
}

size_t LlshIndex::total_entries() const {
    size_t total = 0;
    for (const auto& t : tables_) total += t.entry_count();
    return total;
}

size_t LlshIndex::size_bytes() const {
    size_t bytes = model_.param_bytes();
    for (const auto& h : hashers_) bytes += (h.r1.size() + h.r2.size()) * 8;
    for (const auto& t : tables_) bytes += t.size_bytes();
    return bytes;
}

void LlshIndex::save(std::ostream& os, const std::string& dataset_path) const {
    binio::write_magic(os, kIndexMagic);
    binio::write_raw<uint16_t>(os, kFormatVersion);
    binio::write_raw<uint64_t>(os, seed_);
    binio::write_raw<uint32_t>(os, data_ ? data_->dim : 0);
    binio::write_raw<uint64_t>(os, data_ ? data_->size() : 0);
    binio::write_string(os, dataset_path);
    model_.save(os);
    for (const auto& h : hashers_) {
        binio::write_raw<uint64_t>(os, h.table_len);
        binio::write_array(os, h.r1);
        binio::write_array(os, h.r2);
    }
    for (const auto& t : tables_) t.save(os);
}

void LlshIndex::save(const std::string& path, const std::string& dataset_path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open " + path + " for writing");
    save(os, dataset_path);
    if (!os) throw DataError("write failed: " + path);
}

LlshIndex LlshIndex::load(std::istream& is, std::shared_ptr<const Dataset> override_data,
                          std::string* recorded_path) {
    binio::expect_magic(is, kIndexMagic, "LLIX");
    auto version = binio::read_raw<uint16_t>(is, "index version");
    if (version != kFormatVersion) {
        throw DataError("unsupported LLIX version " + std::to_string(version));
    }
    LlshIndex idx;
    idx.seed_ = binio::read_raw<uint64_t>(is, "seed");
    auto dim = binio::read_raw<uint32_t>(is, "dim");
    auto count = binio::read_raw<uint64_t>(is, "count");
    auto dataset_path = binio::read_string(is, "dataset path");
    if (recorded_path) *recorded_path = dataset_path;
    idx.model_ = LlshModel::load(is);

    std::shared_ptr<const Dataset> data = std::move(override_data);
    if (!data) {
        data = std::make_shared<Dataset>(
            read_vectors(dataset_path, guess_file_format(dataset_path)));
    }
    if (data->dim != dim || data->size() != count) {
        throw DataError("LLIX: dataset has shape " + std::to_string(data->size()) + "x" +
                        std::to_string(data->dim) + ", index expects " + std::to_string(count) +
                        "x" + std::to_string(dim));
    }
    idx.data_ = std::move(data);
    idx.rows_ = RowLookup(*idx.data_);

    idx.hashers_.resize(idx.model_.cfg.L);
    for (auto& h : idx.hashers_) {
        h.table_len = binio::read_raw<uint64_t>(is, "table length");
        binio::read_array(is, h.r1, idx.model_.cfg.k, "bucket coefficients r1");
        binio::read_array(is, h.r2, idx.model_.cfg.k, "bucket coefficients r2");
    }
    idx.tables_.resize(idx.model_.cfg.L);
    for (auto& t : idx.tables_) t = HashTable::load(is);
    return idx;
}

LlshIndex LlshIndex::load(const std::string& path, std::shared_ptr<const Dataset> override_data) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    return load(is, std::move(override_data), nullptr);
}

}  // namespace llsh
