#include "llsh/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "llsh/binio.hpp"
#include "llsh/errors.hpp"
#include "llsh/rng.hpp"

namespace llsh {

const char* to_string(DistKind kind) {
    switch (kind) {
        case DistKind::Uniform: return "uniform";
        case DistKind::Normal: return "normal";
        case DistKind::Lognormal: return "lognormal";
        case DistKind::Exponential: return "exponential";
    }
    return "?";
}

DistKind parse_dist_kind(const std::string& name) {
    if (name == "uniform") return DistKind::Uniform;
    if (name == "normal") return DistKind::Normal;
    if (name == "lognormal") return DistKind::Lognormal;
    if (name == "exponential") return DistKind::Exponential;
    throw std::invalid_argument("unknown distribution kind: " + name);
}

void DatasetSpec::validate() const {
    if (n < 1) throw std::invalid_argument("dataset spec: n must be >= 1");
    if (d < 1) throw std::invalid_argument("dataset spec: d must be >= 1");
}

void Dataset::validate() const {
    if (values.size() != size() * static_cast<size_t>(dim)) {
        throw DataError("dataset: values size does not match n*dim");
    }
    for (size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw DataError("dataset: non-finite value at flat index " + std::to_string(i));
        }
    }
    std::unordered_set<uint32_t> seen;
    seen.reserve(ids.size());
    for (uint32_t id : ids) {
        if (!seen.insert(id).second) {
            throw DataError("dataset: duplicate id " + std::to_string(id));
        }
    }
}

RowLookup::RowLookup(const Dataset& ds) : n_(ds.size()) {
    for (size_t i = 0; i < ds.ids.size(); ++i) {
        if (ds.ids[i] != i) {
            identity_ = false;
            break;
        }
    }
    if (!identity_) {
        map_.reserve(ds.ids.size());
        for (size_t i = 0; i < ds.ids.size(); ++i) map_.emplace(ds.ids[i], i);
    }
}

Dataset generate(const DatasetSpec& spec) {
    spec.validate();
    Dataset ds;
    ds.dim = spec.d;
    ds.values.resize(static_cast<size_t>(spec.n) * spec.d);
    ds.ids.resize(spec.n);
    std::iota(ds.ids.begin(), ds.ids.end(), 0u);

    auto rng = make_engine(spec.seed);
    switch (spec.kind) {
        case DistKind::Uniform: {
            std::uniform_real_distribution<double> dist(0.0, 1.0);
            for (auto& v : ds.values) v = static_cast<float>(dist(rng));
            break;
        }
        case DistKind::Normal: {
            std::normal_distribution<double> dist(0.0, 1.0);
            for (auto& v : ds.values) v = static_cast<float>(dist(rng));
            break;
        }
        case DistKind::Lognormal: {
            std::normal_distribution<double> dist(0.0, 1.0);
            for (auto& v : ds.values) v = static_cast<float>(std::exp(dist(rng)));
            break;
        }
        case DistKind::Exponential: {
            std::exponential_distribution<double> dist(1.0);
            for (auto& v : ds.values) v = static_cast<float>(dist(rng));
            break;
        }
    }
    return ds;
}

FileFormat parse_file_format(const std::string& name) {
    if (name == "llshbin") return FileFormat::Llshbin;
    if (name == "csv") return FileFormat::Csv;
    throw std::invalid_argument("unknown file format: " + name);
}

FileFormat guess_file_format(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) {
        return FileFormat::Csv;
    }
    return FileFormat::Llshbin;
}

namespace {

constexpr char kLlshbinMagic[4] = {'L', 'L', 'S', 'H'};
constexpr uint16_t kLlshbinVersion = 1;

Dataset read_llshbin(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    binio::expect_magic(is, kLlshbinMagic, "llshbin");
    auto version = binio::read_raw<uint16_t>(is, "llshbin version");
    if (version != kLlshbinVersion) {
        throw DataError(path + ": unsupported llshbin version " + std::to_string(version));
    }
    auto count = binio::read_raw<uint32_t>(is, "llshbin count");
    auto dim = binio::read_raw<uint32_t>(is, "llshbin dim");
    if (count > 0 && dim == 0) throw DataError(path + ": dim 0 with nonzero count");

    Dataset ds;
    ds.dim = dim;
    size_t total = static_cast<size_t>(count) * dim;
    ds.values.resize(total);
    is.read(reinterpret_cast<char*>(ds.values.data()),
            static_cast<std::streamsize>(total * sizeof(float)));
    if (!is) {
        auto at = static_cast<long long>(is.gcount()) + 14;  // header is 14 bytes
        throw DataError(path + ": truncated payload near byte offset " + std::to_string(at));
    }
    for (size_t i = 0; i < total; ++i) {
        if (!std::isfinite(ds.values[i])) {
            size_t byte = 14 + i * sizeof(float);
            throw DataError(path + ": non-finite value at byte offset " + std::to_string(byte));
        }
    }
    ds.ids.resize(count);
    std::iota(ds.ids.begin(), ds.ids.end(), 0u);
    return ds;
}

void write_llshbin(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open " + path + " for writing");
    binio::write_magic(os, kLlshbinMagic);
    binio::write_raw<uint16_t>(os, kLlshbinVersion);
    binio::write_raw<uint32_t>(os, static_cast<uint32_t>(ds.size()));
    binio::write_raw<uint32_t>(os, ds.dim);
    binio::write_array(os, ds.values);
    if (!os) throw DataError("write failed: " + path);
}

Dataset read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open " + path);

    Dataset ds;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() && is.peek() == EOF) break;  // trailing newline
        std::vector<float> row;
        const char* p = line.c_str();
        const char* end = p + line.size();
        while (true) {
            char* after = nullptr;
            double v = std::strtod(p, &after);
            if (after == p) {
                throw DataError(path + ": line " + std::to_string(line_no) +
                                ": expected a decimal float at column " +
                                std::to_string(p - line.c_str() + 1));
            }
            if (!std::isfinite(v)) {
                throw DataError(path + ": line " + std::to_string(line_no) +
                                ": non-finite value");
            }
            row.push_back(static_cast<float>(v));
            p = after;
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            if (p >= end || *p == '\r') break;
            if (*p != ',') {
                throw DataError(path + ": line " + std::to_string(line_no) +
                                ": unexpected character '" + std::string(1, *p) + "'");
            }
            ++p;
        }
        if (ds.dim == 0 && ds.ids.empty()) {
            ds.dim = static_cast<uint32_t>(row.size());
        } else if (row.size() != ds.dim) {
            throw DataError(path + ": line " + std::to_string(line_no) + ": expected " +
                            std::to_string(ds.dim) + " fields, got " +
                            std::to_string(row.size()));
        }
        ds.values.insert(ds.values.end(), row.begin(), row.end());
        ds.ids.push_back(static_cast<uint32_t>(ds.ids.size()));
    }
    return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot open " + path + " for writing");
    char buf[64];
    for (size_t i = 0; i < ds.size(); ++i) {
        auto row = ds.point(i);
        for (uint32_t j = 0; j < ds.dim; ++j) {
            // 17 significant digits: float -> decimal -> float is exact.
            std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(row[j]));
            if (j) os << ',';
            os << buf;
        }
        os << '\n';
    }
    if (!os) throw DataError("write failed: " + path);
}

}  // namespace

Dataset read_vectors(const std::string& path, FileFormat format) {
    Dataset ds = format == FileFormat::Llshbin ? read_llshbin(path) : read_csv(path);
    return ds;
}

void write_vectors(const Dataset& ds, const std::string& path, FileFormat format) {
    ds.validate();
    if (format == FileFormat::Llshbin) {
        write_llshbin(ds, path);
    } else {
        write_csv(ds, path);
    }
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double holdout_fraction, uint64_t seed) {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw std::invalid_argument("split: holdout fraction must lie in (0,1)");
    }
    if (ds.size() < 2) throw std::invalid_argument("split: need at least 2 points");

    size_t n = ds.size();
    auto holdout_n = static_cast<size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
    holdout_n = std::clamp<size_t>(holdout_n, 1, n - 1);

    std::vector<size_t> perm(n);
    std::iota(perm.begin(), perm.end(), size_t{0});
    auto rng = make_engine(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<size_t> hold(perm.begin(), perm.begin() + holdout_n);
    std::vector<size_t> train(perm.begin() + holdout_n, perm.end());
    std::sort(hold.begin(), hold.end());
    std::sort(train.begin(), train.end());

    auto take = [&](const std::vector<size_t>& rows) {
        Dataset out;
        out.dim = ds.dim;
        out.values.reserve(rows.size() * ds.dim);
        out.ids.reserve(rows.size());
        for (size_t r : rows) {
            auto p = ds.point(r);
            out.values.insert(out.values.end(), p.begin(), p.end());
            out.ids.push_back(ds.ids[r]);
        }
        return out;
    };
    return {take(train), take(hold)};
}

}  // namespace llsh
