#include "llsh/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "llsh/e2lsh.hpp"  // euclidean_distance

namespace llsh {

std::vector<Neighbor> brute_knn(const Dataset& ds, std::span<const float> q, size_t topk) {
    if (q.size() != ds.dim) throw std::invalid_argument("brute_knn: dimension mismatch");
    TopK best(topk);
    for (size_t i = 0; i < ds.size(); ++i) {
        best.push(ds.ids[i], euclidean_distance(q, ds.point(i)));
    }
    return best.take_sorted();
}

namespace {

void check_tree_input(const Dataset& ds, size_t leaf_size) {
    if (ds.size() < 1) throw std::invalid_argument("tree build: dataset must be non-empty");
    if (leaf_size < 1) throw std::invalid_argument("tree build: leaf_size must be >= 1");
}

// Axis with the widest value spread over rows [begin, end).
uint32_t widest_axis(const Dataset& ds, const std::vector<uint32_t>& rows, uint32_t begin,
                     uint32_t end) {
    uint32_t best_axis = 0;
    double best_spread = -1.0;
    for (uint32_t axis = 0; axis < ds.dim; ++axis) {
        float lo = ds.point(rows[begin])[axis];
        float hi = lo;
        for (uint32_t i = begin + 1; i < end; ++i) {
            float v = ds.point(rows[i])[axis];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        double spread = static_cast<double>(hi) - static_cast<double>(lo);
        if (spread > best_spread) {
            best_spread = spread;
            best_axis = axis;
        }
    }
    return best_axis;
}

}  // namespace

KdTree::KdTree(std::shared_ptr<const Dataset> data, size_t leaf_size)
    : data_(std::move(data)), leaf_size_(leaf_size) {
    check_tree_input(*data_, leaf_size);
    rows_.resize(data_->size());
    std::iota(rows_.begin(), rows_.end(), 0u);
    nodes_.reserve(2 * data_->size() / leaf_size + 2);
    build(0, static_cast<uint32_t>(rows_.size()));
}

uint32_t KdTree::build(uint32_t begin, uint32_t end) {
    auto idx = static_cast<uint32_t>(nodes_.size());
    nodes_.emplace_back();
    if (end - begin <= leaf_size_) {
        nodes_[idx].begin = begin;
        nodes_[idx].end = end;
        return idx;
    }
    const Dataset& ds = *data_;
    uint32_t axis = widest_axis(ds, rows_, begin, end);
    uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(rows_.begin() + begin, rows_.begin() + mid, rows_.begin() + end,
                     [&](uint32_t a, uint32_t b) { return ds.point(a)[axis] < ds.point(b)[axis]; });
    double threshold = ds.point(rows_[mid])[axis];

    uint32_t left = build(begin, mid);
    uint32_t right = build(mid, end);
    nodes_[idx].axis = static_cast<int32_t>(axis);
    nodes_[idx].threshold = threshold;
    nodes_[idx].left = left;
    nodes_[idx].right = right;
    return idx;
}

void KdTree::search(uint32_t node, std::span<const float> q, TopK& best) const {
    const Node& n = nodes_[node];
    const Dataset& ds = *data_;
    if (n.axis < 0) {
        for (uint32_t i = n.begin; i < n.end; ++i) {
            uint32_t row = rows_[i];
            best.push(ds.ids[row], euclidean_distance(q, ds.point(row)));
        }
        return;
    }
    double diff = static_cast<double>(q[static_cast<size_t>(n.axis)]) - n.threshold;
    uint32_t near = diff < 0.0 ? n.left : n.right;
    uint32_t far = diff < 0.0 ? n.right : n.left;
    search(near, q, best);
    // The splitting plane gives a lower bound on distances in the far child.
    // Prune only on strict excess so equal-distance ties stay exact.
    if (!best.full() || std::abs(diff) <= best.worst_dist()) {
        search(far, q, best);
    }
}

std::vector<Neighbor> KdTree::query(std::span<const float> q, size_t topk) const {
    if (q.size() != data_->dim) throw std::invalid_argument("kdtree query: dimension mismatch");
    TopK best(topk);
    if (topk > 0) search(0, q, best);
    return best.take_sorted();
}

BallTree::BallTree(std::shared_ptr<const Dataset> data, size_t leaf_size)
    : data_(std::move(data)), leaf_size_(leaf_size) {
    check_tree_input(*data_, leaf_size);
    rows_.resize(data_->size());
    std::iota(rows_.begin(), rows_.end(), 0u);
    nodes_.reserve(2 * data_->size() / leaf_size + 2);
    build(0, static_cast<uint32_t>(rows_.size()));
}

uint32_t BallTree::build(uint32_t begin, uint32_t end) {
    auto idx = static_cast<uint32_t>(nodes_.size());
    nodes_.emplace_back();
    const Dataset& ds = *data_;

    std::vector<double> centroid(ds.dim, 0.0);
    for (uint32_t i = begin; i < end; ++i) {
        auto p = ds.point(rows_[i]);
        for (uint32_t j = 0; j < ds.dim; ++j) centroid[j] += p[j];
    }
    for (auto& c : centroid) c /= static_cast<double>(end - begin);

    double radius = 0.0;
    for (uint32_t i = begin; i < end; ++i) {
        auto p = ds.point(rows_[i]);
        double s = 0.0;
        for (uint32_t j = 0; j < ds.dim; ++j) {
            double diff = centroid[j] - static_cast<double>(p[j]);
            s += diff * diff;
        }
        radius = std::max(radius, std::sqrt(s));
    }
    nodes_[idx].centroid = std::move(centroid);
    nodes_[idx].radius = radius;

    if (end - begin <= leaf_size_) {
        nodes_[idx].begin = begin;
        nodes_[idx].end = end;
        return idx;
    }
    uint32_t axis = widest_axis(ds, rows_, begin, end);
    uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(rows_.begin() + begin, rows_.begin() + mid, rows_.begin() + end,
                     [&](uint32_t a, uint32_t b) { return ds.point(a)[axis] < ds.point(b)[axis]; });
    uint32_t left = build(begin, mid);
    uint32_t right = build(mid, end);
    nodes_[idx].left = static_cast<int32_t>(left);
    nodes_[idx].right = static_cast<int32_t>(right);
    return idx;
}

void BallTree::search(uint32_t node, std::span<const float> q, TopK& best) const {
    const Node& n = nodes_[node];
    const Dataset& ds = *data_;

    double to_centroid = 0.0;
    for (size_t j = 0; j < n.centroid.size(); ++j) {
        double diff = static_cast<double>(q[j]) - n.centroid[j];
        to_centroid += diff * diff;
    }
    to_centroid = std::sqrt(to_centroid);
    double bound = std::max(0.0, to_centroid - n.radius);
    if (best.full() && bound > best.worst_dist()) return;

    if (n.left < 0) {
        for (uint32_t i = n.begin; i < n.end; ++i) {
            uint32_t row = rows_[i];
            best.push(ds.ids[row], euclidean_distance(q, ds.point(row)));
        }
        return;
    }
    search(static_cast<uint32_t>(n.left), q, best);
    search(static_cast<uint32_t>(n.right), q, best);
}

std::vector<Neighbor> BallTree::query(std::span<const float> q, size_t topk) const {
    if (q.size() != data_->dim) throw std::invalid_argument("balltree query: dimension mismatch");
    TopK best(topk);
    if (topk > 0) search(0, q, best);
    return best.take_sorted();
}

}  // namespace llsh
