#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "llsh/dataset.hpp"
#include "llsh/topk.hpp"

namespace llsh {

/// Exact Euclidean top-k scan; ties broken by id ascending.
std::vector<Neighbor> brute_knn(const Dataset& ds, std::span<const float> q, size_t topk);

/// KD-tree with widest-spread split axis and median split value.
/// Queries return exactly what brute_knn returns.
class KdTree {
public:
    static constexpr size_t kDefaultLeafSize = 16;

    KdTree(std::shared_ptr<const Dataset> data, size_t leaf_size = kDefaultLeafSize);

    std::vector<Neighbor> query(std::span<const float> q, size_t topk) const;

    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        int32_t axis = -1;     // -1 marks a leaf
        double threshold = 0.0;
        uint32_t left = 0;     // children for splits; [begin,end) rows for leaves
        uint32_t right = 0;
        uint32_t begin = 0;
        uint32_t end = 0;
    };

    uint32_t build(uint32_t begin, uint32_t end);
    void search(uint32_t node, std::span<const float> q, TopK& best) const;

    std::shared_ptr<const Dataset> data_;
    size_t leaf_size_;
    std::vector<uint32_t> rows_;  // permutation of row indices
    std::vector<Node> nodes_;
};

/// Ball tree: every node stores the centroid and covering radius of its
/// points; pruning by the triangle inequality keeps queries exact.
class BallTree {
public:
    static constexpr size_t kDefaultLeafSize = 16;

    BallTree(std::shared_ptr<const Dataset> data, size_t leaf_size = kDefaultLeafSize);

    std::vector<Neighbor> query(std::span<const float> q, size_t topk) const;

    double root_radius() const { return nodes_.empty() ? 0.0 : nodes_[0].radius; }

private:
    struct Node {
        std::vector<double> centroid;
        double radius = 0.0;
        int32_t left = -1;   // -1 marks a leaf
        int32_t right = -1;
        uint32_t begin = 0;
        uint32_t end = 0;
    };

    uint32_t build(uint32_t begin, uint32_t end);
    void search(uint32_t node, std::span<const float> q, TopK& best) const;

    std::shared_ptr<const Dataset> data_;
    size_t leaf_size_;
    std::vector<uint32_t> rows_;
    std::vector<Node> nodes_;
};

}  // namespace llsh
