#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace llsh {

/// One answer of a k-nearest-neighbor query.
struct Neighbor {
    uint32_t id = 0;
    double dist = 0.0;

    bool operator==(const Neighbor&) const = default;
};

// Ordering used everywhere: distance ascending, ties broken by id ascending.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.id < b.id;
}

/// Bounded collector keeping the k smallest (dist, id) pairs seen so far.
/// Max-heap on (dist, id); worst() is the current k-th best.
class TopK {
public:
    explicit TopK(size_t k) : k_(k) { heap_.reserve(k); }

    void push(uint32_t id, double dist) {
        Neighbor cand{id, dist};
        if (heap_.size() < k_) {
            heap_.push_back(cand);
            std::push_heap(heap_.begin(), heap_.end(), neighbor_less);
        } else if (k_ > 0 && neighbor_less(cand, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), neighbor_less);
            heap_.back() = cand;
            std::push_heap(heap_.begin(), heap_.end(), neighbor_less);
        }
    }

    bool full() const { return heap_.size() >= k_; }

    // Only meaningful when full(): distance of the current k-th best.
    double worst_dist() const { return heap_.front().dist; }

    /// Destructive: returns the collected neighbors sorted ascending.
    std::vector<Neighbor> take_sorted() {
        std::sort_heap(heap_.begin(), heap_.end(), neighbor_less);
        return std::move(heap_);
    }

private:
    size_t k_;
    std::vector<Neighbor> heap_;
};

}  // namespace llsh
