#ifndef GMAP_RTREE_HPP
#define GMAP_RTREE_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gmap/gaussian.hpp"
#include "gmap/geometry.hpp"

namespace gmap {

struct RTreeStats {
    std::uint64_t nodes_visited = 0;
    std::uint64_t leaf_hits = 0;  // leaf nodes visited by searches
    std::uint64_t inserts = 0;
    std::uint64_t removals = 0;
    std::uint64_t searches = 0;
    std::uint64_t bytes_touched = 0;
};

// One node fetch, for the cache simulator. Addresses are synthetic: each node
// occupies a fixed slot of slot_bytes() at uid * slot_bytes().
struct NodeAccess {
    std::uint64_t address = 0;
    std::uint32_t bytes = 0;
};

// Dynamic R-tree over Gaussian bounding boxes.
//
// Overflowing nodes first force-reinsert their furthest entries (once per
// level per insertion), then split along the axis with the smallest margin
// sum at the prefix/suffix cut with the least cover overlap. Descent picks
// the child gaining the least sibling overlap. Every policy breaks ties by a
// fixed order (lower axis, lower index, smaller volume), so identical
// operation sequences produce identical trees.
//
// Visit accounting: a search touches the root unconditionally plus every
// non-root node whose box intersects the query. Inserts and removals touch
// the nodes on their descent/condense paths. Every touch adds the node byte
// model (16 + 28 * children) to bytes_touched and, when a trace sink is set,
// appends one NodeAccess.
//
// Single writer; concurrent readers only between mutations.
class RTree {
public:
    explicit RTree(int node_max = 8);
    ~RTree();
    RTree(RTree&&) noexcept;
    RTree& operator=(RTree&&) noexcept;
    RTree(const RTree&) = delete;
    RTree& operator=(const RTree&) = delete;

    void insert(GaussianId id, const Aabb& box);
    void remove(GaussianId id);
    bool contains(GaussianId id) const;

    // Stored box of an entry; throws InvariantError for unknown ids.
    Aabb entry_box(GaussianId id) const;

    // Exactly the ids whose stored boxes intersect the query (closed boxes,
    // touching counts).
    std::vector<GaussianId> search(const Aabb& query) const;

    // Sequential searches; returns per-query results and the total
    // nodes_visited delta.
    std::pair<std::vector<std::vector<GaussianId>>, std::uint64_t> visits_for(
        std::span<const Aabb> queries) const;

    std::size_t size() const { return entry_where_.size(); }
    int height() const;
    Aabb root_box() const;

    int node_max() const { return node_max_; }
    int node_min() const { return node_min_; }
    std::uint32_t slot_bytes() const { return 16 + 28 * static_cast<std::uint32_t>(node_max_); }

    const RTreeStats& stats() const { return stats_; }
    void reset_stats() { stats_ = RTreeStats{}; }

    // Sink for node fetches; owned by the caller, may be null.
    void set_trace(std::vector<NodeAccess>* sink) { trace_ = sink; }

    // Full structural audit: fill factors, equal leaf depth, parent-box
    // tightness, entry map consistency. Throws InvariantError on violation.
    void audit() const;

    // Test support: build an explicit structure (boxes are recomputed tight).
    // A structure node is a leaf when it carries entries, internal otherwise.
    struct StructureSpec {
        std::vector<StructureSpec> children;
        std::vector<std::pair<GaussianId, Aabb>> entries;
    };
    static RTree from_structure(int node_max, const StructureSpec& structure);

private:
    struct Node;
    struct ActionGuard;

    void touch(const Node* n) const;
    Node* choose_subtree(const Aabb& box, int target_height) const;
    void insert_entry(GaussianId id, const Aabb& box);
    void insert_node(std::unique_ptr<Node> subtree);
    void handle_overflow(Node* node);
    void force_reinsert(Node* node);
    std::unique_ptr<Node> split(Node* node);
    void adjust_upward(Node* node);
    void condense(Node* leaf);
    void search_node(const Node* n, const Aabb& query, std::vector<GaussianId>& out) const;

    int node_max_;
    int node_min_;
    std::unique_ptr<Node> root_;
    std::unordered_map<GaussianId, Node*> entry_where_;
    std::uint64_t next_uid_ = 0;
    int action_depth_ = 0;
    std::vector<char> reinsert_done_;  // per level, reset at each action
    mutable RTreeStats stats_;
    mutable std::vector<NodeAccess>* trace_ = nullptr;
};

}  // namespace gmap

#endif
