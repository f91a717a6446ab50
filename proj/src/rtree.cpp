#include "gmap/rtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmap/common.hpp"

namespace gmap {

struct RTree::Node {
    std::uint64_t uid = 0;
    Node* parent = nullptr;
    bool leaf = true;
    Aabb box;
    std::vector<std::unique_ptr<Node>> children;  // internal nodes
    std::vector<Aabb> entry_boxes;                // leaves
    std::vector<GaussianId> entry_ids;

    int count() const {
        return leaf ? static_cast<int>(entry_ids.size()) : static_cast<int>(children.size());
    }

    void recompute_box() {
        box = Aabb();
        if (leaf) {
            for (const auto& b : entry_boxes) box.expand(b);
        } else {
            for (const auto& c : children) box.expand(c->box);
        }
    }
};

namespace {

double enlargement(const Aabb& base, const Aabb& add) {
    return base.merged(add).volume() - base.volume();
}

double overlap_volume(const Aabb& a, const Aabb& b) {
    double v = 1.0;
    for (int i = 0; i < 3; ++i) {
        double lo = std::max(a.lo[i], b.lo[i]);
        double hi = std::min(a.hi[i], b.hi[i]);
        if (hi <= lo) return 0.0;
        v *= hi - lo;
    }
    return v;
}

// Deterministic topological split plan: for each axis consider the sorted
// prefix/suffix distributions with both ends at least min_fill; pick the axis
// with the smallest margin sum, then the distribution with the least overlap
// between the two cover boxes (ties: smaller total volume, then lower split
// position). Sorting is by (lo, hi, index), so identical inputs split
// identically.
std::vector<int> plan_split(const std::vector<Aabb>& boxes, int min_fill) {
    int n = static_cast<int>(boxes.size());

    auto margin = [](const Aabb& b) {
        Vec3 d = b.hi - b.lo;
        return d.x() + d.y() + d.z();
    };

    int best_axis = 0;
    double best_margin_sum = std::numeric_limits<double>::infinity();
    std::vector<std::vector<int>> orders_by_axis(3);

    for (int axis = 0; axis < 3; ++axis) {
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (boxes[a].lo[axis] != boxes[b].lo[axis]) return boxes[a].lo[axis] < boxes[b].lo[axis];
            if (boxes[a].hi[axis] != boxes[b].hi[axis]) return boxes[a].hi[axis] < boxes[b].hi[axis];
            return a < b;
        });
        orders_by_axis[axis] = order;

        // Prefix/suffix cover boxes.
        std::vector<Aabb> pre(n), suf(n);
        Aabb acc;
        for (int i = 0; i < n; ++i) {
            acc.expand(boxes[order[i]]);
            pre[i] = acc;
        }
        acc = Aabb();
        for (int i = n - 1; i >= 0; --i) {
            acc.expand(boxes[order[i]]);
            suf[i] = acc;
        }

        double margin_sum = 0;
        for (int k = min_fill; k <= n - min_fill; ++k) {
            margin_sum += margin(pre[k - 1]) + margin(suf[k]);
        }
        if (margin_sum < best_margin_sum) {
            best_margin_sum = margin_sum;
            best_axis = axis;
        }
    }

    const std::vector<int>& order = orders_by_axis[best_axis];
    std::vector<Aabb> pre(n), suf(n);
    Aabb acc;
    for (int i = 0; i < n; ++i) {
        acc.expand(boxes[order[i]]);
        pre[i] = acc;
    }
    acc = Aabb();
    for (int i = n - 1; i >= 0; --i) {
        acc.expand(boxes[order[i]]);
        suf[i] = acc;
    }

    int best_k = min_fill;
    double best_overlap = std::numeric_limits<double>::infinity();
    double best_volume = std::numeric_limits<double>::infinity();
    for (int k = min_fill; k <= n - min_fill; ++k) {
        double ovl = overlap_volume(pre[k - 1], suf[k]);
        double vol = pre[k - 1].volume() + suf[k].volume();
        if (ovl < best_overlap || (ovl == best_overlap && vol < best_volume)) {
            best_overlap = ovl;
            best_volume = vol;
            best_k = k;
        }
    }

    std::vector<int> group(n, 1);
    for (int i = 0; i < best_k; ++i) group[order[i]] = 0;
    return group;
}

}  // namespace

RTree::RTree(int node_max) : node_max_(node_max), node_min_((node_max + 1) / 2) {
    if (node_max_ < 2) throw ConfigError("rtree fan-out must be at least 2");
    root_ = std::make_unique<Node>();
    root_->uid = next_uid_++;
}

RTree::~RTree() = default;
RTree::RTree(RTree&&) noexcept = default;
RTree& RTree::operator=(RTree&&) noexcept = default;

int RTree::height() const {
    int h = 1;
    const Node* n = root_.get();
    while (!n->leaf) {
        ++h;
        n = n->children.front().get();
    }
    return h;
}

Aabb RTree::root_box() const { return root_->box; }

void RTree::touch(const Node* n) const {
    std::uint32_t bytes = 16 + 28 * static_cast<std::uint32_t>(n->count());
    stats_.nodes_visited++;
    stats_.bytes_touched += bytes;
    if (trace_) trace_->push_back({n->uid * slot_bytes(), bytes});
}

// Descends to the node at target_height. The child that gains the least
// sibling overlap wins; ties fall back to least enlargement, then smallest
// volume, then lowest child index.
RTree::Node* RTree::choose_subtree(const Aabb& box, int target_height) const {
    Node* cur = root_.get();
    int cur_height = height();
    touch(cur);
    while (cur_height > target_height) {
        Node* best = nullptr;
        double best_ovl = std::numeric_limits<double>::infinity();
        double best_enl = std::numeric_limits<double>::infinity();
        double best_vol = std::numeric_limits<double>::infinity();
        for (size_t ci = 0; ci < cur->children.size(); ++ci) {
            Node* c = cur->children[ci].get();
            double enl = enlargement(c->box, box);
            Aabb grown = c->box.merged(box);
            double ovl = 0.0;
            for (size_t cj = 0; cj < cur->children.size(); ++cj) {
                if (cj == ci) continue;
                const Aabb& other = cur->children[cj]->box;
                ovl += overlap_volume(grown, other) - overlap_volume(c->box, other);
            }
            double vol = c->box.volume();
            if (ovl < best_ovl || (ovl == best_ovl && enl < best_enl) ||
                (ovl == best_ovl && enl == best_enl && vol < best_vol)) {
                best = c;
                best_ovl = ovl;
                best_enl = enl;
                best_vol = vol;
            }
        }
        cur = best;
        --cur_height;
        touch(cur);
    }
    return cur;
}

void RTree::insert(GaussianId id, const Aabb& box) {
    if (entry_where_.count(id)) throw InvariantError("rtree: duplicate id");
    stats_.inserts++;
    insert_entry(id, box);
}

// Clears the per-action forced-reinsert flags at the outermost entry point;
// nested insertions triggered by reinsertion share the outer action.
struct RTree::ActionGuard {
    RTree* tree;
    explicit ActionGuard(RTree* t) : tree(t) {
        if (tree->action_depth_++ == 0) {
            std::fill(tree->reinsert_done_.begin(), tree->reinsert_done_.end(), 0);
        }
    }
    ~ActionGuard() { tree->action_depth_--; }
};

void RTree::insert_entry(GaussianId id, const Aabb& box) {
    ActionGuard guard(this);
    Node* leaf = choose_subtree(box, 1);
    leaf->entry_boxes.push_back(box);
    leaf->entry_ids.push_back(id);
    entry_where_[id] = leaf;
    adjust_upward(leaf);
    if (leaf->count() > node_max_) handle_overflow(leaf);
}

void RTree::insert_node(std::unique_ptr<Node> subtree) {
    ActionGuard guard(this);
    int sub_height = 1;
    for (Node* n = subtree.get(); !n->leaf; n = n->children.front().get()) ++sub_height;

    if (sub_height >= height()) {
        // Tree too short to hold it as a child; grow a new root.
        auto new_root = std::make_unique<Node>();
        new_root->uid = next_uid_++;
        new_root->leaf = false;
        root_->parent = new_root.get();
        subtree->parent = new_root.get();
        new_root->children.push_back(std::move(root_));
        new_root->children.push_back(std::move(subtree));
        new_root->recompute_box();
        root_ = std::move(new_root);
        return;
    }

    Node* parent = choose_subtree(subtree->box, sub_height + 1);
    subtree->parent = parent;
    parent->children.push_back(std::move(subtree));
    adjust_upward(parent);
    if (parent->count() > node_max_) handle_overflow(parent);
}

void RTree::handle_overflow(Node* node) {
    // Forced reinsertion, once per level per action: the furthest entries are
    // pulled out and re-routed before falling back to a split.
    if (node->parent != nullptr) {
        int level = 1;
        for (Node* n = node; !n->leaf; n = n->children.front().get()) ++level;
        if (level >= static_cast<int>(reinsert_done_.size())) {
            reinsert_done_.resize(level + 1, 0);
        }
        if (!reinsert_done_[level]) {
            reinsert_done_[level] = 1;
            force_reinsert(node);
            return;
        }
    }

    std::unique_ptr<Node> sibling = split(node);
    touch(node);
    touch(sibling.get());
    Node* parent = node->parent;
    if (!parent) {
        auto new_root = std::make_unique<Node>();
        new_root->uid = next_uid_++;
        new_root->leaf = false;
        Node* old_root = root_.release();
        old_root->parent = new_root.get();
        sibling->parent = new_root.get();
        new_root->children.emplace_back(old_root);
        new_root->children.push_back(std::move(sibling));
        new_root->recompute_box();
        root_ = std::move(new_root);
        return;
    }
    sibling->parent = parent;
    parent->children.push_back(std::move(sibling));
    adjust_upward(parent);
    if (parent->count() > node_max_) handle_overflow(parent);
}

void RTree::force_reinsert(Node* node) {
    int n = node->count();
    int p = std::max(1, (3 * (node_max_ + 1)) / 10);
    if (p >= n) p = 1;

    Vec3 center = 0.5 * (node->box.lo + node->box.hi);
    auto entry_box = [&](int i) -> const Aabb& {
        return node->leaf ? node->entry_boxes[i] : node->children[i]->box;
    };
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double da = (0.5 * (entry_box(a).lo + entry_box(a).hi) - center).squaredNorm();
        double db = (0.5 * (entry_box(b).lo + entry_box(b).hi) - center).squaredNorm();
        if (da != db) return da > db;
        return a < b;
    });
    order.resize(p);  // furthest p entries, ties by lowest index

    if (node->leaf) {
        std::vector<std::pair<GaussianId, Aabb>> pulled;
        for (int idx : order) pulled.emplace_back(node->entry_ids[idx], node->entry_boxes[idx]);
        std::sort(order.begin(), order.end(), std::greater<int>());
        for (int idx : order) {
            node->entry_ids.erase(node->entry_ids.begin() + idx);
            node->entry_boxes.erase(node->entry_boxes.begin() + idx);
        }
        adjust_upward(node);
        touch(node);
        // Close-first reinsertion.
        for (auto it = pulled.rbegin(); it != pulled.rend(); ++it) {
            insert_entry(it->first, it->second);
        }
    } else {
        std::vector<std::unique_ptr<Node>> pulled;
        for (int idx : order) pulled.push_back(std::move(node->children[idx]));
        std::sort(order.begin(), order.end(), std::greater<int>());
        for (int idx : order) node->children.erase(node->children.begin() + idx);
        adjust_upward(node);
        touch(node);
        for (auto it = pulled.rbegin(); it != pulled.rend(); ++it) {
            (*it)->parent = nullptr;
            insert_node(std::move(*it));
        }
    }
}

std::unique_ptr<RTree::Node> RTree::split(Node* node) {
    std::vector<Aabb> boxes;
    if (node->leaf) {
        boxes = node->entry_boxes;
    } else {
        boxes.reserve(node->children.size());
        for (const auto& c : node->children) boxes.push_back(c->box);
    }

    std::vector<int> group = plan_split(boxes, node_min_);

    auto sibling = std::make_unique<Node>();
    sibling->uid = next_uid_++;
    sibling->leaf = node->leaf;

    if (node->leaf) {
        std::vector<Aabb> keep_boxes;
        std::vector<GaussianId> keep_ids;
        for (size_t i = 0; i < boxes.size(); ++i) {
            if (group[i] == 0) {
                keep_boxes.push_back(node->entry_boxes[i]);
                keep_ids.push_back(node->entry_ids[i]);
            } else {
                sibling->entry_boxes.push_back(node->entry_boxes[i]);
                sibling->entry_ids.push_back(node->entry_ids[i]);
                entry_where_[node->entry_ids[i]] = sibling.get();
            }
        }
        node->entry_boxes = std::move(keep_boxes);
        node->entry_ids = std::move(keep_ids);
    } else {
        std::vector<std::unique_ptr<Node>> keep;
        for (size_t i = 0; i < boxes.size(); ++i) {
            if (group[i] == 0) {
                keep.push_back(std::move(node->children[i]));
            } else {
                node->children[i]->parent = sibling.get();
                sibling->children.push_back(std::move(node->children[i]));
            }
        }
        node->children = std::move(keep);
    }
    node->recompute_box();
    sibling->recompute_box();
    return sibling;
}

void RTree::adjust_upward(Node* node) {
    for (Node* n = node; n; n = n->parent) n->recompute_box();
}

void RTree::remove(GaussianId id) {
    auto it = entry_where_.find(id);
    if (it == entry_where_.end()) throw InvariantError("rtree: unknown id");
    stats_.removals++;

    Node* leaf = it->second;
    entry_where_.erase(it);
    for (size_t i = 0; i < leaf->entry_ids.size(); ++i) {
        if (leaf->entry_ids[i] == id) {
            leaf->entry_ids.erase(leaf->entry_ids.begin() + static_cast<long>(i));
            leaf->entry_boxes.erase(leaf->entry_boxes.begin() + static_cast<long>(i));
            break;
        }
    }
    touch(leaf);
    condense(leaf);
}

void RTree::condense(Node* leaf) {
    std::vector<std::pair<GaussianId, Aabb>> orphan_entries;
    std::vector<std::unique_ptr<Node>> orphan_nodes;

    Node* n = leaf;
    while (n->parent) {
        Node* parent = n->parent;
        touch(parent);
        if (n->count() < node_min_) {
            std::unique_ptr<Node> owned;
            for (size_t i = 0; i < parent->children.size(); ++i) {
                if (parent->children[i].get() == n) {
                    owned = std::move(parent->children[i]);
                    parent->children.erase(parent->children.begin() + static_cast<long>(i));
                    break;
                }
            }
            if (owned->leaf) {
                for (size_t i = 0; i < owned->entry_ids.size(); ++i) {
                    orphan_entries.emplace_back(owned->entry_ids[i], owned->entry_boxes[i]);
                    entry_where_.erase(owned->entry_ids[i]);
                }
            } else {
                for (auto& c : owned->children) {
                    c->parent = nullptr;
                    orphan_nodes.push_back(std::move(c));
                }
            }
        } else {
            n->recompute_box();
        }
        n = parent;
    }
    root_->recompute_box();

    while (!root_->leaf && root_->children.size() == 1) {
        std::unique_ptr<Node> child = std::move(root_->children.front());
        child->parent = nullptr;
        root_ = std::move(child);
    }

    for (auto& sub : orphan_nodes) insert_node(std::move(sub));
    for (const auto& [oid, obox] : orphan_entries) insert_entry(oid, obox);
}

bool RTree::contains(GaussianId id) const { return entry_where_.count(id) > 0; }

Aabb RTree::entry_box(GaussianId id) const {
    auto it = entry_where_.find(id);
    if (it == entry_where_.end()) throw InvariantError("rtree: unknown id");
    const Node* leaf = it->second;
    for (size_t i = 0; i < leaf->entry_ids.size(); ++i) {
        if (leaf->entry_ids[i] == id) return leaf->entry_boxes[i];
    }
    throw InvariantError("rtree: entry map points at a leaf without the entry");
}

void RTree::search_node(const Node* n, const Aabb& query, std::vector<GaussianId>& out) const {
    touch(n);
    if (n->leaf) {
        stats_.leaf_hits++;
        for (size_t i = 0; i < n->entry_ids.size(); ++i) {
            if (n->entry_boxes[i].intersects(query)) out.push_back(n->entry_ids[i]);
        }
        return;
    }
    for (const auto& c : n->children) {
        if (c->box.intersects(query)) search_node(c.get(), query, out);
    }
}

std::vector<GaussianId> RTree::search(const Aabb& query) const {
    stats_.searches++;
    std::vector<GaussianId> out;
    search_node(root_.get(), query, out);
    return out;
}

std::pair<std::vector<std::vector<GaussianId>>, std::uint64_t> RTree::visits_for(
    std::span<const Aabb> queries) const {
    std::uint64_t before = stats_.nodes_visited;
    std::vector<std::vector<GaussianId>> results;
    results.reserve(queries.size());
    for (const auto& q : queries) results.push_back(search(q));
    return {std::move(results), stats_.nodes_visited - before};
}

void RTree::audit() const {
    struct Walker {
        const RTree* tree;
        int leaf_depth = -1;
        size_t entries_seen = 0;

        void walk(const Node* n, int depth) {
            bool is_root = (n->parent == nullptr);
            int cnt = n->count();
            if (!is_root && (cnt < tree->node_min_ || cnt > tree->node_max_)) {
                throw InvariantError("rtree audit: fill factor violated");
            }
            if (is_root && !n->leaf && cnt < 2) {
                throw InvariantError("rtree audit: internal root with fewer than 2 children");
            }
            if (n->leaf) {
                if (leaf_depth < 0) leaf_depth = depth;
                if (leaf_depth != depth) {
                    throw InvariantError("rtree audit: leaves at unequal depth");
                }
                Aabb tight;
                for (size_t i = 0; i < n->entry_ids.size(); ++i) {
                    tight.expand(n->entry_boxes[i]);
                    auto it = tree->entry_where_.find(n->entry_ids[i]);
                    if (it == tree->entry_where_.end() || it->second != n) {
                        throw InvariantError("rtree audit: entry map inconsistent");
                    }
                    ++entries_seen;
                }
                if (cnt > 0 && !(tight == n->box)) {
                    throw InvariantError("rtree audit: leaf box not tight");
                }
            } else {
                if (cnt == 0) throw InvariantError("rtree audit: empty internal node");
                Aabb tight;
                for (const auto& c : n->children) {
                    if (c->parent != n) throw InvariantError("rtree audit: bad parent link");
                    tight.expand(c->box);
                    walk(c.get(), depth + 1);
                }
                if (!(tight == n->box)) {
                    throw InvariantError("rtree audit: internal box not tight");
                }
            }
        }
    };

    Walker w{this};
    w.walk(root_.get(), 0);
    if (w.entries_seen != entry_where_.size()) {
        throw InvariantError("rtree audit: entry map size mismatch");
    }
}

RTree RTree::from_structure(int node_max, const StructureSpec& structure) {
    RTree tree(node_max);

    struct Builder {
        RTree* tree;

        std::unique_ptr<Node> build(const StructureSpec& s, Node* parent) {
            auto node = std::make_unique<Node>();
            node->uid = tree->next_uid_++;
            node->parent = parent;
            if (s.children.empty()) {
                node->leaf = true;
                for (const auto& [id, box] : s.entries) {
                    node->entry_ids.push_back(id);
                    node->entry_boxes.push_back(box);
                    tree->entry_where_[id] = node.get();
                }
            } else {
                node->leaf = false;
                for (const auto& child : s.children) {
                    node->children.push_back(build(child, node.get()));
                }
            }
            node->recompute_box();
            return node;
        }
    };

    Builder b{&tree};
    tree.root_ = b.build(structure, nullptr);
    tree.audit();
    return tree;
}

}  // namespace gmap
