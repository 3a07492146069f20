#pragma once

// Randomized hierarchical clustering trees over the class signatures and a
// best-first search over several such trees sharing one priority queue. The
// search returns a reduced candidate set S(r) of at most L_max classes, and
// detect_lsl runs the Bernoulli detector over that set only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <vector>

#include "onebit/bernoulli.hpp"
#include "onebit/binary_observation.hpp"
#include "onebit/error.hpp"
#include "onebit/netsim.hpp"

namespace onebit {

/// A node of a clustering tree. Every node except the root carries the pivot
/// signature it was clustered around; leaves carry their member classes.
struct TreeNode {
    std::optional<ClassIndex> pivot;
    std::vector<std::uint32_t> children;  // indices into ClusterTree::nodes
    std::vector<ClassIndex> members;      // leaves only

    bool is_leaf() const noexcept { return children.empty(); }
};

struct ClusterTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    const TreeNode& root() const { return nodes.front(); }

    std::vector<std::vector<ClassIndex>> leaves() const {
        std::vector<std::vector<ClassIndex>> out;
        for (const auto& n : nodes)
            if (n.is_leaf()) out.push_back(n.members);
        return out;
    }

    std::size_t depth() const { return depth_from(0); }

private:
    std::size_t depth_from(std::uint32_t i) const {
        std::size_t d = 0;
        for (const auto ch : nodes[i].children) d = std::max(d, depth_from(ch));
        return nodes[i].is_leaf() ? 0 : d + 1;
    }
};

struct BuildStats {
    std::size_t distance_evals = 0;
};

namespace detail {

template <class Rng>
class TreeBuilder {
public:
    TreeBuilder(const std::vector<BinaryObservation>& signatures, std::size_t branching, Rng& rng, BuildStats* stats)
        : sig_(signatures), branching_(branching), rng_(rng), stats_(stats) {}

    ClusterTree build(std::vector<ClassIndex> members) {
        ClusterTree tree;
        nodes_ = &tree.nodes;
        build_node(std::move(members), std::nullopt);
        return tree;
    }

private:
    std::uint32_t build_node(std::vector<ClassIndex> members, std::optional<ClassIndex> pivot) {
        const auto index = static_cast<std::uint32_t>(nodes_->size());
        nodes_->push_back(TreeNode{pivot, {}, {}});
        if (members.size() < branching_) {
            (*nodes_)[index].members = std::move(members);
            return index;
        }

        // J distinct random pivots; each starts its own cluster so every
        // cluster is nonempty and strictly smaller than the parent.
        std::vector<std::size_t> positions(members.size());
        std::iota(positions.begin(), positions.end(), std::size_t{0});
        std::vector<std::size_t> chosen;
        chosen.reserve(branching_);
        std::sample(positions.begin(), positions.end(), std::back_inserter(chosen), branching_, rng_);

        std::vector<char> is_pivot(members.size(), 0);
        std::vector<std::vector<ClassIndex>> clusters(branching_);
        for (std::size_t p = 0; p < chosen.size(); ++p) {
            is_pivot[chosen[p]] = 1;
            clusters[p].push_back(members[chosen[p]]);
        }
        for (std::size_t j = 0; j < members.size(); ++j) {
            if (is_pivot[j]) continue;
            const auto& s = sig_[members[j].value];
            std::size_t best = 0;
            std::size_t best_dist = std::numeric_limits<std::size_t>::max();
            for (std::size_t p = 0; p < chosen.size(); ++p) {
                const auto d = hamming_distance(s, sig_[members[chosen[p]].value]);
                if (d < best_dist) {
                    best_dist = d;
                    best = p;
                }
            }
            if (stats_) stats_->distance_evals += chosen.size();
            clusters[best].push_back(members[j]);
        }
        members.clear();
        members.shrink_to_fit();

        for (std::size_t p = 0; p < clusters.size(); ++p) {
            const ClassIndex centroid = clusters[p].front();
            const auto child = build_node(std::move(clusters[p]), centroid);
            (*nodes_)[index].children.push_back(child);
        }
        return index;
    }

    const std::vector<BinaryObservation>& sig_;
    std::size_t branching_;
    Rng& rng_;
    BuildStats* stats_;
    std::vector<TreeNode>* nodes_ = nullptr;
};

inline std::vector<ClassIndex> all_classes(std::size_t count) {
    std::vector<ClassIndex> v(count);
    for (std::uint32_t c = 0; c < count; ++c) v[c] = ClassIndex{c};
    return v;
}

template <class Rng>
std::mt19937_64 tree_generator(Rng& rng, std::size_t tree) {
    std::seed_seq seq{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                      static_cast<std::uint32_t>(tree)};
    return std::mt19937_64(seq);
}

}  // namespace detail

/// One hierarchical clustering tree: fewer than J elements make a leaf;
/// otherwise J random pivots split the set by nearest-pivot Hamming distance
/// (lowest pivot index on ties) and each cluster is split recursively.
template <class Rng>
ClusterTree build_tree(const std::vector<BinaryObservation>& signatures, std::vector<ClassIndex> members,
                       std::size_t branching, Rng& rng, BuildStats* stats = nullptr) {
    if (branching < 2) throw ContractViolation("build_tree: J must be >= 2");
    if (members.empty()) throw ContractViolation("build_tree: empty signature set");
    for (const auto c : members)
        if (c.value >= signatures.size()) throw ContractViolation("build_tree: class index outside signature table");
    return detail::TreeBuilder<Rng>(signatures, branching, rng, stats).build(std::move(members));
}

template <class Rng>
ClusterTree build_tree(const std::vector<BinaryObservation>& signatures, std::size_t branching, Rng& rng,
                       BuildStats* stats = nullptr) {
    return build_tree(signatures, detail::all_classes(signatures.size()), branching, rng, stats);
}

/// W independently randomized trees over one signature table.
class ClusterForest {
public:
    ClusterForest(std::vector<BinaryObservation> signatures, std::vector<ClusterTree> trees, std::size_t branching)
        : signatures_(std::move(signatures)), trees_(std::move(trees)), branching_(branching) {
        if (trees_.empty()) throw ContractViolation("forest needs at least one tree");
    }

    const std::vector<BinaryObservation>& signatures() const noexcept { return signatures_; }
    const std::vector<ClusterTree>& trees() const noexcept { return trees_; }
    std::size_t branching() const noexcept { return branching_; }
    std::size_t tree_count() const noexcept { return trees_.size(); }
    std::size_t class_count() const noexcept { return signatures_.size(); }

private:
    std::vector<BinaryObservation> signatures_;
    std::vector<ClusterTree> trees_;
    std::size_t branching_;
};

/// Each tree gets its own generator seeded from `rng`, so trees are independent
/// and a tree's shape does not depend on how the others were built.
template <class Rng>
ClusterForest build_forest(std::vector<BinaryObservation> signatures, std::size_t branching, std::size_t tree_count,
                           Rng& rng, BuildStats* stats = nullptr) {
    if (tree_count == 0) throw ContractViolation("build_forest: W must be >= 1");
    if (signatures.empty()) throw ContractViolation("build_forest: empty signature set");
    const auto n = signatures.front().size();
    for (const auto& s : signatures)
        if (s.size() != n) throw ContractViolation("build_forest: signatures differ in length");
    std::vector<ClusterTree> trees;
    trees.reserve(tree_count);
    for (std::size_t w = 0; w < tree_count; ++w) {
        auto tree_rng = detail::tree_generator(rng, w);
        trees.push_back(build_tree(signatures, branching, tree_rng, stats));
    }
    return ClusterForest(std::move(signatures), std::move(trees), branching);
}

struct SearchStats {
    std::size_t centroid_evals = 0;   // query-to-pivot distances during traversal
    std::size_t candidate_evals = 0;  // query-to-candidate distances for the final ordering
    std::size_t scoring_evals = 0;    // Bernoulli scores computed by detect_lsl
    std::size_t examined = 0;         // distinct signatures collected
    std::size_t leaves_visited = 0;

    std::size_t distance_evals() const noexcept { return centroid_evals + candidate_evals + scoring_evals; }

    SearchStats& operator+=(const SearchStats& o) noexcept {
        centroid_evals += o.centroid_evals;
        candidate_evals += o.candidate_evals;
        scoring_evals += o.scoring_evals;
        examined += o.examined;
        leaves_visited += o.leaves_visited;
        return *this;
    }
};

/// Per-query state of the multi-tree best-first search: the shared queue of
/// pending nodes ordered by (Hamming distance to the query, insertion order),
/// the collected candidates, and the examined count against the budget.
class SearchState {
public:
    SearchState(const ClusterForest& forest, const BinaryObservation& query, std::size_t budget)
        : forest_(forest), query_(query), budget_(budget), seen_(forest.class_count(), 0) {}

    bool exhausted() const noexcept { return examined_ >= budget_; }
    bool queue_empty() const noexcept { return queue_.empty(); }
    std::size_t examined() const noexcept { return examined_; }
    const std::vector<ClassIndex>& collected() const noexcept { return results_; }
    const SearchStats& stats() const noexcept { return stats_; }

    /// Greedy descent from `node`: at each internal node move to the child whose
    /// pivot is closest to the query (lowest child index on ties) and queue the rest.
    void traverse(std::uint32_t tree, std::uint32_t node) {
        const auto& nodes = forest_.trees()[tree].nodes;
        while (!nodes[node].is_leaf()) {
            const auto& children = nodes[node].children;
            scratch_.resize(children.size());
            std::size_t best = 0;
            for (std::size_t i = 0; i < children.size(); ++i) {
                const auto pivot = *nodes[children[i]].pivot;
                scratch_[i] = hamming_distance(query_, forest_.signatures()[pivot.value]);
                if (scratch_[i] < scratch_[best]) best = i;
            }
            stats_.centroid_evals += children.size();
            for (std::size_t i = 0; i < children.size(); ++i)
                if (i != best) queue_.push(Entry{scratch_[i], sequence_++, tree, children[i]});
            node = children[best];
        }
        ++stats_.leaves_visited;
        for (const auto c : nodes[node].members) {
            if (seen_[c.value]) continue;
            seen_[c.value] = 1;
            results_.push_back(c);
            ++examined_;
        }
        stats_.examined = examined_;
    }

    /// Pops the closest queued node and descends from it.
    void step() {
        const Entry top = queue_.top();
        queue_.pop();
        traverse(top.tree, top.node);
    }

    /// Collected candidates ordered by ascending Hamming distance (lowest class
    /// index on ties), truncated to the budget.
    std::vector<ClassIndex> finish() {
        std::vector<std::pair<std::size_t, ClassIndex>> ranked;
        ranked.reserve(results_.size());
        for (const auto c : results_) ranked.emplace_back(hamming_distance(query_, forest_.signatures()[c.value]), c);
        stats_.candidate_evals += ranked.size();
        std::sort(ranked.begin(), ranked.end());
        if (ranked.size() > budget_) ranked.resize(budget_);
        std::vector<ClassIndex> out;
        out.reserve(ranked.size());
        for (const auto& [d, c] : ranked) out.push_back(c);
        return out;
    }

private:
    struct Entry {
        std::size_t distance;
        std::uint64_t sequence;
        std::uint32_t tree;
        std::uint32_t node;

        bool operator>(const Entry& o) const noexcept {
            return distance != o.distance ? distance > o.distance : sequence > o.sequence;
        }
    };

    const ClusterForest& forest_;
    const BinaryObservation& query_;
    std::size_t budget_;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue_;
    std::vector<ClassIndex> results_;
    std::vector<char> seen_;
    std::vector<std::size_t> scratch_;
    std::uint64_t sequence_ = 0;
    std::size_t examined_ = 0;
    SearchStats stats_;
};

/// Reduced search space S(r): descend every tree once, then keep expanding the
/// closest queued node until the queue drains or L_max distinct signatures
/// have been collected. The budget is checked between leaf visits of that
/// loop; the initial descents always run, so wide leaves may overshoot it.
inline std::vector<ClassIndex> search_forest(const ClusterForest& forest, const BinaryObservation& r,
                                             std::size_t max_candidates, SearchStats* stats = nullptr) {
    if (max_candidates == 0 || max_candidates > forest.class_count())
        throw ContractViolation("search_forest: L_max must lie in [1, m^K]");
    detail::require(r.size() == forest.signatures().front().size(), "search_forest: observation length mismatch");

    SearchState state(forest, r, max_candidates);
    for (std::uint32_t t = 0; t < forest.tree_count(); ++t) state.traverse(t, 0);
    while (!state.queue_empty() && !state.exhausted()) state.step();
    auto out = state.finish();
    if (stats) *stats += state.stats();
    return out;
}

/// Bernoulli detector restricted to the forest's reduced search space.
inline ClassIndex detect_lsl(const BinaryObservation& r, const ClusterForest& forest, const BernoulliParams& params,
                             std::size_t max_candidates, SearchStats* stats = nullptr,
                             BernoulliScoring mode = BernoulliScoring::weighted_hamming) {
    detail::require(forest.class_count() == params.class_count(), "detect_lsl: forest/params class count mismatch");
    SearchStats local;
    const auto candidates = search_forest(forest, r, max_candidates, &local);
    local.scoring_evals += candidates.size();
    if (stats) *stats += local;
    return detect_bernoulli(r, params, candidates, mode);
}

/// Closed-form operation counts without hidden constants:
///   search ~ N * L_max * (K log_J m + 1)
///   build  ~ m^K * N * J * W * K log_J m
/// Measured distance evaluations of one detect_lsl query stay below this
/// multiple of search_ops / N (worst case seen: about 2.1 at J=4, W=4 and
/// 2.8 at J=8; see tests/acceptance).
inline constexpr double search_cost_constant = 4.0;

struct ComplexityEstimate {
    double search_ops = 0.0;
    double build_ops = 0.0;
};

inline ComplexityEstimate complexity_estimate(std::size_t dimension, std::size_t max_candidates,
                                              std::size_t branching, std::size_t sources, std::size_t order,
                                              std::size_t tree_count) {
    if (dimension == 0 || max_candidates == 0 || branching < 2 || sources == 0 || order == 0 || tree_count == 0)
        throw ContractViolation("complexity_estimate: arguments must be positive (J >= 2)");
    const double height = static_cast<double>(sources) * std::log(static_cast<double>(order)) /
                          std::log(static_cast<double>(branching));
    const double n = static_cast<double>(dimension);
    ComplexityEstimate e;
    e.search_ops = n * static_cast<double>(max_candidates) * (height + 1.0);
    e.build_ops = std::pow(static_cast<double>(order), static_cast<double>(sources)) * n *
                  static_cast<double>(branching) * static_cast<double>(tree_count) * height;
    return e;
}

}  // namespace onebit
