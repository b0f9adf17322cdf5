#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "treebsde/scalar.hpp"

namespace treebsde {

struct BudgetExceeded : std::runtime_error {
    std::uint64_t count;  // saturates at UINT64_MAX
    BudgetExceeded(std::uint64_t count_, std::uint64_t budget)
        : std::runtime_error("stopping-time enumeration refused: count " +
                             (count_ == std::numeric_limits<std::uint64_t>::max()
                                  ? std::string(">= 2^64")
                                  : std::to_string(count_)) +
                             " exceeds budget " + std::to_string(budget)),
          count(count_) {}
};

/// Finite filtered event tree: nodes indexed 0..size-1 with node 0 the root,
/// parents listed before children, all leaves at the terminal time index.
template <class S>
struct EventTree {
    struct Node {
        int id = 0;
        int k = 0;        // time index
        int parent = -1;  // -1 for the root
        std::vector<int> children;
    };

    std::vector<Node> nodes;
    std::vector<S> branch_prob;           // indexed by child node id; prob of edge parent->child
    std::vector<std::vector<S>> prices;   // per node, d entries
    std::vector<S> time_grid;             // t_0 = 0 < ... < t_N

    int size() const { return static_cast<int>(nodes.size()); }
    int depth() const { return static_cast<int>(time_grid.size()) - 1; }
    int asset_count() const { return prices.empty() ? 0 : static_cast<int>(prices[0].size()); }
    bool is_leaf(int id) const { return nodes[id].children.empty(); }
    S dt(int k) const { return time_grid[k + 1] - time_grid[k]; }
    S max_dt() const {
        S m(0);
        for (int k = 0; k + 1 < static_cast<int>(time_grid.size()); ++k) m = max_val(m, dt(k));
        return m;
    }

    std::vector<int> leaves() const {
        std::vector<int> out;
        for (const auto& n : nodes)
            if (n.children.empty()) out.push_back(n.id);
        return out;
    }

    /// Largest first-asset price over all nodes; used for Lipschitz-in-z bounds.
    S max_price() const {
        S m(0);
        for (const auto& p : prices)
            for (const auto& v : p) m = max_val(m, abs_val(v));
        return m;
    }

    void validate() const {
        if (nodes.empty()) throw std::invalid_argument("empty tree");
        if (nodes[0].parent != -1) throw std::invalid_argument("node 0 must be the root");
        const int n_levels = static_cast<int>(time_grid.size());
        if (n_levels < 2) throw std::invalid_argument("time grid needs at least two points");
        for (int k = 0; k + 1 < n_levels; ++k)
            if (!(time_grid[k] < time_grid[k + 1]))
                throw std::invalid_argument("time grid must be strictly increasing");
        for (const auto& nd : nodes) {
            if (nd.id != &nd - nodes.data()) throw std::invalid_argument("node id mismatch");
            if (nd.parent >= 0) {
                if (nd.parent >= nd.id) throw std::invalid_argument("parent must precede child");
                if (nodes[nd.parent].k + 1 != nd.k) throw std::invalid_argument("child time index must be parent+1");
            } else if (nd.id != 0) {
                throw std::invalid_argument("exactly one root allowed");
            }
            if (!nd.children.empty() && nd.children.size() < 2)
                throw std::invalid_argument("non-leaf nodes need at least 2 children");
            if (nd.children.empty() && nd.k != n_levels - 1)
                throw std::invalid_argument("all leaves must sit at the terminal time index");
            if (!nd.children.empty()) {
                S total(0);
                for (int c : nd.children) {
                    if (!(branch_prob[c] > S(0)))
                        throw std::invalid_argument("branch probabilities must be positive");
                    total += branch_prob[c];
                }
                if (!(abs_val(total - S(1)) <= S(0)) && !is_rational_v<S>) {
                    if (to_double(abs_val(total - S(1))) > 1e-12)
                        throw std::invalid_argument("child probabilities must sum to 1");
                } else if (is_rational_v<S> && total != S(1)) {
                    throw std::invalid_argument("child probabilities must sum to 1");
                }
            }
        }
        if (prices.size() != nodes.size()) throw std::invalid_argument("prices must cover every node");
        const std::size_t d = prices[0].size();
        for (const auto& p : prices)
            if (p.size() != d) throw std::invalid_argument("inconsistent asset dimension");
    }
};

/// Node-indexed real-valued process.
template <class S>
struct AdaptedProcess {
    std::vector<S> values;

    AdaptedProcess() = default;
    explicit AdaptedProcess(int n, const S& fill = S(0)) : values(static_cast<std::size_t>(n), fill) {}

    S& operator[](int id) { return values[static_cast<std::size_t>(id)]; }
    const S& operator[](int id) const { return values[static_cast<std::size_t>(id)]; }
    int size() const { return static_cast<int>(values.size()); }
};

/// Step-indexed process: the value for the step (k -> k+1) is attached to the
/// time-k node and is constant across that step. Entries at leaves are unused.
template <class S>
struct PredictableProcess {
    std::vector<std::vector<S>> values;  // per step-start node, one entry per asset

    PredictableProcess() = default;
    PredictableProcess(int n, int d) : values(static_cast<std::size_t>(n), std::vector<S>(static_cast<std::size_t>(d), S(0))) {}

    std::vector<S>& operator[](int id) { return values[static_cast<std::size_t>(id)]; }
    const std::vector<S>& operator[](int id) const { return values[static_cast<std::size_t>(id)]; }
    int size() const { return static_cast<int>(values.size()); }
};

/// Exercise rule: an antichain of nodes meeting every root-to-leaf path once.
struct StoppingTime {
    std::vector<int> stop_set;  // sorted node ids

    bool stops_at(int id) const {
        return std::binary_search(stop_set.begin(), stop_set.end(), id);
    }
    void normalize() { std::sort(stop_set.begin(), stop_set.end()); }
};

template <class S>
bool validate_stopping_time(const EventTree<S>& tree, const StoppingTime& st) {
    std::vector<char> stop(static_cast<std::size_t>(tree.size()), 0);
    for (int id : st.stop_set) {
        if (id < 0 || id >= tree.size()) return false;
        stop[static_cast<std::size_t>(id)] = 1;
    }
    // DFS counting stops along each path: exactly one per root-to-leaf path,
    // which rules out both ancestor pairs and uncovered paths.
    std::function<bool(int, int)> walk = [&](int id, int seen) -> bool {
        seen += stop[static_cast<std::size_t>(id)];
        if (seen > 1) return false;
        if (tree.is_leaf(id)) return seen == 1;
        for (int c : tree.nodes[id].children)
            if (!walk(c, seen)) return false;
        return true;
    };
    return walk(0, 0);
}

/// Builds a non-recombining binomial tree: node price = s0 * u^#ups * d^#downs.
template <class S>
EventTree<S> build_binomial(const S& s0, const S& u, const S& d, int n_steps,
                            const S& maturity, const S& p_up) {
    if (!(u > d) || !(d > S(0))) throw std::invalid_argument("build_binomial: need u > d > 0");
    if (!(s0 > S(0))) throw std::invalid_argument("build_binomial: need s0 > 0");
    if (n_steps < 1) throw std::invalid_argument("build_binomial: need at least one step");
    if (!(p_up > S(0)) || !(p_up < S(1))) throw std::invalid_argument("build_binomial: p_up must lie in (0,1)");
    if (!(maturity > S(0))) throw std::invalid_argument("build_binomial: maturity must be positive");

    EventTree<S> tree;
    tree.time_grid.resize(static_cast<std::size_t>(n_steps) + 1);
    for (int k = 0; k <= n_steps; ++k)
        tree.time_grid[static_cast<std::size_t>(k)] = maturity * S(k) / S(n_steps);

    tree.nodes.push_back({0, 0, -1, {}});
    tree.branch_prob.push_back(S(1));
    tree.prices.push_back({s0});
    std::vector<int> level{0};
    for (int k = 0; k < n_steps; ++k) {
        std::vector<int> next;
        for (int id : level) {
            const S s = tree.prices[static_cast<std::size_t>(id)][0];
            for (int b = 0; b < 2; ++b) {
                const int cid = tree.size();
                tree.nodes.push_back({cid, k + 1, id, {}});
                tree.nodes[static_cast<std::size_t>(id)].children.push_back(cid);
                tree.branch_prob.push_back(b == 0 ? p_up : S(1) - p_up);
                tree.prices.push_back({b == 0 ? s * u : s * d});
                next.push_back(cid);
            }
        }
        level = std::move(next);
    }
    tree.validate();
    return tree;
}

/// Probability-weighted average of child values at a non-leaf node.
template <class S>
S conditional_expectation(const EventTree<S>& tree, const AdaptedProcess<S>& values, int node) {
    if (tree.is_leaf(node)) throw std::invalid_argument("conditional_expectation: leaf node");
    S acc(0);
    for (int c : tree.nodes[node].children) acc += tree.branch_prob[c] * values[c];
    return acc;
}

namespace detail {

inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
        return std::numeric_limits<std::uint64_t>::max();
    return a * b;
}

inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
    if (b > std::numeric_limits<std::uint64_t>::max() - a)
        return std::numeric_limits<std::uint64_t>::max();
    return a + b;
}

}  // namespace detail

/// Counts adapted stopping times on the subtree of `node` with stopping
/// allowed from `from_k` on: f(leaf) = 1, f(v) = 1 + prod_children f(c).
/// Saturates at UINT64_MAX.
template <class S>
std::uint64_t count_stopping_times(const EventTree<S>& tree, int node, int from_k) {
    if (tree.is_leaf(node)) return 1;
    std::uint64_t prod = 1;
    for (int c : tree.nodes[node].children)
        prod = detail::sat_mul(prod, count_stopping_times(tree, c, from_k));
    if (tree.nodes[node].k >= from_k) return detail::sat_add(1, prod);
    return prod;
}

/// Exhaustive enumeration of the stopping times with values at or after
/// time index `from_k`. Refuses loudly when the count exceeds the budget.
template <class S>
std::vector<StoppingTime> enumerate_stopping_times(const EventTree<S>& tree, int from_k,
                                                   std::uint64_t budget) {
    const std::uint64_t count = count_stopping_times(tree, 0, from_k);
    if (count > budget) throw BudgetExceeded(count, budget);

    std::function<std::vector<std::vector<int>>(int)> gen = [&](int id) {
        std::vector<std::vector<int>> out;
        const auto& nd = tree.nodes[static_cast<std::size_t>(id)];
        if (tree.is_leaf(id)) {
            out.push_back({id});
            return out;
        }
        if (nd.k >= from_k) out.push_back({id});
        std::vector<std::vector<std::vector<int>>> per_child;
        per_child.reserve(nd.children.size());
        for (int c : nd.children) per_child.push_back(gen(c));
        std::vector<std::size_t> idx(nd.children.size(), 0);
        for (;;) {
            std::vector<int> combo;
            for (std::size_t j = 0; j < idx.size(); ++j)
                combo.insert(combo.end(), per_child[j][idx[j]].begin(), per_child[j][idx[j]].end());
            out.push_back(std::move(combo));
            std::size_t j = 0;
            while (j < idx.size() && ++idx[j] == per_child[j].size()) idx[j++] = 0;
            if (j == idx.size()) break;
        }
        return out;
    };

    std::vector<StoppingTime> result;
    result.reserve(static_cast<std::size_t>(count));
    for (auto& s : gen(0)) {
        StoppingTime st{std::move(s)};
        st.normalize();
        result.push_back(std::move(st));
    }
    return result;
}

/// Cumulative sum of per-node increments strictly above `node` on its path.
template <class S>
S path_sum_exclusive(const EventTree<S>& tree, const AdaptedProcess<S>& increments, int node) {
    S acc(0);
    for (int p = tree.nodes[node].parent; p >= 0; p = tree.nodes[p].parent) acc += increments[p];
    return acc;
}

}  // namespace treebsde
