#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "treebsde/evaluation.hpp"
#include "treebsde/generators.hpp"
#include "treebsde/lattice.hpp"

namespace treebsde {

enum class ObstacleSide { lower, upper };

/// Solution (Y, Z, K) of a reflected BSDE on the tree. `k_increments[n]` is
/// the reflection applied at node n itself; the cumulative K used for the
/// break-even and rational-exercise predicates sums the increments strictly
/// before the node, so that reflection at the contact node itself does not
/// disqualify it (the pre-contact jump indicator of the continuous-time
/// Skorokhod condition references the left limit).
template <class S>
struct RbsdeSolution {
    AdaptedProcess<S> y;
    PredictableProcess<S> z;
    AdaptedProcess<S> k_increments;
    ObstacleSide side = ObstacleSide::lower;
    AdaptedProcess<S> obstacle;

    const S& y0() const { return y[0]; }

    /// Cumulative reflection strictly before `node` on its path.
    template <class Tree>
    S k_before(const Tree& tree, int node) const {
        return path_sum_exclusive(tree, k_increments, node);
    }

    /// True when Y touches the obstacle at `node` (reflection or exact tie).
    bool contact(int node, const S& tol) const {
        return abs_val(y[node] - obstacle[node]) <= tol;
    }
};

namespace detail {

template <class S>
RbsdeSolution<S> solve_reflected(const EventTree<S>& tree, const Generator<S>& gen,
                                 const CashFlowProcess<S>& flows, const AdaptedProcess<S>& obstacle,
                                 ObstacleSide side, const SolverConfig<S>& cfg) {
    check_stability(tree, gen);
    if (obstacle.size() != tree.size())
        throw std::invalid_argument("solve_reflected: obstacle must be defined on every node");

    RbsdeSolution<S> sol;
    sol.y = AdaptedProcess<S>(tree.size());
    sol.z = PredictableProcess<S>(tree.size(), tree.asset_count());
    sol.k_increments = AdaptedProcess<S>(tree.size());
    sol.side = side;
    sol.obstacle = obstacle;

    for (int id = tree.size() - 1; id >= 0; --id) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(id)];
        if (nd.children.empty()) {
            sol.y[id] = obstacle[id];
            continue;
        }
        std::vector<S> child_values;
        child_values.reserve(nd.children.size());
        for (int c : nd.children) child_values.push_back(sol.y[c]);
        auto [cand, zv] = one_step_solve(tree, gen, flows, id, child_values, cfg);
        sol.z[id] = std::move(zv);
        if (side == ObstacleSide::lower) {
            sol.y[id] = max_val(cand, obstacle[id]);
            sol.k_increments[id] = sol.y[id] - cand;
        } else {
            sol.y[id] = min_val(cand, obstacle[id]);
            sol.k_increments[id] = cand - sol.y[id];
        }
    }
    return sol;
}

}  // namespace detail

/// Issuer-side RBSDE: Y dominates the lower obstacle, reflection pushes up.
/// The candidate is the plain one-step evaluation of the children values;
/// reflecting after the implicit solve makes the discrete Skorokhod
/// complementarity (Y - X) dK = 0 hold exactly by construction.
template <class S>
RbsdeSolution<S> solve_reflected_lower(const EventTree<S>& tree, const Generator<S>& gen,
                                       const CashFlowProcess<S>& flows, const AdaptedProcess<S>& obstacle,
                                       const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    return detail::solve_reflected(tree, gen, flows, obstacle, ObstacleSide::lower, cfg);
}

/// Holder-side RBSDE: y stays below the upper obstacle, reflection pushes down.
template <class S>
RbsdeSolution<S> solve_reflected_upper(const EventTree<S>& tree, const Generator<S>& gen,
                                       const CashFlowProcess<S>& flows, const AdaptedProcess<S>& obstacle,
                                       const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    return detail::solve_reflected(tree, gen, flows, obstacle, ObstacleSide::upper, cfg);
}

/// First node on each path where Y meets the obstacle. Ties with zero
/// reflection count as contact; equality at the leaves guarantees existence.
template <class S>
StoppingTime first_contact_time(const EventTree<S>& tree, const RbsdeSolution<S>& sol, const S& tol = S(0)) {
    StoppingTime st;
    std::function<void(int)> walk = [&](int id) {
        if (sol.contact(id, tol)) {
            st.stop_set.push_back(id);
            return;
        }
        for (int c : tree.nodes[static_cast<std::size_t>(id)].children) walk(c);
    };
    walk(0);
    st.normalize();
    return st;
}

struct LatestExerciseResult {
    StoppingTime time;
    /// Set when the triggering reflection is a point mass at a returned node,
    /// the discrete analogue of a jump of k at the latest exercise time.
    bool point_mass_caveat = false;
};

/// Latest rational exercise time: per path, the first node whose own
/// reflection increment is positive (cumulative k becomes positive there),
/// or the leaf when k vanishes along the whole path.
template <class S>
LatestExerciseResult latest_exercise_time(const EventTree<S>& tree, const RbsdeSolution<S>& sol,
                                          const S& tol = S(0)) {
    if (sol.side != ObstacleSide::upper)
        throw std::invalid_argument("latest_exercise_time: needs an upper-obstacle solution");
    LatestExerciseResult res;
    std::function<void(int)> walk = [&](int id) {
        if (sol.k_increments[id] > tol) {
            res.time.stop_set.push_back(id);
            res.point_mass_caveat = true;
            return;
        }
        if (tree.is_leaf(id)) {
            res.time.stop_set.push_back(id);
            return;
        }
        for (int c : tree.nodes[static_cast<std::size_t>(id)].children) walk(c);
    };
    walk(0);
    res.time.normalize();
    return res;
}

}  // namespace treebsde
