#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "treebsde/lattice.hpp"
#include "treebsde/scalar.hpp"

namespace treebsde {

/// Nonlinear driver g(t, y, z, state) of the wealth and value dynamics.
///
/// `implicit_solve`, when present, returns the exact root y of
///     y - g(t, y, z) * dt = rhs
/// and is what makes rational-mode solves exact for (piecewise) affine
/// drivers. Without it the backward solver falls back to Picard iteration,
/// which is float-only.
template <class S>
struct Generator {
    using Vec = std::vector<S>;

    std::function<S(const S& t, const S& y, const Vec& z, const Vec& price)> evaluate;
    S lipschitz_y{0};
    S lipschitz_z{0};
    std::string label;
    bool piecewise_linear = false;
    std::function<S(const S& t, const Vec& z, const Vec& price, const S& dt, const S& rhs)> implicit_solve;

    S operator()(const S& t, const S& y, const Vec& z, const Vec& price) const {
        return evaluate(t, y, z, price);
    }
};

template <class S>
struct RateSchedule {
    S r_lend{0};
    S r_borrow{0};

    void check() const {
        if (r_borrow < r_lend) throw std::invalid_argument("RateSchedule: need r_borrow >= r_lend");
    }
};

/// Cumulative contract cash flows A with A_0 = 0, restricted to predictable
/// step increments: the increment over (t_k, t_{k+1}] is attached to the
/// time-k node and is the same for all of its children.
template <class S>
struct CashFlowProcess {
    std::vector<S> step_increments;  // indexed by step-start node id; leaf entries unused

    CashFlowProcess() = default;
    explicit CashFlowProcess(int n) : step_increments(static_cast<std::size_t>(n), S(0)) {}

    const S& at(int step_start_node) const { return step_increments[static_cast<std::size_t>(step_start_node)]; }
    S& at(int step_start_node) { return step_increments[static_cast<std::size_t>(step_start_node)]; }
    int size() const { return static_cast<int>(step_increments.size()); }

    CashFlowProcess negated() const {
        CashFlowProcess out = *this;
        for (auto& v : out.step_increments) v = -v;
        return out;
    }

    bool is_zero() const {
        for (const auto& v : step_increments)
            if (!(v == S(0))) return false;
        return true;
    }

    /// Cumulative A at a node: sum of step increments along the path into it.
    template <class Tree>
    S cumulative(const Tree& tree, int node) const {
        S acc(0);
        for (int p = tree.nodes[node].parent; p >= 0; p = tree.nodes[p].parent)
            acc += at(p);
        return acc;
    }
};

template <class S>
struct Endowments {
    S x1{0};  // issuer
    S x2{0};  // holder
};

template <class S>
Generator<S> zero_generator() {
    Generator<S> g;
    g.evaluate = [](const S&, const S&, const std::vector<S>&, const std::vector<S>&) { return S(0); };
    g.lipschitz_y = S(0);
    g.lipschitz_z = S(0);
    g.label = "zero";
    g.piecewise_linear = true;
    g.implicit_solve = [](const S&, const std::vector<S>&, const std::vector<S>&, const S&, const S& rhs) -> S {
        return rhs;
    };
    return g;
}

/// Linear single-rate driver g = -r*y.
template <class S>
Generator<S> discount_generator(const S& r) {
    if (r < S(0)) throw std::invalid_argument("discount_generator: need r >= 0");
    Generator<S> g;
    g.evaluate = [r](const S&, const S& y, const std::vector<S>&, const std::vector<S>&) -> S { return S(-r * y); };
    g.lipschitz_y = r;
    g.lipschitz_z = S(0);
    g.label = "discount";
    g.piecewise_linear = true;
    g.implicit_solve = [r](const S&, const std::vector<S>&, const std::vector<S>&, const S& dt,
                           const S& rhs) -> S {
        // y + r*y*dt = rhs
        return S(rhs / (S(1) + r * dt));
    };
    return g;
}

/// Differential-rate funding driver. With cash position psi = y - z.S:
/// g = -r_lend * psi^+ + r_borrow * psi^-, so that -g dt accrues interest at
/// the side the cash position is actually on.
template <class S>
Generator<S> funding_generator(const RateSchedule<S>& rates, const S& price_bound) {
    rates.check();
    const S rl = rates.r_lend;
    const S rb = rates.r_borrow;
    Generator<S> g;
    g.evaluate = [rl, rb](const S&, const S& y, const std::vector<S>& z, const std::vector<S>& price) -> S {
        S zs(0);
        for (std::size_t j = 0; j < z.size(); ++j) zs += z[j] * price[j];
        const S psi = y - zs;
        if (psi >= S(0)) return S(-rl * psi);
        return S(rb * (-psi));
    };
    g.lipschitz_y = max_val(abs_val(rl), abs_val(rb));
    g.lipschitz_z = max_val(abs_val(rl), abs_val(rb)) * price_bound;
    g.label = "funding";
    g.piecewise_linear = true;
    g.implicit_solve = [rl, rb](const S&, const std::vector<S>& z, const std::vector<S>& price, const S& dt,
                                const S& rhs) {
        S zs(0);
        for (std::size_t j = 0; j < z.size(); ++j) zs += z[j] * price[j];
        // Lending branch: y (1 + rl dt) = rhs + rl zs dt, valid when y >= zs.
        const S y_lend = (rhs + rl * zs * dt) / (S(1) + rl * dt);
        if (y_lend >= zs) return y_lend;
        const S y_borrow = (rhs + rb * zs * dt) / (S(1) + rb * dt);
        return y_borrow;
    };
    return g;
}

/// Stability gate for the implicit backward step and forward monotonicity.
template <class S>
void check_stability(const EventTree<S>& tree, const Generator<S>& gen) {
    if (!(gen.lipschitz_y * tree.max_dt() < S(1)))
        throw std::invalid_argument("stability constraint violated: lipschitz_y * dt must be < 1 (generator '" +
                                    gen.label + "')");
}

/// Explicit forward wealth recursion, Euler at the step's left endpoint:
/// V(c) = V(n) - g(t_k, V(n), xi(n)) dt + xi(n).(S(c) - S(n)) + dA(n).
template <class S>
AdaptedProcess<S> forward_wealth(const EventTree<S>& tree, const S& y0, const PredictableProcess<S>& strategy,
                                 const CashFlowProcess<S>& flows, const Generator<S>& gen) {
    check_stability(tree, gen);
    AdaptedProcess<S> wealth(tree.size());
    wealth[0] = y0;
    for (const auto& nd : tree.nodes) {
        if (nd.children.empty()) continue;
        const auto& xi = strategy[nd.id];
        const auto& sn = tree.prices[static_cast<std::size_t>(nd.id)];
        const S drift = gen(tree.time_grid[static_cast<std::size_t>(nd.k)], wealth[nd.id], xi, sn) * tree.dt(nd.k);
        for (int c : nd.children) {
            S gains(0);
            const auto& sc = tree.prices[static_cast<std::size_t>(c)];
            for (std::size_t j = 0; j < xi.size(); ++j) gains += xi[j] * (sc[j] - sn[j]);
            wealth[c] = wealth[nd.id] - drift + gains + flows.at(nd.id);
        }
    }
    return wealth;
}

/// Deterministic accrual of an untouched initial endowment; the sign of x
/// selects the lending or borrowing account once at time 0.
template <class S>
AdaptedProcess<S> benchmark_wealth(const EventTree<S>& tree, const S& x, const RateSchedule<S>& rates) {
    rates.check();
    const S r = x >= S(0) ? rates.r_lend : rates.r_borrow;
    std::vector<S> by_level(static_cast<std::size_t>(tree.depth()) + 1);
    by_level[0] = x;
    for (int k = 0; k < tree.depth(); ++k)
        by_level[static_cast<std::size_t>(k) + 1] = by_level[static_cast<std::size_t>(k)] * (S(1) + r * tree.dt(k));
    AdaptedProcess<S> out(tree.size());
    for (const auto& nd : tree.nodes) out[nd.id] = by_level[static_cast<std::size_t>(nd.k)];
    return out;
}

template <class S>
struct MonotonicityResult {
    bool ok = true;
    int first_violation_node = -1;
};

/// Strict forward monotonicity in the initial wealth: wealth from y_high must
/// exceed wealth from y_low at every node.
template <class S>
MonotonicityResult<S> verify_forward_monotonicity(const EventTree<S>& tree, const Generator<S>& gen,
                                                  const PredictableProcess<S>& strategy,
                                                  const CashFlowProcess<S>& flows, const S& y_low,
                                                  const S& y_high) {
    if (!(y_high > y_low)) throw std::invalid_argument("verify_forward_monotonicity: need y_high > y_low");
    const auto lo = forward_wealth(tree, y_low, strategy, flows, gen);
    const auto hi = forward_wealth(tree, y_high, strategy, flows, gen);
    for (const auto& nd : tree.nodes)
        if (!(hi[nd.id] > lo[nd.id])) return {false, nd.id};
    return {true, -1};
}

}  // namespace treebsde
