#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "treebsde/evaluation.hpp"
#include "treebsde/generators.hpp"
#include "treebsde/lattice.hpp"
#include "treebsde/reflected.hpp"

namespace treebsde {

struct TheoremViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Right (dir=+1) or left (dir=-1) secant slope of a piecewise-linear
/// function at x, found by shrinking the probe until two secants agree.
template <class S, class F>
S pl_slope(F&& f, const S& x, const S& fx, S eps, int dir) {
    const S sign = dir >= 0 ? S(1) : S(-1);
    S s_prev = (f(x + sign * eps) - fx) / (sign * eps);
    for (int it = 0; it < 80; ++it) {
        eps /= S(4);
        const S s = (f(x + sign * eps) - fx) / (sign * eps);
        if (s == s_prev) return s;
        s_prev = s;
    }
    throw SolverError("pl_root: secant slope did not stabilize (function not piecewise linear?)");
}

/// Exact root of a continuous, strictly increasing, piecewise-linear
/// function on a bracket with f(lo) <= 0 <= f(hi). Alternates exact secant
/// extrapolation (which terminates once the bracket sits inside one linear
/// piece) with bisection (which guarantees the bracket shrinks).
template <class S, class F>
S pl_root(F&& f, S lo, S hi) {
    S flo = f(lo);
    if (flo == S(0)) return lo;
    S fhi = f(hi);
    if (fhi == S(0)) return hi;
    if (!(flo < S(0)) || !(fhi > S(0))) throw SolverError("pl_root: invalid bracket");
    for (int it = 0; it < 512; ++it) {
        const S span = hi - lo;
        const S slope = pl_slope<S>(f, lo, flo, span / S(4), +1);
        if (!(slope > S(0))) throw SolverError("pl_root: non-increasing piece");
        S cand = lo - flo / slope;
        if (cand > lo && cand < hi) {
            const S fc = f(cand);
            if (fc == S(0)) return cand;
            if (fc < S(0)) {
                lo = cand;
                flo = fc;
            } else {
                hi = cand;
                fhi = fc;
            }
        }
        const S mid = (lo + hi) / S(2);
        const S fm = f(mid);
        if (fm == S(0)) return mid;
        if (fm < S(0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    throw SolverError("pl_root: iteration cap reached");
}

/// Bracketing root search for float mode (Illinois regula falsi), stopping
/// at the bracket tolerance.
template <class F>
double bracket_root(F&& f, double lo, double hi, double xtol, int maxit = 400) {
    double flo = f(lo);
    if (flo == 0.0) return lo;
    double fhi = f(hi);
    if (fhi == 0.0) return hi;
    if (flo > 0.0 || fhi < 0.0) throw SolverError("bracket_root: invalid bracket");
    int side = 0;
    for (int it = 0; it < maxit && hi - lo > xtol; ++it) {
        double c = (flo * hi - fhi * lo) / (flo - fhi);
        if (!(c > lo && c < hi)) c = 0.5 * (lo + hi);
        const double fc = f(c);
        if (fc == 0.0) return c;
        if (fc < 0.0) {
            lo = c;
            flo = fc;
            if (side == -1) fhi *= 0.5;
            side = -1;
        } else {
            hi = c;
            fhi = fc;
            if (side == +1) flo *= 0.5;
            side = +1;
        }
    }
    return 0.5 * (lo + hi);
}

/// Geometric bracket expansion until f changes sign.
template <class S, class F>
void expand_bracket(F&& f, S& lo, S& hi) {
    S span = max_val(hi - lo, S(1));
    for (int it = 0; it < 200 && f(lo) > S(0); ++it) {
        lo -= span;
        span *= S(2);
    }
    span = max_val(hi - lo, S(1));
    for (int it = 0; it < 200 && f(hi) < S(0); ++it) {
        hi += span;
        span *= S(2);
    }
    if (f(lo) > S(0) || f(hi) < S(0)) throw SolverError("bracket expansion failed");
}

}  // namespace detail

/// Minimal initial value v at a binomial node from which one explicit
/// forward step with some hedge slope reaches at least the required value at
/// both children. The equalizing slope is fixed by the requirement spread;
/// v is then the root of a monotone (piecewise-linear for our drivers)
/// function, solved by bracketing bisection in float mode and exactly in
/// rational mode. Independent of the backward-solver code path.
template <class S>
S min_cost_step(const EventTree<S>& tree, const Generator<S>& gen, const CashFlowProcess<S>& flows, int node,
                const S& req_a, const S& req_b, double eps_bisect = 1e-10) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
    if (nd.children.size() != 2 || tree.asset_count() != 1)
        throw SolverError("min_cost_step: needs binomial branching with a single risky asset", node);
    const S sn = tree.prices[static_cast<std::size_t>(node)][0];
    const S ds_a = tree.prices[static_cast<std::size_t>(nd.children[0])][0] - sn;
    const S ds_b = tree.prices[static_cast<std::size_t>(nd.children[1])][0] - sn;
    const S t = tree.time_grid[static_cast<std::size_t>(nd.k)];
    const S dt = tree.dt(nd.k);
    const S a = flows.at(node);
    if (ds_a == ds_b) throw SolverError("min_cost_step: degenerate price spread", node);
    // With both constraints sharing the same funding term, max-min over the
    // slope is attained where the two constraints bind together; that slope
    // depends only on the requirement spread.
    const S z = (req_a - req_b) / (ds_a - ds_b);
    if (!(gen.lipschitz_z * dt < min_val(abs_val(ds_a), abs_val(ds_b))))
        throw SolverError("min_cost_step: driver z-slope dominates the price spread", node);
    const std::vector<S> zvec{z};
    const auto& price = tree.prices[static_cast<std::size_t>(node)];
    auto shortfall = [&](const S& v) -> S {
        return S(v - gen(t, v, zvec, price) * dt + z * ds_a + a - req_a);
    };
    S lo = min_val(req_a, req_b);
    S hi = max_val(req_a, req_b);
    const S pad = S(10) * max_val(hi - lo, S(1)) + abs_val(a) + S(1);
    lo -= pad;
    hi += pad;
    detail::expand_bracket<S>(shortfall, lo, hi);
    if constexpr (is_rational_v<S>) {
        return detail::pl_root<S>(shortfall, lo, hi);
    } else {
        return detail::bracket_root(shortfall, lo, hi, eps_bisect);
    }
}

/// Issuer's minimum superhedging cost by per-node backward recursion: the
/// requirement at a node is the larger of the floor and the minimal value
/// funding both children's requirements.
template <class S>
S min_superhedge_cost(const EventTree<S>& tree, const Generator<S>& gen, const CashFlowProcess<S>& flows,
                      const AdaptedProcess<S>& floor, double eps_bisect = 1e-10) {
    check_stability(tree, gen);
    AdaptedProcess<S> req(tree.size());
    for (int id = tree.size() - 1; id >= 0; --id) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(id)];
        if (nd.children.empty()) {
            req[id] = floor[id];
            continue;
        }
        const S cont = min_cost_step(tree, gen, flows, id, req[nd.children[0]], req[nd.children[1]], eps_bisect);
        req[id] = max_val(floor[id], cont);
    }
    return req[0];
}

template <class S>
struct StoppingSearchResult {
    S value{0};
    std::vector<StoppingTime> optimizers;
    std::uint64_t searched = 0;
};

/// Value of the issuer's optimal stopping problem by exhaustive enumeration;
/// every candidate is priced through solve_bsde, nothing is shared with the
/// reflected solver.
template <class S>
StoppingSearchResult<S> sup_over_stopping_times(const EventTree<S>& tree, const Generator<S>& gen,
                                                const CashFlowProcess<S>& flows, const AdaptedProcess<S>& obstacle,
                                                std::uint64_t budget, const S& tie_tol = S(0),
                                                const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    const auto taus = enumerate_stopping_times(tree, 0, budget);
    StoppingSearchResult<S> res;
    res.searched = taus.size();
    bool first = true;
    std::vector<S> values;
    values.reserve(taus.size());
    for (const auto& tau : taus) {
        const S v = evaluate(tree, gen, flows, tau, obstacle, cfg);
        values.push_back(v);
        if (first || v > res.value) {
            res.value = v;
            first = false;
        }
    }
    for (std::size_t i = 0; i < taus.size(); ++i)
        if (abs_val(values[i] - res.value) <= tie_tol) res.optimizers.push_back(taus[i]);
    return res;
}

/// Holder counterpart: exact infimum over all stopping times.
template <class S>
StoppingSearchResult<S> inf_over_stopping_times(const EventTree<S>& tree, const Generator<S>& gen,
                                                const CashFlowProcess<S>& flows, const AdaptedProcess<S>& obstacle,
                                                std::uint64_t budget, const S& tie_tol = S(0),
                                                const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    const auto taus = enumerate_stopping_times(tree, 0, budget);
    StoppingSearchResult<S> res;
    res.searched = taus.size();
    bool first = true;
    std::vector<S> values;
    values.reserve(taus.size());
    for (const auto& tau : taus) {
        const S v = evaluate(tree, gen, flows, tau, obstacle, cfg);
        values.push_back(v);
        if (first || v < res.value) {
            res.value = v;
            first = false;
        }
    }
    for (std::size_t i = 0; i < taus.size(); ++i)
        if (abs_val(values[i] - res.value) <= tie_tol) res.optimizers.push_back(taus[i]);
    return res;
}

/// Minimum over all stopping times of the cost to reach the target at the
/// stop set: per tau, a min-cost recursion on the truncated tree where the
/// target binds only on tau's stop set.
template <class S>
S holder_min_cost_over_tau(const EventTree<S>& tree, const Generator<S>& gen, const CashFlowProcess<S>& flows_neg_a,
                           const AdaptedProcess<S>& target, std::uint64_t budget, double eps_bisect = 1e-10) {
    check_stability(tree, gen);
    const auto taus = enumerate_stopping_times(tree, 0, budget);
    std::vector<S> req(static_cast<std::size_t>(tree.size()));
    std::vector<char> stops(static_cast<std::size_t>(tree.size()));
    bool first = true;
    S best(0);
    for (const auto& tau : taus) {
        std::fill(stops.begin(), stops.end(), 0);
        for (int id : tau.stop_set) stops[static_cast<std::size_t>(id)] = 1;
        std::function<S(int)> cost = [&](int id) -> S {
            if (stops[static_cast<std::size_t>(id)]) return target[id];
            const auto& nd = tree.nodes[static_cast<std::size_t>(id)];
            return min_cost_step(tree, gen, flows_neg_a, id, cost(nd.children[0]), cost(nd.children[1]),
                                 eps_bisect);
        };
        const S c = cost(0);
        if (first || c < best) {
            best = c;
            first = false;
        }
    }
    return best;
}

enum class ConditionKind { AO, SH, BG, BE, NA, AOp, SHp, BLp, BEp, NAp };

inline bool is_holder_condition(ConditionKind k) {
    return k == ConditionKind::AOp || k == ConditionKind::SHp || k == ConditionKind::BLp ||
           k == ConditionKind::BEp || k == ConditionKind::NAp;
}

template <class S>
struct ConditionContext {
    const EventTree<S>* tree = nullptr;
    const Generator<S>* gen = nullptr;
    const AdaptedProcess<S>* payoff = nullptr;    // X^h, issuer perspective
    const CashFlowProcess<S>* flows = nullptr;    // A (issuer orientation)
    const AdaptedProcess<S>* benchmark = nullptr; // benchmark wealth of the relevant party
    S endowment{0};
    S price{0};
    const PredictableProcess<S>* strategy = nullptr;
    S eps{0};  // for BG / BL'
    S tol{0};  // equality tolerance (0 in rational mode)
};

/// Literal evaluation of the per-triplet market conditions. "With positive
/// probability" reduces to "at some node" because every branch probability
/// is positive. The issuer's (SH) is the pair version: it quantifies over
/// every node, not just the supplied stopping time.
template <class S>
bool check_condition(ConditionKind kind, const ConditionContext<S>& ctx, const StoppingTime& tau) {
    const bool holder = is_holder_condition(kind);
    const auto& tree = *ctx.tree;
    const CashFlowProcess<S> flows = holder ? ctx.flows->negated() : *ctx.flows;
    const S y0 = holder ? S(ctx.endowment - ctx.price) : S(ctx.endowment + ctx.price);
    const auto wealth = forward_wealth(tree, y0, *ctx.strategy, flows, *ctx.gen);

    auto gain = [&](int id) {
        const S po = (*ctx.payoff)[id];
        return holder ? S(wealth[id] - po - (*ctx.benchmark)[id]) : S(wealth[id] + po - (*ctx.benchmark)[id]);
    };

    if (kind == ConditionKind::SH) {
        for (const auto& nd : tree.nodes)
            if (gain(nd.id) < -ctx.tol) return false;
        return true;
    }

    bool all_ge = true, all_eq = true, some_strict_pos = false, some_strict_neg = false, all_ge_eps = true,
         all_le_eps = true;
    for (int id : tau.stop_set) {
        const S g = gain(id);
        if (g < -ctx.tol) all_ge = false;
        if (abs_val(g) > ctx.tol) all_eq = false;
        if (g > ctx.tol) some_strict_pos = true;
        if (g < -ctx.tol) some_strict_neg = true;
        if (g > ctx.eps + ctx.tol) all_le_eps = false;
        if (g < -ctx.eps - ctx.tol) all_ge_eps = false;
    }
    switch (kind) {
        case ConditionKind::AO:
        case ConditionKind::AOp:
            return all_ge && some_strict_pos;
        case ConditionKind::SHp:
            return all_ge;
        case ConditionKind::BG:
            return all_le_eps;
        case ConditionKind::BLp:
            return all_ge_eps;
        case ConditionKind::BE:
        case ConditionKind::BEp:
            return all_eq;
        case ConditionKind::NA:
        case ConditionKind::NAp:
            return all_eq || some_strict_neg;
        default:
            throw std::invalid_argument("check_condition: unknown kind");
    }
}

template <class S>
struct IntervalProbe {
    S price{0};
    bool expected_fair = false;
    bool fair_by_cost = false;
    bool arbitrage_constructed = false;
    bool consistent = false;
};

template <class S>
struct IntervalReport {
    std::vector<IntervalProbe<S>> issuer;
    std::vector<IntervalProbe<S>> holder;
    S p_issuer{0};
    S p_holder{0};
    bool consistent = true;
};

/// Probes the fairness/arbitrage classification around both acceptable
/// prices. Fairness is decided by the superhedging-cost oracle; for prices
/// beyond the boundary an explicit arbitrage is constructed from the
/// replicating hedge (the surplus compounds strictly by forward
/// monotonicity) and confirmed by the (AO) predicates.
template <class S>
IntervalReport<S> verify_interval_structure(const EventTree<S>& tree, const Generator<S>& gen,
                                            const AdaptedProcess<S>& payoff, const CashFlowProcess<S>& flows,
                                            const Endowments<S>& endow, const AdaptedProcess<S>& bench_issuer,
                                            const AdaptedProcess<S>& bench_holder,
                                            const std::vector<S>& issuer_probes, const std::vector<S>& holder_probes,
                                            std::uint64_t budget, const S& tol = S(0),
                                            const SolverConfig<S>& cfg = SolverConfig<S>::defaults(),
                                            double eps_bisect = 1e-10) {
    IntervalReport<S> report;

    // Issuer side: lower obstacle X = benchmark - X^h.
    AdaptedProcess<S> obstacle_i(tree.size());
    for (int id = 0; id < tree.size(); ++id) obstacle_i[id] = bench_issuer[id] - payoff[id];
    const auto sol_i = solve_reflected_lower(tree, gen, flows, obstacle_i, cfg);
    const S cost_i = min_superhedge_cost(tree, gen, flows, obstacle_i, eps_bisect);
    report.p_issuer = sol_i.y0() - endow.x1;

    for (const S& p : issuer_probes) {
        IntervalProbe<S> probe;
        probe.price = p;
        probe.expected_fair = p <= report.p_issuer + tol;
        probe.fair_by_cost = endow.x1 + p <= cost_i + tol;
        const auto wealth = forward_wealth(tree, S(endow.x1 + p), sol_i.z, flows, gen);
        bool strict_everywhere = true;
        for (const auto& nd : tree.nodes)
            if (!(wealth[nd.id] + payoff[nd.id] - bench_issuer[nd.id] > tol)) strict_everywhere = false;
        probe.arbitrage_constructed = strict_everywhere;
        probe.consistent = (probe.fair_by_cost == probe.expected_fair) &&
                           (probe.expected_fair ? !probe.arbitrage_constructed : probe.arbitrage_constructed);
        report.consistent = report.consistent && probe.consistent;
        report.issuer.push_back(probe);
    }

    // Holder side: upper obstacle x = benchmark + X^h, flows -A.
    AdaptedProcess<S> obstacle_h(tree.size());
    for (int id = 0; id < tree.size(); ++id) obstacle_h[id] = bench_holder[id] + payoff[id];
    const auto flows_neg = flows.negated();
    const auto sol_h = solve_reflected_upper(tree, gen, flows_neg, obstacle_h, cfg);
    const S cost_h = holder_min_cost_over_tau(tree, gen, flows_neg, obstacle_h, budget, eps_bisect);
    report.p_holder = endow.x2 - sol_h.y0();
    const auto tau_h = first_contact_time(tree, sol_h, tol);

    for (const S& p : holder_probes) {
        IntervalProbe<S> probe;
        probe.price = p;
        probe.expected_fair = p >= report.p_holder - tol;
        // The holder arbitrages by paying less than the boundary: then the
        // remaining endowment strictly exceeds the minimum cost of reaching
        // the exercise target.
        probe.fair_by_cost = endow.x2 - p <= cost_h + tol;
        const auto wealth = forward_wealth(tree, S(endow.x2 - p), sol_h.z, flows_neg, gen);
        bool strict_at_tau = true;
        for (int id : tau_h.stop_set)
            if (!(wealth[id] - payoff[id] - bench_holder[id] > tol)) strict_at_tau = false;
        probe.arbitrage_constructed = strict_at_tau;
        probe.consistent = (probe.fair_by_cost == probe.expected_fair) &&
                           (probe.expected_fair ? !probe.arbitrage_constructed : probe.arbitrage_constructed);
        report.consistent = report.consistent && probe.consistent;
        report.holder.push_back(probe);
    }
    return report;
}

}  // namespace treebsde
