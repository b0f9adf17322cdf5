#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "treebsde/evaluation.hpp"
#include "treebsde/generators.hpp"
#include "treebsde/lattice.hpp"
#include "treebsde/oracle.hpp"
#include "treebsde/reflected.hpp"

namespace treebsde {

/// American-style contract from the issuer's perspective: X^h is what the
/// issuer receives on exercise (negative when the issuer pays out), A the
/// cumulative contract cash flow with predictable step increments. The
/// A-increment over the step into an exercise node settles before the payoff
/// transfers.
template <class S>
struct ContractSpec {
    AdaptedProcess<S> payoff;  // X^h at every node
    CashFlowProcess<S> flows;  // A, issuer orientation
    int maturity_index = 0;
};

/// Issuer's relative reward X = benchmark - X^h: the lower obstacle of the
/// issuer's reflected equation.
template <class S>
AdaptedProcess<S> issuer_relative_reward(const ContractSpec<S>& contract, const AdaptedProcess<S>& benchmark) {
    AdaptedProcess<S> out(benchmark.size());
    for (int id = 0; id < benchmark.size(); ++id) out[id] = benchmark[id] - contract.payoff[id];
    return out;
}

/// Holder's relative reward x = benchmark + X^h: the upper obstacle of the
/// holder's reflected equation.
template <class S>
AdaptedProcess<S> holder_relative_reward(const ContractSpec<S>& contract, const AdaptedProcess<S>& benchmark) {
    AdaptedProcess<S> out(benchmark.size());
    for (int id = 0; id < benchmark.size(); ++id) out[id] = benchmark[id] + contract.payoff[id];
    return out;
}

template <class S>
struct AcceptablePrice {
    S price{0};
    RbsdeSolution<S> solution;
    /// Set when the strict-comparison prerequisite could not be verified;
    /// the price is still the RBSDE value but its optimality/uniqueness
    /// claims rest on the enumeration oracle alone.
    bool comparison_unverified = false;
};

/// Issuer's acceptable price p^i = Y_0 - x1, where Y solves the
/// lower-reflected equation on X = benchmark(x1) - X^h with flows A.
template <class S>
AcceptablePrice<S> issuer_acceptable_price(const EventTree<S>& tree, const Generator<S>& gen,
                                           const ContractSpec<S>& contract, const S& x1,
                                           const AdaptedProcess<S>& benchmark,
                                           const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    const auto obstacle = issuer_relative_reward(contract, benchmark);
    AcceptablePrice<S> out;
    out.comparison_unverified = !check_one_step_monotonicity(tree, gen, cfg);
    out.solution = solve_reflected_lower(tree, gen, contract.flows, obstacle, cfg);
    out.price = out.solution.y0() - x1;
    return out;
}

/// Holder's acceptable price p^h = x2 - y_0, where y solves the
/// upper-reflected equation on x = benchmark(x2) + X^h with flows -A.
template <class S>
AcceptablePrice<S> holder_acceptable_price(const EventTree<S>& tree, const Generator<S>& gen,
                                           const ContractSpec<S>& contract, const S& x2,
                                           const AdaptedProcess<S>& benchmark,
                                           const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    const auto obstacle = holder_relative_reward(contract, benchmark);
    AcceptablePrice<S> out;
    out.comparison_unverified = !check_one_step_monotonicity(tree, gen, cfg);
    out.solution = solve_reflected_upper(tree, gen, contract.flows.negated(), obstacle, cfg);
    out.price = x2 - out.solution.y0();
    return out;
}

template <class S>
AcceptablePrice<S> issuer_acceptable_price(const EventTree<S>& tree, const Generator<S>& gen,
                                           const ContractSpec<S>& contract, const S& x1,
                                           const RateSchedule<S>& benchmark_rates,
                                           const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    return issuer_acceptable_price(tree, gen, contract, x1, benchmark_wealth(tree, x1, benchmark_rates), cfg);
}

template <class S>
AcceptablePrice<S> holder_acceptable_price(const EventTree<S>& tree, const Generator<S>& gen,
                                           const ContractSpec<S>& contract, const S& x2,
                                           const RateSchedule<S>& benchmark_rates,
                                           const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    return holder_acceptable_price(tree, gen, contract, x2, benchmark_wealth(tree, x2, benchmark_rates), cfg);
}

/// Outcome of the five equivalent characterizations of an issuer break-even
/// time: they must agree; a split means the solver violates the theory.
template <class S>
struct BreakEvenReport {
    bool wealth_breaks_even = false;      // forward wealth from x1 + p^i equals X at the stop set
    bool no_arbitrage_predicate = false;  // (NA) for the triplet (p^i, Z, tau)
    bool wealth_equals_obstacle = false;  // direct wealth-vs-obstacle comparison at the stop set
    bool contact_without_reflection = false;  // Y_tau = X_tau and cumulative K before tau vanishes
    bool attains_root_value = false;          // evaluate over tau of X_tau reproduces Y_0
    bool is_break_even = false;
    bool all_agree = false;
};

/// Checks Theorem-4.2-style equivalence for a candidate stopping time.
/// Cumulative K is taken strictly before each stop node, so reflection at
/// the contact node itself does not disqualify it. Throws on disagreement.
template <class S>
BreakEvenReport<S> classify_break_even(const EventTree<S>& tree, const Generator<S>& gen,
                                       const ContractSpec<S>& contract, const S& x1,
                                       const AdaptedProcess<S>& bench, const StoppingTime& tau,
                                       const S& tol = S(0),
                                       const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    if (!validate_stopping_time(tree, tau))
        throw std::invalid_argument("classify_break_even: invalid stopping time");
    const auto obstacle = issuer_relative_reward(contract, bench);
    const auto sol = solve_reflected_lower(tree, gen, contract.flows, obstacle, cfg);
    const S price = sol.y0() - x1;

    BreakEvenReport<S> rep;
    const auto wealth = forward_wealth(tree, S(x1 + price), sol.z, contract.flows, gen);

    rep.wealth_breaks_even = true;
    rep.wealth_equals_obstacle = true;
    rep.contact_without_reflection = true;
    for (int id : tau.stop_set) {
        if (abs_val(wealth[id] + contract.payoff[id] - bench[id]) > tol) rep.wealth_breaks_even = false;
        if (abs_val(wealth[id] - obstacle[id]) > tol) rep.wealth_equals_obstacle = false;
        if (abs_val(sol.y[id] - obstacle[id]) > tol || sol.k_before(tree, id) > tol)
            rep.contact_without_reflection = false;
    }

    ConditionContext<S> ctx;
    ctx.tree = &tree;
    ctx.gen = &gen;
    ctx.payoff = &contract.payoff;
    ctx.flows = &contract.flows;
    ctx.benchmark = &bench;
    ctx.endowment = x1;
    ctx.price = price;
    ctx.strategy = &sol.z;
    ctx.tol = tol;
    rep.no_arbitrage_predicate = check_condition(ConditionKind::NA, ctx, tau);

    rep.attains_root_value = abs_val(evaluate(tree, gen, contract.flows, tau, obstacle, cfg) - sol.y0()) <= tol;

    rep.is_break_even = rep.contact_without_reflection;
    rep.all_agree = rep.wealth_breaks_even == rep.no_arbitrage_predicate &&
                    rep.no_arbitrage_predicate == rep.wealth_equals_obstacle &&
                    rep.wealth_equals_obstacle == rep.contact_without_reflection &&
                    rep.contact_without_reflection == rep.attains_root_value;
    if (!rep.all_agree)
        throw TheoremViolation("break-even characterizations disagree: solver bug");
    return rep;
}

template <class S>
BreakEvenReport<S> classify_break_even(const EventTree<S>& tree, const Generator<S>& gen,
                                       const ContractSpec<S>& contract, const S& x1,
                                       const RateSchedule<S>& benchmark_rates, const StoppingTime& tau,
                                       const S& tol = S(0),
                                       const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    return classify_break_even(tree, gen, contract, x1, benchmark_wealth(tree, x1, benchmark_rates), tau, tol, cfg);
}

template <class S>
struct RationalExerciseResult {
    std::vector<StoppingTime> times;  // empty when not enumerated
    StoppingTime earliest;
    StoppingTime latest;
    bool latest_point_mass_caveat = false;
    bool enumerated = false;
    std::uint64_t candidate_count = 0;
    /// On-demand characterization y_tau = x_tau and cumulative k before tau
    /// zero, usable when enumeration was refused.
    std::function<bool(const StoppingTime&)> is_rational;
};

/// All rational exercise times of the holder, by enumeration when the budget
/// allows; earliest is the first contact of y with x, latest the first node
/// per path where cumulative k turns positive (leaf when k stays zero).
template <class S>
RationalExerciseResult<S> rational_exercise_times(const EventTree<S>& tree, const Generator<S>& gen,
                                                  const ContractSpec<S>& contract, const S& x2,
                                                  const AdaptedProcess<S>& bench,
                                                  std::uint64_t budget = 1000000, const S& tol = S(0),
                                                  const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    const auto obstacle = holder_relative_reward(contract, bench);
    // shared_ptr keeps the solution alive inside the returned predicate.
    auto sol = std::make_shared<RbsdeSolution<S>>(
        solve_reflected_upper(tree, gen, contract.flows.negated(), obstacle, cfg));

    RationalExerciseResult<S> res;
    res.earliest = first_contact_time(tree, *sol, tol);
    const auto latest = latest_exercise_time(tree, *sol, tol);
    res.latest = latest.time;
    res.latest_point_mass_caveat = latest.point_mass_caveat;
    res.is_rational = [&tree, sol, tol](const StoppingTime& tau) {
        for (int id : tau.stop_set) {
            if (abs_val(sol->y[id] - sol->obstacle[id]) > tol) return false;
            if (sol->k_before(tree, id) > tol) return false;
        }
        return true;
    };
    res.candidate_count = count_stopping_times(tree, 0, 0);
    try {
        const auto taus = enumerate_stopping_times(tree, 0, budget);
        for (const auto& tau : taus)
            if (res.is_rational(tau)) res.times.push_back(tau);
        res.enumerated = true;
    } catch (const BudgetExceeded&) {
        res.enumerated = false;
    }
    return res;
}

template <class S>
RationalExerciseResult<S> rational_exercise_times(const EventTree<S>& tree, const Generator<S>& gen,
                                                  const ContractSpec<S>& contract, const S& x2,
                                                  const RateSchedule<S>& benchmark_rates,
                                                  std::uint64_t budget = 1000000, const S& tol = S(0),
                                                  const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    return rational_exercise_times(tree, gen, contract, x2, benchmark_wealth(tree, x2, benchmark_rates), budget,
                                   tol, cfg);
}

/// Full two-sided report used by the command-line front end.
template <class S>
struct PriceReport {
    S p_issuer{0};
    S p_holder{0};
    StoppingTime tau_issuer_earliest;
    StoppingTime tau_holder_earliest;
    StoppingTime tau_holder_latest;
    bool latest_point_mass_caveat = false;
    RbsdeSolution<S> issuer_solution;
    RbsdeSolution<S> holder_solution;
    S issuer_total_reflection{0};
    S holder_total_reflection{0};
    bool comparison_unverified = false;
};

template <class S>
PriceReport<S> price_contract(const EventTree<S>& tree, const Generator<S>& gen, const ContractSpec<S>& contract,
                              const Endowments<S>& endow, const AdaptedProcess<S>& bench_issuer,
                              const AdaptedProcess<S>& bench_holder, const S& tol = S(0),
                              const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    PriceReport<S> rep;
    auto issuer = issuer_acceptable_price(tree, gen, contract, endow.x1, bench_issuer, cfg);
    auto holder = holder_acceptable_price(tree, gen, contract, endow.x2, bench_holder, cfg);
    rep.p_issuer = issuer.price;
    rep.p_holder = holder.price;
    rep.comparison_unverified = issuer.comparison_unverified || holder.comparison_unverified;
    rep.tau_issuer_earliest = first_contact_time(tree, issuer.solution, tol);
    rep.tau_holder_earliest = first_contact_time(tree, holder.solution, tol);
    const auto latest = latest_exercise_time(tree, holder.solution, tol);
    rep.tau_holder_latest = latest.time;
    rep.latest_point_mass_caveat = latest.point_mass_caveat;
    for (int id = 0; id < tree.size(); ++id) {
        rep.issuer_total_reflection += issuer.solution.k_increments[id];
        rep.holder_total_reflection += holder.solution.k_increments[id];
    }
    rep.issuer_solution = std::move(issuer.solution);
    rep.holder_solution = std::move(holder.solution);
    return rep;
}

template <class S>
PriceReport<S> price_contract(const EventTree<S>& tree, const Generator<S>& gen, const ContractSpec<S>& contract,
                              const Endowments<S>& endow, const RateSchedule<S>& benchmark_rates,
                              const S& tol = S(0), const SolverConfig<S>& cfg = SolverConfig<S>::defaults()) {
    return price_contract(tree, gen, contract, endow, benchmark_wealth(tree, endow.x1, benchmark_rates),
                          benchmark_wealth(tree, endow.x2, benchmark_rates), tol, cfg);
}

}  // namespace treebsde
