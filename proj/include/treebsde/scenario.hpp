#pragma once

#include <cstdint>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "treebsde/expr.hpp"
#include "treebsde/pricing.hpp"

namespace treebsde {

using ordered_json = nlohmann::ordered_json;

/// Malformed scenario input (bad JSON shape, unknown keys, bad values).
/// Distinct from SolverError so the front end can map it to its own exit code.
struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace scenario_detail {

/// Strict schema check: every present key must be known, every required key
/// present. Unknown keys are rejected loudly rather than ignored.
inline void require_object(const ordered_json& j, const std::string& what,
                           const std::vector<std::string>& required, const std::vector<std::string>& optional) {
    if (!j.is_object()) throw ScenarioError(what + ": expected an object");
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        bool known = false;
        for (const auto& k : required)
            if (k == key) known = true;
        for (const auto& k : optional)
            if (k == key) known = true;
        if (!known) throw ScenarioError(what + ": unknown key '" + key + "'");
    }
    for (const auto& k : required)
        if (!j.contains(k)) throw ScenarioError(what + ": missing required key '" + k + "'");
}

/// Signed decimal integer string to cpp_int. Leading zeros are stripped so
/// boost does not reinterpret them as an octal prefix.
inline boost::multiprecision::cpp_int int_from_decimal(const std::string& s) {
    std::size_t i = 0;
    bool negative = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) negative = (s[i++] == '-');
    std::string digits = s.substr(i);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        throw ScenarioError("malformed integer '" + s + "'");
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
    boost::multiprecision::cpp_int v{digits};
    return negative ? boost::multiprecision::cpp_int(-v) : v;
}

/// Exact rational from "p/q" or a plain decimal string ("-1.25", "100").
inline Rational rational_from_string(const std::string& s) {
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
        const auto n = int_from_decimal(s.substr(0, slash));
        const auto d = int_from_decimal(s.substr(slash + 1));
        if (d == 0) throw ScenarioError("zero denominator in '" + s + "'");
        return Rational(n, d);
    }
    std::string digits;
    long long frac_len = 0;
    bool seen_dot = false, seen_digit = false;
    std::size_t i = 0;
    bool negative = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) negative = (s[i++] == '-');
    for (; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '.') {
            if (seen_dot) throw ScenarioError("malformed number '" + s + "'");
            seen_dot = true;
        } else if (c >= '0' && c <= '9') {
            digits.push_back(c);
            if (seen_dot) ++frac_len;
            seen_digit = true;
        } else {
            throw ScenarioError("malformed number '" + s + "'");
        }
    }
    if (!seen_digit) throw ScenarioError("malformed number '" + s + "'");
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
    boost::multiprecision::cpp_int num(digits);
    boost::multiprecision::cpp_int den(1);
    for (long long k = 0; k < frac_len; ++k) den *= 10;
    Rational r(num, den);
    return negative ? Rational(-r) : r;
}

}  // namespace scenario_detail

/// Parses a JSON value into the scalar type. Strings carry exact values
/// ("76/9", "1.2") and are the right way to feed rational mode; raw JSON
/// numbers are taken at their binary-double value.
template <class S>
S parse_scalar(const ordered_json& v, const std::string& what) {
    if (v.is_number_integer()) return scalar_from_ratio<S>(v.get<long long>(), 1);
    if (v.is_number_float()) return scalar_from_double<S>(v.get<double>());
    if (v.is_string()) {
        const Rational r = scenario_detail::rational_from_string(v.get<std::string>());
        if constexpr (is_rational_v<S>) return r;
        else return to_double(r);
    }
    throw ScenarioError(what + ": expected a number or numeric string");
}

/// Scalar to JSON: doubles stay doubles (shortest round-trip printing keeps
/// reports byte-stable), rationals serialize as "p/q" strings.
template <class S>
ordered_json scalar_json(const S& x) {
    if constexpr (is_rational_v<S>) return x.str();
    else return x;
}

/// A fully-resolved scenario: tree, market, contract, and run parameters.
template <class S>
struct ScenarioModel {
    std::string name;
    EventTree<S> tree;
    Generator<S> gen;
    ContractSpec<S> contract;
    Endowments<S> endow;
    AdaptedProcess<S> bench_issuer;
    AdaptedProcess<S> bench_holder;
    S tol{0};
    std::uint64_t budget = 1000000;
    SolverConfig<S> cfg = SolverConfig<S>::defaults();
};

namespace scenario_detail {

template <class S>
EventTree<S> parse_tree(const ordered_json& j) {
    require_object(j, "tree", {"kind"}, {"s0", "up", "down", "steps", "maturity", "prob", "time_grid", "nodes"});
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "binomial") {
        require_object(j, "tree", {"kind", "s0", "up", "down", "steps", "maturity"}, {"prob"});
        const int steps = j.at("steps").get<int>();
        if (steps < 1 || steps > 30) throw ScenarioError("tree: steps out of range");
        const S prob = j.contains("prob") ? parse_scalar<S>(j.at("prob"), "tree.prob") : scalar_from_ratio<S>(1, 2);
        return build_binomial<S>(parse_scalar<S>(j.at("s0"), "tree.s0"), parse_scalar<S>(j.at("up"), "tree.up"),
                                 parse_scalar<S>(j.at("down"), "tree.down"), steps,
                                 parse_scalar<S>(j.at("maturity"), "tree.maturity"), prob);
    }
    if (kind == "explicit") {
        require_object(j, "tree", {"kind", "time_grid", "nodes"}, {});
        EventTree<S> t;
        for (const auto& v : j.at("time_grid")) t.time_grid.push_back(parse_scalar<S>(v, "tree.time_grid"));
        const auto& nodes = j.at("nodes");
        if (!nodes.is_array() || nodes.empty()) throw ScenarioError("tree.nodes: expected a non-empty array");
        const int n = static_cast<int>(nodes.size());
        t.nodes.resize(static_cast<std::size_t>(n));
        t.branch_prob.assign(static_cast<std::size_t>(n), S(0));
        t.branch_prob[0] = S(1);
        t.prices.resize(static_cast<std::size_t>(n));
        for (const auto& nj : nodes) {
            require_object(nj, "tree.nodes[]", {"id", "k", "parent", "children", "price"}, {});
            const int id = nj.at("id").get<int>();
            if (id < 0 || id >= n) throw ScenarioError("tree.nodes: id out of range");
            auto& nd = t.nodes[static_cast<std::size_t>(id)];
            nd.id = id;
            nd.k = nj.at("k").get<int>();
            nd.parent = nj.at("parent").is_null() ? -1 : nj.at("parent").get<int>();
            for (const auto& cj : nj.at("children")) {
                require_object(cj, "tree.nodes[].children[]", {"id", "prob"}, {});
                const int cid = cj.at("id").get<int>();
                if (cid < 0 || cid >= n) throw ScenarioError("tree.nodes: child id out of range");
                nd.children.push_back(cid);
                t.branch_prob[static_cast<std::size_t>(cid)] = parse_scalar<S>(cj.at("prob"), "children.prob");
            }
            for (const auto& pv : nj.at("price"))
                t.prices[static_cast<std::size_t>(id)].push_back(parse_scalar<S>(pv, "tree.nodes[].price"));
        }
        t.validate();
        return t;
    }
    throw ScenarioError("tree.kind: expected 'binomial' or 'explicit'");
}

template <class S>
Generator<S> parse_generator(const ordered_json& j, const EventTree<S>& tree) {
    if (j.is_null()) return zero_generator<S>();
    require_object(j, "generator", {"kind"}, {"rate", "lend", "borrow"});
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero") {
        require_object(j, "generator", {"kind"}, {});
        return zero_generator<S>();
    }
    if (kind == "discount") {
        require_object(j, "generator", {"kind", "rate"}, {});
        return discount_generator<S>(parse_scalar<S>(j.at("rate"), "generator.rate"));
    }
    if (kind == "funding") {
        require_object(j, "generator", {"kind", "lend", "borrow"}, {});
        RateSchedule<S> rates{parse_scalar<S>(j.at("lend"), "generator.lend"),
                              parse_scalar<S>(j.at("borrow"), "generator.borrow")};
        rates.check();
        return funding_generator<S>(rates, tree.max_price());
    }
    throw ScenarioError("generator.kind: expected 'zero', 'discount', or 'funding'");
}

/// Payoff/flow values come either from an expression over (k, t, S, Smax,
/// Smin) or an explicit per-node-id array.
template <class S>
AdaptedProcess<S> parse_node_values(const ordered_json& j, const EventTree<S>& tree, const std::string& what) {
    if (j.is_string()) {
        try {
            return Expression(j.get<std::string>()).template on_tree<S>(tree);
        } catch (const ExprError& e) {
            throw ScenarioError(what + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(what + ": " + e.what());
        }
    }
    if (j.is_array()) {
        if (static_cast<int>(j.size()) != tree.size())
            throw ScenarioError(what + ": expected one value per node (" + std::to_string(tree.size()) + ")");
        AdaptedProcess<S> out(tree.size());
        for (int id = 0; id < tree.size(); ++id) out[id] = parse_scalar<S>(j[static_cast<std::size_t>(id)], what);
        return out;
    }
    throw ScenarioError(what + ": expected an expression string or per-node array");
}

}  // namespace scenario_detail

/// Builds a typed model from a scenario document. Top-level schema:
///   mode ("float"|"rational"), tree, payoff  required;
///   name, generator, flows, benchmark, endowments, tolerance, budget  optional.
template <class S>
ScenarioModel<S> build_model(const ordered_json& doc, std::uint64_t default_budget) {
    using scenario_detail::require_object;
    require_object(doc, "scenario", {"mode", "tree", "payoff"},
                   {"name", "generator", "flows", "benchmark", "endowments", "tolerance", "budget"});
    ScenarioModel<S> m;
    m.name = doc.contains("name") ? doc.at("name").get<std::string>() : "unnamed";
    m.tree = scenario_detail::parse_tree<S>(doc.at("tree"));
    m.gen = scenario_detail::parse_generator<S>(doc.contains("generator") ? doc.at("generator") : ordered_json(),
                                                m.tree);

    m.contract.payoff = scenario_detail::parse_node_values<S>(doc.at("payoff"), m.tree, "payoff");
    m.contract.flows = CashFlowProcess<S>(m.tree.size());
    if (doc.contains("flows")) {
        // Step increments are predictable: the expression is evaluated at the
        // step-start node and applies over the step into each of its children.
        const auto vals = scenario_detail::parse_node_values<S>(doc.at("flows"), m.tree, "flows");
        for (int id = 0; id < m.tree.size(); ++id)
            if (!m.tree.is_leaf(id)) m.contract.flows.at(id) = vals[id];
    }
    m.contract.maturity_index = m.tree.depth();

    if (doc.contains("endowments")) {
        require_object(doc.at("endowments"), "endowments", {}, {"x1", "x2"});
        if (doc.at("endowments").contains("x1"))
            m.endow.x1 = parse_scalar<S>(doc.at("endowments").at("x1"), "endowments.x1");
        if (doc.at("endowments").contains("x2"))
            m.endow.x2 = parse_scalar<S>(doc.at("endowments").at("x2"), "endowments.x2");
    }

    if (doc.contains("benchmark")) {
        const auto& b = doc.at("benchmark");
        require_object(b, "benchmark", {}, {"lend", "borrow", "issuer", "holder"});
        if (b.contains("issuer") || b.contains("holder")) {
            if (!(b.contains("issuer") && b.contains("holder")) || b.contains("lend") || b.contains("borrow"))
                throw ScenarioError("benchmark: give either {lend, borrow} or both {issuer, holder} node arrays");
            m.bench_issuer = scenario_detail::parse_node_values<S>(b.at("issuer"), m.tree, "benchmark.issuer");
            m.bench_holder = scenario_detail::parse_node_values<S>(b.at("holder"), m.tree, "benchmark.holder");
        } else {
            RateSchedule<S> rates;
            if (b.contains("lend")) rates.r_lend = parse_scalar<S>(b.at("lend"), "benchmark.lend");
            if (b.contains("borrow")) rates.r_borrow = parse_scalar<S>(b.at("borrow"), "benchmark.borrow");
            rates.check();
            m.bench_issuer = benchmark_wealth(m.tree, m.endow.x1, rates);
            m.bench_holder = benchmark_wealth(m.tree, m.endow.x2, rates);
        }
    } else {
        m.bench_issuer = benchmark_wealth(m.tree, m.endow.x1, RateSchedule<S>{});
        m.bench_holder = benchmark_wealth(m.tree, m.endow.x2, RateSchedule<S>{});
    }

    m.tol = is_rational_v<S> ? S(0) : scalar_from_double<S>(1e-9);
    if (doc.contains("tolerance")) m.tol = parse_scalar<S>(doc.at("tolerance"), "tolerance");
    m.budget = default_budget;
    if (doc.contains("budget")) m.budget = doc.at("budget").get<std::uint64_t>();
    return m;
}

struct RunOptions {
    std::string side = "both";   // issuer | holder | both
    std::string suite = "full";  // full | fast (fast skips enumeration on deep trees)
    bool break_reflection = false;  // negative control: disable reflection before verifying
    std::uint64_t default_budget = 1000000;
};

namespace scenario_detail {

template <class S>
ordered_json stopping_json(const StoppingTime& tau) {
    ordered_json j;
    j["stop_set"] = tau.stop_set;
    return j;
}

template <class S>
ordered_json side_summary(const S& price, const RbsdeSolution<S>& sol, const EventTree<S>& tree, const S& tol) {
    ordered_json j;
    j["price"] = scalar_json(price);
    j["y0"] = scalar_json(sol.y0());
    ordered_json z0 = ordered_json::array();
    if (!tree.is_leaf(0))
        for (const auto& zi : sol.z[0]) z0.push_back(scalar_json(zi));
    j["z0"] = z0;
    S total_k(0);
    for (int id = 0; id < tree.size(); ++id) total_k += sol.k_increments[id];
    j["total_reflection"] = scalar_json(total_k);
    j["first_contact"] = stopping_json<S>(first_contact_time(tree, sol, tol));
    return j;
}

template <class S>
ordered_json node_table(const ScenarioModel<S>& m, const RbsdeSolution<S>* issuer, const RbsdeSolution<S>* holder) {
    ordered_json arr = ordered_json::array();
    for (const auto& nd : m.tree.nodes) {
        ordered_json row;
        row["id"] = nd.id;
        row["k"] = nd.k;
        row["t"] = scalar_json(m.tree.time_grid[static_cast<std::size_t>(nd.k)]);
        ordered_json px = ordered_json::array();
        for (const auto& p : m.tree.prices[static_cast<std::size_t>(nd.id)]) px.push_back(scalar_json(p));
        row["price"] = px;
        auto emit = [&](const char* tag, const RbsdeSolution<S>& sol) {
            ordered_json sj;
            sj["y"] = scalar_json(sol.y[nd.id]);
            ordered_json z = ordered_json::array();
            if (!nd.children.empty())
                for (const auto& zi : sol.z[nd.id]) z.push_back(scalar_json(zi));
            sj["z"] = z;
            sj["dk"] = scalar_json(sol.k_increments[nd.id]);
            sj["obstacle"] = scalar_json(sol.obstacle[nd.id]);
            sj["contact"] = abs_val(sol.y[nd.id] - sol.obstacle[nd.id]) <= m.tol;
            row[tag] = sj;
        };
        if (issuer) emit("issuer", *issuer);
        if (holder) emit("holder", *holder);
        arr.push_back(row);
    }
    return arr;
}

template <class S>
ordered_json run_price_impl(const ordered_json& doc, const RunOptions& opts) {
    const auto m = build_model<S>(doc, opts.default_budget);
    ordered_json rep;
    rep["scenario"] = m.name;
    rep["mode"] = is_rational_v<S> ? "rational" : "float";
    rep["side"] = opts.side;

    const bool want_issuer = opts.side != "holder";
    const bool want_holder = opts.side != "issuer";
    AcceptablePrice<S> issuer, holder;
    if (want_issuer) {
        issuer = issuer_acceptable_price(m.tree, m.gen, m.contract, m.endow.x1, m.bench_issuer, m.cfg);
        rep["issuer"] = side_summary(issuer.price, issuer.solution, m.tree, m.tol);
        rep["issuer"]["comparison_unverified"] = issuer.comparison_unverified;
    }
    if (want_holder) {
        holder = holder_acceptable_price(m.tree, m.gen, m.contract, m.endow.x2, m.bench_holder, m.cfg);
        rep["holder"] = side_summary(holder.price, holder.solution, m.tree, m.tol);
        rep["holder"]["comparison_unverified"] = holder.comparison_unverified;
        const auto latest = latest_exercise_time(m.tree, holder.solution, m.tol);
        rep["holder"]["latest_exercise"] = stopping_json<S>(latest.time);
        rep["holder"]["latest_point_mass_caveat"] = latest.point_mass_caveat;
    }
    if (want_issuer && want_holder) rep["spread"] = scalar_json(S(issuer.price - holder.price));
    rep["nodes"] = node_table(m, want_issuer ? &issuer.solution : nullptr, want_holder ? &holder.solution : nullptr);
    return rep;
}

inline void add_check(ordered_json& checks, const std::string& name, bool pass, const ordered_json& expected,
                      const ordered_json& got, const ordered_json& tolerance) {
    ordered_json c;
    c["name"] = name;
    c["expected"] = expected;
    c["got"] = got;
    c["tolerance"] = tolerance;
    c["pass"] = pass;
    checks.push_back(c);
}

inline void add_skipped(ordered_json& checks, const std::string& name, const std::string& why) {
    ordered_json c;
    c["name"] = name;
    c["skipped"] = true;
    c["reason"] = why;
    checks.push_back(c);
}

/// Discrete complementarity audit: increments non-negative, the value on the
/// admissible side of the obstacle, and reflection only at contact.
template <class S>
bool skorokhod_ok(const EventTree<S>& tree, const RbsdeSolution<S>& sol, const S& tol) {
    for (int id = 0; id < tree.size(); ++id) {
        if (sol.k_increments[id] < -tol) return false;
        const S gap = sol.side == ObstacleSide::lower ? S(sol.y[id] - sol.obstacle[id])
                                                      : S(sol.obstacle[id] - sol.y[id]);
        if (gap < -tol) return false;
        if (sol.k_increments[id] > tol && abs_val(gap) > tol) return false;
    }
    return true;
}

template <class S>
ordered_json run_verify_impl(const ordered_json& doc, const RunOptions& opts) {
    const auto m = build_model<S>(doc, opts.default_budget);
    ordered_json rep;
    rep["scenario"] = m.name;
    rep["mode"] = is_rational_v<S> ? "rational" : "float";
    rep["suite"] = opts.suite;
    ordered_json checks = ordered_json::array();
    const ordered_json tol_j = scalar_json(m.tol);

    auto issuer = issuer_acceptable_price(m.tree, m.gen, m.contract, m.endow.x1, m.bench_issuer, m.cfg);
    auto holder = holder_acceptable_price(m.tree, m.gen, m.contract, m.endow.x2, m.bench_holder, m.cfg);

    if (opts.break_reflection) {
        // Negative control: replace the issuer value with the unreflected
        // equation run to maturity. Downstream checks must then catch it.
        StoppingTime at_maturity{m.tree.leaves()};
        auto plain = solve_bsde(m.tree, m.gen, m.contract.flows, at_maturity,
                                issuer_relative_reward(m.contract, m.bench_issuer), m.cfg);
        issuer.solution.y = plain.y;
        issuer.solution.z = plain.z;
        issuer.solution.k_increments = AdaptedProcess<S>(m.tree.size());
        issuer.price = issuer.solution.y0() - m.endow.x1;
    }

    add_check(checks, "one_step_monotonicity", check_one_step_monotonicity(m.tree, m.gen, m.cfg), true,
              check_one_step_monotonicity(m.tree, m.gen, m.cfg), nullptr);

    add_check(checks, "skorokhod_issuer", skorokhod_ok(m.tree, issuer.solution, m.tol), "complementarity",
              skorokhod_ok(m.tree, issuer.solution, m.tol) ? "complementarity" : "violated", tol_j);
    add_check(checks, "skorokhod_holder", skorokhod_ok(m.tree, holder.solution, m.tol), "complementarity",
              skorokhod_ok(m.tree, holder.solution, m.tol) ? "complementarity" : "violated", tol_j);

    add_check(checks, "price_order", !(issuer.price < S(holder.price - m.tol)), scalar_json(holder.price),
              scalar_json(issuer.price), tol_j);

    {
        const auto obstacle = issuer_relative_reward(m.contract, m.bench_issuer);
        const S oracle = min_superhedge_cost(m.tree, m.gen, m.contract.flows, obstacle);
        add_check(checks, "issuer_superhedge_oracle", abs_val(oracle - issuer.solution.y0()) <= m.tol,
                  scalar_json(oracle), scalar_json(issuer.solution.y0()), tol_j);
    }

    // Replication: running the issuer hedge forward from x1 + p dominates the
    // relative reward everywhere and attains it at first contact.
    {
        const auto obstacle = issuer_relative_reward(m.contract, m.bench_issuer);
        const auto wealth =
            forward_wealth(m.tree, S(m.endow.x1 + issuer.price), issuer.solution.z, m.contract.flows, m.gen);
        bool dominates = true, attains = true;
        for (int id = 0; id < m.tree.size(); ++id)
            if (wealth[id] < S(obstacle[id] - m.tol)) dominates = false;
        for (int id : first_contact_time(m.tree, issuer.solution, m.tol).stop_set)
            if (abs_val(wealth[id] - obstacle[id]) > m.tol) attains = false;
        add_check(checks, "issuer_replication", dominates && attains, "dominates and attains",
                  dominates ? (attains ? "dominates and attains" : "does not attain") : "dominated", tol_j);
    }

    const bool enumerate = opts.suite == "full" || m.tree.depth() <= 4;
    if (!enumerate) {
        add_skipped(checks, "issuer_stopping_value", "fast suite skips enumeration beyond depth 4");
        add_skipped(checks, "holder_stopping_value", "fast suite skips enumeration beyond depth 4");
        add_skipped(checks, "break_even_consistency", "fast suite skips enumeration beyond depth 4");
    } else {
        try {
            const auto obstacle_i = issuer_relative_reward(m.contract, m.bench_issuer);
            const auto sup = sup_over_stopping_times(m.tree, m.gen, m.contract.flows, obstacle_i, m.budget,
                                                     m.tol, m.cfg);
            add_check(checks, "issuer_stopping_value", abs_val(sup.value - issuer.solution.y0()) <= m.tol,
                      scalar_json(sup.value), scalar_json(issuer.solution.y0()), tol_j);

            const auto obstacle_h = holder_relative_reward(m.contract, m.bench_holder);
            const auto inf = inf_over_stopping_times(m.tree, m.gen, m.contract.flows.negated(), obstacle_h,
                                                     m.budget, m.tol, m.cfg);
            add_check(checks, "holder_stopping_value", abs_val(inf.value - holder.solution.y0()) <= m.tol,
                      scalar_json(inf.value), scalar_json(holder.solution.y0()), tol_j);

            bool all_agree = true;
            if (!opts.break_reflection) {
                const StoppingTime earliest = first_contact_time(m.tree, issuer.solution, m.tol);
                const StoppingTime maturity{m.tree.leaves()};
                for (const auto& tau : {earliest, maturity}) {
                    const auto be = classify_break_even(m.tree, m.gen, m.contract, m.endow.x1, m.bench_issuer,
                                                        tau, m.tol, m.cfg);
                    all_agree = all_agree && be.all_agree;
                }
                add_check(checks, "break_even_consistency", all_agree, "five characterizations agree",
                          all_agree ? "five characterizations agree" : "disagree", tol_j);
            } else {
                add_skipped(checks, "break_even_consistency", "not meaningful with reflection disabled");
            }
        } catch (const BudgetExceeded& e) {
            add_check(checks, "enumeration_budget", false, "within budget", e.what(), nullptr);
        }
    }

    bool all_pass = true;
    int skipped = 0;
    for (const auto& c : checks) {
        if (c.contains("skipped")) {
            ++skipped;
            continue;
        }
        if (!c.at("pass").get<bool>()) all_pass = false;
    }
    rep["checks"] = checks;
    rep["checks_skipped"] = skipped;
    rep["pass"] = all_pass;
    return rep;
}

template <class S>
ordered_json run_exercise_impl(const ordered_json& doc, const RunOptions& opts) {
    const auto m = build_model<S>(doc, opts.default_budget);
    ordered_json rep;
    rep["scenario"] = m.name;
    rep["mode"] = is_rational_v<S> ? "rational" : "float";

    const auto res = rational_exercise_times(m.tree, m.gen, m.contract, m.endow.x2, m.bench_holder, m.budget,
                                             m.tol, m.cfg);
    ordered_json h;
    h["enumerated"] = res.enumerated;
    h["candidate_count"] = res.candidate_count;
    h["earliest"] = stopping_json<S>(res.earliest);
    h["latest"] = stopping_json<S>(res.latest);
    h["latest_point_mass_caveat"] = res.latest_point_mass_caveat;
    if (res.enumerated) {
        ordered_json times = ordered_json::array();
        for (const auto& tau : res.times) times.push_back(stopping_json<S>(tau));
        h["rational_times"] = times;
    }
    rep["holder"] = h;

    auto issuer = issuer_acceptable_price(m.tree, m.gen, m.contract, m.endow.x1, m.bench_issuer, m.cfg);
    ordered_json i;
    i["earliest_break_even"] = stopping_json<S>(first_contact_time(m.tree, issuer.solution, m.tol));
    rep["issuer"] = i;
    return rep;
}

}  // namespace scenario_detail

inline std::string scenario_mode(const ordered_json& doc) {
    if (!doc.is_object() || !doc.contains("mode")) throw ScenarioError("scenario: missing required key 'mode'");
    const std::string mode = doc.at("mode").get<std::string>();
    if (mode != "float" && mode != "rational") throw ScenarioError("mode: expected 'float' or 'rational'");
    return mode;
}

inline ordered_json run_price(const ordered_json& doc, const RunOptions& opts = {}) {
    return scenario_mode(doc) == "rational" ? scenario_detail::run_price_impl<Rational>(doc, opts)
                                            : scenario_detail::run_price_impl<double>(doc, opts);
}

inline ordered_json run_verify(const ordered_json& doc, const RunOptions& opts = {}) {
    return scenario_mode(doc) == "rational" ? scenario_detail::run_verify_impl<Rational>(doc, opts)
                                            : scenario_detail::run_verify_impl<double>(doc, opts);
}

inline ordered_json run_exercise(const ordered_json& doc, const RunOptions& opts = {}) {
    return scenario_mode(doc) == "rational" ? scenario_detail::run_exercise_impl<Rational>(doc, opts)
                                            : scenario_detail::run_exercise_impl<double>(doc, opts);
}

namespace scenario_detail {

inline std::string csv_cell(const ordered_json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ';';
            out += csv_cell(v[i]);
        }
        return out;
    }
    return v.dump();
}

}  // namespace scenario_detail

/// Flat CSV view of a report: the per-node table for price reports, the
/// check list for verification reports.
inline std::string report_to_csv(const ordered_json& rep) {
    std::ostringstream out;
    if (rep.contains("nodes")) {
        out << "id,k,t,price";
        const bool has_i = !rep.at("nodes").empty() && rep.at("nodes")[0].contains("issuer");
        const bool has_h = !rep.at("nodes").empty() && rep.at("nodes")[0].contains("holder");
        for (const char* tag : {"issuer", "holder"}) {
            if ((tag[0] == 'i' && !has_i) || (tag[0] == 'h' && !has_h)) continue;
            out << ',' << tag << "_y," << tag << "_z," << tag << "_dk," << tag << "_obstacle," << tag
                << "_contact";
        }
        out << '\n';
        for (const auto& row : rep.at("nodes")) {
            out << scenario_detail::csv_cell(row.at("id")) << ',' << scenario_detail::csv_cell(row.at("k")) << ','
                << scenario_detail::csv_cell(row.at("t")) << ',' << scenario_detail::csv_cell(row.at("price"));
            for (const char* tag : {"issuer", "holder"}) {
                if (!row.contains(tag)) continue;
                const auto& sj = row.at(tag);
                out << ',' << scenario_detail::csv_cell(sj.at("y")) << ',' << scenario_detail::csv_cell(sj.at("z"))
                    << ',' << scenario_detail::csv_cell(sj.at("dk")) << ','
                    << scenario_detail::csv_cell(sj.at("obstacle")) << ','
                    << scenario_detail::csv_cell(sj.at("contact"));
            }
            out << '\n';
        }
        return out.str();
    }
    if (rep.contains("checks")) {
        out << "name,pass,expected,got,tolerance\n";
        for (const auto& c : rep.at("checks")) {
            out << scenario_detail::csv_cell(c.at("name")) << ',';
            if (c.contains("skipped")) out << "skipped,,,";
            else
                out << scenario_detail::csv_cell(c.at("pass")) << ',' << scenario_detail::csv_cell(c.at("expected"))
                    << ',' << scenario_detail::csv_cell(c.at("got")) << ','
                    << scenario_detail::csv_cell(c.at("tolerance"));
            out << '\n';
        }
        return out.str();
    }
    throw std::invalid_argument("report has no tabular section");
}

}  // namespace treebsde
