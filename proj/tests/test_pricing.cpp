#include "doctest.h"

#include "treebsde/pricing.hpp"

#include "fixtures.hpp"

using namespace treebsde;

namespace {

/// Issuer sells an american put struck at 100: X^h = -(100 - S)^+.
template <class S>
ContractSpec<S> put_contract(const EventTree<S>& t, const S& strike) {
    ContractSpec<S> c;
    c.payoff = fixtures::negate(fixtures::put_floor(t, strike));
    c.flows = CashFlowProcess<S>(t.size());
    c.maturity_index = t.depth();
    return c;
}

}  // namespace

TEST_CASE("relative rewards") {
    auto t = fixtures::scenario_a_tree<double>();
    auto c = put_contract(t, 100.0);
    AdaptedProcess<double> zero_bench(t.size(), 0.0);

    SUBCASE("put against a zero benchmark") {
        auto x = issuer_relative_reward(c, zero_bench);
        for (int id = 0; id < t.size(); ++id)
            CHECK(x[id] == doctest::Approx(std::max(100.0 - t.prices[static_cast<std::size_t>(id)][0], 0.0)));
        auto h = holder_relative_reward(c, zero_bench);
        CHECK(h[6] == doctest::Approx(-19.0));
        CHECK(h[3] == doctest::Approx(0.0));
        CHECK(h[4] == doctest::Approx(0.0));
        CHECK(h[5] == doctest::Approx(0.0));
    }
    SUBCASE("zero payoff leaves the benchmark") {
        ContractSpec<double> zc;
        zc.payoff = AdaptedProcess<double>(t.size(), 0.0);
        zc.flows = CashFlowProcess<double>(t.size());
        AdaptedProcess<double> bench(t.size(), 17.0);
        auto x = issuer_relative_reward(zc, bench);
        auto h = holder_relative_reward(zc, bench);
        for (int id = 0; id < t.size(); ++id) {
            CHECK(x[id] == doctest::Approx(17.0));
            CHECK(h[id] == doctest::Approx(17.0));
        }
    }
    SUBCASE("constant payoff shifts pointwise") {
        ContractSpec<double> cc;
        cc.payoff = AdaptedProcess<double>(t.size(), 5.0);
        cc.flows = CashFlowProcess<double>(t.size());
        auto bench = benchmark_wealth(t, 100.0, {0.02, 0.06});
        auto x = issuer_relative_reward(cc, bench);
        for (int id = 0; id < t.size(); ++id) CHECK(x[id] == doctest::Approx(bench[id] - 5.0));
    }
}

TEST_CASE("issuer acceptable price") {
    SUBCASE("american put, exact") {
        auto t = fixtures::scenario_a_tree<Rational>();
        auto c = put_contract(t, Rational(100));
        auto res = issuer_acceptable_price(t, zero_generator<Rational>(), c, Rational(0), RateSchedule<Rational>{});
        CHECK(res.price == Rational(76, 9));
        CHECK_FALSE(res.comparison_unverified);
        CHECK(res.solution.z[0][0] == Rational(-19, 45));
    }
    SUBCASE("zero contract prices at zero") {
        auto t = fixtures::scenario_a_tree<double>();
        ContractSpec<double> c;
        c.payoff = AdaptedProcess<double>(t.size(), 0.0);
        c.flows = CashFlowProcess<double>(t.size());
        auto res = issuer_acceptable_price(t, zero_generator<double>(), c, 0.0, RateSchedule<double>{});
        CHECK(res.price == doctest::Approx(0.0));
    }
    SUBCASE("endowment shift cancels under a linear driver") {
        auto t = fixtures::scenario_a_tree<Rational>();
        auto c = put_contract(t, Rational(100));
        auto res = issuer_acceptable_price(t, zero_generator<Rational>(), c, Rational(3), RateSchedule<Rational>{});
        CHECK(res.price == Rational(76, 9));
    }
}

TEST_CASE("holder acceptable price") {
    SUBCASE("linear market: coincides with the issuer price") {
        auto t = fixtures::scenario_a_tree<Rational>();
        auto c = put_contract(t, Rational(100));
        auto res = holder_acceptable_price(t, zero_generator<Rational>(), c, Rational(0), RateSchedule<Rational>{});
        CHECK(res.price == Rational(76, 9));
    }
    SUBCASE("zero payoff prices at zero") {
        auto t = fixtures::scenario_a_tree<double>();
        ContractSpec<double> c;
        c.payoff = AdaptedProcess<double>(t.size(), 0.0);
        c.flows = CashFlowProcess<double>(t.size());
        CHECK(holder_acceptable_price(t, zero_generator<double>(), c, 0.0, RateSchedule<double>{}).price == doctest::Approx(0.0));
    }
    SUBCASE("differential rates drive a wedge p_holder <= p_issuer") {
        auto t = fixtures::scenario_a_tree<double>();
        auto c = put_contract(t, 100.0);
        auto gen = funding_generator<double>({0.01, 0.05}, t.max_price());
        const double pi = issuer_acceptable_price(t, gen, c, 0.0, RateSchedule<double>{0.01, 0.05}).price;
        const double ph = holder_acceptable_price(t, gen, c, 0.0, RateSchedule<double>{0.01, 0.05}).price;
        CHECK(pi >= ph - 1e-12);
    }
}

TEST_CASE("break-even classification agrees five ways") {
    auto t = fixtures::scenario_a_tree<Rational>();
    auto c = put_contract(t, Rational(100));
    auto gen = zero_generator<Rational>();
    const RateSchedule<Rational> rates{};

    SUBCASE("the first-contact rule is break-even") {
        auto rep = classify_break_even(t, gen, c, Rational(0), rates, StoppingTime{{1, 5, 6}});
        CHECK(rep.all_agree);
        CHECK(rep.is_break_even);
        CHECK(rep.wealth_breaks_even);
        CHECK(rep.no_arbitrage_predicate);
        CHECK(rep.attains_root_value);
    }
    SUBCASE("stopping at both t1 nodes is not: value 20/3 < 76/9") {
        auto rep = classify_break_even(t, gen, c, Rational(0), rates, StoppingTime{{1, 2}});
        CHECK(rep.all_agree);
        CHECK_FALSE(rep.is_break_even);
    }
    SUBCASE("holding to maturity is the second break-even rule") {
        auto rep = classify_break_even(t, gen, c, Rational(0), rates, StoppingTime{{3, 4, 5, 6}});
        CHECK(rep.all_agree);
        CHECK(rep.is_break_even);
    }
    SUBCASE("all five agree on every enumerated stopping time") {
        for (const auto& tau : enumerate_stopping_times(t, 0, 1000)) {
            auto rep = classify_break_even(t, gen, c, Rational(0), rates, tau);
            CHECK(rep.all_agree);
        }
    }
}

TEST_CASE("rational exercise times") {
    SUBCASE("american put: exactly two, earliest at first contact, latest at maturity") {
        auto t = fixtures::scenario_a_tree<Rational>();
        auto c = put_contract(t, Rational(100));
        auto res = rational_exercise_times(t, zero_generator<Rational>(), c, Rational(0), RateSchedule<Rational>{});
        CHECK(res.enumerated);
        REQUIRE(res.times.size() == 2);
        CHECK(res.times[0].stop_set == std::vector<int>{1, 5, 6});
        CHECK(res.times[1].stop_set == std::vector<int>{3, 4, 5, 6});
        CHECK(res.earliest.stop_set == std::vector<int>{1, 5, 6});
        CHECK(res.latest.stop_set == std::vector<int>{3, 4, 5, 6});
        CHECK_FALSE(res.latest_point_mass_caveat);
        // the latest time is itself a member of the set
        CHECK(res.is_rational(res.latest));
        CHECK(res.is_rational(res.earliest));
    }
    SUBCASE("constant relative reward: every stopping time is rational") {
        auto t = fixtures::scenario_a_tree<double>();
        ContractSpec<double> c;
        c.payoff = AdaptedProcess<double>(t.size(), 2.0);
        c.flows = CashFlowProcess<double>(t.size());
        auto res = rational_exercise_times(t, zero_generator<double>(), c, 0.0, RateSchedule<double>{}, 1000, 1e-12);
        CHECK(res.enumerated);
        CHECK(res.times.size() == 5);
    }
    SUBCASE("immediate reflection leaves only immediate exercise") {
        auto t = build_binomial<double>(100.0, 1.2, 0.9, 1, 1.0, 0.5);
        ContractSpec<double> c;
        c.payoff = AdaptedProcess<double>(t.size());
        c.payoff[0] = 0.0;
        c.payoff[1] = 10.0;
        c.payoff[2] = 10.0;  // candidate at the root is 10, obstacle 0
        c.flows = CashFlowProcess<double>(t.size());
        auto res = rational_exercise_times(t, zero_generator<double>(), c, 0.0, RateSchedule<double>{}, 1000, 1e-12);
        REQUIRE(res.times.size() == 1);
        CHECK(res.times[0].stop_set == std::vector<int>{0});
        CHECK(res.latest.stop_set == std::vector<int>{0});
        CHECK(res.latest_point_mass_caveat);
    }
    SUBCASE("budget refusal falls back to the predicate endpoints") {
        auto t = build_binomial<double>(100.0, 1.1, 0.95, 5, 1.0, 0.5);
        auto c = put_contract(t, 100.0);
        auto res = rational_exercise_times(t, zero_generator<double>(), c, 0.0, RateSchedule<double>{}, 100, 1e-9);
        CHECK_FALSE(res.enumerated);
        CHECK(res.times.empty());
        CHECK(res.candidate_count == 458330);
        CHECK(validate_stopping_time(t, res.earliest));
        CHECK(validate_stopping_time(t, res.latest));
        CHECK(res.is_rational(res.earliest));
    }
}

TEST_CASE("full price report") {
    auto t = fixtures::scenario_a_tree<double>();
    auto c = put_contract(t, 100.0);
    auto rep = price_contract(t, zero_generator<double>(), c, Endowments<double>{0.0, 0.0}, RateSchedule<double>{}, 1e-12);
    CHECK(rep.p_issuer == doctest::Approx(76.0 / 9.0));
    CHECK(rep.p_holder == doctest::Approx(76.0 / 9.0));
    CHECK(rep.tau_issuer_earliest.stop_set == std::vector<int>{1, 5, 6});
    CHECK(rep.tau_holder_earliest.stop_set == std::vector<int>{1, 5, 6});
    CHECK(rep.tau_holder_latest.stop_set == std::vector<int>{3, 4, 5, 6});
    CHECK(rep.issuer_total_reflection == doctest::Approx(0.0));
    CHECK_FALSE(rep.comparison_unverified);
}

TEST_CASE("prices carry a warning when strict comparison is unverified") {
    EventTree<double> bad;
    bad.time_grid = {0.0, 1.0};
    bad.nodes.push_back({0, 0, -1, {1, 2}});
    bad.branch_prob = {1.0, 0.5, 0.5};
    bad.prices = {{130.0}, {120.0}, {90.0}};
    bad.nodes.push_back({1, 1, 0, {}});
    bad.nodes.push_back({2, 1, 0, {}});
    bad.validate();
    ContractSpec<double> c;
    c.payoff = AdaptedProcess<double>(bad.size(), 0.0);
    c.flows = CashFlowProcess<double>(bad.size());
    auto res = issuer_acceptable_price(bad, zero_generator<double>(), c, 0.0, RateSchedule<double>{});
    CHECK(res.comparison_unverified);
}
