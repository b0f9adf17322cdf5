#include "doctest.h"

#include "treebsde/scenario.hpp"

#include "fixtures.hpp"

using namespace treebsde;

namespace {

ordered_json scenario_a_doc(const std::string& mode) {
    ordered_json doc;
    doc["name"] = "scenario-a";
    doc["mode"] = mode;
    doc["tree"] = {{"kind", "binomial"}, {"s0", "100"},      {"up", "6/5"}, {"down", "9/10"},
                   {"steps", 2},         {"maturity", "1"},  {"prob", "1/2"}};
    doc["payoff"] = "-pos(100 - S)";  // issuer pays the put payoff on exercise
    return doc;
}

}  // namespace

TEST_CASE("expression language") {
    auto t = fixtures::scenario_a_tree<double>();

    SUBCASE("put payoff on the tree") {
        auto vals = Expression("max(100 - S, 0)").on_tree(t);
        CHECK(vals[0] == doctest::Approx(0.0));
        CHECK(vals[2] == doctest::Approx(10.0));
        CHECK(vals[6] == doctest::Approx(19.0));
        CHECK(vals[3] == doctest::Approx(0.0));
    }
    SUBCASE("pos is one-sided, neg the mirror") {
        auto p = Expression("pos(S - 110)").on_tree(t);
        auto n = Expression("neg(S - 110)").on_tree(t);
        CHECK(p[1] == doctest::Approx(10.0));
        CHECK(n[1] == doctest::Approx(0.0));
        CHECK(p[2] == doctest::Approx(0.0));
        CHECK(n[2] == doctest::Approx(20.0));
    }
    SUBCASE("path extrema track the running min and max") {
        auto mx = Expression("Smax").on_tree(t);
        auto mn = Expression("Smin").on_tree(t);
        CHECK(mx[5] == doctest::Approx(108.0));  // down-up: 100, 90, 108
        CHECK(mn[5] == doctest::Approx(90.0));
        CHECK(mx[4] == doctest::Approx(120.0));  // up-down: 100, 120, 108
        CHECK(mn[4] == doctest::Approx(100.0));
    }
    SUBCASE("time and stage variables") {
        auto ks = Expression("k").on_tree(t);
        auto ts = Expression("t * 2").on_tree(t);
        CHECK(ks[0] == doctest::Approx(0.0));
        CHECK(ks[3] == doctest::Approx(2.0));
        CHECK(ts[1] == doctest::Approx(1.0));
    }
    SUBCASE("decimal literals are exact in rational mode") {
        auto tr = fixtures::scenario_a_tree<Rational>();
        ExprContext<Rational> ctx;
        std::vector<Rational> px{Rational(100)};
        ctx.prices = &px;
        CHECK(Expression("0.1 + 0.2")(ctx) == Rational(3, 10));
        CHECK(Expression("1.2 * 5")(ctx) == Rational(6));
        auto vals = Expression("max(100 - S, 0)").on_tree(tr);
        CHECK(vals[6] == Rational(19));
    }
    SUBCASE("operator precedence and unary minus") {
        ExprContext<double> ctx;
        std::vector<double> px{7.0};
        ctx.prices = &px;
        CHECK(Expression("2 + 3 * 4")(ctx) == doctest::Approx(14.0));
        CHECK(Expression("-(2 + 3) * 4")(ctx) == doctest::Approx(-20.0));
        CHECK(Expression("10 - 4 - 3")(ctx) == doctest::Approx(3.0));
        CHECK(Expression("8 / 4 / 2")(ctx) == doctest::Approx(1.0));
        CHECK(Expression("abs(3 - S)")(ctx) == doctest::Approx(4.0));
        CHECK(Expression("min(S, 5)")(ctx) == doctest::Approx(5.0));
    }
    SUBCASE("malformed expressions are rejected with a position") {
        CHECK_THROWS_AS(Expression("2 +"), ExprError);
        CHECK_THROWS_AS(Expression("(1 + 2"), ExprError);
        CHECK_THROWS_AS(Expression("1 2"), ExprError);
        ExprContext<double> ctx;
        std::vector<double> px{1.0};
        ctx.prices = &px;
        CHECK_THROWS_AS(Expression("frob(1)")(ctx), std::invalid_argument);
        CHECK_THROWS_AS(Expression("Q")(ctx), std::invalid_argument);
        CHECK_THROWS_AS(Expression("1 / 0")(ctx), std::invalid_argument);
    }
}

TEST_CASE("scalar parsing") {
    SUBCASE("fractions and decimals are exact") {
        CHECK(parse_scalar<Rational>(ordered_json("76/9"), "x") == Rational(76, 9));
        CHECK(parse_scalar<Rational>(ordered_json("1.2"), "x") == Rational(6, 5));
        CHECK(parse_scalar<Rational>(ordered_json("-0.25"), "x") == Rational(-1, 4));
        CHECK(parse_scalar<Rational>(ordered_json(3), "x") == Rational(3));
    }
    SUBCASE("float mode accepts the same forms") {
        CHECK(parse_scalar<double>(ordered_json("1/4"), "x") == doctest::Approx(0.25));
        CHECK(parse_scalar<double>(ordered_json(1.5), "x") == doctest::Approx(1.5));
    }
    SUBCASE("garbage is rejected") {
        CHECK_THROWS_AS(parse_scalar<Rational>(ordered_json("1.2.3"), "x"), ScenarioError);
        CHECK_THROWS_AS(parse_scalar<Rational>(ordered_json("abc"), "x"), ScenarioError);
        CHECK_THROWS_AS(parse_scalar<Rational>(ordered_json(true), "x"), ScenarioError);
    }
}

TEST_CASE("scenario ingestion") {
    SUBCASE("binomial tree round-trips the benchmark example exactly") {
        auto m = build_model<Rational>(scenario_a_doc("rational"), 1000000);
        auto ref = fixtures::scenario_a_tree<Rational>();
        REQUIRE(m.tree.size() == ref.size());
        for (int id = 0; id < ref.size(); ++id) CHECK(m.tree.prices[id][0] == ref.prices[id][0]);
        CHECK(m.contract.payoff[6] == Rational(-19));
        CHECK(m.tol == Rational(0));
    }
    SUBCASE("unknown keys are rejected loudly") {
        auto doc = scenario_a_doc("float");
        doc["frobnicate"] = 1;
        CHECK_THROWS_AS(build_model<double>(doc, 1000000), ScenarioError);
        doc = scenario_a_doc("float");
        doc["tree"]["volatility"] = 0.2;
        CHECK_THROWS_AS(build_model<double>(doc, 1000000), ScenarioError);
        doc = scenario_a_doc("float");
        doc["generator"] = {{"kind", "discount"}, {"rate", 0.05}, {"spread", 0.01}};
        CHECK_THROWS_AS(build_model<double>(doc, 1000000), ScenarioError);
    }
    SUBCASE("missing required keys are rejected") {
        auto doc = scenario_a_doc("float");
        doc.erase("payoff");
        CHECK_THROWS_AS(build_model<double>(doc, 1000000), ScenarioError);
        CHECK_THROWS_AS(scenario_mode(ordered_json::object()), ScenarioError);
        CHECK_THROWS_AS(scenario_mode(ordered_json{{"mode", "exact"}}), ScenarioError);
    }
    SUBCASE("explicit trees follow the node schema") {
        ordered_json doc;
        doc["mode"] = "float";
        doc["payoff"] = "pos(100 - S)";
        doc["tree"] = {{"kind", "explicit"},
                       {"time_grid", {0.0, 1.0}},
                       {"nodes",
                        {{{"id", 0},
                          {"k", 0},
                          {"parent", nullptr},
                          {"children", {{{"id", 1}, {"prob", 0.5}}, {{"id", 2}, {"prob", 0.5}}}},
                          {"price", {100.0}}},
                         {{"id", 1}, {"k", 1}, {"parent", 0}, {"children", ordered_json::array()}, {"price", {120.0}}},
                         {{"id", 2}, {"k", 1}, {"parent", 0}, {"children", ordered_json::array()}, {"price", {90.0}}}}}};
        auto m = build_model<double>(doc, 1000000);
        CHECK(m.tree.size() == 3);
        CHECK(m.tree.depth() == 1);
        CHECK(m.contract.payoff[2] == doctest::Approx(10.0));
        doc["tree"]["nodes"][1]["extra"] = 1;
        CHECK_THROWS_AS(build_model<double>(doc, 1000000), ScenarioError);
    }
    SUBCASE("flows are predictable step increments") {
        auto doc = scenario_a_doc("rational");
        doc["flows"] = "1/2";
        auto m = build_model<Rational>(doc, 1000000);
        CHECK(m.contract.flows.at(0) == Rational(1, 2));
        CHECK(m.contract.flows.at(1) == Rational(1, 2));
        CHECK(m.contract.flows.at(6) == Rational(0));  // leaf entries unused
        CHECK(m.contract.flows.cumulative(m.tree, 6) == Rational(1));
    }
    SUBCASE("benchmark variants") {
        auto doc = scenario_a_doc("float");
        doc["endowments"] = {{"x1", 10.0}, {"x2", 5.0}};
        doc["benchmark"] = {{"lend", 0.02}, {"borrow", 0.06}};
        auto m = build_model<double>(doc, 1000000);
        CHECK(m.bench_issuer[0] == doctest::Approx(10.0));
        CHECK(m.bench_issuer[1] == doctest::Approx(10.0 * 1.01));
        CHECK(m.bench_holder[1] == doctest::Approx(5.0 * 1.01));
        doc["benchmark"] = {{"lend", 0.05}, {"borrow", 0.01}};
        CHECK_THROWS(build_model<double>(doc, 1000000));
    }
}

TEST_CASE("price reports") {
    SUBCASE("rational run reproduces the exact benchmark values") {
        auto rep = run_price(scenario_a_doc("rational"));
        CHECK(rep["issuer"]["price"] == "76/9");
        CHECK(rep["holder"]["price"] == "76/9");
        CHECK(rep["spread"] == "0");
        CHECK(rep["issuer"]["z0"][0] == "-19/45");
        CHECK(rep["issuer"]["total_reflection"] == "0");
        CHECK(rep["issuer"]["first_contact"]["stop_set"] == std::vector<int>{1, 5, 6});
        CHECK(rep["holder"]["latest_exercise"]["stop_set"] == std::vector<int>{3, 4, 5, 6});
        CHECK(rep["nodes"].size() == 7);
        CHECK(rep["nodes"][2]["issuer"]["y"] == "38/3");
        CHECK(rep["nodes"][2]["issuer"]["contact"] == false);  // continuation 38/3 beats the floor 10
        CHECK(rep["nodes"][1]["issuer"]["contact"] == true);
        CHECK(rep["nodes"][0]["issuer"]["contact"] == false);
    }
    SUBCASE("float run agrees to tolerance") {
        auto rep = run_price(scenario_a_doc("float"));
        CHECK(rep["issuer"]["price"].get<double>() == doctest::Approx(76.0 / 9.0));
        CHECK(rep["mode"] == "float");
    }
    SUBCASE("side selection trims the report") {
        RunOptions opts;
        opts.side = "issuer";
        auto rep = run_price(scenario_a_doc("float"), opts);
        CHECK(rep.contains("issuer"));
        CHECK_FALSE(rep.contains("holder"));
        CHECK_FALSE(rep.contains("spread"));
    }
    SUBCASE("reports are byte-identical across runs") {
        auto a = run_price(scenario_a_doc("float")).dump(2);
        auto b = run_price(scenario_a_doc("float")).dump(2);
        CHECK(a == b);
    }
    SUBCASE("csv dump carries the node table") {
        auto csv = report_to_csv(run_price(scenario_a_doc("rational")));
        CHECK(csv.find("id,k,t,price,issuer_y") != std::string::npos);
        CHECK(csv.find("76/9") != std::string::npos);
        CHECK(csv.find("38/3") != std::string::npos);
    }
}

TEST_CASE("verification reports") {
    SUBCASE("the benchmark scenario passes every check") {
        auto rep = run_verify(scenario_a_doc("rational"));
        CHECK(rep["pass"] == true);
        CHECK(rep["checks_skipped"] == 0);
        for (const auto& c : rep["checks"]) CHECK(c["pass"] == true);
    }
    SUBCASE("a funding-rate scenario passes in float mode") {
        auto doc = scenario_a_doc("float");
        doc["generator"] = {{"kind", "funding"}, {"lend", 0.01}, {"borrow", 0.05}};
        doc["benchmark"] = {{"lend", 0.01}, {"borrow", 0.05}};
        auto rep = run_verify(doc);
        CHECK(rep["pass"] == true);
    }
    SUBCASE("disabling reflection is detected") {
        // deep-in-the-money put under discounting: reflection is genuinely
        // active, so skipping it must trip the verification checks
        auto doc = scenario_a_doc("float");
        doc["payoff"] = "-pos(130 - S)";
        doc["generator"] = {{"kind", "discount"}, {"rate", 0.1}};
        RunOptions opts;
        opts.break_reflection = true;
        auto rep = run_verify(doc, opts);
        CHECK(rep["pass"] == false);
    }
    SUBCASE("fast suite skips enumeration on deep trees") {
        ordered_json doc;
        doc["name"] = "deep";
        doc["mode"] = "float";
        doc["tree"] = {{"kind", "binomial"}, {"s0", 100.0},     {"up", 1.1}, {"down", 0.95},
                       {"steps", 5},         {"maturity", 1.0}, {"prob", 0.5}};
        doc["payoff"] = "-pos(100 - S)";
        RunOptions opts;
        opts.suite = "fast";
        auto rep = run_verify(doc, opts);
        CHECK(rep["pass"] == true);
        CHECK(rep["checks_skipped"].get<int>() == 3);
    }
    SUBCASE("verification csv lists the checks") {
        auto csv = report_to_csv(run_verify(scenario_a_doc("float")));
        CHECK(csv.find("name,pass,expected,got,tolerance") != std::string::npos);
        CHECK(csv.find("skorokhod_issuer,true") != std::string::npos);
    }
}

TEST_CASE("exercise reports") {
    auto rep = run_exercise(scenario_a_doc("rational"));
    CHECK(rep["holder"]["enumerated"] == true);
    CHECK(rep["holder"]["candidate_count"] == 5);
    CHECK(rep["holder"]["rational_times"].size() == 2);
    CHECK(rep["holder"]["earliest"]["stop_set"] == std::vector<int>{1, 5, 6});
    CHECK(rep["holder"]["latest"]["stop_set"] == std::vector<int>{3, 4, 5, 6});
    CHECK(rep["holder"]["latest_point_mass_caveat"] == false);
    CHECK(rep["issuer"]["earliest_break_even"]["stop_set"] == std::vector<int>{1, 5, 6});

    SUBCASE("budget refusal is reported, endpoints still provided") {
        ordered_json doc;
        doc["mode"] = "float";
        doc["tree"] = {{"kind", "binomial"}, {"s0", 100.0},     {"up", 1.1}, {"down", 0.95},
                       {"steps", 5},         {"maturity", 1.0}, {"prob", 0.5}};
        doc["payoff"] = "-pos(100 - S)";
        doc["budget"] = 100;
        auto deep = run_exercise(doc);
        CHECK(deep["holder"]["enumerated"] == false);
        CHECK(deep["holder"]["candidate_count"] == 458330);
        CHECK_FALSE(deep["holder"].contains("rational_times"));
        CHECK_FALSE(deep["holder"]["earliest"]["stop_set"].empty());
    }
}
