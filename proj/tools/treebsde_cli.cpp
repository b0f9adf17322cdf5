// Command-line front end: prices, verifies, and analyses exercise times for
// scenario files. Exit codes: 0 success, 1 verification failure, 2 malformed
// input, 3 solver failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "treebsde/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitSolver = 3;

treebsde::ordered_json load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw treebsde::ScenarioError("cannot open scenario file '" + path + "'");
    try {
        return treebsde::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw treebsde::ScenarioError("invalid JSON in '" + path + "': " + e.what());
    }
}

void emit(const treebsde::ordered_json& report, const std::string& format, const std::string& out_path) {
    const std::string text = format == "csv" ? treebsde::report_to_csv(report) : report.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << text;
}

std::uint64_t budget_from_env() {
    if (const char* v = std::getenv("TREEBSDE_BUDGET")) {
        try {
            return std::stoull(v);
        } catch (const std::exception&) {
            throw treebsde::ScenarioError("TREEBSDE_BUDGET: not a number");
        }
    }
    return 1000000;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-tree pricing of American-style contracts under nonlinear funding"};
    app.require_subcommand(1);

    std::string scenario_path, out_path, format = "json", side = "both", suite = "full";
    bool break_reflection = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
        cmd->add_option("--out", out_path, "write the report here instead of stdout");
        cmd->add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv"}));
    };

    auto* price = app.add_subcommand("price", "compute acceptable prices and the hedge");
    add_common(price);
    price->add_option("--side", side, "which party to price")->check(CLI::IsMember({"issuer", "holder", "both"}));

    auto* verify = app.add_subcommand("verify", "run the self-verification checks");
    add_common(verify);
    verify->add_option("--suite", suite, "full runs every check; fast skips stopping-time enumeration on deep trees")
        ->check(CLI::IsMember({"full", "fast"}));
    verify->add_flag("--break-reflection", break_reflection)->group("");  // hidden: negative control

    auto* exercise = app.add_subcommand("exercise", "rational exercise-time analysis");
    add_common(exercise);

    CLI11_PARSE(app, argc, argv);

    try {
        treebsde::RunOptions opts;
        opts.side = side;
        opts.suite = suite;
        opts.break_reflection = break_reflection;
        opts.default_budget = budget_from_env();
        const auto doc = load_scenario(scenario_path);

        if (price->parsed()) {
            emit(treebsde::run_price(doc, opts), format, out_path);
            return kExitOk;
        }
        if (verify->parsed()) {
            const auto rep = treebsde::run_verify(doc, opts);
            emit(rep, format, out_path);
            return rep.at("pass").get<bool>() ? kExitOk : kExitVerifyFailed;
        }
        emit(treebsde::run_exercise(doc, opts), format, out_path);
        return kExitOk;
    } catch (const treebsde::ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const treebsde::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const treebsde::TheoremViolation& e) {
        std::cerr << "internal consistency failure: " << e.what() << "\n";
        return kExitVerifyFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
}
