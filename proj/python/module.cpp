// Python bindings: scenario-level entry points. Scenarios and reports cross
// the boundary as JSON text; the package wrapper turns them into dicts.

#include <pybind11/pybind11.h>

#include "treebsde/scenario.hpp"

namespace py = pybind11;

namespace {

treebsde::ordered_json parse_doc(const std::string& text) {
    try {
        return treebsde::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw treebsde::ScenarioError(std::string("invalid scenario JSON: ") + e.what());
    }
}

treebsde::RunOptions options(const std::string& side, const std::string& suite, std::uint64_t budget) {
    treebsde::RunOptions opts;
    opts.side = side;
    opts.suite = suite;
    opts.default_budget = budget;
    return opts;
}

}  // namespace

PYBIND11_MODULE(_treebsde, m) {
    m.doc() = "event-tree pricing of American-style contracts under nonlinear funding";

    py::register_exception<treebsde::ScenarioError>(m, "ScenarioError", PyExc_ValueError);
    py::register_exception<treebsde::SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<treebsde::BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);

    m.def(
        "price_json",
        [](const std::string& doc, const std::string& side, std::uint64_t budget) {
            return treebsde::run_price(parse_doc(doc), options(side, "full", budget)).dump();
        },
        py::arg("scenario"), py::arg("side") = "both", py::arg("budget") = 1000000,
        "Acceptable prices, hedges, and the per-node solution as a JSON report.");

    m.def(
        "verify_json",
        [](const std::string& doc, const std::string& suite, std::uint64_t budget) {
            return treebsde::run_verify(parse_doc(doc), options("both", suite, budget)).dump();
        },
        py::arg("scenario"), py::arg("suite") = "full", py::arg("budget") = 1000000,
        "Self-verification checks as a JSON report with an overall pass flag.");

    m.def(
        "exercise_json",
        [](const std::string& doc, std::uint64_t budget) {
            return treebsde::run_exercise(parse_doc(doc), options("both", "full", budget)).dump();
        },
        py::arg("scenario"), py::arg("budget") = 1000000,
        "Rational exercise-time analysis as a JSON report.");

    m.def(
        "report_csv", [](const std::string& report) { return treebsde::report_to_csv(parse_doc(report)); },
        py::arg("report"), "Flat CSV rendering of a price or verification report.");
}
