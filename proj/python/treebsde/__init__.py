"""Event-tree pricing of American-style contracts under nonlinear funding.

Scenarios are plain dicts (or JSON strings) following the schema documented
in the repository README; reports come back as dicts. Exact arithmetic is
selected per scenario with ``"mode": "rational"``, in which case numeric
values should be given as strings like ``"76/9"`` or ``"1.2"``.
"""

import json as _json

from ._treebsde import (
    BudgetExceeded,
    ScenarioError,
    SolverError,
    exercise_json,
    price_json,
    report_csv,
    verify_json,
)

__all__ = [
    "BudgetExceeded",
    "ScenarioError",
    "SolverError",
    "price",
    "verify",
    "exercise",
    "report_csv",
]


def _as_text(scenario):
    if isinstance(scenario, str):
        return scenario
    return _json.dumps(scenario)


def price(scenario, side="both", budget=1000000):
    """Acceptable prices, hedge, and per-node solution for a scenario."""
    return _json.loads(price_json(_as_text(scenario), side, budget))


def verify(scenario, suite="full", budget=1000000):
    """Self-verification report; ``report["pass"]`` is the overall verdict."""
    return _json.loads(verify_json(_as_text(scenario), suite, budget))


def exercise(scenario, budget=1000000):
    """Rational exercise-time analysis for the holder, first contact for the issuer."""
    return _json.loads(exercise_json(_as_text(scenario), budget))
