"""Smoke tests for the python bindings against the frozen two-step example."""

import pytest

import treebsde


SCENARIO = {
    "name": "american-put",
    "mode": "rational",
    "tree": {
        "kind": "binomial",
        "s0": "100",
        "up": "6/5",
        "down": "9/10",
        "steps": 2,
        "maturity": "1",
        "prob": "1/2",
    },
    "payoff": "-pos(100 - S)",
}


def test_price_exact():
    report = treebsde.price(SCENARIO)
    assert report["issuer"]["price"] == "76/9"
    assert report["holder"]["price"] == "76/9"
    assert report["issuer"]["z0"] == ["-19/45"]
    assert report["issuer"]["first_contact"]["stop_set"] == [1, 5, 6]


def test_price_float_side_selection():
    doc = dict(SCENARIO, mode="float")
    report = treebsde.price(doc, side="issuer")
    assert abs(report["issuer"]["price"] - 76.0 / 9.0) < 1e-9
    assert "holder" not in report


def test_verify_passes():
    report = treebsde.verify(SCENARIO)
    assert report["pass"] is True
    assert all(c.get("pass", True) for c in report["checks"])


def test_exercise_times():
    report = treebsde.exercise(SCENARIO)
    assert report["holder"]["enumerated"] is True
    assert [t["stop_set"] for t in report["holder"]["rational_times"]] == [
        [1, 5, 6],
        [3, 4, 5, 6],
    ]


def test_csv_rendering():
    csv = treebsde.report_csv(treebsde.price_json(treebsde._as_text(SCENARIO)))
    assert csv.splitlines()[0].startswith("id,k,t,price,issuer_y")
    assert "76/9" in csv


def test_bad_scenario_raises():
    with pytest.raises(treebsde.ScenarioError):
        treebsde.price({"mode": "float"})
    with pytest.raises(treebsde.ScenarioError):
        treebsde.price(dict(SCENARIO, surprise=1))
