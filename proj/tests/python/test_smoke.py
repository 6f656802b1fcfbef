import json
import math
import pathlib

import pytest

import frango

EXAMPLES = pathlib.Path(__file__).resolve().parents[2] / "examples_config"


def test_mittag_leffler_order_one_is_exp():
    assert frango.mittag_leffler(1.0, 0.7) == pytest.approx(math.exp(0.7), rel=1e-13)


def test_mittag_leffler_half():
    # E_1/2(z) = exp(z^2) erfc(-z)
    z = 0.4
    assert frango.mittag_leffler(0.5, z) == pytest.approx(math.exp(z * z) * math.erfc(-z), rel=1e-12)


def test_caputo_of_monomial():
    # D^a x^2 = Gamma(3) / Gamma(3 - a) x^(2 - a)
    a, x = 0.5, 0.8
    exact = math.gamma(3) / math.gamma(3 - a) * x ** (2 - a)
    assert frango.caputo("x^2", a, x) == pytest.approx(exact, rel=1e-12)
    assert frango.caputo("x^2", a, x, operator="caputo_quadrature") == pytest.approx(exact, rel=1e-5)


def test_unknown_operator():
    with pytest.raises(frango.UsageError):
        frango.caputo("x", 0.5, 0.5, operator="weyl")


def test_domain_error_is_frango_error():
    with pytest.raises(frango.FrangoError):
        frango.caputo("x", 1.5, 0.5)


def test_run_example_matches_status():
    config = json.loads((EXAMPLES / "fracderiv_half.json").read_text())
    report = frango.run(config, EXAMPLES)
    assert report["command"] == "fracderiv"
    assert report["status"] == 0
    assert all(row["pass"] is not False for row in report["residuals"])
    csv = frango.summary(config, EXAMPLES)
    assert csv.startswith("metric,component,lattice_max,lattice_mean,tolerance,pass\n")


def test_schema_violation():
    with pytest.raises(frango.UsageError):
        frango.run({"schema_version": 1, "command": "fracderiv", "bogus": 1})
    with pytest.raises(frango.UsageError):
        frango.run("{not json")
