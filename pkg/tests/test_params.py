import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ckem.params import (
    NEG_INF, POS_INF, Case, ModelParams, ParamError, from_unit, gamma_for_case, mu_for_case_IV2,
    to_unit, validate,
)
from conftest import GENERIC, build
from oracles import gamma_case_formula


def eq19():
    return ModelParams.build(Case.I, 1, 1, -1.0, 1.0, -1.0, 1.0, mu=-3.0, x0=0.0, x1=1.0)


def test_admissible_model_has_no_violations():
    assert validate(eq19()) == []


def test_case_I_with_positive_a_is_flagged():
    p = ModelParams.build(Case.I, 1, 1, -1.0, 1.0, 1.0, 1.0, mu=-3.0, x0=0.0, x1=1.0)
    assert "a<0 violated" in validate(p)


def test_case_IV1_needs_rank_above_one():
    p = ModelParams.build(Case.IV1, 1, 1, 1.0, 0.0, 1.0, -1.0, x1=3.0)
    assert validate(p) == ["r>1 violated"]


def test_gamma_examples():
    assert gamma_for_case(eq19()) == pytest.approx(-2.0, abs=1e-15)
    assert ModelParams.build(Case.IV1, 1, 2, 3.0, 0.0, 1.0, -1.0).gamma == 6.0
    p = ModelParams.build(Case.II1, 2, 1, 1.0, 1.0, -1.0, 1.0, mu=0.0)
    assert gamma_for_case(p) == 0.0


@pytest.mark.parametrize("t", GENERIC, ids=[f"{t[0].value}-{i}" for i, t in enumerate(GENERIC)])
def test_gamma_matches_case_formula(t):
    p = build(t)
    if not (math.isfinite(float(p.x0)) and math.isfinite(float(p.x1))):
        # limit of the mu-proportional formula at an infinite endpoint
        assert p.gamma == 0.0
        return
    ref = float(gamma_case_formula(p.case_id.value, p.d, p.r, p.lam, p.nu, p.a, p.b, p.mu,
                              float(p.x0), float(p.x1)))
    assert p.gamma == pytest.approx(ref, rel=1e-14, abs=1e-15)


def test_mu_for_case_IV2_examples():
    assert mu_for_case_IV2(a=1.0, b=-1.0, r=2, x1=2.0) == pytest.approx(-0.5, rel=1e-15)
    assert mu_for_case_IV2(a=1.0, b=-1.0, r=3, x1=1.5) == pytest.approx(-1 / 3, rel=1e-15)
    near = mu_for_case_IV2(a=1.0, b=-1.0, r=2, x1=3.0 - 1e-9)
    assert -1e-8 < near < 0


def test_mu_for_case_IV2_rejects_window_edge():
    with pytest.raises(ParamError):
        mu_for_case_IV2(a=1.0, b=-1.0, r=2, x1=3.5)


def test_json_round_trip_with_infinite_endpoint():
    p = build(GENERIC[2])
    obj = p.to_json()
    assert obj["x0"] == "-inf"
    q = ModelParams.from_json(json.loads(json.dumps(obj)))
    assert q == p
    assert q.x0 is NEG_INF


def test_from_json_reports_missing_keys():
    with pytest.raises(ParamError, match="lambda"):
        ModelParams.from_json({"case": "I", "d": 1, "r": 1, "nu": 1, "a": -1, "b": 1})


def test_default_endpoints():
    assert build(GENERIC[5]).x1 is POS_INF
    p = ModelParams.build(Case.IV1, 1, 2, 1.0, 0.0, 1.0, -1.0)
    assert (p.x0, p.x1) == (1.0, 3.0)


@pytest.mark.parametrize("t", GENERIC, ids=[f"{t[0].value}-{i}" for i, t in enumerate(GENERIC)])
def test_positivity_on_thousand_samples(t):
    p = build(t)
    assert validate(p) == []
    for s in np.linspace(0, 1, 1002)[1:-1]:
        x = from_unit(p.x0, p.x1, float(s))
        assert p.f(x) > 0
        assert p.nu + p.lam * x > 0
        if p.r > 1:
            assert x > 0


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(-3, 3), a=st.floats(-3, 3), mu=st.floats(-3, 3))
def test_validate_is_idempotent_and_sorted(lam, a, mu):
    p = ModelParams.build(Case.I, 1, 1, lam, 1.0, a, 1.0, mu=mu, x0=0.0, x1=1.0)
    first = validate(p)
    assert first == validate(p)
    assert first == sorted(first)


@settings(max_examples=100, deadline=None)
@given(s=st.floats(1e-6, 1 - 1e-6))
def test_unit_map_round_trip(s):
    for x0, x1 in ((0.0, 1.0), (NEG_INF, 2.0), (-1.0, POS_INF), (NEG_INF, POS_INF)):
        x = from_unit(x0, x1, s)
        assert to_unit(x0, x1, x) == pytest.approx(s, rel=1e-9, abs=1e-12)
