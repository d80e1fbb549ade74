import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ckem.params import Infinite, from_unit
from ckem.profiles import ClosedFormProfile, QuadratureProfile, corollary_params
from ckem.reconstruction import Reconstruction, ReconstructionError, reconstruction_csv
from conftest import GENERIC, GENERIC_IDS, build

_cache: dict = {}


def recon(i):
    if i not in _cache:
        _cache[i] = Reconstruction(QuadratureProfile(build(GENERIC[i])))
    return _cache[i]


def identity_model(**kw):
    p = corollary_params("1.9", 1)
    return Reconstruction(ClosedFormProfile(p, "1.9"), **kw)


def linear_model(**kw):
    p = corollary_params("1.11", 1)
    return Reconstruction(ClosedFormProfile(p, "1.11"), **kw)


def test_t_of_x_on_exponential_potential():
    r = identity_model(x_ref=math.exp(-1), t_ref=-1.0)
    assert r.t_of_x(math.exp(-2)) == pytest.approx(-2.0, abs=1e-12)
    assert r.t_of_x(math.exp(-1)) == -1.0


def test_t_of_x_on_quadratic_potential():
    r = linear_model(x_ref=-1.0, t_ref=-1.0)
    assert r.t_of_x(-3.0) == pytest.approx(-3.0, abs=1e-12)


def test_inverse_examples():
    assert identity_model().x_of_t(-1.0) == pytest.approx(math.exp(-1), rel=1e-12)
    assert linear_model().x_of_t(-2.0) == pytest.approx(-2.0, rel=1e-12)


def test_F_normalization_examples():
    r = identity_model()
    for t in (-3.0, -1.0, -0.2):
        assert r.F_of_t(t) == pytest.approx(math.exp(t), rel=1e-10)
    r2 = linear_model()
    for t in (-4.0, -0.5):
        assert r2.F_of_t(t) - r2.F_of_t(-1.0) == pytest.approx((t * t - 1) / 2, rel=1e-10)


def test_t_limits_are_tagged():
    r = identity_model()
    lo, hi = r.t_range()
    assert isinstance(lo, Infinite) and lo.sign < 0
    assert hi == pytest.approx(0.0, abs=1e-12)
    assert r.t_of_x(0.0) is lo
    with pytest.raises(ReconstructionError):
        r.x_of_t(0.5)


def test_t_difference_matches_frozen_oracle():
    # int_{0.5}^{1.5} dx / phi for the (1.13) profile with a = -0.5, mu = -1, d = 1
    p = corollary_params("1.13", 1, a=-0.5, mu=-1.0)
    r = Reconstruction(QuadratureProfile(p))
    assert r.t_of_x(1.5) - r.t_of_x(0.5) == pytest.approx(5.076313393966992, rel=1e-9)


@pytest.mark.parametrize("i", range(len(GENERIC)), ids=GENERIC_IDS)
def test_round_trip_and_monotonicity(i):
    r = recon(i)
    p = r.params
    xs = [from_unit(p.x0, p.x1, s) for s in np.linspace(0.03, 0.97, 20)]
    ts = [r.t_of_x(x) for x in xs]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    for x, t in zip(xs, ts):
        assert r.x_of_t(t) == pytest.approx(x, rel=1e-9, abs=1e-9)
        assert abs(r.t_of_x(r.x_of_t(t)) - t) <= 1e-10 * (1 + abs(t))


@pytest.mark.parametrize("i", range(len(GENERIC)), ids=GENERIC_IDS)
def test_legendre_consistency(i):
    r = recon(i)
    p = r.params
    xs = [from_unit(p.x0, p.x1, s) for s in np.linspace(0.1, 0.9, 50)]
    worst = 0.0
    # F carries ~1e-11 relative quadrature noise, so the step must stay wide
    h = 2e-2
    for x in xs:
        t = r.t_of_x(x)
        F = {k: r.F_of_x(r.x_of_t(t + k * h / 2, hint=(x, t))) for k in (-2, -1, 1, 2)}
        F0 = r.F_of_x(x)
        d1 = (4 * (F[1] - F[-1]) / h - (F[2] - F[-2]) / (2 * h)) / 3
        d2 = (4 * (F[1] - 2 * F0 + F[-1]) / (h / 2) ** 2 - (F[2] - 2 * F0 + F[-2]) / h ** 2) / 3
        assert d1 == pytest.approx(x, rel=1e-5, abs=1e-6)
        worst = max(worst, abs(d2 - r.profile.eval(d1)))
    assert worst <= 1e-5


def test_second_difference_at_offset_point():
    r = linear_model()
    t = -1.0 + 0.1
    h = 1e-2
    d2 = (r.F_of_t(t + h) - 2 * r.F_of_t(t) + r.F_of_t(t - h)) / h ** 2
    assert d2 == pytest.approx(r.profile.eval(r.x_of_t(t)), abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(i=st.integers(0, len(GENERIC) - 1), s=st.floats(0.02, 0.98))
def test_round_trip_property(i, s):
    r = recon(i)
    x = from_unit(r.params.x0, r.params.x1, s)
    assert r.x_of_t(r.t_of_x(x)) == pytest.approx(x, rel=1e-9, abs=1e-9)


def test_csv_layout():
    text = reconstruction_csv(identity_model(), 16)
    lines = text.splitlines()
    assert lines[0] == "t,x,F"
    assert len(lines) == 17
    t, x, F = map(float, lines[5].split(","))
    assert F == pytest.approx(x, rel=1e-10)
    assert t == pytest.approx(math.log(x), abs=1e-10)
