import math

import numpy as np
import pytest

from ckem.geometry import (
    BaseKind, BaseModel, GeometryError, LocalPoint, Model, base_einstein_residual, base_for,
    conformal_scalar_curvature, einstein_data, einstein_residual, f_identities, is_hermitian,
    is_positive_definite, log_metric_det, metric_det_closed_form, metric_closed_form, metric_fd,
    metric_inverse_closed_form, potential, sample_points, step_scales, t_derivatives, trace_identities,
    wirtinger_gradient, wirtinger_hessian,
)
from ckem.params import Case, ModelParams, ParamError
from ckem.profiles import ClosedFormProfile, FunctionProfile, QuadratureProfile, corollary_params
from conftest import GENERIC, build

_models: dict = {}


def model(key):
    if key not in _models:
        if key == "1.9":
            p = corollary_params("1.9", 1)
            _models[key] = Model(ClosedFormProfile(p, "1.9"), BaseModel(BaseKind.BALL, 1))
        elif key == "1.11":
            p = corollary_params("1.11", 1)
            _models[key] = Model(ClosedFormProfile(p, "1.11"), BaseModel(BaseKind.FLAT, 1))
        elif key == "1.11-d2":
            p = corollary_params("1.11", 2)
            _models[key] = Model(ClosedFormProfile(p, "1.11"), BaseModel(BaseKind.FLAT, 2))
        elif key == "IV1-d1r2":
            p = build(GENERIC[10])
            _models[key] = Model(QuadratureProfile(p), base_for(p))
        elif key == "I-d2r1":
            p = build(GENERIC[0])
            _models[key] = Model(QuadratureProfile(p), base_for(p))
    return _models[key]


def pt(z, w):
    return LocalPoint(np.array(z, dtype=complex), np.array(w, dtype=complex))


# -- base metrics ---------------------------------------------------------------


@pytest.mark.parametrize("kind", list(BaseKind))
@pytest.mark.parametrize("d", [1, 2])
def test_base_is_einstein(kind, d):
    base = BaseModel(kind, d, 1.0 if kind is BaseKind.FLAT else 1.7)
    rng = np.random.default_rng(11)
    for _ in range(5):
        z = rng.normal(size=d) + 1j * rng.normal(size=d)
        z *= 0.6 * rng.uniform() / np.linalg.norm(z)
        assert base_einstein_residual(base, z) <= 1e-5


def test_base_einstein_constants():
    assert BaseModel(BaseKind.FLAT, 3).einstein_constant == 0.0
    assert BaseModel(BaseKind.BALL, 2, 1.5).einstein_constant == pytest.approx(-2.0)
    assert BaseModel(BaseKind.FS, 1, 0.5).einstein_constant == pytest.approx(4.0)


def test_base_inverse_and_logdet():
    for kind in BaseKind:
        base = BaseModel(kind, 3, 1.3 if kind is not BaseKind.FLAT else 1.0)
        z = np.array([0.2 + 0.1j, -0.3j, 0.25])
        H = base.hessian(z)
        assert np.allclose(base.hessian_inverse(z) @ H, np.eye(3), atol=1e-13)
        assert base.log_det_hessian(z) == pytest.approx(math.log(np.linalg.det(H).real), abs=1e-12)


def test_base_dimension_must_be_positive():
    with pytest.raises(GeometryError):
        BaseModel(BaseKind.FLAT, 0)


def test_base_for_matches_gamma():
    p = build(GENERIC[10])
    assert base_for(p).einstein_constant == pytest.approx(p.gamma)
    assert base_for(corollary_params("1.11", 2)).kind is BaseKind.FLAT
    with pytest.raises(GeometryError):
        base_for(corollary_params("1.11", 1), "Ball")


def test_model_rejects_dimension_mismatch():
    p = corollary_params("1.9", 2)
    with pytest.raises(GeometryError):
        Model(ClosedFormProfile(p, "1.9"), BaseModel(BaseKind.BALL, 1))


# -- potential and metric -------------------------------------------------------


def test_potential_example():
    # F(t) = e^t and t = log((1-|z|^2)|w|^2) for the identity profile on the ball
    m = model("1.9")
    assert potential(m, pt([0], [0.5])) == pytest.approx(0.25, rel=1e-10)
    assert potential(m, pt([0.3 + 0.2j], [0.4 - 0.5j])) == pytest.approx(
        -math.log(1 - 0.13) + (1 - 0.13) * 0.41, rel=1e-10)


def test_nu_zero_potential_depends_only_on_t():
    m = model("1.11")
    a = pt([0.5], [0.3 + 0.6j])
    t = a.t(m.base, m.params.lam)
    rho2 = math.exp(t + 0.04)  # moves z to |z|^2 = 0.04 at the same t
    b = pt([0.2j], [math.sqrt(rho2)])
    assert b.t(m.base, m.params.lam) == pytest.approx(t, abs=1e-14)
    assert potential(m, a) == pytest.approx(potential(m, b), rel=1e-12)


def test_metric_matches_frozen_hessian_on_ball():
    T = metric_closed_form(model("1.9"), pt([0.3 + 0.2j], [0.4 - 0.5j]))
    ref = np.array([[0.911178491214163, -0.02 + 0.23j], [-0.02 - 0.23j, 0.87]])
    assert np.max(np.abs(T - ref)) <= 1e-10


def test_metric_matches_frozen_hessian_on_flat():
    T = metric_closed_form(model("1.11"), pt([0.5 - 0.4j], [0.3 + 0.6j]))
    ref = np.array([[1.6185076962177718, 0.2 - 0.9333333333333333j],
                    [0.2 + 0.9333333333333333j, 2.2222222222222223]])
    assert np.max(np.abs(T - ref)) <= 1e-10


@pytest.mark.parametrize("key", ["1.9", "1.11-d2", "IV1-d1r2", "I-d2r1"])
def test_metric_structure_on_samples(key):
    m = model(key)
    for q in sample_points(m, 6, seed=5):
        T = metric_closed_form(m, q)
        assert is_hermitian(T)
        assert is_positive_definite(T)
        fd = metric_fd(m, q)
        assert np.max(np.abs(T - fd)) <= 1e-6 * max(1.0, np.max(np.abs(T)))
        Ti = metric_inverse_closed_form(m, q)
        assert np.max(np.abs(T @ Ti - np.eye(len(T)))) <= 1e-10
        assert np.max(np.abs(Ti - np.linalg.inv(T))) <= 1e-8 * max(1.0, np.max(np.abs(Ti)))
        det = np.linalg.det(T).real
        assert metric_det_closed_form(m, q) == pytest.approx(det, rel=1e-8)
        assert log_metric_det(m, q) == pytest.approx(math.log(det), abs=1e-8)


def test_metric_is_unitarily_covariant_in_w():
    m = model("IV1-d1r2")
    q = sample_points(m, 1, seed=2)[0]
    th = 0.7
    U = np.array([[math.cos(th), -math.sin(th) * 1j], [-math.sin(th) * 1j, math.cos(th)]])
    U = U @ np.diag([1, np.exp(0.3j)])
    qU = LocalPoint(q.z, U @ q.w)
    B = np.eye(3, dtype=complex)
    B[1:, 1:] = np.conj(U)
    T, TU = metric_closed_form(m, q), metric_closed_form(m, qU)
    assert np.max(np.abs(TU - B @ T @ B.conj().T)) <= 1e-10


def test_determinant_example_and_scaling():
    m = model("1.11")
    q = pt([0], [math.exp(-1)])
    assert metric_det_closed_form(m, q) == pytest.approx(2 * math.e ** 2, rel=1e-10)
    # phi = 1 and nu + lam x = -x: doubling w multiplies det by (-x')/(4 * 2) with x' = -2 + log 4
    q2 = pt([0], [2 * math.exp(-1)])
    ratio = metric_det_closed_form(m, q2) / metric_det_closed_form(m, q)
    assert ratio == pytest.approx((2 - math.log(4)) / 8, rel=1e-10)


def test_non_positive_metric_is_rejected():
    # identity profile with nu = 0, lam = -1 makes nu + lam x negative
    p = ModelParams.build(Case.I, 1, 1, -1.0, 0.0, -1.0, 1.0, mu=-1.0, gamma=0.0)
    prof = FunctionProfile(p, lambda x: x, lambda x: 1.0, lambda x: 0.0, "identity")
    m = Model(prof, BaseModel(BaseKind.FLAT, 1))
    with pytest.raises(GeometryError):
        metric_closed_form(m, pt([0.1], [0.5]))


def test_zero_w_is_rejected():
    with pytest.raises(GeometryError):
        metric_closed_form(model("1.9"), pt([0.1], [0.0]))


# -- trace identities -------------------------------------------------------------


@pytest.mark.parametrize("key", ["1.9", "1.11-d2", "IV1-d1r2", "I-d2r1"])
def test_trace_identities(key):
    m = model(key)
    for q in sample_points(m, 4, seed=9):
        e1, e2 = trace_identities(m, q)
        assert abs(e1) <= 1e-8 and abs(e2) <= 1e-8
        g1, g2 = f_identities(m, q)
        assert abs(g1) <= 1e-7 and abs(g2) <= 1e-7


def test_trace_identities_on_axis_aligned_w():
    m = model("IV1-d1r2")
    q = sample_points(m, 1, seed=4)[0]
    q = LocalPoint(q.z, np.array([math.sqrt(q.rho2), 0.0], dtype=complex))
    assert max(map(abs, trace_identities(m, q))) <= 1e-8
    assert max(map(abs, f_identities(m, q))) <= 1e-7


@pytest.mark.parametrize("key", ["1.9", "IV1-d1r2", "I-d2r1"])
def test_t_derivatives_match_finite_differences(key):
    m = model(key)
    d, lam = m.params.d, m.params.lam
    q = sample_points(m, 1, seed=17)[0]
    dt, ddt = t_derivatives(m, q)
    fn = lambda v: LocalPoint.from_coords(v, d).t(m.base, lam)  # noqa: E731
    sc = step_scales(q)
    assert np.max(np.abs(wirtinger_gradient(fn, q.coords(), scales=sc) - dt)) <= 1e-6 * np.max(np.abs(dt))
    fd = wirtinger_hessian(fn, q.coords(), 4e-3, 4, sc)[0]
    # the w block lives on the scale 1/|w|^2 even where it vanishes (r = 1)
    assert np.max(np.abs(fd - ddt)) <= 1e-7 * max(np.max(np.abs(ddt)), 1 / q.rho2)


def test_f_identities_need_nonconstant_f():
    p = ModelParams.build(Case.I, 1, 1, -1.0, 1.0, 0.0, 1.0, mu=-1.0, gamma=0.0, x0=0.0, x1=0.5)
    prof = FunctionProfile(p, lambda x: x, lambda x: 1.0, lambda x: 0.0, "identity")
    m = Model(prof, BaseModel(BaseKind.FLAT, 1))
    with pytest.raises(ParamError):
        f_identities(m, pt([0.1], [0.5]))


# -- Einstein condition -------------------------------------------------------------


@pytest.mark.parametrize("key", ["1.9", "1.11-d2", "IV1-d1r2", "I-d2r1"])
def test_einstein_residual_small(key):
    m = model(key)
    for q in sample_points(m, 4, seed=13):
        e = einstein_data(m, q)
        assert e.residual <= 1e-5 * max(1.0, e.lhs_scale)


@pytest.mark.parametrize("key", ["1.9", "IV1-d1r2"])
def test_einstein_residual_detects_wrong_constant(key):
    m = model(key)
    q = sample_points(m, 1, seed=13)[0]
    assert einstein_residual(m, q, mu=m.params.mu + 0.1) > 1e-2


def test_flat_base_breaks_einstein_for_ball_model():
    p = corollary_params("1.9", 1)
    m = Model(ClosedFormProfile(p, "1.9"), BaseModel(BaseKind.FLAT, 1))
    q = pt([0.3], [0.5])
    assert einstein_residual(m, q) > 1e-2


@pytest.mark.parametrize("key", ["1.9", "1.11-d2", "IV1-d1r2"])
def test_conformal_scalar_curvature_is_n_mu(key):
    m = model(key)
    n, mu = m.params.n, m.params.mu
    ks = [conformal_scalar_curvature(m, q) for q in sample_points(m, 4, seed=21)]
    for k in ks:
        assert k == pytest.approx(n * mu, abs=1e-3 * max(1.0, abs(n * mu)))
    assert einstein_data(m, sample_points(m, 1, seed=21)[0]).lhs_scale > 0


# -- sampling -------------------------------------------------------------------------


def test_sampling_is_seeded():
    m = model("IV1-d1r2")
    a = sample_points(m, 5, seed=3)
    b = sample_points(m, 5, seed=3)
    c = sample_points(m, 5, seed=4)
    assert all(np.array_equal(p.coords(), q.coords()) for p, q in zip(a, b))
    assert not np.array_equal(a[0].coords(), c[0].coords())


def test_samples_lie_in_fiber_range():
    m = model("1.9")
    for q in sample_points(m, 10, seed=1):
        assert np.linalg.norm(q.z) < m.base.radius()
        x = m.x_of_t(q.t(m.base, m.params.lam))
        assert 0 < x < 1
