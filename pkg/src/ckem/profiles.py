"""Momentum profiles phi(x), their ODE residuals and the Hamiltonian-form reduction.

Every profile in this package solves the linear first-order equation

    phi' + P(x) phi = Q(x),
    P = p'/p - (2n-1) a/f - a lam/L,      Q = (mu (nu + lam x) - gamma f^2) / (f L),

with ``p = (nu + lam x)^d x^(r-1)``, ``f = a x + b`` and ``L = a lam x + 2 a nu - b lam``.
The integrating factor gives ``phi = A(x) * int_{x*}^x g(u) du`` where
``A = f^(2n-1) L / p`` and ``g = p (mu (nu + lam u) - gamma f^2) / (f^(2n) L^2)``;
the reference endpoint ``x*`` depends on the case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import Case, ModelParams, NEG_INF, ParamError, from_unit, is_finite, to_unit
from .quadrature import CumulativeIntegral, QuadratureError, adaptive, chebyshev_unit_nodes


ENDPOINT_ACCEPT = 1e-6


class DomainError(ValueError):
    """x lies outside the open momentum interval (or hits a pole)."""


# ---------------------------------------------------------------------------
# closed forms


def _c16(d: int, mu: float, x: float) -> tuple[float, float, float]:
    A, B = (mu + 1) / (d + 1), mu / (d + 2)
    y = 1 - x
    phi = A * (1 - x - y ** (d + 2)) - B * (1 - y ** (d + 2))
    d1 = A * (-1 + (d + 2) * y ** (d + 1)) - B * (d + 2) * y ** (d + 1)
    d2 = (B - A) * (d + 2) * (d + 1) * y ** d
    return phi, d1, d2


def _c110(d: int, mu: float, x0: float, x: float, extra_mu: bool) -> tuple[float, float, float]:
    s = x / x0
    k = mu if extra_mu else 1.0
    phi = mu * ((s ** (d + 2) - 1) / (d + 2) - k / (d + 1) * s * (s ** (d + 1) - 1))
    # derivative in s, then chain rule ds/dx = 1/x0
    ds = mu * (s ** (d + 1) - k / (d + 1) * ((d + 2) * s ** (d + 1) - 1))
    dss = mu * ((d + 1) * s ** d - k * (d + 2) * s ** d)
    return phi, ds / x0, dss / x0 ** 2


def _c113_coeffs(n: int, a: float, mu: float) -> dict[int, float]:
    coeffs = {2: -mu / (n + 1)}
    for k in range(3, n + 2):
        prod = 1.0
        for j in range(1, k - 1):
            prod *= (n - j) / (n + j)
        coeffs[k] = -mu / a ** 2 * ((k - 1) / (n + k - 1)) * prod * a ** k
    return coeffs


_GL64 = np.polynomial.legendre.leggauss(64)


def _c119(d: int, r: int, b: float, x: float) -> tuple[float, float, float]:
    n = d + r
    x1 = -(r + 1) * b / (r - 1)

    def g(u):
        return u ** (n - 1) / ((u + b) ** (2 * n - 2) * (u - b) ** 2)

    # composite Gauss-Legendre on [x, x1]; g is smooth there
    edges = np.linspace(x, x1, 9)
    t, w = _GL64
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        total += h * float(np.dot(w, g(c + h * t)))
    integral = -total  # int_{x1}^{x}
    pre = -r * (x + b) ** (2 * n - 1) * (x - b) / x ** (n - 1)
    phi = pre * integral
    lp = (2 * n - 1) / (x + b) + 1 / (x - b) - (n - 1) / x
    lpp = -(2 * n - 1) / (x + b) ** 2 - 1 / (x - b) ** 2 + (n - 1) / x ** 2
    gx = g(x)
    dgx = gx * ((n - 1) / x - (2 * n - 2) / (x + b) - 2 / (x - b))
    d1 = lp * phi + pre * gx
    d2 = lpp * phi + lp * d1 + pre * (lp * gx + dgx)
    return phi, d1, d2


def _c112(d: int, a: float, mu: float, x0: float, x: float) -> tuple[float, float, float]:
    n = d + 1

    def g(u):
        return (u - x0) * u ** (n - 1) * (1 - a * a * x0 * u) / ((1 - a * u) ** 2 * (1 + a * u) ** (2 * n))

    def dlog_g(u):
        return (1 / (u - x0) + (n - 1) / u - a * a * x0 / (1 - a * a * x0 * u)
                + 2 * a / (1 - a * u) - 2 * n * a / (1 + a * u))

    edges = np.linspace(x0, x, 9)
    t, w = _GL64
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        total += h * float(np.dot(w, g(c + h * t)))
    pre = -mu / (1 + a * x0) ** 2 * (1 - a * x) * (1 + a * x) ** (2 * n - 1) / x ** (n - 1)
    phi = pre * total
    lp = -a / (1 - a * x) + (2 * n - 1) * a / (1 + a * x) - (n - 1) / x
    lpp = -a * a / (1 - a * x) ** 2 - (2 * n - 1) * a * a / (1 + a * x) ** 2 + (n - 1) / x ** 2
    gx = g(x)
    dgx = gx * dlog_g(x)
    d1 = lp * phi + pre * gx
    d2 = lpp * phi + lp * d1 + pre * (lp * gx + dgx)
    return phi, d1, d2


def limit_form_114(d: int, mu: float, x: float) -> tuple[float, float, float]:
    """a -> 0- limit of the (1.13) family: F = (n+1)/mu log|t|, so phi = -mu x^2/(n+1)."""
    n = d + 1
    return -mu * x * x / (n + 1), -2 * mu * x / (n + 1), -2 * mu / (n + 1)


CLOSED_FORMS = ("1.6", "1.7", "1.8", "1.9", "1.10", "1.10-extra-mu", "1.11", "1.12", "1.13", "1.15",
                "1.19")


def closed_form_derivs(formula_id: str, d: int, x: float, extra: dict | None = None
                       ) -> tuple[float, float, float]:
    """(phi, phi', phi'') of a corollary closed form.

    ``extra`` carries the free constants: ``mu`` (1.6, 1.10, 1.12, 1.13),
    ``x0`` (1.10, 1.12), ``a`` (1.12, 1.13), ``x1`` (1.15), ``r`` and ``b`` (1.19).
    """
    e = dict(extra or {})
    fid = str(formula_id)
    if fid in ("1.6", "1.7", "1.8", "1.9"):
        _check(0 <= x < 1, fid, x)
        if fid == "1.7":
            y = 1 - x
            return ((1 - x - y ** (d + 2)) / (d + 1),
                    (-1 + (d + 2) * y ** (d + 1)) / (d + 1),
                    -(d + 2) * y ** d)
        if fid == "1.8":
            y = 1 - x
            return (1 - y ** (d + 2)) / (d + 2), y ** (d + 1), -(d + 1) * y ** d
        if fid == "1.9":
            return x, 1.0, 0.0
        return _c16(d, float(e["mu"]), x)
    if fid in ("1.10", "1.10-extra-mu"):
        x0 = float(e["x0"])
        _check(x0 < x < 0, fid, x)
        return _c110(d, float(e["mu"]), x0, x, extra_mu=fid.endswith("extra-mu"))
    if fid == "1.11":
        _check(x < 0, fid, x)
        return 1.0, 0.0, 0.0
    if fid == "1.12":
        a, mu, x0 = float(e["a"]), float(e["mu"]), float(e.get("x0", 0.0))
        _check(0 <= x0 < x < -1 / a, fid, x)
        return _c112(d, a, mu, x0, x)
    if fid == "1.13":
        a, mu = float(e["a"]), float(e["mu"])
        _check(-1 < a * x < 0, fid, x)
        cs = _c113_coeffs(d + 1, a, mu)
        phi = sum(c * x ** k for k, c in cs.items())
        d1 = sum(k * c * x ** (k - 1) for k, c in cs.items())
        d2 = sum(k * (k - 1) * c * x ** (k - 2) for k, c in cs.items())
        return phi, d1, d2
    if fid == "1.15":
        x1 = float(e["x1"])
        _check(0 < x < x1, fid, x)
        s = x / x1
        return (x * (1 - s ** (d + 1)) / (d + 1),
                (1 - (d + 2) * s ** (d + 1)) / (d + 1),
                -(d + 2) * s ** d / x1)
    if fid == "1.19":
        r, b = int(e["r"]), float(e["b"])
        _check(-b < x < -(r + 1) * b / (r - 1), fid, x)
        return _c119(d, r, b, x)
    raise ValueError(f"unknown formula id {formula_id!r}")


def closed_form_phi(formula_id: str, d: int, x: float, extra: dict | None = None) -> float:
    """Closed-form momentum profile; see :func:`closed_form_derivs` for ``extra``."""
    return closed_form_derivs(formula_id, d, x, extra)[0]


def _check(ok: bool, fid: str, x: float) -> None:
    if not ok:
        raise DomainError(f"x={x!r} outside the domain of formula {fid}")


def corollary_params(formula_id: str, d: int, **extra) -> ModelParams:
    """Model parameters specializing the general cases to a closed form."""
    fid = str(formula_id).replace("-extra-mu", "")
    if fid in ("1.6", "1.7", "1.8", "1.9"):
        mu = {"1.7": 0.0, "1.8": -1.0, "1.9": -(d + 2.0)}.get(fid)
        mu = float(extra["mu"]) if mu is None else mu
        return ModelParams.build(Case.I, d, 1, -1.0, 1.0, -1.0, 1.0, mu=mu)
    if fid == "1.10":
        return ModelParams.build(Case.II1, d, 1, -1.0, 0.0, -1.0, 0.0, mu=float(extra["mu"]),
                                 x0=float(extra["x0"]), x1=0.0)
    if fid == "1.11":
        return ModelParams.build(Case.II1, d, 1, -1.0, 0.0, -1.0, 0.0, mu=-(d + 2.0),
                                 x0=NEG_INF, x1=0.0)
    if fid in ("1.12", "1.13"):
        a = float(extra["a"])
        lam = float(extra.get("lambda", 1.0))
        x0 = float(extra.get("x0", 0.0)) if fid == "1.12" else 0.0
        return ModelParams.build(Case.II1, d, 1, lam, 0.0, a, 1.0, mu=float(extra["mu"]),
                                 x0=x0, x1=-1.0 / a)
    if fid == "1.15":
        lam = float(extra.get("lambda", 1.0))
        return ModelParams.build(Case.III1, d, 1, lam, 0.0, 1.0, 0.0, mu=0.0,
                                 x1=float(extra["x1"]))
    if fid == "1.19":
        lam = float(extra.get("lambda", 1.0))
        return ModelParams.build(Case.IV1, d, int(extra["r"]), lam, 0.0, 1.0, float(extra["b"]),
                                 mu=0.0)
    raise ValueError(f"unknown formula id {formula_id!r}")


def corollary_extra(formula_id: str, params: ModelParams) -> dict:
    """The ``extra`` dict of :func:`closed_form_derivs` for a corollary model."""
    p = params
    fid = str(formula_id)
    if fid.startswith("1.10"):
        return {"mu": p.mu, "x0": float(p.x0)}
    if fid == "1.6":
        return {"mu": p.mu}
    if fid == "1.13":
        return {"mu": p.mu, "a": p.a}
    if fid == "1.12":
        return {"mu": p.mu, "a": p.a, "x0": float(p.x0)}
    if fid == "1.15":
        return {"x1": float(p.x1)}
    if fid == "1.19":
        return {"r": p.r, "b": p.b}
    return {}


# ---------------------------------------------------------------------------
# profile objects


class MomentumProfile:
    """phi on (x0, x1) with first and second derivatives."""

    params: ModelParams
    source: str

    def eval(self, x: float) -> float:
        raise NotImplementedError

    def deriv(self, x: float) -> float:
        raise NotImplementedError

    def deriv2(self, x: float) -> float:
        raise NotImplementedError

    def jet(self, x: float) -> tuple[float, float, float]:
        return self.eval(x), self.deriv(x), self.deriv2(x)

    def __call__(self, x: float) -> float:
        return self.eval(x)

    def eval_many(self, xs) -> np.ndarray:
        return np.array([self.eval(float(x)) for x in np.ravel(xs)])

    def interior(self, x: float) -> bool:
        return float(self.params.x0) < x < float(self.params.x1)


class ClosedFormProfile(MomentumProfile):
    def __init__(self, params: ModelParams, formula_id: str, extra: dict | None = None):
        self.params = params
        self.formula_id = str(formula_id)
        self.extra = corollary_extra(self.formula_id, params) if extra is None else dict(extra)
        self.source = f"closed:{self.formula_id}"

    def jet(self, x: float) -> tuple[float, float, float]:
        return closed_form_derivs(self.formula_id, self.params.d, x, self.extra)

    def eval(self, x: float) -> float:
        return self.jet(x)[0]

    def deriv(self, x: float) -> float:
        return self.jet(x)[1]

    def deriv2(self, x: float) -> float:
        return self.jet(x)[2]


class _Integrand:
    """Pieces of the integral representation; arithmetic only, so floats and arrays both work.

    Affine factors are kept in root form c*(u - root) so that u - root is
    exact next to a pole and the high powers of f do not amplify rounding.
    """

    def __init__(self, p: ModelParams):
        self.p = p
        self.n = p.n
        self.f_root = -p.b / p.a
        self.v_root = -p.nu / p.lam
        self.L_slope = p.a * p.lam
        self.L_root = (p.b * p.lam - 2 * p.a * p.nu) / self.L_slope

    def parts(self, u):
        p = self.p
        f = p.a * (u - self.f_root)
        L = self.L_slope * (u - self.L_root)
        v = p.lam * (u - self.v_root)
        return f, L, v

    def g(self, u):
        p = self.p
        f, L, v = self.parts(u)
        w = v ** p.d * u ** (p.r - 1)
        return w * (p.mu * v - p.gamma * f * f) / (f ** (2 * self.n) * L * L)

    def dg(self, u: float) -> float:
        p = self.p
        f, L, v = self.parts(u)
        w = v ** p.d * u ** (p.r - 1)
        lw = p.d * p.lam / v + ((p.r - 1) / u if p.r > 1 else 0.0)
        N = p.mu * v - p.gamma * f * f
        dN = p.mu * p.lam - 2 * p.gamma * p.a * f
        den = f ** (2 * self.n) * L * L
        return w * (lw * N + dN) / den - w * N / den * (2 * self.n * p.a / f + 2 * self.L_slope / L)

    def poles(self) -> tuple[float, ...]:
        """Zeros of f, L, nu + lam u and (r > 1) u."""
        out = [self.f_root, self.v_root, self.L_root]
        if self.p.r > 1:
            out.append(0.0)
        return tuple(out)

    def prefactor(self, x: float) -> float:
        p = self.p
        f, L, v = self.parts(x)
        return f ** (2 * self.n - 1) * L / (v ** p.d * x ** (p.r - 1))

    def alpha(self, x: float) -> float:
        """A'/A."""
        p = self.p
        f, L, v = self.parts(x)
        lw = p.d * p.lam / v + ((p.r - 1) / x if p.r > 1 else 0.0)
        return (2 * self.n - 1) * p.a / f + self.L_slope / L - lw

    def dalpha(self, x: float) -> float:
        p = self.p
        f, L, v = self.parts(x)
        lww = -p.d * p.lam ** 2 / v ** 2 - ((p.r - 1) / x ** 2 if p.r > 1 else 0.0)
        return -(2 * self.n - 1) * p.a ** 2 / f ** 2 - self.L_slope ** 2 / L ** 2 - lww


def _log_weight_d1(p: ModelParams, x: float) -> float:
    """p'/p."""
    out = p.d * p.lam / (p.nu + p.lam * x)
    if p.r > 1:
        out += (p.r - 1) / x
    return out


def _log_weight_d2(p: ModelParams, x: float) -> float:
    """(p'/p)'."""
    out = -p.d * p.lam ** 2 / (p.nu + p.lam * x) ** 2
    if p.r > 1:
        out -= (p.r - 1) / x ** 2
    return out


def phi_quadrature(params: ModelParams, x: float) -> float:
    """phi(x) from the integral representation, one adaptive quadrature per call."""
    _guard_interior(params, x)
    ig = _Integrand(params)
    xs = params.reference_endpoint()
    if is_finite(xs) and x == float(xs):
        return 0.0
    return ig.prefactor(x) * adaptive(ig.g, xs, x)


def _guard_interior(params: ModelParams, x: float) -> None:
    xs = params.reference_endpoint()
    if is_finite(xs) and x == float(xs):
        return
    if not (float(params.x0) < x < float(params.x1)):
        raise DomainError(f"x={x!r} outside ({params.x0}, {params.x1})")


class QuadratureProfile(MomentumProfile):
    """Integral-representation profile backed by a cached table.

    The integral ``I(x) = int_{x*}^x g`` is tabulated at Chebyshev nodes of
    the compactified interval. ``I`` at any x is the nearest tabulated value
    plus a short correction integral, so table values never limit accuracy.
    Derivatives use the product rule on ``A * I`` with the exact integrand.
    """

    def __init__(self, params: ModelParams, nodes: int = 48):
        self.params = params
        self.source = "quadrature"
        self._ig = _Integrand(params)
        self._xs = params.reference_endpoint()
        xs = [from_unit(params.x0, params.x1, float(s)) for s in chebyshev_unit_nodes(nodes)]
        self._cum = CumulativeIntegral(self._ig.g, self._ig.g, xs, self._xs, poles=self._ig.poles())

    def integral(self, x: float) -> float:
        _guard_interior(self.params, x)
        try:
            return self._cum(x)
        except QuadratureError:
            # within rounding reach of a pole of g the nodes themselves carry
            # relative noise ~ eps/dist; accept the best available estimate
            if not self._near_end(x):
                raise
            return self._cum(x, accept=ENDPOINT_ACCEPT)

    def _near_end(self, x: float) -> bool:
        p = self.params
        u = to_unit(p.x0, p.x1, x)
        return min(u, 1 - u) < 1e-4

    def eval(self, x: float) -> float:
        I = self.integral(x)
        return 0.0 if I == 0.0 else self._ig.prefactor(x) * I

    def jet(self, x: float) -> tuple[float, float, float]:
        ig = self._ig
        I = self.integral(x)
        A = ig.prefactor(x)
        al = ig.alpha(x)
        gx = ig.g(x)
        phi = A * I
        d1 = al * phi + A * gx
        d2 = ig.dalpha(x) * phi + al * d1 + A * (al * gx + ig.dg(x))
        return phi, d1, d2

    def deriv(self, x: float) -> float:
        return self.jet(x)[1]

    def deriv2(self, x: float) -> float:
        return self.jet(x)[2]


class ScaledProfile(MomentumProfile):
    """c * phi; used to build deliberate non-solutions."""

    def __init__(self, base: MomentumProfile, c: float):
        self.base, self.c = base, c
        self.params = base.params
        self.source = f"scaled:{c}:{base.source}"

    def jet(self, x):
        p, d1, d2 = self.base.jet(x)
        return self.c * p, self.c * d1, self.c * d2

    def eval(self, x):
        return self.c * self.base.eval(x)

    def deriv(self, x):
        return self.jet(x)[1]

    def deriv2(self, x):
        return self.jet(x)[2]


class FunctionProfile(MomentumProfile):
    """Profile from explicit callables (phi, phi', phi'')."""

    def __init__(self, params: ModelParams, phi: Callable, dphi: Callable, d2phi: Callable,
                 label: str = "function"):
        self.params = params
        self._f = (phi, dphi, d2phi)
        self.source = label

    def eval(self, x):
        return self._f[0](x)

    def deriv(self, x):
        return self._f[1](x)

    def deriv2(self, x):
        return self._f[2](x)


def build_profile(params: ModelParams, nodes: int = 48) -> QuadratureProfile:
    return QuadratureProfile(params, nodes=nodes)


# ---------------------------------------------------------------------------
# ODE residuals


def _pole_guard(val: float, what: str, x: float) -> None:
    if val == 0:
        raise DomainError(f"pole of {what} at x={x!r}")


def ode_residual_r1(profile: MomentumProfile, x: float) -> float:
    """First-order Einstein residual for rank-one fibers."""
    p = profile.params
    if p.r != 1:
        raise ValueError("ode_residual_r1 needs r = 1")
    return _first_order(profile, x, with_rank=False)


def ode_residual_nu_a_zero(profile: MomentumProfile, x: float) -> float:
    """First-order Einstein residual when nu * a = 0 (any rank)."""
    p = profile.params
    if p.nu * p.a != 0:
        raise ValueError("ode_residual_nu_a_zero needs nu * a = 0")
    if p.r > 1 and x == 0:
        raise DomainError("pole at x = 0")
    return _first_order(profile, x, with_rank=True)


def ode_residual_first(profile: MomentumProfile, x: float) -> float:
    """Whichever first-order form applies to the model."""
    p = profile.params
    if p.nu * p.a == 0:
        return ode_residual_nu_a_zero(profile, x)
    return ode_residual_r1(profile, x)


def _first_order(profile: MomentumProfile, x: float, with_rank: bool) -> float:
    p = profile.params
    phi, d1, _ = profile.jet(x)
    f = p.a * x + p.b
    L = p.a * p.lam * x + 2 * p.a * p.nu - p.b * p.lam
    _pole_guard(f, "f", x)
    _pole_guard(L, "a lam x + 2 a nu - b lam", x)
    coef = p.d * p.lam / (p.lam * x + p.nu) - p.lam * p.a / L
    if with_rank:
        coef += (p.r - 1) / x if p.r > 1 else 0.0
        coef -= (2 * p.n - 1) * p.a / f
    else:
        coef -= (2 * p.d + 1) * p.a / f
    return d1 + coef * phi - (p.mu * (p.nu + p.lam * x) - p.gamma * f * f) / (f * L)


def ode_residual_second(profile: MomentumProfile, x: float) -> float:
    """Second-order Einstein residual in the momentum variable."""
    p = profile.params
    phi, d1, d2 = profile.jet(x)
    f = p.f(x)
    _pole_guard(f, "f", x)
    lp = _log_weight_d1(p, x)
    lpp = _log_weight_d2(p, x)
    n, a = p.n, p.a
    return (d2 + (lp - 2 * a * n / f) * d1
            + (2 * (2 * n - 1) * a * a / f ** 2 - 2 * a * lp / f + lpp) * phi
            + p.mu / f ** 2)


def constraint_A(profile: MomentumProfile, x: float) -> float:
    """Extra first-order quantity that must vanish when r > 1."""
    p = profile.params
    if p.r <= 1:
        raise ValueError("constraint_A needs r > 1")
    phi, d1, _ = profile.jet(x)
    f = p.f(x)
    _pole_guard(f, "f", x)
    lp = _log_weight_d1(p, x)
    n, a = p.n, p.a
    return ((1 - 2 * a * x / f) * d1
            + (lp - 2 * a * (n - 1) / f - 2 * a * x * lp / f + 2 * (2 * n - 1) * a * a * x / f ** 2) * phi
            + p.mu * x / f ** 2 - p.r)


def scalar_curvature_ode_residual(profile: MomentumProfile, x: float, k_base: float,
                                  k_conf: float) -> float:
    """Constant-scalar-curvature ODE residual, divided by the weight p/f^(2n-1).

    ``k_base`` is half the base scalar curvature (d * gamma) and ``k_conf``
    half the conformal scalar curvature (n * mu on Einstein models).
    """
    p = profile.params
    phi, d1, d2 = profile.jet(x)
    f = p.f(x)
    _pole_guard(f, "f", x)
    ell = _log_weight_d1(p, x) - (2 * p.n - 1) * p.a / f
    dell = _log_weight_d2(p, x) + (2 * p.n - 1) * p.a ** 2 / f ** 2
    lhs = (dell + ell * ell) * phi + 2 * ell * d1 + d2
    rhs = k_base / (p.nu + p.lam * x) - k_conf / f ** 2
    if p.r > 1:
        rhs += p.r * (p.r - 1) / x
    return lhs - rhs


# ---------------------------------------------------------------------------
# Hamiltonian-form reduction


@dataclass(frozen=True)
class HamiltonianForm:
    """Change of variables u(x), G(u) turning the Einstein ODE into a polynomial-coefficient ODE."""

    profile: MomentumProfile
    q: float
    p: float
    c_const: float
    kappa: float   # G = kappa * u^(n-1) * phi
    slope: float   # du/dx
    shift: float   # u = shift + slope * x
    scale: float = 1.0

    @property
    def n(self) -> int:
        return self.profile.params.n

    @property
    def mu(self) -> float:
        return self.profile.params.mu

    def u_of_x(self, x: float) -> float:
        return self.shift + self.slope * x

    def x_of_u(self, u: float) -> float:
        return (u - self.shift) / self.slope

    def G_jet(self, u: float) -> tuple[float, float, float]:
        """G, dG/du, d2G/du2."""
        n = self.n
        phi, d1, d2 = self.profile.jet(self.x_of_u(u))
        s = 1.0 / self.slope
        k = self.kappa * self.scale
        g0 = u ** (n - 1) * phi
        g1 = (n - 1) * u ** (n - 2) * phi + u ** (n - 1) * d1 * s
        g2 = ((n - 1) * (n - 2) * u ** (n - 3) * phi + 2 * (n - 1) * u ** (n - 2) * d1 * s
              + u ** (n - 1) * d2 * s * s)
        return k * g0, k * g1, k * g2

    def G(self, u: float) -> float:
        return self.G_jet(u)[0]

    def scaled(self, c: float) -> "HamiltonianForm":
        return HamiltonianForm(self.profile, self.q, self.p, self.c_const, self.kappa,
                               self.slope, self.shift, self.scale * c)


def to_hamiltonian_form(profile: MomentumProfile) -> HamiltonianForm:
    """Reduction for r = 1 (u = nu + lam x) or nu = 0 (u = x)."""
    pr = profile.params
    if pr.r == 1:
        return HamiltonianForm(profile, q=pr.a / pr.lam, p=(pr.b * pr.lam - pr.a * pr.nu) / pr.lam,
                               c_const=pr.gamma, kappa=2 * pr.lam ** 2, slope=pr.lam, shift=pr.nu)
    if pr.nu == 0:
        return HamiltonianForm(profile, q=pr.a, p=pr.b, c_const=float(pr.r), kappa=2.0,
                               slope=1.0, shift=0.0)
    raise ParamError("no Hamiltonian reduction for r > 1 with nu != 0")


def dm_second_order_residual(h: HamiltonianForm, u: float) -> float:
    n, q, p = h.n, h.q, h.p
    G, G1, G2 = h.G_jet(u)
    qp = q * u + p
    _pole_guard(qp, "qu+p", u)
    return (G2 - (2 * (n - 1) * q / qp + n / u) * G1 + 2 * n * (n - 1) * q / (u * qp) * G
            + 2 * h.c_const * u ** (n - 2))


def dm_first_order_residual(h: HamiltonianForm, u: float) -> float:
    n, q, p = h.n, h.q, h.p
    G, G1, _ = h.G_jet(u)
    qp, qm = q * u + p, q * u - p
    _pole_guard(qp, "qu+p", u)
    _pole_guard(qm, "qu-p", u)
    return (G1 - ((2 * n - 1) * q / qp + q / qm) * G
            - (2 * h.mu * u ** n - 2 * h.c_const * u ** (n - 1) * qp * qp) / (qp * qm))


def interior_grid(params: ModelParams, m: int, margin: float = 0.02) -> list[float]:
    """m interior points equally spaced in the compactified coordinate."""
    return [from_unit(params.x0, params.x1, margin + (1 - 2 * margin) * (k + 0.5) / m)
            for k in range(m)]


__all__ = [
    "CLOSED_FORMS", "ClosedFormProfile", "DomainError", "FunctionProfile", "HamiltonianForm",
    "MomentumProfile", "QuadratureProfile", "ScaledProfile", "build_profile", "closed_form_derivs",
    "closed_form_phi", "constraint_A", "corollary_extra", "corollary_params",
    "dm_first_order_residual", "dm_second_order_residual", "interior_grid", "limit_form_114",
    "ode_residual_first",
    "ode_residual_nu_a_zero", "ode_residual_r1", "ode_residual_second", "phi_quadrature",
    "scalar_curvature_ode_residual", "to_hamiltonian_form",
]
