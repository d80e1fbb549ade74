"""Local metric of Phi = nu*phi0(z) + F(t), t = lam*phi0(z) + log|w|^2, and Einstein checks.

Conventions: ``T[i, j] = d^2 Phi / dZ_i dZbar_j`` for ``Z = (z, w)``,
``Ric = -d dbar log det T``, ``Delta f = Tr(T^-1 d dbar f)`` and
``|df|^2 = 2 Tr(T^-1 df dbar f)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import ModelParams, ParamError, from_unit
from .profiles import MomentumProfile
from .reconstruction import Reconstruction


# stencils on the total space: wide steps (in units of step_scales) with
# three Richardson refinements balance truncation against rounding
ID_STEP = 4e-3
ID_LEVELS = 4


class GeometryError(ValueError):
    pass


class BaseKind(str, enum.Enum):
    FLAT = "Flat"
    BALL = "Ball"
    FS = "FubiniStudyChart"


@dataclass(frozen=True)
class BaseModel:
    """Kähler-Einstein base potential phi0 = c * psi(|z|^2) on a chart of C^d."""

    kind: BaseKind
    d: int
    scale: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise GeometryError("base dimension d must be >= 1")
        if not self.scale > 0:
            raise GeometryError("base scale must be positive")

    @classmethod
    def parse(cls, obj: dict | str, d: int) -> "BaseModel":
        if isinstance(obj, str):
            obj = {"kind": obj}
        kind = BaseKind(obj.get("kind", "Flat"))
        scale = 1.0 if kind is BaseKind.FLAT else float(obj.get("scale", 1.0))
        return cls(kind, int(obj.get("d", d)), scale)

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "d": self.d, "scale": self.scale}

    @property
    def einstein_constant(self) -> float:
        if self.kind is BaseKind.FLAT:
            return 0.0
        sgn = -1.0 if self.kind is BaseKind.BALL else 1.0
        return sgn * (self.d + 1) / self.scale

    def radius(self) -> float:
        """Sampling radius inside the chart."""
        return 0.7 if self.kind is BaseKind.BALL else 1.5

    def _psi(self, s: float) -> tuple[float, float, float]:
        # psi, psi', psi'' as functions of s = |z|^2, scale included
        c = self.scale
        if self.kind is BaseKind.FLAT:
            return s, 1.0, 0.0
        if self.kind is BaseKind.BALL:
            if not s < 1:
                raise GeometryError("point outside the unit ball")
            return -c * math.log1p(-s), c / (1 - s), c / (1 - s) ** 2
        return c * math.log1p(s), c / (1 + s), -c / (1 + s) ** 2

    def potential(self, z: np.ndarray) -> float:
        return self._psi(float(np.vdot(z, z).real))[0]

    def gradient(self, z: np.ndarray) -> np.ndarray:
        """d phi0 / dz_i."""
        _, d1, _ = self._psi(float(np.vdot(z, z).real))
        return d1 * np.conj(z)

    def hessian(self, z: np.ndarray) -> np.ndarray:
        s = float(np.vdot(z, z).real)
        _, d1, d2 = self._psi(s)
        return d1 * np.eye(self.d, dtype=complex) + d2 * np.outer(np.conj(z), z)

    def hessian_inverse(self, z: np.ndarray) -> np.ndarray:
        s = float(np.vdot(z, z).real)
        c = self.scale
        zz = np.outer(np.conj(z), z)
        eye = np.eye(self.d, dtype=complex)
        if self.kind is BaseKind.FLAT:
            return eye
        if self.kind is BaseKind.BALL:
            return (1 - s) / c * (eye - zz)
        return (1 + s) / c * (eye + zz)

    def log_det_hessian(self, z: np.ndarray) -> float:
        s = float(np.vdot(z, z).real)
        c = self.scale
        if self.kind is BaseKind.FLAT:
            return 0.0
        if self.kind is BaseKind.BALL:
            return self.d * math.log(c) - (self.d + 1) * math.log1p(-s)
        return self.d * math.log(c) - (self.d + 1) * math.log1p(s)


@dataclass(frozen=True)
class LocalPoint:
    z: np.ndarray
    w: np.ndarray

    @property
    def rho2(self) -> float:
        return float(np.vdot(self.w, self.w).real)

    def t(self, base: BaseModel, lam: float) -> float:
        return lam * base.potential(self.z) + math.log(self.rho2)

    def coords(self) -> np.ndarray:
        Z = np.concatenate([self.z, self.w])
        return np.concatenate([Z.real, Z.imag])

    @classmethod
    def from_coords(cls, v: np.ndarray, d: int) -> "LocalPoint":
        m = len(v) // 2
        Z = v[:m] + 1j * v[m:]
        return cls(Z[:d], Z[d:])

    def to_json(self) -> dict:
        return {"z": [[float(c.real), float(c.imag)] for c in self.z],
                "w": [[float(c.real), float(c.imag)] for c in self.w]}


def is_hermitian(M: np.ndarray, tol: float = 1e-12) -> bool:
    return float(np.max(np.abs(M - M.conj().T))) <= tol * max(1.0, float(np.max(np.abs(M))))


def is_positive_definite(M: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(M)
        return True
    except np.linalg.LinAlgError:
        return False


class Model:
    """A profile, its reconstruction and a base, with the geometry evaluated locally."""

    def __init__(self, profile: MomentumProfile, base: BaseModel, recon: Reconstruction | None = None):
        p = profile.params
        if base.d != p.d:
            raise GeometryError(f"base dimension {base.d} != d={p.d}")
        self.profile = profile
        self.params: ModelParams = p
        self.base = base
        self.recon = recon if recon is not None else Reconstruction(profile)

    # -- fiber functions of t ---------------------------------------------

    def x_of_t(self, t: float) -> float:
        return self.recon.x_of_t(t)

    def fiber(self, t_c: float) -> "LocalFiber":
        return LocalFiber(self, t_c)

    def _check_point(self, pt: LocalPoint) -> None:
        if pt.rho2 <= 0:
            raise GeometryError("w must be nonzero")
        if len(pt.z) != self.params.d or len(pt.w) != self.params.r:
            raise GeometryError("point has the wrong dimensions")


class LocalFiber:
    """x(t) and F(t) near t_c by RK4 on x' = phi(x), F' = x.

    Smooth in t, so finite-difference stencils around t_c see no quadrature
    noise; only the center value comes from the global reconstruction.
    """

    SUBSTEPS = 4

    def __init__(self, model: Model, t_c: float):
        self.model = model
        self.t_c = float(t_c)
        self.x_c = model.recon.x_of_t(t_c)
        self.F_c = model.recon.F_of_x(self.x_c)

    def at(self, t: float) -> tuple[float, float]:
        phi = self.model.profile.eval
        x, F = self.x_c, self.F_c
        h = (t - self.t_c) / self.SUBSTEPS
        if h == 0:
            return x, F
        for _ in range(self.SUBSTEPS):
            k1 = phi(x)
            k2 = phi(x + 0.5 * h * k1)
            k3 = phi(x + 0.5 * h * k2)
            k4 = phi(x + h * k3)
            F += h * (x + (x + 0.5 * h * k1) * 2 + (x + 0.5 * h * k2) * 2 + (x + h * k3)) / 6
            x += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        return x, F


# -- closed forms ---------------------------------------------------------


def _fiber_values(model: Model, pt: LocalPoint, fiber: LocalFiber | None):
    t = pt.t(model.base, model.params.lam)
    if fiber is not None:
        x, F = fiber.at(t)
    else:
        x = model.x_of_t(t)
        F = model.recon.F_of_x(x)
    return t, x, F


def potential(model: Model, pt: LocalPoint, fiber: LocalFiber | None = None) -> float:
    """nu * phi0(z) + F(t)."""
    model._check_point(pt)
    _, _, F = _fiber_values(model, pt, fiber)
    return model.params.nu * model.base.potential(pt.z) + F


def metric_closed_form(model: Model, pt: LocalPoint, fiber: LocalFiber | None = None,
                       check_pd: bool = True) -> np.ndarray:
    """Block assembly of T from F' = x(t), F'' = phi(x)."""
    model._check_point(pt)
    p, base = model.params, model.base
    _, x, _ = _fiber_values(model, pt, fiber)
    phi = model.profile.eval(x)
    g0 = base.gradient(pt.z)
    H = base.hessian(pt.z)
    w, rho2 = pt.w, pt.rho2
    T11 = (p.nu + p.lam * x) * H + p.lam ** 2 * phi * np.outer(g0, np.conj(g0))
    T12 = p.lam * phi * np.outer(g0, w) / rho2
    T22 = x / rho2 * np.eye(p.r) + (phi - x) / rho2 ** 2 * np.outer(np.conj(w), w)
    T = np.block([[T11, T12], [T12.conj().T, T22]])
    if check_pd and not is_positive_definite(T):
        raise GeometryError("metric is not positive definite: need nu + lam x > 0 and phi > 0")
    return T


def metric_inverse_closed_form(model: Model, pt: LocalPoint, fiber: LocalFiber | None = None
                               ) -> np.ndarray:
    model._check_point(pt)
    p, base = model.params, model.base
    _, x, _ = _fiber_values(model, pt, fiber)
    phi = model.profile.eval(x)
    g0 = base.gradient(pt.z)
    Hi = base.hessian_inverse(pt.z)
    w, rho2 = pt.w, pt.rho2
    s = p.nu + p.lam * x
    P = np.outer(np.conj(w), w) / rho2
    v = Hi @ g0
    I11 = Hi / s
    I12 = -p.lam * np.outer(v, w) / s
    quad = float(np.vdot(g0, v).real)  # conj(g0)^T H^-1 g0
    I22 = rho2 / x * (np.eye(p.r) - P) if p.r > 1 else np.zeros((1, 1), dtype=complex)
    I22 = I22 + rho2 / phi * P + p.lam ** 2 * quad / s * np.outer(np.conj(w), w)
    return np.block([[I11, I12], [I12.conj().T, I22]])


def log_metric_det(model: Model, pt: LocalPoint, fiber: LocalFiber | None = None) -> float:
    p = model.params
    _, x, _ = _fiber_values(model, pt, fiber)
    phi = model.profile.eval(x)
    return (-p.r * math.log(pt.rho2) + (p.r - 1) * math.log(x if p.r > 1 else 1.0)
            + math.log(phi) + p.d * math.log(p.nu + p.lam * x) + model.base.log_det_hessian(pt.z))


def metric_det_closed_form(model: Model, pt: LocalPoint, fiber: LocalFiber | None = None) -> float:
    model._check_point(pt)
    return math.exp(log_metric_det(model, pt, fiber))


# -- finite-difference oracle ---------------------------------------------


def wirtinger_hessian(fn: Callable[[np.ndarray], np.ndarray], v: np.ndarray, rel: float = 1e-4,
                      levels: int = 2, scales: np.ndarray | None = None) -> np.ndarray:
    """d^2 fn / dZ_i dZbar_j for every output of fn, by central differences with Richardson.

    ``v`` stacks real and imaginary parts; steps are ``rel * scales`` (default
    ``1 + |v_k|``) halved ``levels - 1`` times. Returns shape (outputs, m, m).
    """
    f0 = np.atleast_1d(np.asarray(fn(v), dtype=float))
    N = len(v)
    m = N // 2
    hs = rel * (1 + np.abs(v) if scales is None else np.asarray(scales, dtype=float))

    def real_hessian(scale):
        h = hs * scale
        D = np.zeros((len(f0), N, N))
        for k in range(N):
            e = np.zeros(N)
            e[k] = h[k]
            D[:, k, k] = (np.atleast_1d(fn(v + e)) - 2 * f0 + np.atleast_1d(fn(v - e))) / h[k] ** 2
            for l in range(k + 1, N):
                u = np.zeros(N)
                u[l] = h[l]
                val = (np.atleast_1d(fn(v + e + u)) - np.atleast_1d(fn(v + e - u))
                       - np.atleast_1d(fn(v - e + u)) + np.atleast_1d(fn(v - e - u))) / (4 * h[k] * h[l])
                D[:, k, l] = D[:, l, k] = val
        return D

    table = [real_hessian(0.5 ** k) for k in range(levels)]
    for j in range(1, levels):
        table = [(4 ** j * table[k + 1] - table[k]) / (4 ** j - 1) for k in range(len(table) - 1)]
    D = table[0]
    xx, yy = D[:, :m, :m], D[:, m:, m:]
    xy, yx = D[:, :m, m:], D[:, m:, :m]
    return 0.25 * (xx + yy) + 0.25j * (xy - yx)


def wirtinger_gradient(fn: Callable[[np.ndarray], float], v: np.ndarray, rel: float = 1e-4,
                       scales: np.ndarray | None = None) -> np.ndarray:
    """d fn / dZ_i = (d/dx_i - i d/dy_i) / 2, central differences with Richardson."""
    N = len(v)
    m = N // 2
    hs = rel * (1 + np.abs(v) if scales is None else np.asarray(scales, dtype=float))

    def grad(scale):
        g = np.zeros(N)
        for k in range(N):
            e = np.zeros(N)
            e[k] = hs[k] * scale
            g[k] = (fn(v + e) - fn(v - e)) / (2 * e[k])
        return g

    g = (4 * grad(0.5) - grad(1.0)) / 3
    return 0.5 * (g[:m] - 1j * g[m:])


def step_scales(pt: LocalPoint) -> np.ndarray:
    """Per-coordinate FD length scales: 1 + |z_k| on the base, |w| on the fiber.

    log |w|^2 varies on the scale |w|, so an absolute step breaks down near w = 0.
    """
    rho = math.sqrt(pt.rho2)
    sz = 1 + np.abs(pt.z)
    sw = np.full(len(pt.w), rho)
    return np.concatenate([sz, sw, sz, sw])


def metric_fd(model: Model, pt: LocalPoint) -> np.ndarray:
    """Complex Hessian of the potential by finite differences."""
    fib = model.fiber(pt.t(model.base, model.params.lam))
    d = model.params.d
    return wirtinger_hessian(lambda v: potential(model, LocalPoint.from_coords(v, d), fib),
                             pt.coords(), ID_STEP, ID_LEVELS, step_scales(pt))[0]


# -- identities -------------------------------------------------------------


def _t_fn(model: Model):
    d, lam = model.params.d, model.params.lam
    return lambda v: LocalPoint.from_coords(v, d).t(model.base, lam)


def t_derivatives(model: Model, pt: LocalPoint) -> tuple[np.ndarray, np.ndarray]:
    """(dt/dZ, d^2 t/dZ dZbar) assembled from the base derivatives and log |w|^2."""
    p, base = model.params, model.base
    d, r = p.d, p.r
    rho2 = pt.rho2
    wb = np.conj(pt.w)
    dt = np.concatenate([p.lam * base.gradient(pt.z), wb / rho2])
    ddt = np.zeros((d + r, d + r), dtype=complex)
    ddt[:d, :d] = p.lam * base.hessian(pt.z)
    ddt[d:, d:] = np.eye(r) / rho2 - np.outer(wb, pt.w) / rho2 ** 2
    return dt, ddt


def trace_identities(model: Model, pt: LocalPoint) -> tuple[float, float]:
    """(Tr(T^-1 dt dbar t) - 1/phi, Tr(T^-1 d dbar t) - (lam d/(nu + lam x) + (r-1)/x))."""
    p = model.params
    Ti = metric_inverse_closed_form(model, pt)
    dt, ddt = t_derivatives(model, pt)
    x = model.x_of_t(pt.t(model.base, p.lam))
    phi = model.profile.eval(x)
    tr1 = np.trace(Ti @ np.outer(dt, np.conj(dt))).real
    tr2 = np.trace(Ti @ ddt).real
    expected2 = p.lam * p.d / (p.nu + p.lam * x) + ((p.r - 1) / x if p.r > 1 else 0.0)
    return float(tr1 - 1 / phi), float(tr2 - expected2)


def laplacian_f(profile: MomentumProfile, x: float) -> float:
    """a (p phi)'/p."""
    p = profile.params
    phi, dphi, _ = profile.jet(x)
    lw = p.lam * p.d / (p.nu + p.lam * x) + ((p.r - 1) / x if p.r > 1 else 0.0)
    return p.a * (dphi + lw * phi)


def df_norm2(profile: MomentumProfile, x: float) -> float:
    """|df|^2 = 2 a^2 phi."""
    return 2 * profile.params.a ** 2 * profile.eval(x)


def f_identities(model: Model, pt: LocalPoint) -> tuple[float, float]:
    """(brute-force Delta f - a(p phi)'/p, brute-force |df|^2 - 2 a^2 phi)."""
    p = model.params
    if p.a == 0:
        raise ParamError("f is constant (a = 0)")
    t_c = pt.t(model.base, p.lam)
    fib = model.fiber(t_c)
    tf = _t_fn(model)

    def f_of(v):
        return p.a * fib.at(tf(v))[0] + p.b

    Ti = metric_inverse_closed_form(model, pt)
    v = pt.coords()
    sc = step_scales(pt)
    df = wirtinger_gradient(f_of, v, scales=sc)
    ddf = wirtinger_hessian(f_of, v, ID_STEP, ID_LEVELS, sc)[0]
    lap = np.trace(Ti @ ddf).real
    nrm = 2 * np.trace(Ti @ np.outer(df, np.conj(df))).real
    x = fib.x_c
    return float(lap - laplacian_f(model.profile, x)), float(nrm - df_norm2(model.profile, x))


@dataclass
class EinsteinData:
    residual: float          # max |LHS - RHS| over entries
    lhs_scale: float         # max |entry| of the right-hand side terms, for context
    k_conf: float            # scalar curvature of the conformal metric


def _fd_f_logdet(model: Model, pt: LocalPoint) -> tuple[np.ndarray, np.ndarray, float]:
    p = model.params
    t_c = pt.t(model.base, p.lam)
    fib = model.fiber(t_c)
    d = p.d

    def fn(v):
        q = LocalPoint.from_coords(v, d)
        x, _ = fib.at(q.t(model.base, p.lam))
        return np.array([p.a * x + p.b, log_metric_det(model, q, _Fixed(x))])

    H = wirtinger_hessian(fn, pt.coords(), ID_STEP, ID_LEVELS, step_scales(pt))
    return H[0], H[1], fib.x_c


class _Fixed:
    """Fiber stand-in returning a precomputed x (F unused)."""

    def __init__(self, x: float):
        self.x = x

    def at(self, t: float) -> tuple[float, float]:
        return self.x, math.nan


def einstein_data(model: Model, pt: LocalPoint, mu: float | None = None) -> EinsteinData:
    """Residual of the conformal Einstein equation written with complex Hessians.

    ``2(n-1)/f dd f = (mu - 2 f Delta f + (2n-1)|df|^2)/f^2 T + dd log det T``.
    ``mu`` overrides the model constant (used for falsification runs).
    """
    p = model.params
    mu = p.mu if mu is None else mu
    n = p.n
    Hf, Hld, x = _fd_f_logdet(model, pt)
    f = p.f(x)
    T = metric_closed_form(model, pt)
    lap = laplacian_f(model.profile, x)
    nrm = df_norm2(model.profile, x)
    lhs = 2 * (n - 1) / f * Hf
    coef = (mu - 2 * f * lap + (2 * n - 1) * nrm) / f ** 2
    rhs = coef * T + Hld
    res = float(np.max(np.abs(lhs - rhs)))
    scale = float(max(np.max(np.abs(lhs)), np.max(np.abs(coef * T)), np.max(np.abs(Hld))))
    Ti = metric_inverse_closed_form(model, pt)
    kF = -np.trace(Ti @ Hld).real
    k = f * f * kF + 2 * (2 * n - 1) * f * lap - n * (2 * n - 1) * nrm
    return EinsteinData(res, scale, float(k))


def einstein_residual(model: Model, pt: LocalPoint, mu: float | None = None) -> float:
    return einstein_data(model, pt, mu).residual


def conformal_scalar_curvature(model: Model, pt: LocalPoint) -> float:
    return einstein_data(model, pt).k_conf


def base_einstein_residual(base: BaseModel, z: np.ndarray) -> float:
    """max |Ric(g0) - gamma g0| with Ric from a numeric Hessian of -log det H."""
    d = base.d
    v = np.concatenate([z.real, z.imag])

    def fn(u):
        return base.log_det_hessian(u[:d] + 1j * u[d:])

    ric = -wirtinger_hessian(fn, v)[0]
    return float(np.max(np.abs(ric - base.einstein_constant * base.hessian(z))))


# -- sampling -----------------------------------------------------------------


def sample_points(model: Model, count: int, seed: int, margin: float = 0.1) -> list[LocalPoint]:
    """Seeded points with z inside the chart and t inside the fiber range."""
    rng = np.random.default_rng(seed)
    p, base = model.params, model.base
    pts = []
    for _ in range(count):
        z = rng.normal(size=p.d) + 1j * rng.normal(size=p.d)
        z *= base.radius() * rng.uniform(0, 1) ** (1 / (2 * p.d)) / np.linalg.norm(z)
        s = margin + (1 - 2 * margin) * rng.uniform()
        x = from_unit(p.x0, p.x1, s)
        t = float(model.recon.t_of_x(x))
        rho2 = math.exp(t - p.lam * base.potential(z))
        u = rng.normal(size=p.r) + 1j * rng.normal(size=p.r)
        w = math.sqrt(rho2) * u / np.linalg.norm(u)
        pts.append(LocalPoint(z, w))
    return pts


def base_for(params: ModelParams, kind: BaseKind | str | None = None) -> BaseModel:
    """Base whose Einstein constant matches params.gamma (Flat when gamma = 0)."""
    g = params.gamma
    if kind is None:
        kind = BaseKind.FLAT if g == 0 else (BaseKind.BALL if g < 0 else BaseKind.FS)
    kind = BaseKind(kind)
    if kind is BaseKind.FLAT:
        return BaseModel(kind, params.d)
    if g == 0:
        raise GeometryError(f"{kind.value} base cannot have Einstein constant 0")
    return BaseModel(kind, params.d, abs((params.d + 1) / g))
