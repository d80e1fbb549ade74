"""Fiber coordinate t(x), its inverse and the potential F(t) recovered from phi.

With ``x = F'(t)`` and ``phi(x) = F''(t)`` one has ``dt/dx = 1/phi`` and
``dF/dx = x/phi``, so both are single integrals of the profile.
"""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .asymptotics import power_exponent
from .params import Case, Endpoint, Infinite, NEG_INF, POS_INF, from_unit, is_finite, to_unit
from .profiles import MomentumProfile
from .quadrature import CumulativeIntegral, QuadratureError, adaptive, chebyshev_unit_nodes, integrate_fast

MAX_ITER = 80
RECON_ACCEPT = 1e-8
RECON_PANEL = 1e-11


class ReconstructionError(ValueError):
    pass


def _midpoint(x0: Endpoint, x1: Endpoint) -> float:
    return from_unit(x0, x1, 0.5)


def default_anchor(profile: MomentumProfile) -> float:
    """x_ref with t(x_ref) = 0, following the normalization used per case.

    Ends where t stays finite are preferred: case I with mu < 0 and II-1 use
    the upper end, II-2 and the mu < 0 cases III-2/IV-2 the lower end. The
    remaining cases use the compactified midpoint.
    """
    p = profile.params
    c = p.case_id
    if c is Case.I:
        return float(p.x1) if p.mu < 0 else -1.0 / (2 * p.a)
    if c is Case.II1 and is_finite(p.x1):
        return float(p.x1)
    if c in (Case.II2, Case.III2, Case.IV2) and is_finite(p.x0):
        return float(p.x0)
    return _midpoint(p.x0, p.x1)


def default_F_anchor(profile: MomentumProfile, x_ref: float) -> float:
    """Point where F vanishes: x0 for case I (so that F = e^t when phi = x), else x_ref."""
    p = profile.params
    if p.case_id is Case.I:
        return float(p.x0)
    return x_ref


class Reconstruction:
    """t_of_x, x_of_t and F_of_t for a momentum profile.

    ``t_of_x(x) = t_ref + int_{x_ref}^x dv/phi`` and
    ``F_of_t(t) = F_ref + int_{F_anchor}^{x(t)} v dv/phi``.
    """

    def __init__(self, profile: MomentumProfile, x_ref: float | None = None, t_ref: float = 0.0,
                 F_anchor: float | None = None, F_ref: float = 0.0, nodes: int = 40):
        self.profile = profile
        p = profile.params
        self.x_ref = default_anchor(profile) if x_ref is None else float(x_ref)
        self.t_ref = float(t_ref)
        self.F_anchor = default_F_anchor(profile, self.x_ref) if F_anchor is None else float(F_anchor)
        self.F_ref = float(F_ref)
        xs = [from_unit(p.x0, p.x1, float(s)) for s in chebyshev_unit_nodes(nodes)]

        def inv(v):
            return 1.0 / profile.eval(v)

        def inv_v(arr):
            return np.array([1.0 / profile.eval(float(v)) for v in arr])

        def mom(v):
            return v / profile.eval(v)

        def mom_v(arr):
            return np.array([float(v) / profile.eval(float(v)) for v in arr])

        self._inv, self._inv_v = inv, inv_v
        try:
            # 1/phi inherits the cancellation error of phi near singular ends
            self._t = CumulativeIntegral(inv, inv_v, xs, self.x_ref, self.t_ref,
                                         accept=RECON_ACCEPT, rel=RECON_PANEL)
            self._F = CumulativeIntegral(mom, mom_v, xs, self.F_anchor, 0.0,
                                         accept=RECON_ACCEPT, rel=RECON_PANEL)
        except QuadratureError as exc:
            raise ReconstructionError(f"normalization integral diverges: {exc}") from exc
        self._nodes = self._t.nodes
        self._limits: dict[str, float | Infinite] = {}

    @property
    def params(self):
        return self.profile.params

    # -- t(x) ---------------------------------------------------------------

    def t_of_x(self, x: float) -> float | Infinite:
        p = self.params
        lo, hi = float(p.x0), float(p.x1)
        if x == lo:
            return self.t_limit("lower")
        if x == hi:
            return self.t_limit("upper")
        if not lo < x < hi:
            raise ReconstructionError(f"x={x!r} outside ({p.x0}, {p.x1})")
        return self._t(x)

    def t_limit(self, side: str) -> float | Infinite:
        """Limit of t at an end: a float, or an :class:`Infinite` tag when it diverges."""
        if side in self._limits:
            return self._limits[side]
        p = self.params
        sgn = -1 if side == "lower" else 1
        e = p.x0 if side == "lower" else p.x1
        k = power_exponent(self.profile.eval, p.x0, p.x1, side)
        # int dv/phi diverges when phi vanishes at least linearly at a finite
        # end, or grows at most linearly at an infinite one
        diverges = (k >= 0.95) if is_finite(e) else (k <= 1.05)
        if diverges or math.isnan(k):
            out: float | Infinite = POS_INF if sgn > 0 else NEG_INF
        else:
            try:
                out = self._t.anchor_value + (0.0 if float(e) == self.x_ref else
                                              self._t._piece(self.x_ref, e) if is_finite(e) else
                                              adaptive(self._inv, self.x_ref, e, accept=RECON_ACCEPT))
            except QuadratureError:
                out = POS_INF if sgn > 0 else NEG_INF
        self._limits[side] = out
        return out

    def t_range(self) -> tuple[float | Infinite, float | Infinite]:
        return self.t_limit("lower"), self.t_limit("upper")

    # -- x(t) ---------------------------------------------------------------

    def x_of_t(self, t: float, hint: tuple[float, float] | None = None, tol: float = 1e-12) -> float:
        """Unique x with t_of_x(x) = t: bracket by bisection, then safeguarded Newton.

        ``hint = (x_c, t_c)`` with ``t_c = t_of_x(x_c)`` starts Newton from a
        nearby solved point and integrates from it directly.
        """
        p = self.params
        lo_t, hi_t = self.t_range()
        if (not isinstance(lo_t, Infinite) and t <= lo_t) or (not isinstance(hi_t, Infinite) and t >= hi_t):
            raise ReconstructionError(f"t={t!r} outside the image ({lo_t}, {hi_t})")
        if hint is not None:
            x_c, t_c = hint
            x = self._newton_local(t, x_c, t_c, tol)
            if x is not None:
                return x
        # bracket in the compactified coordinate
        s_lo, s_hi = 0.0, 1.0
        ts = self._t.values
        for xn, tn in zip(self._nodes, ts):
            s = to_unit(p.x0, p.x1, xn)
            if tn <= t:
                s_lo = max(s_lo, s)
            else:
                s_hi = min(s_hi, s)
                break
        x = from_unit(p.x0, p.x1, 0.5 * (s_lo + s_hi))
        for _ in range(MAX_ITER):
            tx = self._t(x)
            err = tx - t
            if abs(err) <= tol * (1 + abs(t)):
                return x
            s = to_unit(p.x0, p.x1, x)
            if err < 0:
                s_lo = s
            else:
                s_hi = s
            xn = x - err * self.profile.eval(x)
            sn = to_unit(p.x0, p.x1, xn) if float(p.x0) < xn < float(p.x1) else -1.0
            if not (s_lo < sn < s_hi):
                xn = from_unit(p.x0, p.x1, 0.5 * (s_lo + s_hi))
            x = xn
        raise ReconstructionError(f"x_of_t({t!r}) did not converge in {MAX_ITER} iterations")

    def _newton_local(self, t: float, x_c: float, t_c: float, tol: float) -> float | None:
        p = self.params
        x = x_c
        for _ in range(12):
            tx = t_c + integrate_fast(self._inv, self._inv_v, x_c, x, rel=RECON_PANEL,
                                      accept=RECON_ACCEPT)
            err = tx - t
            if abs(err) <= tol * (1 + abs(t)):
                return x
            x = x - err * self.profile.eval(x)
            if not float(p.x0) < x < float(p.x1):
                return None
        return None

    # -- F(t) ---------------------------------------------------------------

    def F_of_x(self, x: float) -> float:
        return self.F_ref + self._F(x)

    def F_of_t(self, t: float) -> float:
        return self.F_of_x(self.x_of_t(t))

    def table(self, m: int, margin: float = 0.02) -> list[tuple[float, float, float]]:
        """(t, x, F) rows on m points spread over the compactified x interval."""
        p = self.params
        rows = []
        for k in range(m):
            x = from_unit(p.x0, p.x1, margin + (1 - 2 * margin) * (k + 0.5) / m)
            rows.append((float(self.t_of_x(x)), x, self.F_of_x(x)))
        return rows


def reconstruction_csv(recon: Reconstruction, m: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "F"])
    for row in recon.table(m):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
