"""Fiber length, endpoint verdicts and the resulting domain in the total space.

The fiber length of ``g/f^2`` along the momentum interval is
``l = int dx / (f(x) sqrt(phi(x)))``. An end is complete when this diverges;
it is a smooth closure when ``phi`` vanishes there with one-sided slope
+1 (lower end) or -1 (upper end), so the metric extends across a section.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import approach_points, power_exponent
from .params import Endpoint, Infinite, ModelParams, NEG_INF, POS_INF, from_unit, is_finite
from .profiles import MomentumProfile
from .quadrature import QuadratureError, adaptive, integrate_fast
from .reconstruction import Reconstruction

SLOPE_TOL = 0.05

BALL = "B^r_{L0} (h<1)"
PUNCTURED_BALL = "B^{r*}_{L0} (0<h<1)"
TOTAL = "L0^{⊕r} (all of E)"
PUNCTURED_TOTAL = "E* (0<h)"
OUTSIDE_BALL = "E - {h<=1} (h>1)"
PROJ_MINUS_ZERO = "P(E⊕1) - M0"
PROJ_MINUS_BALL = "P(E⊕1) - {h<=1}"
PROJ = "P(E⊕1)"
UNRESOLVED = "Unresolved"


class EndKind(str, enum.Enum):
    SMOOTH_CLOSURE = "SmoothClosure"
    COMPLETE = "CompleteEnd"
    INCOMPLETE = "IncompleteEnd"
    UNRESOLVED = "Unresolved"


@dataclass
class EndpointVerdict:
    endpoint: str                      # "lower" | "upper"
    kind: EndKind
    exponent_estimate: float           # fitted exponent of the length integrand
    integral_tail: float | Infinite    # length from the interior anchor to the end
    phi_exponent: float = math.nan
    slope: float = math.nan
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        tail = self.integral_tail
        return {
            "endpoint": self.endpoint,
            "kind": self.kind.value,
            "exponent_estimate": _num(self.exponent_estimate),
            "phi_exponent": _num(self.phi_exponent),
            "slope": _num(self.slope),
            "integral_tail": ("inf" if tail.sign > 0 else "-inf") if isinstance(tail, Infinite) else _num(tail),
            "notes": list(self.notes),
        }


def _num(v: float):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)


def _length_integrand(profile: MomentumProfile):
    p = profile.params

    def h(x):
        return 1.0 / ((p.a * x + p.b) * math.sqrt(profile.eval(x)))

    def hv(xs):
        return np.array([h(float(x)) for x in xs])

    return h, hv


def _length_diverges(profile: MomentumProfile, side: str, tol: float = SLOPE_TOL, decades: float = 3.0
                     ) -> tuple[bool | None, float, float, list[str]]:
    """Decide divergence of the length integral at an end.

    Returns (decision or None when the analytic and fitted tests disagree,
    fitted integrand exponent, fitted phi exponent, notes).
    """
    p = profile.params
    e = p.x0 if side == "lower" else p.x1
    h, _ = _length_integrand(profile)
    notes: list[str] = []
    k_phi = power_exponent(profile.eval, p.x0, p.x1, side, decades)
    m = power_exponent(h, p.x0, p.x1, side, decades)
    if is_finite(e):
        f_zero = abs(p.f(float(e))) <= 1e-12 * (abs(p.a) + abs(p.b))
        # analytic: h ~ dist^-(f_zero + k_phi/2)
        power = (1.0 if f_zero else 0.0) + k_phi / 2
        analytic = power >= 1 - tol
        numeric = -m >= 1 - tol
        notes.append(f"f(end)=0: {f_zero}")
    else:
        # h ~ |x|^-(1 + k_phi/2)
        analytic = 1 + k_phi / 2 <= 1 + tol
        numeric = -m <= 1 + tol
    if math.isnan(k_phi) or math.isnan(m):
        return None, m, k_phi, notes + ["exponent fit failed"]
    if analytic != numeric:
        notes.append(f"analytic={analytic} numeric={numeric}")
        return None, m, k_phi, notes
    return analytic, m, k_phi, notes


def fiber_length(profile: MomentumProfile, x_a: Endpoint | float, x_b: Endpoint | float
                 ) -> float | Infinite:
    """Length integral over [x_a, x_b]; an :class:`Infinite` tag when it diverges."""
    p = profile.params
    lo, hi = float(x_a), float(x_b)
    if lo == hi:
        return 0.0
    sign = 1.0
    if lo > hi:
        x_a, x_b, sign = x_b, x_a, -1.0
        lo, hi = hi, lo
    if not (float(p.x0) <= lo and hi <= float(p.x1)):
        raise ValueError("interval outside the closure of (x0, x1)")
    h, hv = _length_integrand(profile)
    for x in (lo, hi):
        if float(p.x0) < x < float(p.x1) and profile.eval(x) <= 0:
            raise ValueError(f"phi <= 0 at x={x!r}")
    for side, at in (("lower", lo == float(p.x0)), ("upper", hi == float(p.x1))):
        if at:
            div, *_ = _length_diverges(profile, side)
            if div:
                return POS_INF if sign > 0 else NEG_INF
    a = x_a if lo == float(p.x0) else lo
    b = x_b if hi == float(p.x1) else hi
    if is_finite(a) and is_finite(b) and float(p.x0) < lo and hi < float(p.x1):
        val = integrate_fast(h, hv, lo, hi, rel=1e-12)
    else:
        val = adaptive(h, a, b, accept=1e-8)
    return sign * val


def _interior_anchor(profile: MomentumProfile, recon: Reconstruction | None) -> float:
    p = profile.params
    if recon is not None and float(p.x0) < recon.x_ref < float(p.x1):
        return recon.x_ref
    return from_unit(p.x0, p.x1, 0.5)


def one_sided_slope(profile: MomentumProfile, side: str) -> float:
    """phi'(end) from difference quotients at two small offsets, Richardson-combined."""
    p = profile.params
    e = p.x0 if side == "lower" else p.x1
    if not is_finite(e):
        return math.nan
    xs = approach_points(p.x0, p.x1, side, decades=1.0, start=1e-4, m=2)
    e = float(e)
    q = [profile.eval(float(x)) / (float(x) - e) for x in xs]
    # offsets differ by a factor 10: first-order error cancels
    return (10 * q[1] - q[0]) / 9


def classify_endpoint(profile: MomentumProfile, endpoint: str, recon: Reconstruction | None = None,
                      slope_tol: float = SLOPE_TOL, decades: float = 3.0) -> EndpointVerdict:
    """SmoothClosure, CompleteEnd, IncompleteEnd or Unresolved for one end.

    ``decades`` is the width of the log-log fitting window.
    """
    p = profile.params
    side = endpoint
    e = p.x0 if side == "lower" else p.x1
    k_phi = power_exponent(profile.eval, p.x0, p.x1, side, decades)
    slope = one_sided_slope(profile, side)
    target = 1.0 if side == "lower" else -1.0
    if is_finite(e) and abs(k_phi - 1) <= slope_tol and abs(slope - target) <= slope_tol:
        return EndpointVerdict(side, EndKind.SMOOTH_CLOSURE, math.nan, math.nan, k_phi, slope,
                               [f"phi ~ dist^{k_phi:.3f}, slope {slope:.4f}"])
    div, m, _, notes = _length_diverges(profile, side, decades=decades)
    anchor = _interior_anchor(profile, recon)
    if div is None:
        return EndpointVerdict(side, EndKind.UNRESOLVED, m, math.nan, k_phi, slope, notes)
    if div:
        tail: float | Infinite = POS_INF if side == "upper" else NEG_INF
        return EndpointVerdict(side, EndKind.COMPLETE, m, tail, k_phi, slope, notes)
    try:
        tail = fiber_length(profile, anchor, e) if side == "upper" else -float(fiber_length(profile, e, anchor))
    except (QuadratureError, ValueError) as exc:
        return EndpointVerdict(side, EndKind.UNRESOLVED, m, math.nan, k_phi, slope,
                               notes + [f"tail integral failed: {exc}"])
    return EndpointVerdict(side, EndKind.INCOMPLETE, m, tail, k_phi, slope, notes)


@dataclass
class Classification:
    case: str
    lower: EndpointVerdict
    upper: EndpointVerdict
    t_limits: tuple[float | Infinite, float | Infinite]
    domain_label: str
    diagnostics: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        def tj(v):
            if isinstance(v, Infinite):
                return "inf" if v.sign > 0 else "-inf"
            return float(v)

        return {
            "case": self.case,
            "endpoint_verdicts": {"lower": self.lower.to_json(), "upper": self.upper.to_json()},
            "t_limits": [tj(v) for v in self.t_limits],
            "domain_label": self.domain_label,
            "diagnostics": list(self.diagnostics),
        }


def classify_case(params: ModelParams, verdicts: tuple[EndpointVerdict, EndpointVerdict],
                  t_limits: tuple[float | Infinite, float | Infinite]) -> tuple[str, list[str]]:
    """Domain label from the t-range and the two endpoint verdicts."""
    lower, upper = verdicts
    t_lo, t_hi = t_limits
    lo_inf = isinstance(t_lo, Infinite) and t_lo.sign < 0
    hi_inf = isinstance(t_hi, Infinite) and t_hi.sign > 0
    S, C = EndKind.SMOOTH_CLOSURE, EndKind.COMPLETE
    diag: list[str] = []
    for v in (lower, upper):
        if v.kind is EndKind.UNRESOLVED:
            diag.append(f"{v.endpoint} end unresolved")
        if v.kind is EndKind.INCOMPLETE:
            diag.append(f"{v.endpoint} end incomplete")
    if lower.kind is S and not lo_inf:
        diag.append("smooth closure at the lower end needs t -> -inf")
    if upper.kind is S and not hi_inf:
        diag.append("smooth closure at the upper end needs t -> +inf")
    if diag:
        return UNRESOLVED, diag
    kinds = (lower.kind, upper.kind)
    table = {
        (True, False): {(S, C): BALL, (C, C): PUNCTURED_BALL},
        (True, True): {(S, C): TOTAL, (C, S): PROJ_MINUS_ZERO, (C, C): PUNCTURED_TOTAL, (S, S): PROJ},
        (False, True): {(C, S): PROJ_MINUS_BALL, (C, C): OUTSIDE_BALL},
    }
    label = table.get((lo_inf, hi_inf), {}).get(kinds)
    if label is None:
        return UNRESOLVED, [f"no domain for t-range {t_limits} with ends {kinds}"]
    return label, diag


def classify(profile: MomentumProfile, recon: Reconstruction | None = None,
             slope_tol: float = SLOPE_TOL) -> Classification:
    """Endpoint verdicts, t-limits and domain label for a profile."""
    recon = recon if recon is not None else Reconstruction(profile)
    lower = classify_endpoint(profile, "lower", recon, slope_tol)
    upper = classify_endpoint(profile, "upper", recon, slope_tol)
    t_limits = recon.t_range()
    label, diag = classify_case(profile.params, (lower, upper), t_limits)
    return Classification(profile.params.case_id.value, lower, upper, t_limits, label, diag)


def expected_label(params: ModelParams) -> str:
    """Domain named in the case table for admissible parameters."""
    from .params import Case

    c = params.case_id
    if c is Case.I:
        return BALL if params.mu < 0 else TOTAL
    return {
        Case.II1: PUNCTURED_BALL, Case.II2: OUTSIDE_BALL,
        Case.III1: PROJ_MINUS_ZERO, Case.IV1: PROJ_MINUS_ZERO,
        Case.III2: PROJ_MINUS_BALL, Case.IV2: PROJ_MINUS_BALL,
    }[c]


def grad_H_bound(profile: MomentumProfile, m: int, x: float, recon: Reconstruction | None = None
                 ) -> tuple[float, float]:
    """Both terms of the gradient bound for H = log (e^l + e^-l)^m at momentum x.

    Returns ``(f^2/(nu + lam x), (f dH/dt)^2 / F'')`` with the exhaustion
    gradient replaced by its unit bound. Along the fiber ``dl/dt = sqrt(phi)/f``
    and ``F'' = phi``, so the second term is at most m^2.
    """
    p = profile.params
    anchor = _interior_anchor(profile, recon if recon is not None else Reconstruction(profile))
    f = p.f(x)
    phi = profile.eval(x)
    term1 = f * f / (p.nu + p.lam * x)
    if m == 0:
        return term1, 0.0
    l = float(fiber_length(profile, anchor, x))
    dH = m * math.tanh(l) * math.sqrt(phi) / f
    return term1, (f * dH) ** 2 / phi
