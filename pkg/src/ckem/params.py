"""Parameter tuples for the momentum construction and their admissibility rules.

A model is described by

* ``d``, ``r``: base and fiber complex dimensions, ``n = d + r``;
* ``lam``, ``nu``: the potential is ``nu*phi0(z) + F(lam*phi0(z) + log|w|^2)``;
* ``a``, ``b``: conformal factor ``f(x) = a*x + b`` in the momentum variable;
* ``mu``: Einstein constant of the conformal metric;
* ``gamma``: Einstein constant of the base, fixed once by :func:`gamma_for_case`;
* ``x0 < x1``: the momentum interval, possibly with infinite ends.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any, Union


class Infinite:
    """Explicit tag for an infinite interval endpoint."""

    __slots__ = ("sign",)

    def __init__(self, sign: int):
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        self.sign = sign

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Infinite) and other.sign == self.sign

    def __hash__(self) -> int:
        return hash(("Infinite", self.sign))

    def __repr__(self) -> str:
        return "POS_INF" if self.sign > 0 else "NEG_INF"

    def __float__(self) -> float:
        return math.inf * self.sign


POS_INF = Infinite(1)
NEG_INF = Infinite(-1)

Endpoint = Union[float, Infinite]


def is_finite(e: Endpoint) -> bool:
    return not isinstance(e, Infinite)


def endpoint_to_json(e: Endpoint) -> Any:
    if isinstance(e, Infinite):
        return "inf" if e.sign > 0 else "-inf"
    return float(e)


def endpoint_from_json(v: Any) -> Endpoint:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return POS_INF
        if s in ("-inf", "-infinity"):
            return NEG_INF
        v = float(s)
    v = float(v)
    if math.isinf(v):
        # tolerate JSON producers that emit Infinity literals
        return POS_INF if v > 0 else NEG_INF
    if math.isnan(v):
        raise ValueError("endpoint is NaN")
    return v


def endpoint_lt(lo: Endpoint, hi: Endpoint) -> bool:
    return float(lo) < float(hi)


class Case(str, enum.Enum):
    I = "I"
    II1 = "II1"
    II2 = "II2"
    III1 = "III1"
    III2 = "III2"
    IV1 = "IV1"
    IV2 = "IV2"

    @classmethod
    def parse(cls, s: str) -> "Case":
        key = s.strip().upper().replace("-", "").replace("_", "")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown case id {s!r}") from None


class ParamError(ValueError):
    """Raised when a derived constant cannot be formed from the given tuple."""


@dataclass(frozen=True)
class ModelParams:
    case_id: Case
    d: int
    r: int
    lam: float
    nu: float
    a: float
    b: float
    mu: float
    gamma: float
    x0: Endpoint
    x1: Endpoint
    base: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def n(self) -> int:
        return self.d + self.r

    def f(self, x: float) -> float:
        return self.a * x + self.b

    def weight(self, x: float) -> float:
        """p(x) = (nu + lam x)^d x^(r-1)."""
        return (self.nu + self.lam * x) ** self.d * x ** (self.r - 1)

    def bracket(self, x: float) -> float:
        """a*lam*x + 2*a*nu - b*lam, the recurring linear factor."""
        return self.a * self.lam * x + 2 * self.a * self.nu - self.b * self.lam

    def reference_endpoint(self) -> Endpoint:
        """Endpoint where the integral representation of phi starts."""
        if self.case_id in (Case.I, Case.II1):
            return self.x0
        return self.x1

    def with_mu(self, mu: float, keep_gamma: bool = True) -> "ModelParams":
        p = replace(self, mu=mu)
        if not keep_gamma:
            p = replace(p, gamma=gamma_for_case(p))
        return p

    # construction --------------------------------------------------------

    @classmethod
    def build(
        cls,
        case: Case | str,
        d: int,
        r: int,
        lam: float,
        nu: float,
        a: float,
        b: float,
        mu: float | None = None,
        x0: Endpoint | None = None,
        x1: Endpoint | None = None,
        gamma: float | None = None,
        base: dict | None = None,
    ) -> "ModelParams":
        """Fill in forced endpoints, mu (case IV) and gamma from the case table."""
        case = Case.parse(case) if isinstance(case, str) else case
        if x0 is None:
            x0 = _default_x0(case, a, b, lam, nu)
        if x1 is None:
            x1 = _default_x1(case, a, b, r)
        if mu is None:
            if case is Case.IV1 or case is Case.III1:
                mu = 0.0
            elif case is Case.IV2:
                mu = mu_for_case_IV2(a=a, b=b, r=r, x1=float(x1))
            else:
                raise ParamError(f"case {case.value} needs an explicit mu")
        proto = cls(case, int(d), int(r), float(lam), float(nu), float(a), float(b),
                    float(mu), math.nan, x0, x1, dict(base or {}))
        g = gamma_for_case(proto) if gamma is None else float(gamma)
        return replace(proto, gamma=g)

    def to_json(self) -> dict:
        return {
            "case": self.case_id.value,
            "d": self.d,
            "r": self.r,
            "lambda": self.lam,
            "nu": self.nu,
            "a": self.a,
            "b": self.b,
            "mu": self.mu,
            "gamma": self.gamma,
            "x0": endpoint_to_json(self.x0),
            "x1": endpoint_to_json(self.x1),
            "base": dict(self.base),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModelParams":
        missing = [k for k in ("case", "d", "r", "lambda", "nu", "a", "b") if k not in obj]
        if missing:
            raise ParamError(f"model JSON missing keys: {missing}")
        ep = lambda k: endpoint_from_json(obj[k]) if obj.get(k) is not None else None  # noqa: E731
        return cls.build(
            obj["case"], obj["d"], obj["r"], obj["lambda"], obj["nu"], obj["a"], obj["b"],
            mu=obj.get("mu"), x0=ep("x0"), x1=ep("x1"), gamma=obj.get("gamma"),
            base=obj.get("base"),
        )


def _default_x0(case: Case, a: float, b: float, lam: float, nu: float) -> Endpoint:
    if case is Case.I:
        return 0.0
    if case is Case.II1:
        # widest admissible start: -inf when lam < 0, else the zero of nu + lam x
        return NEG_INF if lam < 0 else -nu / lam
    return -b / a


def _default_x1(case: Case, a: float, b: float, r: int) -> Endpoint:
    if case is Case.I:
        return -1.0 / a
    if case is Case.II1:
        return -b / a
    if case is Case.IV1:
        return -(r + 1) * b / ((r - 1) * a) if r > 1 else POS_INF
    if case is Case.II2:
        return POS_INF
    raise ParamError(f"case {case.value} needs an explicit x1")


def _need_finite(e: Endpoint, name: str, case: Case) -> float:
    if not is_finite(e):
        raise ParamError(f"case {case.value}: {name} must be finite")
    return float(e)


def gamma_for_case(params: ModelParams) -> float:
    """Base Einstein constant forced by the case formulas."""
    p = params
    c = p.case_id
    if c is Case.I:
        return p.lam + p.mu - 2 * p.a
    if c is Case.II1 or c is Case.II2:
        e = p.x0 if c is Case.II1 else p.x1
        if not is_finite(e):
            # (nu + lam x)/(b + a x)^2 -> 0 as |x| -> inf
            return 0.0
        x = float(e)
        return p.mu * (p.nu + p.lam * x) / (p.b + p.a * x) ** 2
    if c is Case.III1:
        x1 = _need_finite(p.x1, "x1", c)
        return p.bracket(x1) / p.f(x1)
    if c is Case.III2:
        x1 = _need_finite(p.x1, "x1", c)
        return p.mu * (p.nu + p.lam * x1) / p.f(x1) ** 2 + p.bracket(x1) / p.f(x1)
    return p.r * p.lam


def mu_for_case_IV2(params: ModelParams | None = None, *, a: float | None = None,
                    b: float | None = None, r: int | None = None,
                    x1: float | None = None) -> float:
    """Einstein constant fixed by the upper endpoint in case IV-2.

    Accepts either a ``ModelParams`` or the keywords ``a, b, r, x1``.
    Raises :class:`ParamError` when the result is not negative.
    """
    if params is not None:
        a, b, r = params.a, params.b, params.r
        x1 = _need_finite(params.x1, "x1", Case.IV2)
    if a is None or b is None or r is None or x1 is None:
        raise ParamError("mu_for_case_IV2 needs a, b, r, x1")
    f1 = a * x1 + b
    mu = f1 * (r * f1 - (a * x1 - b)) / x1
    if not mu < 0:
        raise ParamError(f"x1={x1} outside the IV-2 window: mu={mu} is not negative")
    return mu


def validate(params: ModelParams) -> list[str]:
    """Every violated condition of the case table, sorted; empty when admissible."""
    p = params
    c = p.case_id
    out: set[str] = set()

    def need(cond: bool, name: str) -> None:
        if not cond:
            out.add(f"{name} violated")

    for name in ("lam", "nu", "a", "b", "mu", "gamma"):
        if not math.isfinite(getattr(p, name)):
            out.add(f"{name} finite violated")
    if out:
        return sorted(out)
    need(p.d >= 1, "d>=1")
    need(p.r >= 1, "r>=1")
    need(p.lam != 0, "lambda!=0")
    need(p.a != 0, "a!=0")
    need(p.nu in (0.0, 1.0), "nu in {0,1}")
    need(p.mu <= 0, "mu<=0")
    need(endpoint_lt(p.x0, p.x1), "x0<x1")

    lo, hi = float(p.x0), float(p.x1)
    tol = 1e-12 * (1 + max(abs(p.a), abs(p.b), abs(p.lam)))

    def close(u: float, v: float) -> bool:
        return math.isfinite(u) and math.isfinite(v) and abs(u - v) <= 1e-12 * (1 + abs(v))

    if c is Case.I:
        need(p.nu == 1, "nu=1")
        need(p.b == 1, "b=1")
        need(p.a < 0, "a<0")
        need(p.a <= p.lam, "a<=lambda")
        need(p.r == 1, "r=1")
        need(close(lo, 0.0), "x0=0")
        if p.a != 0:
            need(close(hi, -1 / p.a), "x1=-1/a")
    elif c in (Case.II1, Case.II2):
        need(p.r == 1, "r=1")
        need(p.mu < 0, "mu<0")
        if c is Case.II1:
            need(p.a < 0, "a<0")
            if p.a != 0:
                need(close(hi, -p.b / p.a), "x1=-b/a")
        else:
            need(p.a > 0, "a>0")
            if p.a != 0:
                need(close(lo, -p.b / p.a), "x0=-b/a")
    elif c in (Case.III1, Case.III2):
        need(p.r == 1, "r=1")
        need(p.a > 0, "a>0")
        need(is_finite(p.x1), "x1 finite")
        if c is Case.III1:
            need(p.mu == 0, "mu=0")
        else:
            need(p.mu < 0, "mu<0")
        if p.a != 0:
            need(close(lo, -p.b / p.a), "x0=-b/a")
    else:
        need(p.r > 1, "r>1")
        need(p.nu == 0, "nu=0")
        need(p.lam > 0, "lambda>0")
        need(p.a > 0, "a>0")
        need(p.b < 0, "b<0")
        if p.a != 0:
            need(close(lo, -p.b / p.a), "x0=-b/a")
        if p.r > 1 and p.a != 0:
            x1_star = -(p.r + 1) * p.b / ((p.r - 1) * p.a)
            if c is Case.IV1:
                need(p.mu == 0, "mu=0")
                need(close(hi, x1_star), "x1=-(r+1)b/((r-1)a)")
            else:
                need(p.mu < 0, "mu<0")
                need(is_finite(p.x1) and hi < x1_star, "x1<-(r+1)b/((r-1)a)")
                if is_finite(p.x1) and hi != 0:
                    f1 = p.a * hi + p.b
                    mu_star = f1 * (p.r * f1 - (p.a * hi - p.b)) / hi
                    need(close(p.mu, mu_star), "mu matches x1")

    # positivity of f, nu + lam x and x (r>1) on the open interval
    if endpoint_lt(p.x0, p.x1) and p.a != 0:
        need(_affine_positive(p.a, p.b, lo, hi, tol), "f>0 on (x0,x1)")
        need(_affine_positive(p.lam, p.nu, lo, hi, tol), "nu+lambda*x>0 on (x0,x1)")
        if p.r > 1:
            need(lo >= -tol, "x>0 on (x0,x1)")

    if math.isfinite(p.gamma) and not out:
        try:
            g = gamma_for_case(p)
        except ParamError:
            g = math.nan
        need(math.isfinite(g) and abs(g - p.gamma) <= 1e-10 * (1 + abs(g)), "gamma matches case")
    return sorted(out)


def _affine_positive(slope: float, icpt: float, lo: float, hi: float, tol: float) -> bool:
    """slope*x + icpt > 0 on the open interval (lo, hi)."""
    if slope > 0:
        return math.isfinite(lo) and slope * lo + icpt >= -tol
    if slope < 0:
        return math.isfinite(hi) and slope * hi + icpt >= -tol
    return icpt > 0


def sample_interior(params: ModelParams, m: int, margin: float = 0.0) -> list[float]:
    """m points spread uniformly in the compactified coordinate of (x0, x1).

    ``margin`` in [0, 0.5) trims that fraction from each end of the
    compactified interval. Infinite ends use s -> c +- (1/s - 1).
    """
    ss = [(k + 0.5) / m for k in range(m)]
    ss = [margin + (1 - 2 * margin) * s for s in ss]
    return [from_unit(params.x0, params.x1, s) for s in ss]


def from_unit(x0: Endpoint, x1: Endpoint, s: float) -> float:
    """Map s in (0, 1) onto (x0, x1); infinite ends are compactified."""
    f0, f1 = is_finite(x0), is_finite(x1)
    if f0 and f1:
        return float(x0) + s * (float(x1) - float(x0))
    if f0:
        return float(x0) + s / (1 - s)
    if f1:
        return float(x1) - (1 - s) / s
    return math.log(s / (1 - s))


def to_unit(x0: Endpoint, x1: Endpoint, x: float) -> float:
    f0, f1 = is_finite(x0), is_finite(x1)
    if f0 and f1:
        return (x - float(x0)) / (float(x1) - float(x0))
    if f0:
        y = x - float(x0)
        return y / (1 + y)
    if f1:
        y = float(x1) - x
        return 1 / (1 + y)
    return 1 / (1 + math.exp(-x))
