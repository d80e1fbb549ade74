"""Command-line front end: profile tables, verification reports, classification, corollaries."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import completeness, geometry
from .params import ModelParams, ParamError, validate
from .profiles import (
    CLOSED_FORMS, ClosedFormProfile, DomainError, MomentumProfile, QuadratureProfile, closed_form_derivs,
    constraint_A, corollary_extra, corollary_params, dm_first_order_residual, dm_second_order_residual,
    interior_grid, limit_form_114, ode_residual_first, ode_residual_second, to_hamiltonian_form,
)
from .quadrature import QuadratureError
from .reconstruction import Reconstruction, ReconstructionError, reconstruction_csv

SCHEMA = "ckem-report/1"
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

DEFAULT_TOLERANCES = {
    "ode_first": 1e-7,
    "ode_second": 1e-6,
    "constraint_A": 1e-7,
    "dm_forms": 1e-5,
    "trace_identities": 1e-8,
    "f_identities": 1e-7,
    "det_rel_err": 1e-8,
    "inverse_err": 1e-10,
    "metric_fd": 1e-6,
    "einstein_residual": 1e-4,
    "k_conf_err": 1e-3,
    "k_variance": 1e-6,
    "base_einstein": 1e-5,
    "gamma_match": 1e-9,
    "corollary_delta": 1e-8,
}

COROLLARY_DEFAULTS = {
    "1.6": {"mu": -1.0},
    "1.10": {"mu": -1.0, "x0": -2.0},
    "1.10-extra-mu": {"mu": -1.0, "x0": -2.0},
    "1.12": {"a": -0.5, "mu": -1.0, "x0": 0.3, "lambda": 1.0},
    "1.13": {"a": -0.5, "mu": -1.0},
    "1.14": {"mu": -1.0},
    "1.15": {"x1": 2.0, "lambda": 1.0},
    "1.19": {"r": 2, "b": -1.0, "lambda": 1.0},
}


class InputError(ValueError):
    pass


# -- config ---------------------------------------------------------------------


class RunConfig:
    """Model, base and run settings merged from the config file and flags."""

    def __init__(self, raw: dict, grid: int | None, seed: int | None, tols: list[str]):
        model_obj = raw.get("model", raw if "case" in raw else None)
        self.model_obj = model_obj
        self.params: ModelParams | None = None
        if model_obj is not None:
            self.params = ModelParams.from_json(model_obj)
        base = raw.get("base")
        if base is None and model_obj is not None:
            base = model_obj.get("base") or None
        self.base_obj = base
        self.closed_form = raw.get("closed_form")
        self.extra = dict(raw.get("extra", {}))
        self.grid_size = int(grid if grid is not None else raw.get("grid_size", 200))
        self.seed = int(seed if seed is not None else raw.get("seed", 0))
        self.points = int(raw.get("points", 20))
        self.perturb_mu = float(raw.get("perturb_mu", 0.0))
        self.d = int(raw.get("d", 1))
        self.tolerances = dict(DEFAULT_TOLERANCES)
        for k, v in raw.get("tolerances", {}).items():
            self._set_tol(k, v)
        for item in tols:
            if "=" not in item:
                raise InputError(f"--tol expects name=value, got {item!r}")
            k, v = item.split("=", 1)
            self._set_tol(k.strip(), v)
        if self.grid_size < 16:
            raise InputError("grid size must be at least 16")
        if self.points < 1:
            raise InputError("points must be positive")

    def _set_tol(self, name: str, value) -> None:
        if name not in DEFAULT_TOLERANCES:
            raise InputError(f"unknown tolerance {name!r}; known: {sorted(DEFAULT_TOLERANCES)}")
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise InputError(f"tolerance {name} is not a number: {value!r}") from None
        if not v > 0:
            raise InputError(f"tolerance {name} must be positive")
        self.tolerances[name] = v

    def require_model(self) -> ModelParams:
        if self.params is None:
            raise InputError("config has no model")
        errs = validate(self.params)
        if errs:
            raise InputError("inadmissible model: " + "; ".join(errs))
        return self.params

    def profile(self) -> MomentumProfile:
        p = self.require_model()
        if self.closed_form:
            extra = self.extra or corollary_extra(self.closed_form, p)
            return ClosedFormProfile(p, self.closed_form, extra)
        return QuadratureProfile(p)

    def base(self) -> geometry.BaseModel:
        p = self.require_model()
        if self.base_obj:
            return geometry.BaseModel.parse(self.base_obj, p.d)
        return geometry.base_for(p)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from exc


# -- output helpers -------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.floating):
        return _clean(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _safe(fn, *args) -> float:
    try:
        return float(fn(*args))
    except (ParamError, DomainError, QuadratureError, ZeroDivisionError, ValueError):
        return math.nan


def _max(vals) -> float:
    vals = [abs(v) for v in vals]
    if not vals:
        return math.nan
    return math.inf if any(math.isnan(v) for v in vals) else max(vals)


# -- commands -----------------------------------------------------------------


def profile_csv(profile: MomentumProfile, recon: Reconstruction, xs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "phi", "dphi", "residual_first", "residual_second", "t", "F"])
    for x in xs:
        phi, dphi, _ = profile.jet(x)
        row = [x, phi, dphi, _safe(ode_residual_first, profile, x), _safe(ode_residual_second, profile, x),
               float(recon.t_of_x(x)), recon.F_of_x(x)]
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def cmd_profile(cfg: RunConfig, out: Path) -> int:
    prof = cfg.profile()
    recon = Reconstruction(prof)
    xs = interior_grid(prof.params, cfg.grid_size)
    _write(out, "profile.csv", profile_csv(prof, recon, xs))
    _write(out, "reconstruction.csv", reconstruction_csv(recon, cfg.grid_size))
    print(f"wrote {len(xs)} rows to {out / 'profile.csv'} and {out / 'reconstruction.csv'}")
    return EXIT_OK


def verification_report(cfg: RunConfig) -> dict:
    """All residual suites; the report carries no timing so reruns are byte-identical."""
    prof = cfg.profile()
    p = prof.params
    base = cfg.base()
    tol = cfg.tolerances
    xs = interior_grid(p, cfg.grid_size)
    maxima: dict[str, float] = {}
    notes: list[str] = []

    maxima["ode_first"] = _max(_safe(ode_residual_first, prof, x) for x in xs)
    maxima["ode_second"] = _max(_safe(ode_residual_second, prof, x) for x in xs)
    if p.r > 1:
        maxima["constraint_A"] = _max(_safe(constraint_A, prof, x) for x in xs)
    if p.r == 1 or p.nu == 0:
        hf = to_hamiltonian_form(prof)
        us = [hf.u_of_x(x) for x in xs]
        maxima["dm_forms"] = _max([_safe(dm_first_order_residual, hf, u) for u in us]
                                  + [_safe(dm_second_order_residual, hf, u) for u in us])

    maxima["gamma_match"] = abs(base.einstein_constant - p.gamma)
    model = geometry.Model(prof, base)
    pts = geometry.sample_points(model, cfg.points, cfg.seed)
    mu = p.mu + cfg.perturb_mu
    n_mu = p.n * mu
    rows, ks = [], []
    for i, pt in enumerate(pts):
        row: dict = {"index": i, **pt.to_json()}
        try:
            T = geometry.metric_closed_form(model, pt, check_pd=False)
            Ti = geometry.metric_inverse_closed_form(model, pt)
            det = geometry.metric_det_closed_form(model, pt)
            row["positive_definite"] = geometry.is_positive_definite(T)
            row["hermitian"] = geometry.is_hermitian(T)
            row["det_rel_err"] = abs(det / np.linalg.det(T).real - 1)
            row["inverse_err"] = float(np.max(np.abs(T @ Ti - np.eye(len(T)))))
            Tfd = geometry.metric_fd(model, pt)
            row["metric_fd"] = float(np.max(np.abs(T - Tfd)) / np.max(np.abs(T)))
            row["trace_identities"] = list(geometry.trace_identities(model, pt))
            row["f_identities"] = list(geometry.f_identities(model, pt))
            ed = geometry.einstein_data(model, pt, mu=mu)
            row["residual_einstein"] = ed.residual
            row["k_conf"] = ed.k_conf
            row["base_einstein"] = geometry.base_einstein_residual(base, pt.z)
            ks.append(ed.k_conf)
        except (geometry.GeometryError, ReconstructionError, QuadratureError, ValueError) as exc:
            row["error"] = str(exc)
            notes.append(f"point {i}: {exc}")
        rows.append(row)

    def col(name, sub=False):
        vals = []
        for r in rows:
            if "error" in r:
                vals.append(math.nan)
            elif sub:
                vals.extend(r[name])
            else:
                vals.append(r[name])
        return _max(vals)

    for name in ("det_rel_err", "inverse_err", "metric_fd", "base_einstein"):
        maxima[name] = col(name)
    maxima["trace_identities"] = col("trace_identities", sub=True)
    maxima["f_identities"] = col("f_identities", sub=True)
    maxima["einstein_residual"] = col("residual_einstein")
    if ks and len(ks) == len(rows):
        maxima["k_conf_err"] = _max(k - n_mu for k in ks)
        var = float(np.var(ks))
        maxima["k_variance"] = var / abs(n_mu) if n_mu != 0 else var
    else:
        maxima["k_conf_err"] = maxima["k_variance"] = math.inf
    not_pd = [r["index"] for r in rows if r.get("positive_definite") is False]
    if not_pd:
        notes.append(f"metric not positive definite at points {not_pd}")

    checks = {k: {"max": v, "tol": tol[k], "pass": bool(v <= tol[k])} for k, v in sorted(maxima.items())}
    verdict = "pass" if all(c["pass"] for c in checks.values()) and not notes else "fail"
    return {
        "schema": SCHEMA,
        "command": "verify",
        "model": p.to_json(),
        "profile": prof.source if hasattr(prof, "source") else type(prof).__name__,
        "base": base.to_json(),
        "seed": cfg.seed,
        "grid_size": cfg.grid_size,
        "perturb_mu": cfg.perturb_mu,
        "tolerances": dict(sorted(tol.items())),
        "checks": checks,
        "max_residuals": {k: c["max"] for k, c in checks.items()},
        "points": rows,
        "notes": notes,
        "verdict": verdict,
    }


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    start = time.perf_counter()
    rep = verification_report(cfg)
    _write(out, "verify.json", dumps(rep))
    # timing lives beside the report so the report itself stays reproducible
    _write(out, "verify_timing.json", dumps({"schema": SCHEMA, "wall_time_s": time.perf_counter() - start}))
    failed = [k for k, c in rep["checks"].items() if not c["pass"]]
    print(f"verdict: {rep['verdict']}" + (f" (failed: {', '.join(failed)})" if failed else ""))
    for n in rep["notes"]:
        print(f"note: {n}")
    return EXIT_OK if rep["verdict"] == "pass" else EXIT_FAIL


def classification_report(cfg: RunConfig) -> dict:
    prof = cfg.profile()
    cl = completeness.classify(prof)
    expected = completeness.expected_label(prof.params)
    return {
        "schema": SCHEMA,
        "command": "classify",
        "model": prof.params.to_json(),
        **cl.to_json(),
        "expected_label": expected,
        "verdict": "pass" if cl.domain_label == expected else "fail",
    }


def cmd_classify(cfg: RunConfig, out: Path) -> int:
    rep = classification_report(cfg)
    _write(out, "classification.json", dumps(rep))
    print(f"domain: {rep['domain_label']} (expected {rep['expected_label']})")
    return EXIT_OK if rep["verdict"] == "pass" else EXIT_FAIL


def _c113_termwise(d: int, extra: dict, prof_q: QuadratureProfile) -> list[dict]:
    from .profiles import _c113_coeffs

    n = d + 1
    a = float(extra["a"])
    closed = _c113_coeffs(n, a, float(extra["mu"]))
    # exact polynomial of degree n+1: interpolate the quadrature profile at n+2 Chebyshev points
    lo, hi = 0.0, -1.0 / a
    k = np.arange(n + 2)
    xs = lo + (hi - lo) * 0.5 * (1 - np.cos(np.pi * (k + 0.5) / (n + 2)))
    coef = np.polynomial.polynomial.polyfit(xs, [prof_q.eval(float(x)) for x in xs], n + 1)
    return [{"power": int(j), "closed": closed.get(j, 0.0), "quadrature": float(coef[j]),
             "delta": abs(closed.get(j, 0.0) - float(coef[j]))} for j in range(n + 2)]


def corollary_report(fid: str, d: int, extra: dict, grid: int) -> dict:
    if fid not in CLOSED_FORMS and fid != "1.14":
        raise InputError(f"unknown corollary id {fid!r}; known: {', '.join(CLOSED_FORMS + ('1.14',))}")
    if d < 1:
        raise InputError("d must be >= 1")
    e = {**COROLLARY_DEFAULTS.get(fid, {}), **extra}
    rep: dict = {"schema": SCHEMA, "command": "corollary", "id": fid, "d": d, "extra": e}
    if fid == "1.14":
        # analytic limit only; report how the (1.13) family approaches it
        mu = float(e["mu"])
        xs = np.linspace(0.05, 1.0, grid)
        approach = []
        for a in (-1e-1, -1e-2, -1e-3):
            delta = max(abs(closed_form_derivs("1.13", d, float(x), {"a": a, "mu": mu})[0]
                            / limit_form_114(d, mu, float(x))[0] - 1) for x in xs)
            approach.append({"a": a, "max_rel_delta": delta})
        rep.update(analytic_only=True, limit_approach=approach,
                   rows=[{"x": float(x), "closed": limit_form_114(d, mu, float(x))[0]} for x in xs[:: max(1, grid // 20)]],
                   max_delta=None, verdict="analytic-only")
        return rep
    cf_extra = {k: v for k, v in e.items() if k != "lambda"}
    p = corollary_params(fid, d, **e)
    errs = validate(p)
    if errs:
        raise InputError("inadmissible corollary model: " + "; ".join(errs))
    cf = ClosedFormProfile(p, fid, cf_extra)
    q = QuadratureProfile(p)
    rows = []
    for x in interior_grid(p, grid):
        c, v = cf.eval(x), q.eval(x)
        rows.append({"x": x, "closed": c, "quadrature": v, "rel_delta": abs(c / v - 1)})
    rep.update(model=p.to_json(), analytic_only=False, rows=rows,
               max_delta=max(r["rel_delta"] for r in rows))
    if fid == "1.10":
        pr = ClosedFormProfile(p, "1.10-extra-mu", cf_extra)
        rep["extra_mu_form_max_delta"] = max(abs(pr.eval(r["x"]) / r["quadrature"] - 1) for r in rows)
    if fid == "1.13":
        rep["termwise"] = _c113_termwise(d, e, q)
    return rep


def cmd_corollary(fid: str, d: int, extra: dict, cfg: RunConfig, out: Path) -> int:
    rep = corollary_report(fid, d, extra, cfg.grid_size)
    tol = cfg.tolerances["corollary_delta"]
    if not rep["analytic_only"]:
        rep["tol"] = tol
        rep["verdict"] = "pass" if rep["max_delta"] <= tol else "fail"
    _write(out, f"corollary_{fid}.json", dumps(rep))
    md = rep["max_delta"]
    print(f"corollary {fid}: " + ("analytic-only" if md is None else f"max delta {md:.3e} ({rep['verdict']})"))
    return EXIT_FAIL if rep["verdict"] == "fail" else EXIT_OK


# -- entry point ----------------------------------------------------------------


def _parse_sets(items: list[str]) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise InputError(f"--set expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = int(v) if k.strip() == "r" else float(v)
        except ValueError:
            raise InputError(f"--set {k} is not a number: {v!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config JSON (a model object, or {model, base, ...})")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, help="seed for sampled points")
    common.add_argument("--grid", type=int, help="grid size (default 200, at least 16)")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VAL",
                        help="override a named tolerance (repeatable)")
    ap = argparse.ArgumentParser(prog="ckem", description="Conformally Kähler Einstein momentum profiles.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("profile", parents=[common], help="write profile.csv and reconstruction.csv")
    sub.add_parser("verify", parents=[common], help="run all residual suites, write verify.json")
    sub.add_parser("classify", parents=[common], help="endpoint verdicts and domain label")
    c = sub.add_parser("corollary", parents=[common], help="closed form vs quadrature table")
    c.add_argument("id", help="formula id, e.g. 1.9")
    c.add_argument("--d", type=int, default=None, help="base dimension (default 1)")
    c.add_argument("--set", action="append", default=[], metavar="NAME=VAL",
                   help="free constant of the formula (repeatable)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        raw = _load_config(args.config)
        cfg = RunConfig(raw, args.grid, args.seed, args.tol)
        if args.command == "profile":
            return cmd_profile(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out)
        if args.command == "classify":
            return cmd_classify(cfg, out)
        d = args.d if args.d is not None else cfg.d
        extra = {**cfg.extra, **_parse_sets(args.set)}
        return cmd_corollary(args.id, d, extra, cfg, out)
    except (InputError, ParamError, DomainError, geometry.GeometryError, ReconstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
