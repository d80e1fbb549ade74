import time
from pathlib import Path

import pytest

from ckem.params import Case, ModelParams

# (case, d, r, lambda, nu, a, b, keyword overrides); two admissible tuples per case
GENERIC = [
    (Case.I, 2, 1, 0.5, 1.0, -1.0, 1.0, {"mu": -0.7}),
    (Case.I, 1, 1, -0.5, 1.0, -2.0, 1.0, {"mu": 0.0}),
    (Case.II1, 1, 1, -0.5, 1.0, -1.0, 2.0, {"mu": -1.0}),
    (Case.II1, 2, 1, 1.0, 1.0, -1.0, 1.0, {"mu": -2.0}),
    (Case.II2, 1, 1, 1.0, 1.0, 1.0, 1.0, {"mu": -1.0, "x1": 2.0}),
    (Case.II2, 2, 1, 1.0, 1.0, 2.0, 1.0, {"mu": -0.5}),
    (Case.III1, 1, 1, 1.0, 1.0, 1.0, 1.0, {"x1": 2.0}),
    (Case.III1, 2, 1, -0.5, 1.0, 1.0, 1.0, {"x1": 1.5}),
    (Case.III2, 1, 1, 1.0, 1.0, 1.0, 1.0, {"mu": -0.5, "x1": 2.0}),
    (Case.III2, 2, 1, -0.5, 1.0, 1.0, 1.0, {"mu": -1.0, "x1": 1.5}),
    (Case.IV1, 1, 2, 1.0, 0.0, 1.0, -1.0, {}),
    (Case.IV1, 2, 3, 0.5, 0.0, 2.0, -1.0, {}),
    (Case.IV2, 1, 2, 1.0, 0.0, 1.0, -1.0, {"x1": 2.0}),
    (Case.IV2, 2, 3, 1.0, 0.0, 1.0, -1.0, {"x1": 1.5}),
]

GENERIC_IDS = [f"{t[0].value}-d{t[1]}r{t[2]}-{i % 2}" for i, t in enumerate(GENERIC)]


def build(t) -> ModelParams:
    case, d, r, lam, nu, a, b, kw = t
    return ModelParams.build(case, d, r, lam, nu, a, b, **kw)


@pytest.fixture(params=GENERIC, ids=GENERIC_IDS)
def generic_params(request):
    return build(request.param)


CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}
DETERMINISM: tuple | None = None
SUITE_LIMIT_S = 300.0
_start = time.perf_counter()


def pytest_sessionstart(session):
    global _start
    _start = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    if DETERMINISM is not None:
        same, codes = DETERMINISM
        elapsed = time.perf_counter() - _start
        ok = same and elapsed < SUITE_LIMIT_S
        ACCEPTANCE[7] = (f"{'PASS' if ok else 'FAIL'} [7] verify reports byte-identical: {same} "
                         f"(exit codes {codes}); session wall time {elapsed:.0f}s (< {SUITE_LIMIT_S:.0f}s)")
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
